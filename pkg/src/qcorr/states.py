"""Bipartite density matrices: construction, validation, sampling and JSON I/O."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .linalg import HERMITIAN_TOL, POSITIVITY_FLOOR, dagger, partial_trace

TRACE_TOL = 1e-12
ORTHONORMAL_TOL = 1e-12
WEIGHT_TOL = 1e-12


class StateValidationError(ValueError):
    """A matrix or ensemble violates density-matrix invariants."""


def _check_density(matrix: np.ndarray, what: str = "state") -> None:
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise StateValidationError(f"{what}: matrix must be square, got {matrix.shape}")
    asym = np.max(np.abs(matrix - dagger(matrix)), initial=0.0)
    if asym > HERMITIAN_TOL:
        raise StateValidationError(f"{what}: not Hermitian (max |M - M^+| = {asym:.3e})")
    tr = np.trace(matrix).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise StateValidationError(f"{what}: trace {tr!r} != 1")
    lam_min = np.linalg.eigvalsh(matrix)[0]
    if lam_min < POSITIVITY_FLOOR:
        raise StateValidationError(f"{what}: negative eigenvalue {lam_min:.3e}")


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated density matrix on C^dim_a (x) C^dim_b."""

    dim_a: int
    dim_b: int
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if self.dim_a < 1 or self.dim_b < 1:
            raise StateValidationError("factor dimensions must be positive")
        n = self.dim_a * self.dim_b
        if m.shape != (n, n):
            raise StateValidationError(
                f"matrix shape {m.shape} does not match dims {self.dim_a}x{self.dim_b}"
            )
        _check_density(m)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def d_min(self) -> int:
        return min(self.dim_a, self.dim_b)

    @property
    def dims(self) -> tuple[int, int]:
        return self.dim_a, self.dim_b

    def marginal(self, keep: str) -> np.ndarray:
        """Reduced state on ``keep`` ("A" or "B")."""
        traced = {"A": "B", "B": "A"}[keep]
        return partial_trace(self.matrix, self.dim_a, self.dim_b, traced)

    def purity(self) -> float:
        return float(np.einsum("ij,ji->", self.matrix, self.matrix).real)


def density(matrix: np.ndarray, dim_a: int, dim_b: int) -> DensityMatrix:
    return DensityMatrix(dim_a, dim_b, matrix)


def hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + dagger(m))


@dataclass(frozen=True, eq=False)
class ProductEnsemble:
    """Convex decomposition sum_i p_i rho_i^A (x) rho_i^B.

    ``states_a`` and ``states_b`` are stacked single-factor density
    matrices of shape ``(s, d, d)``.
    """

    weights: np.ndarray
    states_a: np.ndarray = field(repr=False)
    states_b: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        sa = np.array(self.states_a, dtype=complex)
        sb = np.array(self.states_b, dtype=complex)
        if w.ndim != 1 or w.size == 0 or sa.shape[0] != w.size or sb.shape[0] != w.size:
            raise StateValidationError("weights and factor lists must have equal nonzero length")
        if np.any(w <= 0) or np.any(w > 1 + WEIGHT_TOL):
            raise StateValidationError("weights must lie in (0, 1]")
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise StateValidationError(f"weights sum to {w.sum()!r}, not 1")
        for i, (a, b) in enumerate(zip(sa, sb)):
            _check_density(a, f"term {i} factor A")
            _check_density(b, f"term {i} factor B")
        for arr in (w, sa, sb):
            arr.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "states_a", sa)
        object.__setattr__(self, "states_b", sb)

    @property
    def s(self) -> int:
        return self.weights.size

    @property
    def dim_a(self) -> int:
        return self.states_a.shape[1]

    @property
    def dim_b(self) -> int:
        return self.states_b.shape[1]

    def __len__(self) -> int:
        return self.s

    def __iter__(self):
        return iter(zip(self.weights, self.states_a, self.states_b))


def assemble(ensemble: ProductEnsemble) -> DensityMatrix:
    m = sum(p * np.kron(a, b) for p, a, b in ensemble)
    return DensityMatrix(ensemble.dim_a, ensemble.dim_b, hermitize(m))


# --- named and structured constructors -------------------------------------

def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


PLUS = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)


def _check_orthonormal(kets: np.ndarray, what: str) -> None:
    gram = kets.conj() @ kets.T
    if np.max(np.abs(gram - np.eye(len(kets)))) > ORTHONORMAL_TOL:
        raise StateValidationError(f"{what} kets are not orthonormal")


def classical_state(
    probabilities: np.ndarray,
    basis_a: Sequence[np.ndarray] | None = None,
    basis_b: Sequence[np.ndarray] | None = None,
) -> DensityMatrix:
    """sum_ij p_ij |a_i><a_i| (x) |b_j><b_j|; bases default to computational."""
    p = np.asarray(probabilities, dtype=float)
    if p.ndim != 2:
        raise StateValidationError("probabilities must be a d_A x d_B matrix")
    if np.any(p < 0) or abs(p.sum() - 1.0) > WEIGHT_TOL:
        raise StateValidationError("probabilities must be non-negative and sum to 1")
    da, db = p.shape
    ka = np.eye(da, dtype=complex) if basis_a is None else np.asarray(basis_a, dtype=complex)
    kb = np.eye(db, dtype=complex) if basis_b is None else np.asarray(basis_b, dtype=complex)
    if ka.shape != (da, da) or kb.shape != (db, db):
        raise StateValidationError("basis sizes must match the probability matrix")
    _check_orthonormal(ka, "basis_a")
    _check_orthonormal(kb, "basis_b")
    pa = np.einsum("ia,ib->iab", ka, ka.conj())
    pb = np.einsum("ja,jb->jab", kb, kb.conj())
    m = np.einsum("ij,iac,jbd->abcd", p, pa, pb).reshape(da * db, da * db)
    return DensityMatrix(da, db, hermitize(m))


def bell_ket(dim: int = 2, terms: int | None = None) -> np.ndarray:
    """(|00> + |11> + ...)/sqrt(terms) in C^dim (x) C^dim."""
    terms = dim if terms is None else terms
    v = np.zeros(dim * dim, dtype=complex)
    for i in range(terms):
        v[i * dim + i] = 1.0
    return v / np.sqrt(terms)


def werner_state(z: float) -> DensityMatrix:
    """(1-z)/4 I + z |Psi><Psi| with |Psi> = (|00>+|11>)/sqrt(2)."""
    if not -1.0 / 3.0 - 1e-15 <= z <= 1.0 + 1e-15:
        raise StateValidationError(f"Werner parameter z={z} outside [-1/3, 1]")
    m = (1.0 - z) / 4.0 * np.eye(4) + z * projector(bell_ket(2))
    return DensityMatrix(2, 2, m)


def bell_state() -> DensityMatrix:
    return DensityMatrix(2, 2, projector(bell_ket(2)))


def rho_c() -> DensityMatrix:
    """(|00><00| + |11><11|)/2."""
    return classical_state(np.diag([0.5, 0.5]))


def rho_l() -> DensityMatrix:
    """(|00><00| + |+1><+1|)/2."""
    zero, one = ket(0, 2), ket(1, 2)
    m = 0.5 * (np.kron(projector(zero), projector(zero)) + np.kron(projector(PLUS), projector(one)))
    return DensityMatrix(2, 2, m)


def rho_l_ensemble() -> ProductEnsemble:
    zero, one = projector(ket(0, 2)), projector(ket(1, 2))
    return ProductEnsemble([0.5, 0.5], [zero, projector(PLUS)], [zero, one])


def schmidt_rank2_pure(dim: int) -> DensityMatrix:
    """(|00> + |11>)/sqrt(2) in C^dim (x) C^dim."""
    if dim < 2:
        raise StateValidationError("dim must be >= 2")
    return DensityMatrix(dim, dim, projector(bell_ket(dim, terms=2)))


def product_state(a: np.ndarray, b: np.ndarray) -> DensityMatrix:
    a, b = np.asarray(a), np.asarray(b)
    return DensityMatrix(a.shape[0], b.shape[0], np.kron(a, b))


# --- random sampling -------------------------------------------------------

def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_density(dim: int, seed=None) -> np.ndarray:
    """Hilbert-Schmidt random density matrix GG^+/tr(GG^+) as a bare array."""
    rng = _rng(seed)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = g @ g.conj().T
    return hermitize(m / np.trace(m).real)


def random_state(dim_a: int, dim_b: int, seed=None) -> DensityMatrix:
    return DensityMatrix(dim_a, dim_b, random_density(dim_a * dim_b, seed))


def random_ensemble(dim_a: int, dim_b: int, s: int, seed=None) -> ProductEnsemble:
    """s terms, Dirichlet(1) weights, independent Hilbert-Schmidt factors."""
    if s < 1:
        raise ValueError("s must be >= 1")
    rng = _rng(seed)
    w = rng.dirichlet(np.ones(s))
    # Dirichlet draws can underflow to exact zero for large s
    w = np.maximum(w, 1e-300)
    w /= w.sum()
    sa = [random_density(dim_a, rng) for _ in range(s)]
    sb = [random_density(dim_b, rng) for _ in range(s)]
    return ProductEnsemble(w, sa, sb)


# --- serialization ----------------------------------------------------------

def encode_matrix(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def decode_matrix(data) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise StateValidationError(f"malformed matrix encoding: {exc}") from None
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise StateValidationError("matrix must be a 2-D array of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def state_to_dict(state: DensityMatrix) -> dict:
    return {"dim_a": state.dim_a, "dim_b": state.dim_b, "matrix": encode_matrix(state.matrix)}


def state_from_dict(data: dict) -> DensityMatrix:
    try:
        dim_a, dim_b, raw = int(data["dim_a"]), int(data["dim_b"]), data["matrix"]
    except (KeyError, TypeError, ValueError) as exc:
        raise StateValidationError(f"malformed state record: {exc}") from None
    return DensityMatrix(dim_a, dim_b, decode_matrix(raw))


def save_state(state: DensityMatrix, path) -> None:
    # json writes floats via repr, the shortest string that round-trips exactly
    Path(path).write_text(json.dumps(state_to_dict(state)) + "\n")


def load_state(path) -> DensityMatrix:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise StateValidationError(f"{path}: invalid JSON ({exc})") from None
    return state_from_dict(data)


def ensemble_to_dict(ensemble: ProductEnsemble) -> dict:
    return {
        "dim_a": ensemble.dim_a,
        "dim_b": ensemble.dim_b,
        "terms": [
            {"weight": float(p), "state_a": encode_matrix(a), "state_b": encode_matrix(b)}
            for p, a, b in ensemble
        ],
    }


def ensemble_from_dict(data: dict) -> ProductEnsemble:
    try:
        terms = data["terms"]
        w = [float(t["weight"]) for t in terms]
        sa = [decode_matrix(t["state_a"]) for t in terms]
        sb = [decode_matrix(t["state_b"]) for t in terms]
    except (KeyError, TypeError, ValueError) as exc:
        raise StateValidationError(f"malformed ensemble record: {exc}") from None
    ens = ProductEnsemble(w, sa, sb)
    if "dim_a" in data and (ens.dim_a, ens.dim_b) != (data["dim_a"], data["dim_b"]):
        raise StateValidationError("ensemble factor sizes disagree with declared dims")
    return ens


def save_ensemble(ensemble: ProductEnsemble, path) -> None:
    Path(path).write_text(json.dumps(ensemble_to_dict(ensemble)) + "\n")


def load_ensemble(path) -> ProductEnsemble:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise StateValidationError(f"{path}: invalid JSON ({exc})") from None
    return ensemble_from_dict(data)
