"""Correlation matrix R, its rank L and the diagonal representation of a state.

A state is expanded as rho = sum_ij r_ij A_i (x) B_j over orthonormal
Hermitian bases. The SVD R = U diag(c) V^T gives rho = sum_i c_i S_i (x) F_i
with S_i = sum_j u_ji A_j and F_i = sum_j v_ji B_j. L = rank(R) is basis
independent, cannot grow under local channels, and exceeds d_min only for
states with nonzero discord.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    RANK_REL_TOL,
    HermitianBasis,
    gellmann_basis,
    max_entry_norm,
    numerical_rank,
)
from .states import DensityMatrix, ProductEnsemble, assemble

COMMUTATOR_TOL = 1e-9
IMAG_RESIDUE_TOL = 1e-9
GRAM_REL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class CorrelationAnalysis:
    r_matrix: np.ndarray = field(repr=False)
    singular_values: np.ndarray
    rank_l: int
    ops_a: np.ndarray = field(repr=False)
    ops_b: np.ndarray = field(repr=False)

    @property
    def coefficients(self) -> np.ndarray:
        """The retained singular values c_1 >= ... >= c_L."""
        return self.singular_values[: self.rank_l]

    def reconstruct(self) -> np.ndarray:
        return np.einsum("i,iab,icd->acbd", self.coefficients, self.ops_a, self.ops_b).reshape(
            self.ops_a.shape[1] * self.ops_b.shape[1], -1
        )

    @property
    def gap(self) -> float:
        """c_L / c_{L+1}; ``inf`` when nothing was discarded or the tail is exactly 0."""
        if self.rank_l == 0 or self.rank_l >= self.singular_values.size:
            return math.inf
        tail = self.singular_values[self.rank_l]
        return math.inf if tail == 0.0 else float(self.singular_values[self.rank_l - 1] / tail)

    @property
    def relative_min_singular_value(self) -> float:
        """sigma_min / sigma_max over all min(d_A^2, d_B^2) singular values."""
        s = self.singular_values
        return float(s[-1] / s[0]) if s[0] > 0 else 0.0


@dataclass(frozen=True)
class DiscordWitnessReport:
    rank_l: int
    d_min: int
    witness_fired: bool
    max_commutator_a: float
    max_commutator_b: float
    zero_discord_a: bool
    zero_discord_b: bool
    singular_values: tuple[float, ...]
    gap: float

    def to_dict(self) -> dict:
        return {
            "rank_l": self.rank_l,
            "d_min": self.d_min,
            "witness_fired": self.witness_fired,
            "max_commutator_a": self.max_commutator_a,
            "max_commutator_b": self.max_commutator_b,
            "zero_discord_a": self.zero_discord_a,
            "zero_discord_b": self.zero_discord_b,
            "singular_values": list(self.singular_values),
            "gap": None if math.isinf(self.gap) else self.gap,
        }


def correlation_matrix(
    rho: DensityMatrix,
    basis_a: HermitianBasis | None = None,
    basis_b: HermitianBasis | None = None,
) -> np.ndarray:
    """r_ij = tr(rho (A_i (x) B_j)) for orthonormal Hermitian bases."""
    basis_a = basis_a or gellmann_basis(rho.dim_a)
    basis_b = basis_b or gellmann_basis(rho.dim_b)
    if basis_a.dim != rho.dim_a or basis_b.dim != rho.dim_b:
        raise ValueError(
            f"basis dims ({basis_a.dim}, {basis_b.dim}) do not match state dims {rho.dims}"
        )
    da, db = rho.dim_a, rho.dim_b
    # r_ij = sum rho[a,b,c,d] A_i[c,a] B_j[d,b], as two matrix products
    t = rho.matrix.reshape(da, db, da, db).transpose(2, 0, 3, 1).reshape(da * da, db * db)
    r = basis_a.elements.reshape(-1, da * da) @ t @ basis_b.elements.reshape(-1, db * db).T
    residue = np.max(np.abs(r.imag), initial=0.0)
    if residue > IMAG_RESIDUE_TOL:
        raise ValueError(f"imaginary residue {residue:.3e} in correlation matrix: corrupted input")
    return np.ascontiguousarray(r.real)


def analyze(
    rho: DensityMatrix,
    rel_tol: float = RANK_REL_TOL,
    basis_a: HermitianBasis | None = None,
    basis_b: HermitianBasis | None = None,
) -> CorrelationAnalysis:
    basis_a = basis_a or gellmann_basis(rho.dim_a)
    basis_b = basis_b or gellmann_basis(rho.dim_b)
    r = correlation_matrix(rho, basis_a, basis_b)
    u, s, vt = np.linalg.svd(r)
    rank = int(np.count_nonzero(s > rel_tol * s[0])) if s[0] > 0 else 0
    ops_a = basis_a.combine(u[:, :rank])
    ops_b = basis_b.combine(vt[:rank].T)
    return CorrelationAnalysis(r, s, rank, ops_a, ops_b)


def correlation_rank(rho: DensityMatrix, rel_tol: float = RANK_REL_TOL) -> int:
    return numerical_rank(correlation_matrix(rho), rel_tol)


def max_commutator(ops: np.ndarray) -> float:
    """Largest max-entry norm of [X_i, X_j] over all pairs of a stack of operators."""
    worst = 0.0
    for i in range(len(ops)):
        for j in range(i + 1, len(ops)):
            c = ops[i] @ ops[j] - ops[j] @ ops[i]
            worst = max(worst, max_entry_norm(c))
    return worst


def witness_report(
    rho: DensityMatrix,
    rel_tol: float = RANK_REL_TOL,
    commutator_tol: float = COMMUTATOR_TOL,
    analysis: CorrelationAnalysis | None = None,
) -> DiscordWitnessReport:
    an = analysis or analyze(rho, rel_tol)
    ca, cb = max_commutator(an.ops_a), max_commutator(an.ops_b)
    return DiscordWitnessReport(
        rank_l=an.rank_l,
        d_min=rho.d_min,
        witness_fired=an.rank_l > rho.d_min,
        max_commutator_a=ca,
        max_commutator_b=cb,
        zero_discord_a=ca <= commutator_tol,
        zero_discord_b=cb <= commutator_tol,
        singular_values=tuple(float(x) for x in an.singular_values),
        gap=an.gap,
    )


def is_product(rho: DensityMatrix, tol: float = 1e-9) -> bool:
    prod = np.kron(rho.marginal("A"), rho.marginal("B"))
    return max_entry_norm(rho.matrix - prod) <= tol


# --- ensemble rank theorem ----------------------------------------------------

def gram_matrix(ops: np.ndarray) -> np.ndarray:
    """G_ij = tr(X_i X_j) for a stack of Hermitian operators."""
    return np.einsum("iab,jba->ij", ops, ops).real


@dataclass(frozen=True)
class EnsembleRankCheck:
    s: int
    predicted_l: int
    measured_l: int
    independent_a: bool
    independent_b: bool
    rank_a: int
    rank_b: int

    @property
    def consistent(self) -> bool:
        """L <= s always, L = s when both factor families are independent,
        L < s otherwise."""
        if self.measured_l > self.s:
            return False
        if self.independent_a and self.independent_b:
            return self.measured_l == self.s
        return self.measured_l < self.s


def ensemble_rank_theorem_check(
    ensemble: ProductEnsemble, rel_tol: float = RANK_REL_TOL
) -> EnsembleRankCheck:
    """Compare the correlation rank of an assembled ensemble with the factor ranks.

    ``predicted_l`` is s when both families are linearly independent;
    otherwise it is min(rank_a, rank_b), which is exact when at least one
    family is independent and an upper bound when both are dependent.
    """
    ra = numerical_rank(gram_matrix(ensemble.states_a), GRAM_REL_TOL)
    rb = numerical_rank(gram_matrix(ensemble.states_b), GRAM_REL_TOL)
    s = ensemble.s
    ind_a, ind_b = ra == s, rb == s
    predicted = s if ind_a and ind_b else min(ra, rb)
    measured = analyze(assemble(ensemble), rel_tol).rank_l
    return EnsembleRankCheck(s, predicted, measured, ind_a, ind_b, ra, rb)


@dataclass(frozen=True, eq=False)
class ReducedEnsemble:
    """Operator decomposition with one fewer term, obtained from a linear
    dependence ``state_s = sum_i x_i state_i`` on the ``dependent_side``.

    Each term is (coefficient, op_a, op_b); the combined operators
    (p_i rho_i + p_s x_i rho_s on the other side) are divided by their trace
    whenever it is nonzero, so coefficients sum to 1.
    """

    terms: list
    x: np.ndarray
    removed_index: int
    dependent_side: str

    @property
    def all_positive(self) -> bool:
        """All x_i >= 0, so every combined operator is an unnormalized state."""
        return bool(np.all(self.x >= 0))

    def assemble_matrix(self) -> np.ndarray:
        return sum(c * np.kron(a, b) for c, a, b in self.terms)


def _null_vector(ops: np.ndarray) -> np.ndarray | None:
    g = gram_matrix(ops)
    w, v = np.linalg.eigh(g)
    if w[0] > GRAM_REL_TOL * w[-1]:
        return None
    return v[:, 0]


def reduce_dependent_ensemble(ensemble: ProductEnsemble) -> ReducedEnsemble:
    """Rewrite an ensemble with linearly dependent factors as s-1 operator terms.

    Raises ``ValueError`` if neither factor family is linearly dependent.
    """
    side = "A"
    y = _null_vector(ensemble.states_a)
    if y is None:
        side = "B"
        y = _null_vector(ensemble.states_b)
    if y is None:
        raise ValueError("no linear dependence among ensemble factors")
    k = int(np.argmax(np.abs(y)))
    keep = [i for i in range(ensemble.s) if i != k]
    x = -y[keep] / y[k]
    p = ensemble.weights
    dep, other = (
        (ensemble.states_a, ensemble.states_b) if side == "A" else (ensemble.states_b, ensemble.states_a)
    )
    terms = []
    for xi, i in zip(x, keep):
        combined = p[i] * other[i] + p[k] * xi * other[k]
        c = np.trace(combined).real
        if abs(c) > 1e-14:
            coef, op = c, combined / c
        else:
            coef, op = 1.0, combined
        terms.append((coef, dep[i], op) if side == "A" else (coef, op, dep[i]))
    return ReducedEnsemble(terms, x, k, side)
