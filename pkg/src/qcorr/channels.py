"""Quantum channels in Kraus form, local application, and local creation of
discord from classical seeds."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .correlation import analyze
from .linalg import RANK_REL_TOL
from .states import (
    PLUS,
    DensityMatrix,
    ProductEnsemble,
    StateValidationError,
    _check_density,
    _check_orthonormal,
    decode_matrix,
    encode_matrix,
    hermitize,
    ket,
    projector,
)

COMPLETENESS_TOL = 1e-10
EIG_DROP_TOL = 1e-15


class NotLocallyProducibleError(ValueError):
    """Ensemble has more terms than d_min, beyond the classical-seed construction."""


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """CP map X -> sum_k K_k X K_k^+ with Kraus operators of shape (dim_out, dim_in).

    Trace preservation (sum K^+K = I) is enforced unless ``trace_decreasing``
    is set, in which case only sum K^+K <= I is required.
    """

    dim_in: int
    dim_out: int
    kraus: np.ndarray = field(repr=False)
    trace_decreasing: bool = False

    def __post_init__(self):
        k = np.array(self.kraus, dtype=complex)
        if k.ndim == 2:
            k = k[None]
        if k.ndim != 3 or k.shape[1:] != (self.dim_out, self.dim_in) or k.shape[0] == 0:
            raise ValueError(
                f"Kraus stack of shape {k.shape} does not match {self.dim_out}x{self.dim_in}"
            )
        gap = np.eye(self.dim_in) - np.einsum("kji,kjl->il", k.conj(), k)
        if self.trace_decreasing:
            if np.linalg.eigvalsh(hermitize(gap))[0] < -COMPLETENESS_TOL:
                raise ValueError("Kraus operators violate sum K^+K <= I")
        elif np.max(np.abs(gap)) > COMPLETENESS_TOL:
            raise ValueError(f"Kraus operators not trace preserving (residual {np.max(np.abs(gap)):.3e})")
        k.setflags(write=False)
        object.__setattr__(self, "kraus", k)

    @property
    def completeness_residual(self) -> float:
        gap = np.eye(self.dim_in) - np.einsum("kji,kjl->il", self.kraus.conj(), self.kraus)
        return float(np.max(np.abs(gap)))

    def __call__(self, m: np.ndarray) -> np.ndarray:
        return apply(self, m)


def identity_channel(dim: int) -> QuantumChannel:
    return QuantumChannel(dim, dim, np.eye(dim)[None])


def unitary_channel(u: np.ndarray) -> QuantumChannel:
    u = np.asarray(u)
    return QuantumChannel(u.shape[1], u.shape[0], u[None])


def depolarizing_channel(dim: int) -> QuantumChannel:
    """Fully depolarizing map X -> tr(X) I/dim, Kraus |i><j|/sqrt(dim)."""
    ks = []
    for i in range(dim):
        for j in range(dim):
            k = np.zeros((dim, dim), dtype=complex)
            k[i, j] = 1 / np.sqrt(dim)
            ks.append(k)
    return QuantumChannel(dim, dim, ks)


def phi_channel() -> QuantumChannel:
    """X -> |0><0|X|0><0| + |+><1|X|1><+|: maps |0> to |0> and |1> to |+>."""
    zero, one = ket(0, 2), ket(1, 2)
    return QuantumChannel(2, 2, [np.outer(zero, zero.conj()), np.outer(PLUS, one.conj())])


def apply(channel: QuantumChannel, m: np.ndarray) -> np.ndarray:
    m = np.asarray(m)
    if m.shape != (channel.dim_in, channel.dim_in):
        raise ValueError(f"operator shape {m.shape} does not match channel input {channel.dim_in}")
    return np.einsum("kij,jl,kml->im", channel.kraus, m, channel.kraus.conj())


def lift_local(
    channel_a: QuantumChannel | None, channel_b: QuantumChannel | None, dim_a: int, dim_b: int
) -> QuantumChannel:
    """Phi_A (x) Phi_B as one channel on the joint space; ``None`` means identity."""
    ca = channel_a or identity_channel(dim_a)
    cb = channel_b or identity_channel(dim_b)
    if ca.dim_in != dim_a or cb.dim_in != dim_b:
        raise ValueError(f"channel inputs ({ca.dim_in}, {cb.dim_in}) do not match state dims ({dim_a}, {dim_b})")
    kraus = np.array([np.kron(ka, kb) for ka in ca.kraus for kb in cb.kraus])
    return QuantumChannel(
        dim_a * dim_b,
        ca.dim_out * cb.dim_out,
        kraus,
        trace_decreasing=ca.trace_decreasing or cb.trace_decreasing,
    )


def apply_local(
    channel_a: QuantumChannel | None, channel_b: QuantumChannel | None, rho: DensityMatrix
) -> DensityMatrix:
    """(Phi_A (x) Phi_B)(rho). Both maps must be trace preserving; for
    trace-decreasing maps use ``apply(lift_local(...), rho.matrix)`` and
    renormalize explicitly."""
    joint = lift_local(channel_a, channel_b, rho.dim_a, rho.dim_b)
    if joint.trace_decreasing:
        raise ValueError("apply_local needs trace-preserving channels; use lift_local + apply")
    out = hermitize(apply(joint, rho.matrix))
    da = channel_a.dim_out if channel_a else rho.dim_a
    db = channel_b.dim_out if channel_b else rho.dim_b
    return DensityMatrix(da, db, out)


def state_preparation_channel(
    targets: Sequence[np.ndarray], source_basis: Sequence[np.ndarray] | None = None
) -> QuantumChannel:
    """Channel sending |i><i| to targets[i] for an orthonormal source basis.

    Kraus operators sqrt(w_j^i) |psi_j^i><i| come from the spectral
    decomposition targets[i] = sum_j w_j^i |psi_j^i><psi_j^i|.
    """
    targets = [np.asarray(t, dtype=complex) for t in targets]
    d_in = len(targets)
    src = np.eye(d_in, dtype=complex) if source_basis is None else np.asarray(source_basis, dtype=complex)
    if src.shape != (d_in, d_in):
        raise ValueError("need one orthonormal source ket per target, spanning the input space")
    _check_orthonormal(src, "source")
    d_out = targets[0].shape[0]
    kraus = []
    for i, t in enumerate(targets):
        if t.shape != (d_out, d_out):
            raise StateValidationError("targets must share one output dimension")
        _check_density(t, f"target {i}")
        w, vecs = np.linalg.eigh(t)
        for wj, psi in zip(w, vecs.T):
            if wj > EIG_DROP_TOL:
                kraus.append(np.sqrt(wj) * np.outer(psi, src[i].conj()))
    return QuantumChannel(d_in, d_out, kraus)


@dataclass(frozen=True, eq=False)
class LocalCreation:
    seed: DensityMatrix
    channel_a: QuantumChannel
    channel_b: QuantumChannel

    def output(self) -> DensityMatrix:
        return apply_local(self.channel_a, self.channel_b, self.seed)


def synthesize_local_creation(target: ProductEnsemble) -> LocalCreation:
    """Classical seed sum_i p_i |i><i| (x) |i><i| and local preparation channels
    whose product maps the seed onto ``target``.

    Raises ``NotLocallyProducibleError`` if the ensemble has more than d_min terms.
    """
    da, db, s = target.dim_a, target.dim_b, target.s
    if s > min(da, db):
        raise NotLocallyProducibleError(
            f"{s} product terms exceed d_min = {min(da, db)}: a classical seed supports at most "
            "d_min terms, so this ensemble is outside the local-creation construction"
        )
    seed = sum(
        p * np.kron(projector(ket(i, da)), projector(ket(i, db))) for i, p in enumerate(target.weights)
    )
    # unused source levels carry no weight in the seed; map them anywhere valid
    targets_a = list(target.states_a) + [target.states_a[-1]] * (da - s)
    targets_b = list(target.states_b) + [target.states_b[-1]] * (db - s)
    return LocalCreation(
        DensityMatrix(da, db, seed),
        state_preparation_channel(targets_a),
        state_preparation_channel(targets_b),
    )


def reduce_classical(
    probabilities: np.ndarray,
    basis_a: Sequence[np.ndarray] | None = None,
    basis_b: Sequence[np.ndarray] | None = None,
) -> ProductEnsemble:
    """Rewrite sum_ij p_ij Pi_i (x) Pi_j as sum_i p_i Pi_i (x) rho_i with
    p_i rho_i = sum_j p_ij Pi_j; rows with p_i = 0 are dropped."""
    p = np.asarray(probabilities, dtype=float)
    if p.ndim != 2 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise StateValidationError("probabilities must be a normalized non-negative matrix")
    da, db = p.shape
    ka = np.eye(da, dtype=complex) if basis_a is None else np.asarray(basis_a, dtype=complex)
    kb = np.eye(db, dtype=complex) if basis_b is None else np.asarray(basis_b, dtype=complex)
    pb = np.einsum("ja,jb->jab", kb, kb.conj())
    weights, sa, sb = [], [], []
    for i in range(da):
        row = p[i].sum()
        if row <= 0:
            continue
        weights.append(row)
        sa.append(projector(ka[i]))
        sb.append(hermitize(np.tensordot(p[i] / row, pb, axes=1)))
    w = np.array(weights)
    return ProductEnsemble(w / w.sum(), sa, sb)


def random_channel(dim: int, kraus_count: int, seed=None, dim_out: int | None = None) -> QuantumChannel:
    """Kraus blocks of a random isometry C^dim -> C^(dim_out * kraus_count)."""
    dim_out = dim if dim_out is None else dim_out
    if not 1 <= kraus_count <= dim * dim_out:
        raise ValueError(f"kraus_count must lie in [1, {dim * dim_out}]")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    rows = dim_out * kraus_count
    g = rng.standard_normal((rows, dim)) + 1j * rng.standard_normal((rows, dim))
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    q = q * (d / np.abs(d))
    return QuantumChannel(dim, dim_out, q.reshape(kraus_count, dim_out, dim))


@dataclass(frozen=True)
class MonotonicityTrial:
    l_before: int
    l_after: int

    @property
    def ok(self) -> bool:
        return self.l_after <= self.l_before


def l_monotonicity_trial(
    rho: DensityMatrix, channel: QuantumChannel, side: str, rel_tol: float = RANK_REL_TOL
) -> MonotonicityTrial:
    """Correlation rank before and after a channel on one side.

    Trace-decreasing outputs are rescaled to unit trace before the rank is
    taken (rank is scale-invariant); a zero output is reported as L = 0.
    """
    if side == "A":
        joint = lift_local(channel, None, rho.dim_a, rho.dim_b)
        dims = (channel.dim_out, rho.dim_b)
    elif side == "B":
        joint = lift_local(None, channel, rho.dim_a, rho.dim_b)
        dims = (rho.dim_a, channel.dim_out)
    else:
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")
    before = analyze(rho, rel_tol).rank_l
    out = hermitize(apply(joint, rho.matrix))
    tr = np.trace(out).real
    if tr <= 1e-14:
        return MonotonicityTrial(before, 0)
    after = analyze(DensityMatrix(*dims, out / tr), rel_tol).rank_l
    return MonotonicityTrial(before, after)


# --- serialization ----------------------------------------------------------

def channel_to_dict(channel: QuantumChannel) -> dict:
    out = {
        "dim_in": channel.dim_in,
        "dim_out": channel.dim_out,
        "kraus": [encode_matrix(k) for k in channel.kraus],
    }
    if channel.trace_decreasing:
        out["trace_decreasing"] = True
    return out


def channel_from_dict(data: dict) -> QuantumChannel:
    try:
        kraus = [decode_matrix(k) for k in data["kraus"]]
        return QuantumChannel(
            int(data["dim_in"]), int(data["dim_out"]), kraus, bool(data.get("trace_decreasing", False))
        )
    except (KeyError, TypeError) as exc:
        raise StateValidationError(f"malformed channel record: {exc}") from None


def save_channel(channel: QuantumChannel, path) -> None:
    Path(path).write_text(json.dumps(channel_to_dict(channel)) + "\n")


def load_channel(path) -> QuantumChannel:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise StateValidationError(f"{path}: invalid JSON ({exc})") from None
    return channel_from_dict(data)


def same_action(c1: QuantumChannel, c2: QuantumChannel, tol: float = 1e-10) -> bool:
    """Channels agree on every matrix unit |i><j|, hence on all inputs."""
    if (c1.dim_in, c1.dim_out) != (c2.dim_in, c2.dim_out):
        return False
    for i in range(c1.dim_in):
        for j in range(c1.dim_in):
            e = np.zeros((c1.dim_in, c1.dim_in), dtype=complex)
            e[i, j] = 1.0
            if np.max(np.abs(apply(c1, e) - apply(c2, e))) > tol:
                return False
    return True
