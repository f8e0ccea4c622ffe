"""Dense operator-space utilities shared by every other module.

All functions take and return plain ``numpy`` arrays. Entropies are in bits.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

HERMITIAN_TOL = 1e-12
POSITIVITY_FLOOR = -1e-9
RANK_REL_TOL = 1e-10


@dataclass(frozen=True)
class HermitianBasis:
    """Hilbert-Schmidt orthonormal basis of Hermitian operators on C^dim.

    ``elements`` has shape ``(dim**2, dim, dim)``.
    """

    dim: int
    elements: np.ndarray

    def __len__(self) -> int:
        return self.elements.shape[0]

    def coefficients(self, m: np.ndarray) -> np.ndarray:
        """Real expansion coefficients tr(m E_i) of a Hermitian ``m``."""
        return np.einsum("kij,ji->k", self.elements, m).real

    def combine(self, coeffs: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`coefficients`; ``coeffs`` may be a matrix whose
        columns are separate coefficient vectors."""
        coeffs = np.asarray(coeffs)
        if coeffs.ndim == 1:
            return np.tensordot(coeffs, self.elements, axes=(0, 0))
        return np.einsum("ki,kab->iab", coeffs, self.elements)

    def gram(self) -> np.ndarray:
        return np.einsum("iab,jba->ij", self.elements, self.elements).real


@dataclass(frozen=True)
class SingularDecomposition:
    singular_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        k = self.singular_values.size
        return (self.left_vectors[:, :k] * self.singular_values) @ self.right_vectors[:, :k].T


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(a, b)


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and bool(np.max(np.abs(m - dagger(m)), initial=0.0) <= tol)


def partial_trace(m: np.ndarray, dim_a: int, dim_b: int, subsystem: str) -> np.ndarray:
    """Trace out ``subsystem`` ("A" or "B") of an operator on C^dim_a (x) C^dim_b.

    Returns the reduced operator on the *remaining* factor.
    """
    m = np.asarray(m)
    n = dim_a * dim_b
    if m.shape != (n, n):
        raise ValueError(f"operator of shape {m.shape} does not factor as {dim_a}x{dim_b}")
    t = m.reshape(dim_a, dim_b, dim_a, dim_b)
    if subsystem == "A":
        return np.einsum("ijil->jl", t)
    if subsystem == "B":
        return np.einsum("ijkj->ik", t)
    raise ValueError(f"subsystem must be 'A' or 'B', got {subsystem!r}")


def eigh(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian eigendecomposition with ascending real eigenvalues."""
    return np.linalg.eigh(m)


def entropy_from_eigenvalues(eigvals: np.ndarray) -> float:
    lam = np.asarray(eigvals, dtype=float)
    lam = lam[lam > 0]
    return float(-np.sum(lam * np.log2(lam)))


def von_neumann_entropy(m: np.ndarray) -> float:
    """Entropy -tr(m log2 m) of a density operator, with 0 log 0 = 0.

    Raises ``ValueError`` if an eigenvalue falls below the positivity floor.
    """
    lam = np.linalg.eigvalsh(m)
    if lam[0] < POSITIVITY_FLOOR:
        raise ValueError(f"negative eigenvalue {lam[0]:.3e}: not a density operator")
    return entropy_from_eigenvalues(lam)


def gellmann_matrices(dim: int) -> np.ndarray:
    """Identity followed by the d^2 - 1 generalized Gell-Mann matrices.

    Unnormalized: off-diagonal ones have unit entries, diagonal ones follow
    the usual sqrt(2/(l(l+1))) scaling so that tr(G^2) = 2.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    mats = [np.eye(dim, dtype=complex)]
    for j in range(dim):
        for k in range(j + 1, dim):
            sym = np.zeros((dim, dim), dtype=complex)
            sym[j, k] = sym[k, j] = 1.0
            asym = np.zeros((dim, dim), dtype=complex)
            asym[j, k] = -1j
            asym[k, j] = 1j
            mats += [sym, asym]
    for l in range(1, dim):
        diag = np.zeros(dim)
        diag[:l] = 1.0
        diag[l] = -l
        mats.append(np.diag(diag * np.sqrt(2.0 / (l * (l + 1)))).astype(complex))
    return np.array(mats)


@lru_cache(maxsize=None)
def _gellmann_elements(dim: int) -> np.ndarray:
    mats = gellmann_matrices(dim)
    norms = np.sqrt(np.einsum("kij,kji->k", mats, mats).real)
    out = mats / norms[:, None, None]
    out.setflags(write=False)
    return out


def gellmann_basis(dim: int) -> HermitianBasis:
    """Orthonormal basis {I/sqrt(d), G_k/sqrt(2)}; for d=2 this is the
    normalized Pauli basis in the order I, X, Y, Z."""
    return HermitianBasis(dim, _gellmann_elements(dim))


def rotated_basis(basis: HermitianBasis, orthogonal: np.ndarray) -> HermitianBasis:
    """Basis E'_i = sum_j O_ij E_j for a real orthogonal O; still orthonormal."""
    return HermitianBasis(basis.dim, np.einsum("ij,jab->iab", orthogonal, basis.elements))


def svd(m: np.ndarray) -> SingularDecomposition:
    u, s, vt = np.linalg.svd(np.asarray(m), full_matrices=True)
    return SingularDecomposition(s, u, vt.T)


def numerical_rank(m: np.ndarray, rel_tol: float = RANK_REL_TOL) -> int:
    """Number of singular values above ``rel_tol`` times the largest one."""
    m = np.asarray(m)
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_orthogonal(dim: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


def max_entry_norm(m: np.ndarray) -> float:
    return float(np.max(np.abs(m), initial=0.0))
