"""Superoperators on finite-dimensional operator spaces via vectorization.

Operators on a d-dimensional Hilbert space are dense complex d x d arrays.
A superoperator is the d^2 x d^2 matrix of a linear map on operators under
the column-stacking convention

    vec(A) = A stacked column by column,   vec(A X B) = (B^T kron A) vec(X).

The convention is global: every matrix produced by this package is fixed
bit-for-bit by it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "vectorize",
    "devectorize",
    "hilbert_dim",
    "left_mult",
    "right_mult",
    "commutator_superop",
    "hamiltonian_superop",
    "GklsSpec",
    "gkls_generator",
    "gkls_dissipator",
    "unitary_conjugation_superop",
    "block_pinching",
    "operator_basis",
    "require_hermitian",
    "is_hermitian",
]

# Scale-invariant tolerance for structural checks on inputs
# (Hermiticity, unitarity, orthogonality of projection families).
STRUCTURE_RTOL = 1e-10


def vectorize(a: np.ndarray) -> np.ndarray:
    """Column-stack a square matrix into a vector of length d^2."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a.reshape(-1, order="F")


def devectorize(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vectorize`: rebuild the d x d matrix."""
    v = np.asarray(v)
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise ValueError(f"vector length {v.size} is not a perfect square")
    return v.reshape(d, d, order="F")


def hilbert_dim(superop: np.ndarray) -> int:
    """Hilbert-space dimension d of a d^2 x d^2 superoperator matrix."""
    n = superop.shape[0]
    d = int(round(np.sqrt(n)))
    if superop.ndim != 2 or superop.shape != (n, n) or d * d != n:
        raise ValueError(f"not a superoperator matrix: shape {superop.shape}")
    return d


def is_hermitian(a: np.ndarray, rtol: float = STRUCTURE_RTOL) -> bool:
    a = np.asarray(a)
    return np.linalg.norm(a - a.conj().T) <= rtol * max(1.0, np.linalg.norm(a))


def require_hermitian(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=complex)
    if not np.all(np.isfinite(a.view(float))):
        raise ValueError(f"{name} contains non-finite entries")
    if not is_hermitian(a):
        resid = np.linalg.norm(a - a.conj().T)
        raise ValueError(f"{name} is not Hermitian (defect {resid:.3e})")
    return a


def left_mult(a: np.ndarray) -> np.ndarray:
    """Superoperator of X -> A X."""
    a = np.asarray(a, dtype=complex)
    d = a.shape[0]
    return np.kron(np.eye(d), a)


def right_mult(b: np.ndarray) -> np.ndarray:
    """Superoperator of X -> X B."""
    b = np.asarray(b, dtype=complex)
    d = b.shape[0]
    return np.kron(b.T, np.eye(d))


def commutator_superop(a: np.ndarray) -> np.ndarray:
    """Superoperator of X -> [A, X]."""
    return left_mult(a) - right_mult(a)


def hamiltonian_superop(h: np.ndarray) -> np.ndarray:
    """Superoperator of the Hamiltonian flow rho -> -i [H, rho].

    Parameters
    ----------
    h : ndarray
        Hermitian d x d matrix.  Non-Hermitian input (beyond the
        scale-invariant tolerance) is rejected.
    """
    h = require_hermitian(h, "hamiltonian")
    return -1j * commutator_superop(h)


@dataclass(frozen=True)
class GklsSpec:
    """Hamiltonian plus a list of (rate, jump operator) pairs.

    Rates must be nonnegative and the Hamiltonian Hermitian; together they
    generate a completely positive trace-preserving semigroup.
    """

    hamiltonian: np.ndarray
    jumps: list = field(default_factory=list)  # [(gamma_k, V_k), ...]

    def __post_init__(self):
        h = require_hermitian(self.hamiltonian, "hamiltonian")
        object.__setattr__(self, "hamiltonian", h)
        d = h.shape[0]
        checked = []
        for k, (rate, op) in enumerate(self.jumps):
            rate = float(rate)
            if rate < 0:
                raise ValueError(f"jump rate {k} is negative: {rate}")
            op = np.ascontiguousarray(op, dtype=complex)
            if op.shape != (d, d):
                raise ValueError(
                    f"jump operator {k} has shape {op.shape}, expected {(d, d)}"
                )
            checked.append((rate, op))
        object.__setattr__(self, "jumps", checked)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]


def gkls_generator(spec: GklsSpec) -> np.ndarray:
    """Full generator rho -> -i[H,rho] - (1/2) sum_k gamma_k ({V_k^+ V_k, rho} - 2 V_k rho V_k^+)."""
    d = spec.dim
    gen = hamiltonian_superop(spec.hamiltonian)
    eye = np.eye(d)
    for rate, v in spec.jumps:
        vdv = v.conj().T @ v
        gen = gen - 0.5 * rate * (
            np.kron(eye, vdv) + np.kron(vdv.T, eye) - 2.0 * np.kron(v.conj(), v)
        )
    return gen


def gkls_dissipator(spec: GklsSpec) -> np.ndarray:
    """Dissipative part alone: the generator of ``spec`` with H = 0."""
    return gkls_generator(GklsSpec(np.zeros((spec.dim, spec.dim)), spec.jumps))


def unitary_conjugation_superop(u: np.ndarray) -> np.ndarray:
    """Superoperator of rho -> U rho U^+ for unitary U."""
    u = np.ascontiguousarray(u, dtype=complex)
    d = u.shape[0]
    defect = np.linalg.norm(u.conj().T @ u - np.eye(d))
    if defect > STRUCTURE_RTOL * max(1.0, np.linalg.norm(u) ** 2):
        raise ValueError(f"matrix is not unitary (defect {defect:.3e})")
    return np.kron(u.conj(), u)


def block_pinching(projections) -> tuple[np.ndarray, np.ndarray]:
    """Pinching P: rho -> sum_k P_k rho P_k and its complement Q = 1 - P.

    The family must consist of Hermitian idempotents that are mutually
    orthogonal; it may be incomplete (sum to less than the identity).  Both
    outputs are idempotent, and P + Q is the identity superoperator by
    construction.
    """
    mats = [np.ascontiguousarray(p, dtype=complex) for p in projections]
    if not mats:
        raise ValueError("empty projection family")
    d = mats[0].shape[0]
    for i, p in enumerate(mats):
        if p.shape != (d, d):
            raise ValueError(f"projection {i} has shape {p.shape}, expected {(d, d)}")
        scale = max(1.0, np.linalg.norm(p))
        if np.linalg.norm(p - p.conj().T) > STRUCTURE_RTOL * scale:
            raise ValueError(f"projection {i} is not Hermitian")
        if np.linalg.norm(p @ p - p) > STRUCTURE_RTOL * scale:
            raise ValueError(f"projection {i} is not idempotent")
        for j, q in enumerate(mats[:i]):
            if np.linalg.norm(p @ q) > STRUCTURE_RTOL:
                raise ValueError(f"projections {j} and {i} are not orthogonal")
    total = sum(np.kron(p.conj(), p) for p in mats)
    return total, np.eye(d * d) - total


def operator_basis(d: int) -> np.ndarray:
    """Orthonormal Hermitian operator basis of B(C^d), shape (d^2, d, d).

    Entry 0 is I/sqrt(d); the rest are the normalized generalized Gell-Mann
    matrices ordered as (symmetric, antisymmetric) per index pair followed by
    the diagonal ones.  For d = 2 this is exactly {I, X, Y, Z} / sqrt(2).
    Orthonormality is with respect to the Hilbert-Schmidt inner product.
    """
    if d < 1:
        raise ValueError("dimension must be positive")
    mats = [np.eye(d, dtype=complex) / np.sqrt(d)]
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = 1.0 / np.sqrt(2.0)
            mats.append(sym)
            asym = np.zeros((d, d), dtype=complex)
            asym[j, k] = -1j / np.sqrt(2.0)
            asym[k, j] = 1j / np.sqrt(2.0)
            mats.append(asym)
    for l in range(1, d):
        diag = np.zeros((d, d), dtype=complex)
        diag[np.arange(l), np.arange(l)] = 1.0
        diag[l, l] = -l
        mats.append(diag / np.sqrt(l * (l + 1)))
    return np.array(mats)
