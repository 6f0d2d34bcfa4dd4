"""Trace norm, Choi coefficient matrices and diamond norms.

The coefficient matrix c of a map Phi expands it over an orthonormal
operator basis {F_mu} as Phi(A) = sum c_{mu nu} F_mu A F_nu^+; c equals d
times the Choi operator of Phi expressed in the corresponding maximally
entangled basis, so trace norms of the two differ exactly by the factor d.
The diamond norm is bracketed by |C|_1 <= |Phi|_diamond <= d |C|_1, is given
exactly by |C|_1 for qubit subunital maps, and is otherwise estimated from
below by a seeded multi-start ascent over rank-one inputs of the extended
map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .superop import hilbert_dim, operator_basis, vectorize, devectorize

__all__ = [
    "trace_norm",
    "ChoiMatrix",
    "choi",
    "choi_coefficients_batch",
    "superop_from_choi",
    "is_hermiticity_preserving",
    "diamond_sandwich",
    "diamond_qubit_subunital",
    "diamond_numeric",
    "diamond_norm_general",
    "superop_norm",
]

HERMITICITY_TOL = 1e-9
SUBUNITAL_TOL = 1e-8
DEFAULT_RESTARTS = 32


def trace_norm(a: np.ndarray) -> float:
    """Sum of singular values."""
    a = np.asarray(a)
    if not np.all(np.isfinite(a.view(float) if a.dtype == complex else a)):
        raise ValueError("matrix contains non-finite entries")
    return float(np.linalg.svd(a, compute_uv=False).sum())


@dataclass(frozen=True)
class ChoiMatrix:
    """Coefficient matrix c (= d times the Choi operator) of a map."""

    dim: int
    matrix: np.ndarray

    @property
    def choi_trace_norm(self) -> float:
        """Trace norm of the Choi operator C = c / d."""
        return trace_norm(self.matrix) / self.dim

    def eigenvalue_floor(self) -> float:
        """Smallest eigenvalue of the Choi operator (complete positivity test)."""
        herm = 0.5 * (self.matrix + self.matrix.conj().T)
        return float(np.linalg.eigvalsh(herm).min()) / self.dim


def _check_basis(basis: np.ndarray, d: int) -> np.ndarray:
    basis = np.asarray(basis, dtype=complex)
    if basis.shape != (d * d, d, d):
        raise ValueError(f"basis must have shape {(d * d, d, d)}, got {basis.shape}")
    gram = np.einsum("mab,nab->mn", basis.conj(), basis)
    if np.linalg.norm(gram - np.eye(d * d)) > 1e-10 * d:
        raise ValueError("operator basis is not orthonormal under Hilbert-Schmidt")
    return basis


def choi(superop: np.ndarray, basis: np.ndarray | None = None) -> ChoiMatrix:
    """Coefficient matrix of the map with the given superoperator matrix.

    ``basis`` defaults to :func:`rwabounds.superop.operator_basis`; a custom
    basis is verified to be orthonormal.
    """
    superop = np.asarray(superop, dtype=complex)
    d = hilbert_dim(superop)
    if basis is None:
        basis = operator_basis(d)
    else:
        basis = _check_basis(basis, d)
    s4 = superop.reshape(d, d, d, d)
    c = np.einsum("nac,mbd,abcd->mn", basis, basis.conj(), s4)
    return ChoiMatrix(dim=d, matrix=c)


def choi_coefficients_batch(superops: np.ndarray, basis: np.ndarray | None = None) -> np.ndarray:
    """Coefficient matrices of a stack of superoperators, shape (G, d^2, d^2)."""
    superops = np.asarray(superops, dtype=complex)
    d = hilbert_dim(superops[0])
    if basis is None:
        basis = operator_basis(d)
    s4 = superops.reshape(-1, d, d, d, d)
    return np.einsum("nac,mbd,gabcd->gmn", basis, basis.conj(), s4)


def superop_from_choi(c: np.ndarray, basis: np.ndarray | None = None) -> np.ndarray:
    """Superoperator matrix of the map with coefficient matrix ``c``."""
    c = np.asarray(c, dtype=complex)
    d = int(round(np.sqrt(c.shape[0])))
    if basis is None:
        basis = operator_basis(d)
    s4 = np.einsum("mn,nac,mbd->abcd", c, basis.conj(), basis)
    return s4.reshape(d * d, d * d)


def is_hermiticity_preserving(superop: np.ndarray, tol: float = HERMITICITY_TOL) -> bool:
    """Whether Phi(A^+)^+ = Phi(A), i.e. the coefficient matrix is Hermitian."""
    c = choi(superop).matrix
    return np.linalg.norm(c - c.conj().T) <= tol * max(1.0, np.linalg.norm(c))


def diamond_sandwich(superop: np.ndarray) -> tuple[float, float]:
    """Lower and upper bracket (|C|_1, d |C|_1) of the diamond norm."""
    cm = choi(superop)
    lower = cm.choi_trace_norm
    return lower, cm.dim * lower


def diamond_qubit_subunital(superop: np.ndarray) -> float:
    """Exact diamond norm of a qubit map that is Hermiticity-preserving and
    maps the identity to a multiple of itself on both sides.

    Rejects input that violates one of the preconditions, naming it.
    """
    superop = np.asarray(superop, dtype=complex)
    d = hilbert_dim(superop)
    if d != 2:
        raise ValueError(f"qubit formula requires dimension 2, got {d}")
    cm = choi(superop)
    c = cm.matrix
    if np.linalg.norm(c - c.conj().T) > HERMITICITY_TOL * max(1.0, np.linalg.norm(c)):
        raise ValueError("map is not Hermiticity-preserving")
    eye = np.eye(2, dtype=complex)
    out = devectorize(superop @ vectorize(eye))
    alpha = np.trace(out).real / 2.0
    if np.linalg.norm(out - alpha * eye) > SUBUNITAL_TOL * max(1.0, abs(alpha)):
        raise ValueError("map does not send the identity to a multiple of itself")
    out_dual = devectorize(superop.conj().T @ vectorize(eye))
    if np.linalg.norm(out_dual - alpha * eye) > SUBUNITAL_TOL * max(1.0, abs(alpha)):
        raise ValueError("dual map does not send the identity to the same multiple")
    return cm.choi_trace_norm


# ---------------------------------------------------------------------------
# numeric diamond norm: seesaw ascent over rank-one inputs of Phi x 1
# ---------------------------------------------------------------------------


def _process_tensor(superop: np.ndarray, d: int) -> np.ndarray:
    # T[i, j, k, l] = Phi(E_kl)[i, j]; column-stacking fixes the reshuffle.
    s4 = superop.reshape(d, d, d, d)
    return s4.transpose(1, 0, 3, 2)


def _apply_extended_rank1(t_tensor, u2, v2):
    y4 = np.einsum("ijkl,ka,lb->iajb", t_tensor, u2, v2.conj())
    n = u2.shape[0] * u2.shape[1]
    return y4.reshape(n, n)


def _hp_seesaw(t_fwd, t_adj, d, psi, max_iter=300, tol=1e-13):
    value = -np.inf
    for _ in range(max_iter):
        p2 = psi.reshape(d, d)
        y = _apply_extended_rank1(t_fwd, p2, p2)
        y = 0.5 * (y + y.conj().T)
        w_vals, w_vecs = np.linalg.eigh(y)
        new_value = float(np.abs(w_vals).sum())
        signs = np.where(w_vals >= 0, 1.0, -1.0)
        w = (w_vecs * signs) @ w_vecs.conj().T
        m = np.einsum("ijkl,kalb->iajb", t_adj, w.reshape(d, d, d, d))
        m = m.reshape(d * d, d * d)
        m = 0.5 * (m + m.conj().T)
        vals, vecs = np.linalg.eigh(m)
        psi = vecs[:, -1]
        if new_value - value <= tol * max(1.0, abs(new_value)):
            return new_value, psi
        value = new_value
    return value, psi


def _general_seesaw(t_fwd, t_adj, d, u, v, max_iter=300, tol=1e-13):
    value = -np.inf
    for _ in range(max_iter):
        a = _apply_extended_rank1(t_fwd, u.reshape(d, d), v.reshape(d, d))
        um, sv, vh = np.linalg.svd(a)
        new_value = float(sv.sum())
        w = um @ vh
        m = np.einsum("ijkl,kalb->iajb", t_adj, w.reshape(d, d, d, d))
        m = m.reshape(d * d, d * d)
        mu, ms, mvh = np.linalg.svd(m)
        u = mu[:, 0]
        v = mvh[0].conj()
        if new_value - value <= tol * max(1.0, abs(new_value)):
            return new_value, u, v
        value = new_value
    return value, u, v


def _entangled_start(d: int) -> np.ndarray:
    psi = np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)
    return psi


def _random_states(rng, d, count):
    z = rng.standard_normal((count, d * d)) + 1j * rng.standard_normal((count, d * d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def diamond_numeric(
    superop: np.ndarray,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    initial_states: np.ndarray | None = None,
    return_state: bool = False,
):
    """Numeric diamond norm of a Hermiticity-preserving map.

    Maximizes the trace norm of the extended map over pure bipartite input
    states by a seesaw ascent, restarted from ``restarts`` seeded random
    states plus the maximally entangled one.  The result is an attained
    (hence certified) lower bound on the diamond norm and is deterministic
    for fixed seed.  Non-Hermiticity-preserving maps are rejected: for those
    the maximum need not be attained on pure states (see
    :func:`diamond_norm_general`).
    """
    superop = np.asarray(superop, dtype=complex)
    d = hilbert_dim(superop)
    if not is_hermiticity_preserving(superop):
        raise ValueError("map is not Hermiticity-preserving")
    t_fwd = _process_tensor(superop, d)
    t_adj = _process_tensor(superop.conj().T, d)
    rng = np.random.default_rng(seed)
    starts = [_entangled_start(d)]
    starts.extend(_random_states(rng, d, restarts))
    if initial_states is not None:
        starts.extend(np.atleast_2d(initial_states))
    best, best_state = -np.inf, None
    for psi in starts:
        value, state = _hp_seesaw(t_fwd, t_adj, d, np.asarray(psi, dtype=complex))
        if value > best:
            best, best_state = value, state
    if return_state:
        return best, best_state
    return best


def diamond_norm_general(
    superop: np.ndarray, restarts: int = DEFAULT_RESTARTS, seed: int = 0
) -> float:
    """Numeric diamond norm for an arbitrary linear map.

    Same seesaw as :func:`diamond_numeric` but over rank-one inputs
    |u><v| with independent unit vectors, which is where the supremum is
    attained without Hermiticity preservation.
    """
    superop = np.asarray(superop, dtype=complex)
    d = hilbert_dim(superop)
    if is_hermiticity_preserving(superop):
        return float(diamond_numeric(superop, restarts=restarts, seed=seed))
    t_fwd = _process_tensor(superop, d)
    t_adj = _process_tensor(superop.conj().T, d)
    rng = np.random.default_rng(seed)
    ent = _entangled_start(d)
    starts = [(ent, ent)]
    us = _random_states(rng, d, restarts)
    vs = _random_states(rng, d, restarts)
    starts.extend(zip(us, vs))
    best = -np.inf
    for u, v in starts:
        value, _, _ = _general_seesaw(
            t_fwd, t_adj, d, np.asarray(u, dtype=complex), np.asarray(v, dtype=complex)
        )
        best = max(best, value)
    return float(best)


def superop_norm(superop: np.ndarray, norm: str = "spectral", **kwargs) -> float:
    """Operator norm of a superoperator: 'spectral' (on vectorized operators)
    or 'diamond'."""
    if norm == "spectral":
        return float(np.linalg.norm(superop, 2))
    if norm == "diamond":
        return diamond_norm_general(superop, **kwargs)
    raise ValueError(f"unknown norm {norm!r}")
