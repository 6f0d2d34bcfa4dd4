"""Spectral representation of superoperators.

A (generally non-normal) matrix L is resolved as

    L = sum_k (alpha_k P_k + N_k)

with distinct clustered eigenvalues alpha_k, spectral projections P_k and
nilpotents N_k = (L - alpha_k) P_k.  Eigenvalues with |Re alpha_k| below the
peripheral tolerance form the peripheral spectrum; for generators of
contraction semigroups these are semisimple and carry the long-lived part of
the evolution, while the rest decays at least at rate eta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "SpectralDecomposition",
    "DecayConstants",
    "DecompositionError",
    "spectral_decompose",
    "decay_constants",
    "peripheral_projector",
    "nonperipheral_projector",
]

# Projection invariants must hold at least this well or the decomposition
# is rejected outright.
INVARIANT_TOL = 1e-6
# Eigenvector-matrix condition number beyond which the eigendecomposition
# is distrusted and the ordered-Schur path is used instead.
SCHUR_COND_SWITCH = 1e8


class DecompositionError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpectralDecomposition:
    """Clustered eigenvalues with projections, nilpotents and peripheral flags."""

    matrix: np.ndarray
    eigenvalues: np.ndarray          # (K,) distinct cluster representatives
    projections: np.ndarray          # (K, n, n)
    nilpotents: np.ndarray           # (K, n, n)
    nilpotent_degrees: np.ndarray    # (K,) ints, N_k ** degree == 0
    peripheral_mask: np.ndarray      # (K,) bools
    residual: float                  # worst invariant defect

    @property
    def num_groups(self) -> int:
        return len(self.eigenvalues)

    def reconstruct(self) -> np.ndarray:
        terms = self.eigenvalues[:, None, None] * self.projections + self.nilpotents
        return terms.sum(axis=0)


@dataclass(frozen=True)
class DecayConstants:
    """Norm data of a decomposition entering the closed-form error bounds.

    eta is the slowest nonperipheral decay rate (inf if none), p_coeffs the
    ascending coefficients of the polynomial p(t) multiplying exp(-eta t) in
    the decay estimate, and R = q(1/eta) bounds the integral of the decaying
    part via int_0^inf |exp(s L) Q| ds <= R / eta.  Delta is the minimal gap
    between distinct peripheral eigenvalues (inf when fewer than two), m
    their count and P_max the largest peripheral projection norm.  All norms
    are taken in the single norm named by ``norm``.
    """

    eta: float
    R: float
    p_coeffs: np.ndarray
    Delta: float
    m: int
    P_max: float
    norm: str

    @property
    def R_over_eta(self) -> float:
        if self.R == 0.0:
            return 0.0
        return self.R / self.eta

    def p_eval(self, t: float) -> float:
        return float(np.polyval(self.p_coeffs[::-1], t))


def _cluster(values: np.ndarray, tol: float) -> list[np.ndarray]:
    """Group indices of ``values`` whose pairwise chains stay within tol."""
    n = len(values)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) <= tol:
                pi, pj = find(i), find(j)
                if pi != pj:
                    parent[pi] = pj
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    out = [np.array(idx) for idx in groups.values()]
    out.sort(key=lambda idx: (values[idx].mean().real, values[idx].mean().imag))
    return out


def _schur_projection(mat: np.ndarray, cluster_vals: np.ndarray, tol: float) -> np.ndarray:
    """Spectral projection of the eigenvalue cluster via ordered Schur form."""

    def select(x):
        return bool(np.min(np.abs(x - cluster_vals)) <= tol)

    t, z, sdim = scipy.linalg.schur(mat, output="complex", sort=select)
    n = mat.shape[0]
    if sdim == 0 or sdim == n:
        return np.eye(n, dtype=complex) if sdim == n else np.zeros((n, n), complex)
    t11 = t[:sdim, :sdim]
    t12 = t[:sdim, sdim:]
    t22 = t[sdim:, sdim:]
    # Decouple the leading block: T11 X - X T22 = -T12.
    x = scipy.linalg.solve_sylvester(t11, -t22, -t12)
    core = np.zeros((n, n), dtype=complex)
    core[:sdim, :sdim] = np.eye(sdim)
    core[:sdim, sdim:] = -x
    return z @ core @ z.conj().T


def _nilpotent_degree(nil: np.ndarray, proj: np.ndarray, scale: float) -> int:
    nrm = np.linalg.norm(nil, 2)
    if nrm <= 1e-12 * max(1.0, scale):
        return 1
    rank = max(1, int(round(np.trace(proj).real)))
    power = nil.copy()
    for degree in range(2, rank + 1):
        power = power @ nil
        if np.linalg.norm(power, 2) < 1e-10 * nrm**degree:
            return degree
    return rank


def spectral_decompose(
    superop: np.ndarray,
    cluster_tol: float | None = None,
    peripheral_tol: float | None = None,
) -> SpectralDecomposition:
    """Resolve a superoperator into eigenvalue groups with projections.

    Projections come from biorthogonal right/left eigenvector pairs; when
    the eigenvector matrix is too ill-conditioned (near-defective input),
    each group is recovered from an ordered Schur form with Sylvester block
    decoupling.  Raises :class:`DecompositionError` naming the worst
    residual if the invariants cannot be met to ``1e-6`` either way.
    """
    mat = np.ascontiguousarray(superop, dtype=complex)
    n = mat.shape[0]
    if mat.shape != (n, n) or not np.all(np.isfinite(mat.view(float))):
        raise ValueError("input must be a finite square matrix")

    eigvals, eigvecs = np.linalg.eig(mat)
    radius = float(np.max(np.abs(eigvals))) if n else 0.0
    scale = max(1.0, radius)
    if cluster_tol is None:
        cluster_tol = 1e-8 * scale
    if peripheral_tol is None:
        peripheral_tol = 1e-9 * scale
    if cluster_tol <= 0 or peripheral_tol <= 0:
        raise ValueError("tolerances must be positive")

    clusters = _cluster(eigvals, cluster_tol)
    alphas = np.array([eigvals[idx].mean() for idx in clusters])

    cond = np.linalg.cond(eigvecs)
    projections = None
    if np.isfinite(cond) and cond <= SCHUR_COND_SWITCH:
        inv = np.linalg.inv(eigvecs)
        projections = np.array(
            [eigvecs[:, idx] @ inv[idx, :] for idx in clusters]
        )
        if _invariant_residual(mat, alphas, projections, scale) > INVARIANT_TOL:
            projections = None  # retry on the Schur path

    if projections is None:
        projections = np.array(
            [_schur_projection(mat, eigvals[idx], cluster_tol) for idx in clusters]
        )

    nilpotents = np.array(
        [(mat - a * np.eye(n)) @ p for a, p in zip(alphas, projections)]
    )
    degrees = np.array(
        [_nilpotent_degree(nk, pk, scale) for nk, pk in zip(nilpotents, projections)]
    )
    peripheral = np.abs(alphas.real) <= peripheral_tol

    residual = _invariant_residual(mat, alphas, projections, scale, nilpotents, degrees)
    if residual > INVARIANT_TOL:
        raise DecompositionError(
            f"spectral invariants violated: worst residual {residual:.3e} "
            f"exceeds {INVARIANT_TOL:.0e} (matrix may be defective beyond recovery)"
        )
    return SpectralDecomposition(
        matrix=mat,
        eigenvalues=alphas,
        projections=projections,
        nilpotents=nilpotents,
        nilpotent_degrees=degrees,
        peripheral_mask=peripheral,
        residual=residual,
    )


def _invariant_residual(mat, alphas, projections, scale, nilpotents=None, degrees=None):
    worst = 0.0
    total = projections.sum(axis=0)
    n = mat.shape[0]
    worst = max(worst, np.linalg.norm(total - np.eye(n), 2))
    for k, pk in enumerate(projections):
        for l, pl in enumerate(projections):
            prod = pk @ pl
            expect = pk if k == l else 0.0
            worst = max(worst, np.linalg.norm(prod - expect, 2))
    if nilpotents is not None:
        recon = (alphas[:, None, None] * projections + nilpotents).sum(axis=0)
        worst = max(worst, np.linalg.norm(recon - mat, 2) / scale)
        for k, nk in enumerate(nilpotents):
            for l, pl in enumerate(projections):
                expect = nk if k == l else 0.0
                worst = max(worst, np.linalg.norm(nk @ pl - expect, 2) / scale)
                worst = max(worst, np.linalg.norm(pl @ nk - expect, 2) / scale)
            power = np.eye(n, dtype=complex)
            for _ in range(degrees[k]):
                power = power @ nk
            worst = max(worst, np.linalg.norm(power, 2) / scale)
    return float(worst)


def peripheral_projector(sd: SpectralDecomposition) -> np.ndarray:
    """Sum of the spectral projections with (numerically) imaginary eigenvalue."""
    n = sd.matrix.shape[0]
    if not sd.peripheral_mask.any():
        return np.zeros((n, n), dtype=complex)
    return sd.projections[sd.peripheral_mask].sum(axis=0)


def nonperipheral_projector(sd: SpectralDecomposition) -> np.ndarray:
    return np.eye(sd.matrix.shape[0]) - peripheral_projector(sd)


def decay_constants(
    sd: SpectralDecomposition,
    norm: str = "spectral",
    norm_fn=None,
) -> DecayConstants:
    """Extract the bound constants (eta, R, p, Delta, m, P_max) from ``sd``.

    ``norm`` selects the operator norm used for the nilpotents and the
    peripheral projections: "spectral" (largest singular value of the
    superoperator matrix) or "diamond".  A custom callable can be supplied
    via ``norm_fn``; all constants share the one norm.
    """
    if norm_fn is None:
        norm_fn = _named_norm(norm)

    periph = sd.peripheral_mask
    nonper_re = sd.eigenvalues.real[~periph]
    eta = float(np.min(np.abs(nonper_re))) if len(nonper_re) else np.inf

    # p(t) = sum over nonperipheral groups k, n < degree_k of |N_k|^n t^n / n!
    # and q(t) the same without the factorials; R = q(1/eta).
    max_deg = int(sd.nilpotent_degrees[~periph].max()) if (~periph).any() else 1
    p_coeffs = np.zeros(max_deg)
    r_value = 0.0
    for k in np.nonzero(~periph)[0]:
        nk_norm = norm_fn(sd.nilpotents[k])
        for power in range(int(sd.nilpotent_degrees[k])):
            term = nk_norm**power
            p_coeffs[power] += term / math.factorial(power)
            r_value += term / eta**power if np.isfinite(eta) else 0.0

    periph_vals = sd.eigenvalues[periph]
    m = int(len(periph_vals))
    if m >= 2:
        diffs = np.abs(periph_vals[:, None] - periph_vals[None, :])
        delta = float(np.min(diffs[~np.eye(m, dtype=bool)]))
    else:
        delta = np.inf
    p_max = (
        max(norm_fn(sd.projections[k]) for k in np.nonzero(periph)[0]) if m else 0.0
    )
    return DecayConstants(
        eta=eta,
        R=float(r_value),
        p_coeffs=p_coeffs,
        Delta=delta,
        m=m,
        P_max=float(p_max),
        norm=norm,
    )


def _named_norm(norm: str):
    if norm == "spectral":
        return lambda mat: float(np.linalg.norm(mat, 2))
    if norm == "diamond":
        from .norms import diamond_norm_general

        return lambda mat: diamond_norm_general(mat, restarts=8, seed=7)
    raise ValueError(f"unknown norm {norm!r}; expected 'spectral' or 'diamond'")
