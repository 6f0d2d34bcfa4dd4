"""Time-ordered propagation of (time-dependent) generators.

A generator is any callable t -> superoperator matrix.  Generators whose
time dependence is a scalar linear combination of constant matrices
(:class:`LinearGenerator`) are integrated by the compiled RK4 kernel; all
other callables take the generic python path.  Step sizes are refined by
halving until two successive passes agree to the requested tolerance, so
the output is deterministic for a given input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _kernels
from .spectral import SpectralDecomposition, spectral_decompose

__all__ = [
    "Generator",
    "ConstantGenerator",
    "LinearGenerator",
    "as_generator",
    "Propagator",
    "ConvergenceError",
    "expm",
    "evolve",
    "propagate_grid",
    "interaction_generator",
    "integral_action",
    "integral_action_grid",
    "lemma32_identity_residual",
]

DEFAULT_RTOL = 1e-9
# Stage-count ceiling per refinement pass; exceeding it aborts with the
# residual achieved so far.
DEFAULT_MAX_STEPS = 2**23
MIN_STEPS = 64


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class Generator:
    """Continuous time-dependent generator t -> (n, n) complex matrix."""

    def __init__(self, dim: int, max_step: float | None = None):
        self.dim = int(dim)
        self.max_step = max_step

    @property
    def size(self) -> int:
        return self.dim * self.dim

    def __call__(self, t: float) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError


class ConstantGenerator(Generator):
    def __init__(self, matrix: np.ndarray, max_step: float | None = None):
        matrix = np.ascontiguousarray(matrix, dtype=complex)
        d = int(round(np.sqrt(matrix.shape[0])))
        super().__init__(d, max_step)
        self.matrix = matrix

    def __call__(self, t: float) -> np.ndarray:
        return self.matrix


class LinearGenerator(Generator):
    """Generator L(t) = sum_j c_j(t) M_j with constant matrices M_j.

    ``coeff_fn`` must be vectorized: it maps a (k,) array of times to a
    (k, m) array of coefficients.  ``max_step`` caps the integration step,
    e.g. a twentieth of the fastest oscillation period of the c_j.
    """

    def __init__(self, mats: np.ndarray, coeff_fn, max_step: float | None = None):
        mats = np.ascontiguousarray(mats, dtype=complex)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise ValueError("mats must have shape (m, n, n)")
        d = int(round(np.sqrt(mats.shape[1])))
        super().__init__(d, max_step)
        self.mats = mats
        self.coeff_fn = coeff_fn

    def coefficients(self, ts: np.ndarray) -> np.ndarray:
        out = np.asarray(self.coeff_fn(np.asarray(ts, dtype=float)), dtype=complex)
        return out.reshape(len(ts), self.mats.shape[0])

    def __call__(self, t: float) -> np.ndarray:
        c = self.coefficients(np.array([t]))[0]
        return np.tensordot(c, self.mats, axes=1)


class _CallableGenerator(Generator):
    def __init__(self, fn, dim: int, max_step: float | None = None):
        super().__init__(dim, max_step)
        self._fn = fn

    def __call__(self, t: float) -> np.ndarray:
        return np.asarray(self._fn(t), dtype=complex)


def as_generator(obj, max_step: float | None = None) -> Generator:
    """Wrap a constant matrix or a callable into a :class:`Generator`."""
    if isinstance(obj, Generator):
        return obj
    arr = np.asarray(obj)
    if arr.ndim == 2:
        return ConstantGenerator(arr, max_step)
    raise TypeError("expected a Generator or a square matrix")


@dataclass(frozen=True)
class Propagator:
    """Evolution map from ``from_time`` to ``to_time`` (identity at equal times)."""

    from_time: float
    to_time: float
    map: np.ndarray


# ---------------------------------------------------------------------------
# matrix exponential
# ---------------------------------------------------------------------------


def expm(superop: np.ndarray, t: float = 1.0, sd: SpectralDecomposition | None = None,
         method: str = "auto") -> np.ndarray:
    """exp(t L) for a constant superoperator.

    method="spectral" sums exp(alpha_k t)(P_k + polynomial in t N_k) over a
    spectral decomposition (computed on demand), method="pade" delegates to
    scipy's scaling-and-squaring, and "auto" picks spectral when a
    decomposition was supplied.
    """
    if method == "auto":
        method = "spectral" if sd is not None else "pade"
    if method == "pade":
        return scipy.linalg.expm(t * np.asarray(superop, dtype=complex))
    if method != "spectral":
        raise ValueError(f"unknown method {method!r}")
    if sd is None:
        sd = spectral_decompose(superop)
    n = sd.matrix.shape[0]
    out = np.zeros((n, n), dtype=complex)
    for k in range(sd.num_groups):
        block = sd.projections[k].copy()
        power = np.eye(n, dtype=complex)
        fact = 1.0
        for j in range(1, int(sd.nilpotent_degrees[k])):
            power = power @ sd.nilpotents[k]
            fact *= j
            block = block + (t**j / fact) * power @ sd.projections[k]
        out += np.exp(sd.eigenvalues[k] * t) * block
    return out


# ---------------------------------------------------------------------------
# schedules and passes
# ---------------------------------------------------------------------------


def _build_schedule(t0: float, times: np.ndarray, h_target: float):
    """Fixed steps hitting every requested time exactly.

    Returns (steps, stage_times, snap_after) where each grid segment is cut
    into equal substeps no longer than ``h_target``.
    """
    steps = []
    snap_after = []
    prev = t0
    for t in times:
        if t < prev - 1e-15 * max(1.0, abs(prev)):
            raise ValueError("grid times must be sorted and >= start time")
        span = t - prev
        if span > 0:
            nseg = max(1, int(np.ceil(span / h_target - 1e-12)))
            steps.extend([span / nseg] * nseg)
            prev = t
        snap_after.append(len(steps))
    steps = np.asarray(steps, dtype=float)
    edges = np.concatenate([[t0], t0 + np.cumsum(steps)])
    stage_times = np.empty(3 * len(steps))
    stage_times[0::3] = edges[:-1]
    stage_times[1::3] = edges[:-1] + 0.5 * steps
    stage_times[2::3] = edges[1:]
    return steps, stage_times, np.asarray(snap_after, dtype=np.int64)


def _run_pass(gen: Generator, t0: float, times: np.ndarray, h_target: float,
              y0: np.ndarray) -> np.ndarray:
    steps, stage_times, snap_after = _build_schedule(t0, times, h_target)
    if isinstance(gen, LinearGenerator):
        coeffs = gen.coefficients(stage_times)
        return _kernels.rk4_lincomb(gen.mats, coeffs, steps, y0, snap_after)
    if isinstance(gen, ConstantGenerator):
        mats = gen.matrix[None, :, :]
        coeffs = np.ones((len(stage_times), 1), dtype=complex)
        return _kernels.rk4_lincomb(mats, coeffs, steps, y0, snap_after)
    return _generic_pass(gen, steps, stage_times, snap_after, y0)


def _generic_pass(gen, steps, stage_times, snap_after, y0):
    y = np.array(y0, dtype=complex)
    out = np.empty((len(snap_after),) + y.shape, dtype=complex)
    g = 0
    while g < len(snap_after) and snap_after[g] == 0:
        out[g] = y
        g += 1
    for i, h in enumerate(steps):
        a1 = gen(stage_times[3 * i])
        a2 = gen(stage_times[3 * i + 1])
        a3 = gen(stage_times[3 * i + 2])
        k1 = a1 @ y
        k2 = a2 @ (y + (0.5 * h) * k1)
        k3 = a2 @ (y + (0.5 * h) * k2)
        k4 = a3 @ (y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        while g < len(snap_after) and snap_after[g] == i + 1:
            out[g] = y
            g += 1
    return out


def _refine(gen: Generator, t0: float, times: np.ndarray, y0: np.ndarray,
            rtol: float, max_steps: int) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    span = (times[-1] - t0) if len(times) else 0.0
    if span <= 0:
        return np.broadcast_to(y0, (len(times),) + y0.shape).copy()
    h = span / MIN_STEPS
    if gen.max_step is not None:
        h = min(h, gen.max_step)
    prev = _run_pass(gen, t0, times, h, y0)
    residual = np.inf
    while True:
        h *= 0.5
        if span / h > max_steps:
            raise ConvergenceError(
                f"step cap {max_steps} exceeded before reaching rtol={rtol:.1e}; "
                f"achieved residual {residual:.3e}",
                residual,
            )
        cur = _run_pass(gen, t0, times, h, y0)
        scale = max(1.0, float(np.max(np.abs(cur))))
        residual = float(
            max(np.linalg.norm(c - p) for c, p in zip(cur, prev)) / scale
        )
        if residual < rtol:
            return cur
        prev = cur


# ---------------------------------------------------------------------------
# public propagation API
# ---------------------------------------------------------------------------


def propagate_grid(gen: Generator, t0: float, times, rtol: float = DEFAULT_RTOL,
                   max_steps: int = DEFAULT_MAX_STEPS) -> np.ndarray:
    """Propagators from ``t0`` to every time in ``times`` in a single sweep.

    Returns an array of shape (len(times), n, n).  The grid must be sorted;
    each grid time is hit exactly by the step schedule (no interpolation).
    """
    gen = as_generator(gen)
    n = gen.size
    eye = np.eye(n, dtype=complex)
    return _refine(gen, float(t0), np.asarray(times, dtype=float), eye, rtol, max_steps)


def evolve(gen: Generator, s: float, t: float, rtol: float = DEFAULT_RTOL,
           max_steps: int = DEFAULT_MAX_STEPS) -> Propagator:
    """Evolution map of ``gen`` from time ``s`` to ``t`` (s <= t)."""
    if t < s:
        raise ValueError("evolve requires s <= t")
    gen = as_generator(gen)
    if t == s:
        return Propagator(s, t, np.eye(gen.size, dtype=complex))
    maps = propagate_grid(gen, s, [t], rtol=rtol, max_steps=max_steps)
    return Propagator(s, t, maps[0])


def interaction_generator(l2: Generator, l0: Generator, t: float,
                          rtol: float = DEFAULT_RTOL,
                          cond_max: float = 1e12) -> np.ndarray:
    """Generator of the l2-evolution in the frame comoving with l0.

    Returns Lambda_0(t)^{-1} [L2(t) - L0(t)] Lambda_0(t).  The frame map is
    inverted explicitly; if its condition number exceeds ``cond_max`` the
    inverse is untrustworthy (irreversible reference evolution) and the call
    fails.
    """
    l2 = as_generator(l2)
    l0 = as_generator(l0)
    lam0 = evolve(l0, 0.0, t, rtol=rtol).map
    cond = np.linalg.cond(lam0)
    if not np.isfinite(cond) or cond > cond_max:
        raise np.linalg.LinAlgError(
            f"reference propagator at t={t} has condition number {cond:.3e} "
            f"(> {cond_max:.1e}); the comoving frame is not numerically invertible"
        )
    diff = l2(t) - l0(t)
    return np.linalg.solve(lam0, diff @ lam0)


def _difference_generator(l1: Generator, l2: Generator) -> Generator:
    if isinstance(l1, (LinearGenerator, ConstantGenerator)) and isinstance(
        l2, (LinearGenerator, ConstantGenerator)
    ):
        m1, c1 = _as_lincomb(l1)
        m2, c2 = _as_lincomb(l2)
        mats = np.concatenate([m1, m2])

        def coeff_fn(ts, c1=c1, c2=c2):
            return np.concatenate([c1(ts), -c2(ts)], axis=1)

        return LinearGenerator(mats, coeff_fn, _min_step(l1, l2))
    return _CallableGenerator(
        lambda t: l1(t) - l2(t), l1.dim, _min_step(l1, l2)
    )


def _as_lincomb(gen):
    if isinstance(gen, LinearGenerator):
        return gen.mats, gen.coefficients
    mats = gen.matrix[None, :, :]
    return mats, lambda ts: np.ones((len(ts), 1), dtype=complex)


def _min_step(*gens):
    steps = [g.max_step for g in gens if g.max_step is not None]
    return min(steps) if steps else None


def _action_block_generator(l1: Generator, l2: Generator, l0: Generator) -> Generator:
    """Block generator of the pair (Lambda_0, S): d/ds [F; S] = [[L0,0],[L1-L2,L0]] [F; S]."""
    n = l0.size
    linear = all(
        isinstance(g, (LinearGenerator, ConstantGenerator)) for g in (l1, l2, l0)
    )
    if linear:
        m0, c0 = _as_lincomb(l0)
        m1, c1 = _as_lincomb(l1)
        m2, c2 = _as_lincomb(l2)
        blocks = []
        for mat in m0:
            b = np.zeros((2 * n, 2 * n), dtype=complex)
            b[:n, :n] = mat
            b[n:, n:] = mat
            blocks.append(b)
        for mat in np.concatenate([m1, m2]):
            b = np.zeros((2 * n, 2 * n), dtype=complex)
            b[n:, :n] = mat
            blocks.append(b)

        def coeff_fn(ts, c0=c0, c1=c1, c2=c2):
            return np.concatenate([c0(ts), c1(ts), -c2(ts)], axis=1)

        return LinearGenerator(np.array(blocks), coeff_fn, _min_step(l0, l1, l2))

    def call(t):
        b = np.zeros((2 * n, 2 * n), dtype=complex)
        a0 = l0(t)
        b[:n, :n] = a0
        b[n:, n:] = a0
        b[n:, :n] = l1(t) - l2(t)
        return b

    return _CallableGenerator(call, 2 * l0.dim, _min_step(l0, l1, l2))


def integral_action_grid(l1: Generator, l2: Generator, l0: Generator, times,
                         rtol: float = DEFAULT_RTOL,
                         max_steps: int = DEFAULT_MAX_STEPS) -> np.ndarray:
    """Integral action S(t) = int_0^t Lambda_0(t,s)[L1(s)-L2(s)]Lambda_0(s) ds.

    Computed by integrating dS/ds = L0(s) S + [L1(s)-L2(s)] Lambda_0(s) from
    S(0) = 0, jointly with the reference propagator, and sampled at ``times``.
    """
    l1, l2, l0 = as_generator(l1), as_generator(l2), as_generator(l0)
    n = l0.size
    block = _action_block_generator(l1, l2, l0)
    y0 = np.zeros((2 * n, n), dtype=complex)
    y0[:n, :n] = np.eye(n)
    snaps = _refine(block, 0.0, np.asarray(times, dtype=float), y0, rtol, max_steps)
    return snaps[:, n:, :]


def integral_action(l1, l2, l0, t: float, rtol: float = DEFAULT_RTOL,
                    max_steps: int = DEFAULT_MAX_STEPS) -> np.ndarray:
    return integral_action_grid(l1, l2, l0, [t], rtol=rtol, max_steps=max_steps)[0]


def _transposed(gen: Generator, sign: float = 1.0, t_end: float | None = None) -> Generator:
    """Generator t -> sign * L(f(t))^T with f(t) = t_end - t when given.

    Right-acting evolution equations dM/ds = +-M L(s) become left-acting for
    M^T, which is what the kernel integrates.
    """
    if isinstance(gen, LinearGenerator):
        mats = np.ascontiguousarray(gen.mats.transpose(0, 2, 1))

        def coeff_fn(ts):
            ts = np.asarray(ts)
            args = ts if t_end is None else t_end - ts
            return sign * gen.coefficients(args)

        return LinearGenerator(mats, coeff_fn, gen.max_step)
    if isinstance(gen, ConstantGenerator):
        return ConstantGenerator(sign * gen.matrix.T, gen.max_step)

    def call(t):
        arg = t if t_end is None else t_end - t
        return sign * gen(arg).T

    return _CallableGenerator(call, gen.dim, gen.max_step)


def lemma32_identity_residual(l1, l2, l0, t: float, rtol: float = DEFAULT_RTOL,
                              num_intervals: int = 256) -> float:
    """Residual of the integration-by-parts identity relating two evolutions.

    Both sides are evaluated independently: the left side by direct
    propagation of L1 and L2, the right side from the integral action in the
    L0 frame plus a composite-Simpson quadrature of the correction term.  A
    small residual certifies the propagation and action machinery against
    each other.
    """
    l1, l2, l0 = as_generator(l1), as_generator(l2), as_generator(l0)
    if num_intervals % 2:
        raise ValueError("num_intervals must be even for Simpson quadrature")
    n = l0.size
    s_grid = np.linspace(0.0, t, num_intervals + 1)

    lam1 = propagate_grid(l1, 0.0, s_grid, rtol=rtol)
    lam2 = propagate_grid(l2, 0.0, s_grid, rtol=rtol)
    lam0 = propagate_grid(l0, 0.0, s_grid, rtol=rtol)
    action = integral_action_grid(l1, l2, l0, s_grid, rtol=rtol)

    # Lambda_1(t, s): M(s) solves dM/ds = -M L1(s) with M(t) = 1.  In
    # u = t - s this is dW/du = +W L1(t-u), integrated forward after
    # transposing.
    rev = _transposed(l1, sign=1.0, t_end=t)
    u_grid = t - s_grid[::-1]
    lam1_ts = propagate_grid(rev, 0.0, u_grid, rtol=rtol)
    lam1_from = np.ascontiguousarray(lam1_ts[::-1].transpose(0, 2, 1))

    # Lambda_0(s)^{-1} solves dV/ds = -V L0(s) forward from V(0) = 1.
    inv0 = _transposed(l0, sign=-1.0)
    lam0_inv = propagate_grid(inv0, 0.0, s_grid, rtol=rtol).transpose(0, 2, 1)

    lam2_tilde = np.einsum("gij,gjk->gik", lam0_inv, lam2)

    weights = np.ones(num_intervals + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    weights *= (t / num_intervals) / 3.0

    integral = np.zeros((n, n), dtype=complex)
    for j, s in enumerate(s_grid):
        diff10 = l1(s) - l0(s)
        ltilde = lam0_inv[j] @ (l2(s) - l0(s)) @ lam0[j]
        integrand = lam1_from[j] @ (diff10 @ action[j] - action[j] @ ltilde) @ lam2_tilde[j]
        integral += weights[j] * integrand

    lhs = lam1[-1] - lam2[-1]
    rhs = action[-1] @ lam2_tilde[-1] + integral
    return float(np.linalg.norm(lhs - rhs, 2))
