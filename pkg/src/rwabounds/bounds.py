"""Closed-form error bounds and long-time averaging of perturbations.

The central objects are the convergence-error bounds for a generator
kappa L0 + D(t) with strong contractive part L0: the generic and
contractive variants of the uniform bound, their peripheral-projected
refinements, the strong-coupling bound driven by the peripheral spectral
gap, and the time averages that produce the effective generator the bounds
compare against.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .propagate import ConstantGenerator, Generator, as_generator
from .spectral import DecayConstants, SpectralDecomposition, decay_constants
from .superop import hilbert_dim
from .norms import superop_norm

__all__ = [
    "BoundInputs",
    "BoundReport",
    "AverageConvergenceError",
    "lemma31_bound",
    "theorem41_bound",
    "pinching_DZ",
    "longtime_average",
    "strong_coupling_bound",
    "twotimescale_average",
    "sup_action_norm",
]


class AverageConvergenceError(RuntimeError):
    def __init__(self, message: str, difference: float):
        super().__init__(message)
        self.difference = difference


@dataclass(frozen=True)
class BoundInputs:
    """Scalar ingredients of the closed-form bounds.

    D bounds the perturbation norm sup_t |D(t)|, Dbar the averaged
    generator norm, S_sup the supremum of the peripheral integral action,
    eta and R the decay constants of the strong part, T the horizon and
    kappa the strength of the strong part.  ``contractive`` selects the
    tightened variant valid when the full generator produces contractions.
    """

    D: float
    Dbar: float
    S_sup: float
    eta: float
    R: float
    T: float
    kappa: float
    contractive: bool = False
    s_sup_source: str = "analytic"  # or "sampled"

    def __post_init__(self):
        for name in ("D", "Dbar", "S_sup", "R", "T"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")

    @property
    def decay_ratio(self) -> float:
        """R / (kappa eta), zero when the spectrum is fully peripheral."""
        if self.R == 0.0:
            return 0.0
        return self.R / (self.kappa * self.eta)


@dataclass(frozen=True)
class BoundReport:
    value: float
    equation_tag: str
    inputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ValueError("bound value must be finite")


def lemma31_bound(
    l1,
    l2,
    T: float,
    norm: str = "diamond",
    rel_tol: float = 1e-6,
    max_points: int = 4096,
    **norm_kwargs,
) -> BoundReport:
    """Integral of |L1(u) - L2(u)| over [0, T] by doubling Simpson quadrature.

    For contraction-type generators this dominates the distance of the two
    evolutions at every time in [0, T].
    """
    l1, l2 = as_generator(l1), as_generator(l2)
    if T < 0:
        raise ValueError("T must be nonnegative")
    if T == 0:
        return BoundReport(0.0, "generator-difference", {"T": 0.0, "norm": norm})

    def integrand(u):
        return superop_norm(l1(u) - l2(u), norm, **norm_kwargs)

    num = 8
    cache: dict[float, float] = {}

    def simpson(n):
        xs = np.linspace(0.0, T, n + 1)
        vals = np.array([cache.setdefault(float(x), integrand(float(x))) for x in xs])
        w = np.ones(n + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return float((T / n) / 3.0 * (w @ vals))

    prev = simpson(num)
    while num < max_points:
        num *= 2
        cur = simpson(num)
        if abs(cur - prev) <= rel_tol * max(1.0, abs(cur)):
            prev = cur
            break
        prev = cur
    return BoundReport(prev, "generator-difference", {"T": T, "norm": norm})


def theorem41_bound(
    inputs: BoundInputs,
    peripheral_variant: bool = False,
    t: float | None = None,
    p_coeffs=None,
) -> BoundReport:
    """Closed-form error bound for the evolution against its averaged limit.

    Without the peripheral variant the bound covers the full maps; the
    peripheral variant compares against the average projected onto the
    peripheral subspace and holds only for t > 0, adding the transient
    exp(-kappa eta t) p(kappa t).
    """
    d, dbar, s = inputs.D, inputs.Dbar, inputs.S_sup
    T = inputs.T
    ratio = inputs.decay_ratio  # R / (kappa eta)

    if not peripheral_variant:
        if inputs.contractive:
            value = (s + 2.0 * d * ratio) * (1.0 + T * (d + dbar))
            tag = "contractive"
        else:
            value = (
                (s + 2.0 * d * ratio)
                * np.exp(dbar * T)
                * (1.0 + T * np.exp(d * T) * (d + dbar))
            )
            tag = "generic"
        return BoundReport(float(value), tag, {"inputs": inputs})

    if t is None or t <= 0:
        raise ValueError("peripheral variant holds only for t > 0")
    if p_coeffs is None:
        raise ValueError("peripheral variant requires the decay polynomial coefficients")
    p_coeffs = np.asarray(p_coeffs, dtype=float)
    if inputs.eta == np.inf or inputs.R == 0.0:
        transient = 0.0
    else:
        kt = inputs.kappa * t
        transient = np.exp(-inputs.eta * kt) * np.polyval(p_coeffs[::-1], kt)
    if inputs.contractive:
        value = (s + d * ratio) * (1.0 + t * (d + dbar)) + d * ratio + transient
        tag = "contractive-peripheral"
    else:
        value = (
            (s + d * ratio)
            * np.exp(dbar * T)
            * (1.0 + T * np.exp(d * T) * (d + dbar))
            + d * ratio * np.exp(d * T)
            + transient
        )
        tag = "generic-peripheral"
    return BoundReport(float(value), tag, {"inputs": inputs, "t": t})


def pinching_DZ(perturbation: np.ndarray, sd: SpectralDecomposition) -> np.ndarray:
    """Restriction sum_k P_k D P_k over the peripheral eigenprojections."""
    out = np.zeros_like(sd.matrix)
    for k in np.nonzero(sd.peripheral_mask)[0]:
        out += sd.projections[k] @ perturbation @ sd.projections[k]
    return out


def _peripheral_frame_factors(sd: SpectralDecomposition):
    idx = np.nonzero(sd.peripheral_mask)[0]
    return [(sd.eigenvalues[k], sd.projections[k]) for k in idx]


def _averaged(perturbation, frame, s_grid, weights):
    total = np.zeros_like(frame[0][1])
    for s, w in zip(s_grid, weights):
        d_s = perturbation(s)
        m = np.zeros_like(total)
        for ak, pk in frame:
            left = np.exp(-ak * s) * (pk @ d_s)
            for al, pl in frame:
                m += np.exp(al * s) * (left @ pl)
        total += w * m
    return total


def longtime_average(
    perturbation,
    sd: SpectralDecomposition,
    tau_max: float | None = None,
    num_points: int | None = None,
    check_tol: float = 1e-2,
) -> np.ndarray:
    """Average (1/tau) int_0^tau exp(-s L0) P D(s) P exp(s L0) ds at large tau.

    ``perturbation`` is the perturbation in unscaled time, either a constant
    matrix (the average is then the peripheral pinching, returned exactly)
    or a generator s -> matrix.  The conjugation uses the peripheral part of
    the decomposition only, which is exact for contraction generators
    (peripheral eigenvalues are semisimple).  Convergence is assessed by
    comparing against the average at tau_max / 2; disagreement beyond
    ``check_tol`` raises :class:`AverageConvergenceError`.
    """
    if isinstance(perturbation, np.ndarray):
        return pinching_DZ(perturbation, sd)
    if isinstance(perturbation, ConstantGenerator):
        return pinching_DZ(perturbation.matrix, sd)
    perturbation = as_generator(perturbation)

    frame = _peripheral_frame_factors(sd)
    if not frame:
        return np.zeros_like(sd.matrix)
    freqs = [abs((a - b).imag) for a, _ in frame for b, _ in frame]
    fastest = max(freqs) if freqs else 0.0
    if tau_max is None:
        base = 2 * np.pi / max(fastest, 1e-2)
        tau_max = 200.0 * base
    if num_points is None:
        per_period = 40.0 * max(fastest, 1.0) / (2 * np.pi)
        hint = 0.0 if perturbation.max_step is None else 2.0 / perturbation.max_step
        num_points = int(min(2 ** 18, max(2048, tau_max * max(per_period, hint))))
    if num_points % 2:
        num_points += 1

    def average_at(tau, n):
        s_grid = np.linspace(0.0, tau, n + 1)
        w = np.ones(n + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        w *= (tau / n) / 3.0 / tau
        return _averaged(perturbation, frame, s_grid, w)

    full = average_at(tau_max, num_points)
    half = average_at(tau_max / 2.0, num_points // 2)
    diff = float(np.linalg.norm(full - half, 2))
    if diff > check_tol * max(1.0, np.linalg.norm(full, 2)):
        raise AverageConvergenceError(
            f"time average not converged at tau={tau_max:g}: averages at tau and "
            f"tau/2 differ by {diff:.3e}",
            diff,
        )
    return full


def twotimescale_average(
    perturbation_2arg,
    sd: SpectralDecomposition,
    t_grid,
    tau_max: float | None = None,
    num_points: int | None = None,
    check_tol: float = 1e-2,
    max_step: float | None = None,
) -> Generator:
    """Pointwise slow-time average of D(t, s) over the fast variable s.

    For each t in ``t_grid`` the long-time average of s -> D(t, s) is taken
    as in :func:`longtime_average`; the result is a generator interpolating
    linearly between the grid points.  Non-convergence at a grid point is
    raised with the point named.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if len(t_grid) < 1:
        raise ValueError("t_grid must be nonempty")
    n = sd.matrix.shape[0]
    values = np.empty((len(t_grid), n, n), dtype=complex)
    for i, t in enumerate(t_grid):
        gen = _FrozenSlowTime(perturbation_2arg, float(t), n, max_step)
        try:
            values[i] = longtime_average(
                gen, sd, tau_max=tau_max, num_points=num_points, check_tol=check_tol
            )
        except AverageConvergenceError as exc:
            raise AverageConvergenceError(
                f"average did not converge at grid point t={t:g}: {exc}", exc.difference
            ) from exc
    return _InterpolatedGenerator(t_grid, values)


class _FrozenSlowTime(Generator):
    def __init__(self, fn2, t, n, max_step):
        super().__init__(int(round(np.sqrt(n))), max_step)
        self._fn2 = fn2
        self._t = t

    def __call__(self, s):
        return np.asarray(self._fn2(self._t, s), dtype=complex)


class _InterpolatedGenerator(Generator):
    def __init__(self, t_grid, values):
        super().__init__(int(round(np.sqrt(values.shape[1]))), None)
        self._t = t_grid
        self._v = values

    def __call__(self, t):
        if len(self._t) == 1 or t <= self._t[0]:
            return self._v[0]
        if t >= self._t[-1]:
            return self._v[-1]
        j = int(np.searchsorted(self._t, t) - 1)
        lo, hi = self._t[j], self._t[j + 1]
        lam = (t - lo) / (hi - lo)
        return (1.0 - lam) * self._v[j] + lam * self._v[j + 1]


def strong_coupling_bound(
    perturbation: np.ndarray,
    sd: SpectralDecomposition,
    kappa: float,
    t: float,
    norm: str = "diamond",
    dc: DecayConstants | None = None,
    **norm_kwargs,
) -> BoundReport:
    """Bound on |exp(t(kappa L0 + D)) - exp(t(kappa L0 + D_Z))|.

    Scales as 1/kappa through both the peripheral-gap term m(m-1) P^2 /
    Delta and the decay term R/eta; all norms are taken in ``norm``.
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if dc is None:
        dc = decay_constants(sd, norm=norm)
    d_z = pinching_DZ(perturbation, sd)
    d_norm = superop_norm(perturbation, norm, **norm_kwargs)
    dz_norm = superop_norm(d_z, norm, **norm_kwargs)
    if dc.m >= 2:
        gap_term = dc.m * (dc.m - 1) * dc.P_max**2 / dc.Delta
    else:
        gap_term = 0.0
    prefactor = (2.0 / kappa) * (gap_term + dc.R_over_eta) * d_norm
    value = (
        prefactor
        * np.exp(t * dz_norm)
        * (1.0 + t * np.exp(t * d_norm) * (d_norm + dz_norm))
    )
    return BoundReport(
        float(value),
        "strong-coupling",
        {
            "kappa": kappa,
            "t": t,
            "norm": norm,
            "D_norm": d_norm,
            "DZ_norm": dz_norm,
            "m": dc.m,
            "Delta": dc.Delta,
            "P_max": dc.P_max,
            "R_over_eta": dc.R_over_eta,
        },
    )


def sup_action_norm(
    l1,
    l2,
    l0,
    T: float,
    norm: str = "diamond",
    points_per_period: int = 40,
    min_points: int = 200,
    frequency: float | None = None,
    rtol: float = 1e-8,
    **norm_kwargs,
) -> float:
    """Sampled sup over [0, T] of the integral-action norm.

    Used when no closed form of the action is available: the action is
    propagated once and its norm sampled on a grid resolving the fast
    period (at least ``points_per_period`` points per period of
    ``frequency``).
    """
    from .propagate import integral_action_grid

    l1, l2, l0 = as_generator(l1), as_generator(l2), as_generator(l0)
    if frequency is None and l0.max_step is not None:
        frequency = 2 * np.pi / (20.0 * l0.max_step)
    num = min_points
    if frequency:
        num = max(num, int(np.ceil(points_per_period * frequency * T / (2 * np.pi))))
    times = np.linspace(0.0, T, num + 1)
    actions = integral_action_grid(l1, l2, l0, times, rtol=rtol)
    return max(superop_norm(a, norm, **norm_kwargs) for a in actions)
