"""Redfield dissipator, its secular restriction, and the approximation bound.

Input is a system Hamiltonian, Hermitian coupling operators S_alpha, and a
table of half-Fourier bath coefficients Gamma_{alpha beta}(omega) keyed by
the Bohr frequencies of the Hamiltonian (differences of its eigenvalues).
The Redfield dissipator is generally not of Lindblad form; restricting it
to the diagonal blocks of the Hamiltonian flow (the secular approximation)
produces a Lindblad generator plus a Lamb-shift Hamiltonian that commutes
with the system Hamiltonian.  The pinched Redfield dissipator and the
secular generator agree identically, which is verified numerically rather
than assumed.

Spec files are JSON documents with complex entries as [re, im] pairs:

    {
      "hamiltonian": [[[re, im], ...], ...],
      "couplings":   [ <matrix like hamiltonian>, ... ],
      "gamma":       [ {"alpha": 0, "beta": 0, "omega": 1.0,
                        "value": [re, im]}, ... ]
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .bounds import BoundReport, pinching_DZ, strong_coupling_bound
from .spectral import spectral_decompose
from .superop import hamiltonian_superop, require_hermitian

__all__ = [
    "SystemBathSpec",
    "BohrDecomposition",
    "SecularResult",
    "bohr_decompose",
    "build_redfield",
    "build_secular",
    "verify_secular_equals_pinching",
    "secular_error_bound",
    "load_spec",
    "spec_to_dict",
]

BOHR_CLUSTER_RTOL = 1e-8


@dataclass(frozen=True)
class SystemBathSpec:
    """System Hamiltonian, couplings, and bath half-Fourier coefficients.

    ``gamma_table`` maps (alpha, beta, omega) to the complex coefficient
    Gamma_{alpha beta}(omega).  Entries are required only for frequencies at
    which the corresponding coupling component is nonzero.
    """

    hamiltonian: np.ndarray
    couplings: list = field(default_factory=list)
    gamma_table: dict = field(default_factory=dict)

    def __post_init__(self):
        h = require_hermitian(self.hamiltonian, "hamiltonian")
        object.__setattr__(self, "hamiltonian", h)
        coups = [require_hermitian(s, f"coupling {i}") for i, s in enumerate(self.couplings)]
        for i, s in enumerate(coups):
            if s.shape != h.shape:
                raise ValueError(f"coupling {i} has shape {s.shape}, expected {h.shape}")
        object.__setattr__(self, "couplings", coups)
        table = {
            (int(a), int(b), float(w)): complex(v)
            for (a, b, w), v in self.gamma_table.items()
        }
        object.__setattr__(self, "gamma_table", table)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]


@dataclass(frozen=True)
class BohrDecomposition:
    """Bohr frequencies of H with the pinching components they index.

    ``pairs[j]`` lists the (m, n) eigenprojection pairs with
    eps_m - eps_n = omega_j; ``component(A, j)`` restricts A to those
    blocks.  Components sum to the identity and conjugate as
    A(-omega_j) = A(omega_j)^+ for Hermitian A.
    """

    energies: np.ndarray
    eigenprojections: np.ndarray
    frequencies: np.ndarray
    pairs: list

    def component(self, a: np.ndarray, j: int) -> np.ndarray:
        p = self.eigenprojections
        return sum(p[m] @ a @ p[n] for m, n in self.pairs[j])

    def component_superops(self) -> np.ndarray:
        p = self.eigenprojections
        out = []
        for pair_list in self.pairs:
            s = sum(np.kron(p[n].conj(), p[m]) for m, n in pair_list)
            out.append(s)
        return np.array(out)

    def index_of(self, omega: float, tol: float) -> int:
        k = int(np.argmin(np.abs(self.frequencies - omega)))
        if abs(self.frequencies[k] - omega) > tol:
            raise ValueError(f"{omega} is not a Bohr frequency")
        return k


def _cluster_reals(values: np.ndarray, tol: float):
    order = np.argsort(values)
    groups = [[order[0]]]
    for idx in order[1:]:
        if values[idx] - values[groups[-1][-1]] <= tol:
            groups[-1].append(idx)
        else:
            groups.append([idx])
    return groups


def bohr_decompose(h: np.ndarray, cluster_tol: float | None = None) -> BohrDecomposition:
    """Eigenprojections of H and the clustered set of its Bohr frequencies."""
    h = require_hermitian(h, "hamiltonian")
    evals, evecs = np.linalg.eigh(h)
    scale = max(1.0, float(np.max(np.abs(evals))) if len(evals) else 1.0)
    if cluster_tol is None:
        cluster_tol = BOHR_CLUSTER_RTOL * scale
    groups = _cluster_reals(evals, cluster_tol)
    energies = np.array([evals[g].mean() for g in groups])
    projections = np.array(
        [evecs[:, g] @ evecs[:, g].conj().T for g in groups]
    )

    num = len(energies)
    all_pairs = [(m, n) for m in range(num) for n in range(num)]
    freq_vals = np.array([energies[m] - energies[n] for m, n in all_pairs])
    freq_groups = _cluster_reals(freq_vals, cluster_tol)
    frequencies = []
    pairs = []
    for g in freq_groups:
        frequencies.append(freq_vals[g].mean())
        pairs.append([all_pairs[i] for i in g])
    return BohrDecomposition(
        energies=energies,
        eigenprojections=projections,
        frequencies=np.array(frequencies),
        pairs=pairs,
    )


def _gamma_lookup(spec: SystemBathSpec, bohr: BohrDecomposition, tol: float):
    """Gamma_{alpha beta}(omega_j) as an array, validating required entries.

    An entry is required whenever the beta coupling has a nonzero component
    at omega_j; unneeded missing entries default to zero.
    """
    num_alpha = len(spec.couplings)
    num_freq = len(bohr.frequencies)
    gamma = np.zeros((num_alpha, num_alpha, num_freq), dtype=complex)
    filled = np.zeros((num_alpha, num_alpha, num_freq), dtype=bool)
    for (a, b, w), val in spec.gamma_table.items():
        if a >= num_alpha or b >= num_alpha:
            raise ValueError(f"gamma entry references unknown coupling ({a}, {b})")
        j = bohr.index_of(w, tol)
        gamma[a, b, j] = val
        filled[a, b, j] = True
    components = [
        [bohr.component(s, j) for j in range(num_freq)] for s in spec.couplings
    ]
    comp_nonzero = np.array(
        [[np.linalg.norm(c) > 1e-14 for c in row] for row in components]
    )
    for a in range(num_alpha):
        for b in range(num_alpha):
            for j in range(num_freq):
                if comp_nonzero[b, j] and not filled[a, b, j]:
                    raise ValueError(
                        f"gamma table is missing Gamma[{a},{b}] at Bohr frequency "
                        f"{bohr.frequencies[j]:g}"
                    )
    return gamma, components


def build_redfield(spec: SystemBathSpec, cluster_tol: float | None = None) -> np.ndarray:
    """Dissipative part of the Redfield generator as a superoperator.

    D rho = sum_alpha [S_alpha, rho E_alpha^+ - E_alpha rho] with
    E_alpha = sum_{beta, k} Gamma_{alpha beta}(omega_k) S_beta(omega_k).
    The strong Hamiltonian part kappa L0 is supplied by the caller.
    """
    bohr = bohr_decompose(spec.hamiltonian, cluster_tol)
    tol = _freq_tol(bohr, cluster_tol)
    gamma, components = _gamma_lookup(spec, bohr, tol)
    d = spec.dim
    eye = np.eye(d)
    out = np.zeros((d * d, d * d), dtype=complex)
    for a, s_a in enumerate(spec.couplings):
        e_a = np.zeros((d, d), dtype=complex)
        for b in range(len(spec.couplings)):
            for j in range(len(bohr.frequencies)):
                e_a += gamma[a, b, j] * components[b][j]
        # [S, rho E^+ - E rho] = S rho E^+ - S E rho - rho E^+ S + E rho S
        out += np.kron(e_a.conj(), s_a)
        out -= np.kron(eye, s_a @ e_a)
        out -= np.kron((e_a.conj().T @ s_a).T, eye)
        out += np.kron(s_a.T, e_a)
    return out


def _freq_tol(bohr: BohrDecomposition, cluster_tol: float | None) -> float:
    scale = max(1.0, float(np.max(np.abs(bohr.frequencies))) if len(bohr.frequencies) else 1.0)
    return (BOHR_CLUSTER_RTOL if cluster_tol is None else cluster_tol) * scale + 1e-12


@dataclass(frozen=True)
class SecularResult:
    """Secular generator data: Lindblad part, Lamb shift, and rate matrices.

    ``gamma_matrices`` holds the Hermitian rate matrix in the coupling
    indices for each Bohr frequency; ``gamma_floors`` reports its smallest
    eigenvalue (negative floors mean the secular generator is not of
    Lindblad form, which is reported, not rejected).
    """

    dissipator: np.ndarray
    lamb_shift: np.ndarray
    frequencies: np.ndarray
    gamma_matrices: np.ndarray
    sigma_matrices: np.ndarray

    @property
    def gamma_floors(self) -> np.ndarray:
        return np.array(
            [float(np.linalg.eigvalsh(g).min()) for g in self.gamma_matrices]
        )

    @property
    def is_lindblad(self) -> bool:
        return bool((self.gamma_floors > -1e-10).all())


def build_secular(spec: SystemBathSpec, cluster_tol: float | None = None) -> SecularResult:
    """Secular restriction of the Redfield dissipator.

    Produces the Lindblad dissipator with rate matrices
    gamma_{ab}(omega_j) = Gamma_{ab}(omega_j) + Gamma_{ba}(omega_j)^* and the
    Lamb-shift Hamiltonian built from the antisymmetric parts
    sigma_{ab}(omega_j); the Lamb shift commutes with H by construction,
    which is checked.
    """
    bohr = bohr_decompose(spec.hamiltonian, cluster_tol)
    tol = _freq_tol(bohr, cluster_tol)
    gamma_raw, components = _gamma_lookup(spec, bohr, tol)
    num_alpha = len(spec.couplings)
    num_freq = len(bohr.frequencies)
    d = spec.dim
    eye = np.eye(d)

    gamma = np.empty((num_freq, num_alpha, num_alpha), dtype=complex)
    sigma = np.empty_like(gamma)
    for j in range(num_freq):
        g = gamma_raw[:, :, j]
        gamma[j] = g + g.conj().T
        sigma[j] = (g - g.conj().T) / 2j

    h_ls = np.zeros((d, d), dtype=complex)
    dissipator = np.zeros((d * d, d * d), dtype=complex)
    for j in range(num_freq):
        for a in range(num_alpha):
            s_a = components[a][j]
            for b in range(num_alpha):
                s_b = components[b][j]
                h_ls += sigma[j][a, b] * (s_a.conj().T @ s_b)
                prod = s_a.conj().T @ s_b
                dissipator -= 0.5 * gamma[j][a, b] * (
                    np.kron(eye, prod)
                    + np.kron(prod.T, eye)
                    - 2.0 * np.kron(s_a.conj(), s_b)
                )
    comm = h_ls @ spec.hamiltonian - spec.hamiltonian @ h_ls
    if np.linalg.norm(comm) > 1e-9 * max(1.0, np.linalg.norm(h_ls)):
        raise AssertionError("Lamb shift does not commute with the Hamiltonian")
    dissipator += hamiltonian_superop(0.5 * (h_ls + h_ls.conj().T))
    return SecularResult(
        dissipator=dissipator,
        lamb_shift=h_ls,
        frequencies=bohr.frequencies,
        gamma_matrices=gamma,
        sigma_matrices=sigma,
    )


def verify_secular_equals_pinching(spec: SystemBathSpec,
                                   cluster_tol: float | None = None) -> float:
    """Norm distance between the pinched Redfield dissipator and the secular one.

    The two are built along independent routes: the pinching uses the
    spectral projections of the superoperator -i[H, .], the secular
    generator uses the Bohr components of the couplings.
    """
    redfield = build_redfield(spec, cluster_tol)
    secular = build_secular(spec, cluster_tol)
    sd = spectral_decompose(hamiltonian_superop(spec.hamiltonian), cluster_tol)
    pinched = pinching_DZ(redfield, sd)
    return float(np.linalg.norm(pinched - secular.dissipator, 2))


def secular_error_bound(spec: SystemBathSpec, kappa: float, T: float,
                        norm: str = "diamond",
                        cluster_tol: float | None = None) -> BoundReport:
    """Bound on the distance between the Redfield and secular evolutions.

    The strong part -i kappa [H, .] is fully peripheral, so only the
    spectral-gap term survives; the bound is exactly linear in 1/kappa.
    """
    redfield = build_redfield(spec, cluster_tol)
    sd = spectral_decompose(hamiltonian_superop(spec.hamiltonian), cluster_tol)
    report = strong_coupling_bound(redfield, sd, kappa, T, norm=norm)
    return BoundReport(report.value, "secular", report.inputs)


# ---------------------------------------------------------------------------
# JSON spec files
# ---------------------------------------------------------------------------


def _complex_matrix_from_json(rows):
    return np.array([[complex(re, im) for re, im in row] for row in rows])


def _complex_matrix_to_json(mat):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(mat, dtype=complex)]


def load_spec(source) -> SystemBathSpec:
    """Read a :class:`SystemBathSpec` from a JSON file path or a parsed dict."""
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source) as fh:
            data = json.load(fh)
    else:
        data = source
    table = {}
    for entry in data.get("gamma", []):
        key = (int(entry["alpha"]), int(entry["beta"]), float(entry["omega"]))
        re, im = entry["value"]
        table[key] = complex(re, im)
    return SystemBathSpec(
        hamiltonian=_complex_matrix_from_json(data["hamiltonian"]),
        couplings=[_complex_matrix_from_json(c) for c in data.get("couplings", [])],
        gamma_table=table,
    )


def spec_to_dict(spec: SystemBathSpec) -> dict:
    return {
        "hamiltonian": _complex_matrix_to_json(spec.hamiltonian),
        "couplings": [_complex_matrix_to_json(c) for c in spec.couplings],
        "gamma": [
            {
                "alpha": a,
                "beta": b,
                "omega": w,
                "value": [v.real, v.imag],
            }
            for (a, b, w), v in sorted(spec.gamma_table.items())
        ],
    }
