import numpy as np
import pytest

from rwabounds.superop import GklsSpec

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def random_hermitian(rng, d):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (a + a.conj().T)


def random_unitary(rng, d):
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_gkls(rng, d, num_jumps=2, rate_scale=1.0):
    jumps = []
    for _ in range(num_jumps):
        v = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        jumps.append((rate_scale * rng.uniform(0.2, 1.0), v / np.linalg.norm(v)))
    return GklsSpec(random_hermitian(rng, d), jumps)


def random_density(rng, d):
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = z @ z.conj().T
    return rho / np.trace(rho)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
