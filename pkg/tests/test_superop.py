import numpy as np
import pytest
import scipy.linalg

from rwabounds.superop import (
    GklsSpec,
    block_pinching,
    commutator_superop,
    devectorize,
    gkls_dissipator,
    gkls_generator,
    hamiltonian_superop,
    operator_basis,
    unitary_conjugation_superop,
    vectorize,
)

from conftest import SX, SY, SZ, random_density, random_gkls, random_hermitian, random_unitary


class TestVectorize:
    def test_column_stacking_convention(self):
        a = np.array([[1, 2], [3, 4]], dtype=complex)
        assert np.array_equal(vectorize(a), np.array([1, 3, 2, 4], dtype=complex))

    def test_identity(self):
        assert np.array_equal(vectorize(np.eye(2)), np.array([1, 0, 0, 1]))

    def test_round_trip(self, rng):
        a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        assert np.array_equal(devectorize(vectorize(a)), a)

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            vectorize(np.ones((2, 3)))


class TestHamiltonianSuperop:
    def test_qubit_z_spectrum(self):
        # Oracle: dense eigensolver on the 4x4 matrix.
        gen = hamiltonian_superop(SZ / 2)
        eig = np.sort_complex(np.linalg.eigvals(gen))
        expected = np.sort_complex(np.array([0, 0, 1j, -1j]))
        assert np.allclose(eig, expected, atol=1e-12)

    def test_zero_and_identity_hamiltonians(self):
        assert np.allclose(hamiltonian_superop(np.zeros((2, 2))), 0)
        assert np.allclose(hamiltonian_superop(np.eye(3)), 0)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            hamiltonian_superop(np.array([[0, 1], [0, 0]], dtype=complex))

    def test_action_matches_commutator(self, rng):
        h = random_hermitian(rng, 3)
        rho = random_density(rng, 3)
        out = devectorize(hamiltonian_superop(h) @ vectorize(rho))
        assert np.allclose(out, -1j * (h @ rho - rho @ h), atol=1e-12)


class TestGkls:
    def test_dephasing_action_on_paulis(self):
        # Rate gamma/2 with jump Z realizes rho -> -(gamma/2)(rho - Z rho Z),
        # which sends X to -gamma X (Z X Z = -X) and leaves Z invariant.
        gamma = 0.7
        spec = GklsSpec(np.zeros((2, 2)), [(gamma / 2, SZ)])
        gen = gkls_generator(spec)
        assert np.allclose(devectorize(gen @ vectorize(SX)), -gamma * SX, atol=1e-12)
        assert np.allclose(devectorize(gen @ vectorize(SZ)), 0, atol=1e-12)
        # Normalization check of the defining formula at unit rate.
        unit = gkls_generator(GklsSpec(np.zeros((2, 2)), [(1.0, SZ)]))
        assert np.allclose(devectorize(unit @ vectorize(SX)), -2.0 * SX, atol=1e-12)

    def test_qubit_drive_with_dephasing_splits(self):
        # Full generator at t = 0 is the Z-precession part plus the
        # drive/dephasing perturbation evaluated at t = 0.
        omega, g, gamma = 3.0, 0.8, 0.4
        full = gkls_generator(
            GklsSpec(omega * SZ / 2 + g * SX, [(gamma, SZ)])
        )
        strong = hamiltonian_superop(omega * SZ / 2)
        perturbation = hamiltonian_superop(g * SX) + gkls_dissipator(
            GklsSpec(np.zeros((2, 2)), [(gamma, SZ)])
        )
        assert np.allclose(full, strong + perturbation, atol=1e-12)

    def test_trace_annihilation(self, rng):
        spec = random_gkls(rng, 3)
        gen = gkls_generator(spec)
        # Adjoint applied to vec(identity) must vanish: trace preservation.
        assert np.linalg.norm(gen.conj().T @ vectorize(np.eye(3))) < 1e-12

    def test_semigroup_preserves_states(self, rng):
        spec = random_gkls(rng, 3)
        gen = gkls_generator(spec)
        rho = random_density(rng, 3)
        for t in (0.1, 1.0, 10.0):
            out = devectorize(scipy.linalg.expm(t * gen) @ vectorize(rho))
            assert abs(np.trace(out) - 1) < 1e-10
            assert np.linalg.eigvalsh(0.5 * (out + out.conj().T)).min() > -1e-8

    def test_rejects_dimension_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            GklsSpec(np.zeros((2, 2)), [(1.0, np.eye(3))])

    def test_rejects_negative_rate(self):
        with pytest.raises(ValueError, match="negative"):
            GklsSpec(np.zeros((2, 2)), [(-1.0, SZ)])


class TestUnitaryConjugation:
    def test_identity(self):
        assert np.allclose(unitary_conjugation_superop(np.eye(3)), np.eye(9))

    def test_rejects_non_unitary(self):
        with pytest.raises(ValueError, match="unitary"):
            unitary_conjugation_superop(np.diag([1.0, 2.0]))

    def test_conjugation_intertwines_commutators(self, rng):
        # U ad_A U^{-1} = ad_{U A U^+} for unitary U and Hermitian A.
        for _ in range(5):
            u = random_unitary(rng, 3)
            a = random_hermitian(rng, 3)
            us = unitary_conjugation_superop(u)
            lhs = us @ commutator_superop(a) @ np.linalg.inv(us)
            rhs = commutator_superop(u @ a @ u.conj().T)
            assert np.linalg.norm(lhs - rhs) < 1e-10

    def test_rotating_frame_mixes_x_into_y(self, rng):
        # exp(-i w t Z / 2) conjugation turns [X, .] into
        # [cos(w t) X + sin(w t) Y, .].
        wt = 1.234
        u = scipy.linalg.expm(-0.5j * wt * SZ)
        us = unitary_conjugation_superop(u)
        lhs = us @ commutator_superop(SX) @ np.linalg.inv(us)
        rhs = commutator_superop(np.cos(wt) * SX + np.sin(wt) * SY)
        assert np.linalg.norm(lhs - rhs) < 1e-12


class TestBlockPinching:
    def test_qubit_diagonal_pinching(self):
        p0 = np.diag([1.0, 0.0]).astype(complex)
        p1 = np.diag([0.0, 1.0]).astype(complex)
        pin, _ = block_pinching([p0, p1])
        assert np.allclose(devectorize(pin @ vectorize(SX)), 0, atol=1e-14)
        assert np.allclose(devectorize(pin @ vectorize(SZ)), SZ, atol=1e-14)

    def test_idempotency_and_complement(self, rng):
        u = random_unitary(rng, 4)
        fam = [
            u[:, :2] @ u[:, :2].conj().T,
            u[:, 2:3] @ u[:, 2:3].conj().T,
            u[:, 3:] @ u[:, 3:].conj().T,
        ]
        pin, comp = block_pinching(fam)
        assert np.linalg.norm(pin @ pin - pin) < 1e-12
        assert np.linalg.norm(comp @ comp - comp) < 1e-12
        assert np.linalg.norm(pin @ comp) < 1e-12
        assert np.linalg.norm(comp @ pin) < 1e-12
        assert np.linalg.norm(pin + comp - np.eye(16)) < 1e-12

    def test_block_diagonal_commutes_with_pinching(self, rng):
        p1 = np.diag([1.0, 1.0, 0.0]).astype(complex)
        p2 = np.diag([0.0, 0.0, 1.0]).astype(complex)
        pin, comp = block_pinching([p1, p2])
        blocks = random_hermitian(rng, 3)
        a = p1 @ blocks @ p1 + p2 @ blocks @ p2
        ad = commutator_superop(a)
        assert np.linalg.norm(pin @ ad - ad @ pin) < 1e-10
        assert np.linalg.norm(comp @ ad - ad @ comp) < 1e-10

    def test_off_diagonal_two_blocks_annihilated(self, rng):
        p1 = np.diag([1.0, 1.0, 0.0]).astype(complex)
        p2 = np.diag([0.0, 0.0, 1.0]).astype(complex)
        pin, comp = block_pinching([p1, p2])
        b = random_hermitian(rng, 3)
        off = p1 @ b @ p2 + p2 @ b @ p1
        ad = commutator_superop(off)
        assert np.linalg.norm(pin @ ad @ pin) < 1e-10
        assert np.linalg.norm(comp @ ad @ comp) < 1e-10

    def test_rejects_non_orthogonal(self):
        p = np.diag([1.0, 0.0]).astype(complex)
        with pytest.raises(ValueError, match="orthogonal"):
            block_pinching([p, p])


class TestOperatorBasis:
    def test_qubit_basis_is_scaled_paulis(self):
        basis = operator_basis(2) * np.sqrt(2)
        assert np.allclose(basis, [np.eye(2), SX, SY, SZ])

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_orthonormal_and_hermitian(self, d):
        basis = operator_basis(d)
        gram = np.einsum("mab,nab->mn", basis.conj(), basis)
        assert np.allclose(gram, np.eye(d * d), atol=1e-12)
        assert np.allclose(basis, basis.conj().transpose(0, 2, 1), atol=1e-12)
