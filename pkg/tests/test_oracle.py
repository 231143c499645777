"""Dense-space ground-truth checks."""

import numpy as np
import pytest

import ness
from ness import lmpo, mps, oracle
from ness.errors import DegenerateKernelError, ResourceLimitError

from conftest import random_complex
from properties import prop_evolution_preserves_trace, prop_ness_hermitian_psd
from test_mps import mps_from_dense, random_density

# two-site steady state at h = J = gamma = 1, V = 0; the kernel works out
# to the rationals <X0 X1> = -8/21 and <Z0> = -17/21 (frozen regression
# values, first computed with ness_null_space itself)
XX_TWO_SITE_REFERENCE = -8.0 / 21.0
Z_TWO_SITE_REFERENCE = -17.0 / 21.0


class TestDenseLiouvillian:
    def test_single_site_spectrum(self):
        for h, gamma in [(1.0, 1.0), (-0.7, 0.4), (2.0, 1.9)]:
            liou = oracle.dense_liouvillian(
                ness.ModelSpec(n_sites=1, field_h=h, gamma=gamma)
            )
            got = np.sort_complex(np.linalg.eigvals(liou.matrix))
            want = np.sort_complex(
                np.array([0, -gamma, -gamma / 2 + 2j * h, -gamma / 2 - 2j * h])
            )
            np.testing.assert_allclose(got, want, atol=1e-12)

    def test_closed_system_spectrum_imaginary(self, rng):
        spec = ness.ModelSpec(
            n_sites=2, field_h=rng.uniform(-2, 2), coupling_j=rng.uniform(-2, 2)
        )
        vals = np.linalg.eigvals(oracle.dense_liouvillian(spec).matrix)
        assert np.max(np.abs(vals.real)) < 1e-12

    def test_matches_mpo_route(self):
        spec = ness.ModelSpec(n_sites=2, field_h=1.0, coupling_j=1.0, gamma=1.0)
        want = oracle.dense_liouvillian(spec).matrix
        got = lmpo.mpo_to_dense(ness.build_mpo(spec))
        assert np.max(np.abs(got - want)) < 1e-12

    def test_resource_guard(self):
        with pytest.raises(ResourceLimitError):
            oracle.dense_liouvillian(ness.ModelSpec(n_sites=8, gamma=1.0))


class TestNessNullSpace:
    def test_single_spin_decays_down(self):
        liou = oracle.dense_liouvillian(
            ness.ModelSpec(n_sites=1, field_h=1.0, gamma=1.0)
        )
        rho = oracle.ness_null_space(liou)
        np.testing.assert_allclose(rho, np.diag([0.0, 1.0]), atol=1e-12)
        assert oracle.dense_observable(rho, ness.pauli("Z"), [0]) == pytest.approx(-1)

    def test_uncoupled_chain_factorizes(self):
        spec = ness.ModelSpec(n_sites=3, field_h=0.9, gamma=5.0)
        rho = oracle.ness_null_space(oracle.dense_liouvillian(spec))
        single = np.diag([0.0, 1.0])
        want = np.kron(np.kron(single, single), single)
        np.testing.assert_allclose(rho, want, atol=1e-10)

    def test_two_site_frozen_reference(self):
        spec = ness.ModelSpec(n_sites=2, field_h=1.0, coupling_j=1.0, gamma=1.0)
        rho = oracle.ness_null_space(oracle.dense_liouvillian(spec))
        xx = oracle.dense_observable(rho, ness.pauli("X"), [0, 1])
        z0 = oracle.dense_observable(rho, ness.pauli("Z"), [0])
        assert abs(xx - XX_TWO_SITE_REFERENCE) < 1e-12
        assert abs(z0 - Z_TWO_SITE_REFERENCE) < 1e-12

    def test_degenerate_kernel_raises(self):
        # closed system: the kernel holds every operator commuting with H
        spec = ness.ModelSpec(n_sites=1, field_h=1.0, gamma=0.0)
        with pytest.raises(DegenerateKernelError):
            oracle.ness_null_space(oracle.dense_liouvillian(spec))

    def test_hermitian_psd_property(self, rng):
        for _ in range(100):
            prop_ness_hermitian_psd(rng)


class TestEvolveRk4:
    def test_steady_state_is_fixed_point(self):
        spec = ness.ModelSpec(n_sites=2, field_h=1.0, coupling_j=0.8, gamma=1.2)
        liou = oracle.dense_liouvillian(spec)
        vec = oracle.vectorize_density(oracle.ness_null_space(liou), 2)
        out = oracle.evolve_rk4(liou, vec, 0.01, 5.0)
        assert np.max(np.abs(out - vec)) < 1e-8

    def test_single_spin_decay_curve(self):
        # populations decay as exp(-gamma t): <Z>(t) = -1 + 2 exp(-gamma t)
        gamma = 0.8
        spec = ness.ModelSpec(n_sites=1, field_h=1.0, gamma=gamma)
        liou = oracle.dense_liouvillian(spec)
        up = np.diag([1.0, 0.0]).astype(complex)
        vec = oracle.vectorize_density(up, 1)
        for t in (0.5, 1.0, 3.0):
            out = oracle.evolve_rk4(liou, vec, 1e-3, t)
            rho = oracle.unvectorize_density(out, 1)
            got = oracle.dense_observable(rho, ness.pauli("Z"), [0])
            assert abs(got - (-1 + 2 * np.exp(-gamma * t))) < 1e-6

    def test_long_time_limit_matches_null_space(self, rng):
        for _ in range(3):
            spec = ness.ModelSpec(
                n_sites=2,
                field_h=rng.uniform(-1.5, 1.5),
                coupling_j=rng.uniform(-1.5, 1.5),
                gamma=rng.uniform(0.5, 1.5),
            )
            liou = oracle.dense_liouvillian(spec)
            want = oracle.ness_null_space(liou)
            mixed = np.eye(4, dtype=complex) / 4
            out = oracle.evolve_rk4(
                liou, oracle.vectorize_density(mixed, 2), 0.02, 60.0
            )
            got = oracle.unvectorize_density(out, 2)
            got = got / np.trace(got)
            assert np.max(np.abs(got - want)) < 1e-6

    def test_instability_raises(self):
        spec = ness.ModelSpec(n_sites=1, field_h=1.0, gamma=1.0)
        liou = oracle.dense_liouvillian(spec)
        vec = oracle.vectorize_density(np.diag([1.0, 0.0]).astype(complex), 1)
        with pytest.raises(RuntimeError, match="dt"):
            oracle.evolve_rk4(liou, vec, 50.0, 5000.0)

    def test_trace_preservation_property(self, rng):
        for _ in range(100):
            prop_evolution_preserves_trace(rng)


class TestDenseObservable:
    def test_identity(self, rng):
        rho = random_density(rng, 4)
        assert oracle.dense_observable(rho, np.eye(2), [0]) == pytest.approx(1.0)

    def test_down_state(self):
        assert oracle.dense_observable(
            np.diag([0.0, 1.0]), ness.pauli("Z"), [0]
        ) == pytest.approx(-1.0)

    def test_consistency_with_mps_expectation(self, rng):
        rho = random_density(rng, 8)
        state = mps_from_dense(oracle.vectorize_density(rho, 3), 3)
        for site in range(3):
            want = oracle.dense_observable(rho, ness.pauli("Z"), [site])
            got = mps.expectation(state, ness.pauli("Z"), site)
            assert abs(got - want) < 1e-11
