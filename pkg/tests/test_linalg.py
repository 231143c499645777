"""Tensor and linear-algebra kernel tests."""

import numpy as np
import pytest

import ness
from ness.errors import DimensionMismatch, SingularMatrixError

from conftest import random_complex
from properties import (
    prop_arnoldi_hermitian,
    prop_contract_bilinear,
    prop_contract_reshape,
    prop_qr_roundtrip,
    prop_svd_frobenius,
)


class TestContract:
    def test_identity_contraction(self):
        v = np.array([1.5, -2.0 + 1j])
        out = ness.contract(np.eye(2, dtype=complex), v, [(1, 0)])
        np.testing.assert_allclose(out, v)

    def test_matrix_product_against_triple_loop(self, rng):
        a = random_complex(rng, (2, 3))
        b = random_complex(rng, (3, 4))
        got = ness.contract(a, b, [(1, 0)])
        want = np.zeros((2, 4), dtype=complex)
        for i in range(2):
            for j in range(4):
                for k in range(3):
                    want[i, j] += a[i, k] * b[k, j]
        np.testing.assert_allclose(got, want, atol=1e-13)

    def test_outer_product(self, rng):
        a = random_complex(rng, (3,))
        b = random_complex(rng, (4,))
        out = ness.contract(a, b, [])
        assert out.shape == (3, 4)
        assert np.isclose(
            np.linalg.norm(out), np.linalg.norm(a) * np.linalg.norm(b)
        )

    def test_shape_mismatch_names_both_shapes(self):
        with pytest.raises(DimensionMismatch) as err:
            ness.contract(np.zeros((2, 3)), np.zeros((4, 5)), [(1, 0)])
        assert "(2, 3)" in str(err.value) and "(4, 5)" in str(err.value)

    def test_bilinearity_property(self, rng):
        for _ in range(120):
            prop_contract_bilinear(rng)

    def test_reshape_commutes_property(self, rng):
        for _ in range(120):
            prop_contract_reshape(rng)


class TestQr:
    def test_identity(self):
        q, r = ness.qr(np.eye(3))
        np.testing.assert_allclose(np.abs(q), np.eye(3), atol=1e-14)
        np.testing.assert_allclose(q @ r, np.eye(3), atol=1e-14)

    def test_random_reconstruction(self, rng):
        m = random_complex(rng, (6, 3))
        q, r = ness.qr(m)
        assert np.linalg.norm(q @ r - m) < 1e-12 * np.linalg.norm(m)

    def test_rank_deficient(self, rng):
        col = random_complex(rng, (4, 1))
        m = np.hstack([col, col])
        q, r = ness.qr(m)
        assert np.all(np.isfinite(q)) and np.all(np.isfinite(r))
        assert np.linalg.norm(q @ r - m) < 1e-12 * np.linalg.norm(m)

    def test_property(self, rng):
        for _ in range(120):
            prop_qr_roundtrip(rng)


class TestSvdTruncated:
    def test_identity_full_rank(self):
        u, s, vh, weight = ness.svd_truncated(np.eye(3), 3)
        np.testing.assert_allclose(s, [1, 1, 1])
        assert weight == 0.0

    def test_forced_truncation_weight(self):
        u, s, vh, weight = ness.svd_truncated(np.diag([2.0, 1.0, 0.1]), 2)
        np.testing.assert_allclose(s, [2.0, 1.0])
        assert np.isclose(weight, 0.01)

    def test_full_reconstruction(self, rng):
        m = random_complex(rng, (8, 8))
        u, s, vh, weight = ness.svd_truncated(m, 8, 0.0)
        assert weight == 0.0
        assert np.linalg.norm(u @ np.diag(s) @ vh - m) < 1e-12 * np.linalg.norm(m)

    def test_zero_matrix(self):
        u, s, vh, weight = ness.svd_truncated(np.zeros((3, 4)), 2)
        assert s.shape == (1,) and s[0] == 0.0
        assert weight == 0.0
        assert u.shape == (3, 1) and vh.shape == (1, 4)

    def test_relative_cutoff(self):
        # cutoff compares against the largest singular value
        m = np.diag([100.0, 1.0, 1e-12])
        _, s, _, _ = ness.svd_truncated(m, 3, 1e-8)
        assert s.size == 2

    def test_property(self, rng):
        for _ in range(120):
            prop_svd_frobenius(rng)


class TestLuSolve:
    def test_identity(self, rng):
        v = random_complex(rng, (4,))
        np.testing.assert_allclose(ness.lu_solve(np.eye(4), v), v)

    def test_diagonal(self):
        np.testing.assert_allclose(
            ness.lu_solve(np.diag([2.0, 4.0]), np.array([2.0, 4.0])), [1.0, 1.0]
        )

    def test_random_residual(self, rng):
        m = random_complex(rng, (50, 50))
        rhs = random_complex(rng, (50,))
        x = ness.lu_solve(m, rhs)
        assert np.linalg.norm(m @ x - rhs) < 1e-10 * np.linalg.norm(rhs)

    def test_singular_raises_with_pivot(self):
        m = np.array([[1.0, 2.0], [2.0, 4.0]])
        with pytest.raises(SingularMatrixError) as err:
            ness.lu_solve(m, np.ones(2))
        assert err.value.pivot == 1

    def test_non_square_rejected(self):
        with pytest.raises(DimensionMismatch):
            ness.lu_solve(np.zeros((2, 3)), np.ones(2))


class TestArnoldi:
    def test_diagonal_dominant(self):
        d = np.diag([3.0, 1.0, 0.5])
        pairs = ness.arnoldi_eigs(lambda v: d @ v, 3, krylov_dim=3)
        assert pairs[0].converged
        assert abs(pairs[0].value - 3.0) < 1e-10

    def test_random_matches_dense_eig(self, rng):
        a = random_complex(rng, (20, 20))
        pairs = ness.arnoldi_eigs(
            lambda v: a @ v, 20, krylov_dim=20, max_restarts=8, tol=1e-12
        )
        dense = np.linalg.eigvals(a)
        dominant = dense[np.argmax(np.abs(dense))]
        assert abs(pairs[0].value - dominant) < 1e-8 * abs(dominant)

    def test_identity_map(self):
        pairs = ness.arnoldi_eigs(lambda v: v, 5, krylov_dim=3)
        assert abs(pairs[0].value - 1.0) < 1e-12
        assert np.isclose(np.linalg.norm(pairs[0].vector), 1.0)

    def test_start_vector_is_eigenvector(self, rng):
        a = np.diag([4.0, 2.0, 1.0]).astype(complex)
        pairs = ness.arnoldi_eigs(
            lambda v: a @ v, 3, krylov_dim=3, start=np.array([0, 1.0, 0])
        )
        # lucky breakdown: the Krylov space is invariant from the start
        assert abs(pairs[0].value - 2.0) < 1e-12

    def test_unconverged_flagged(self, rng):
        a = random_complex(rng, (60, 60))
        pairs = ness.arnoldi_eigs(
            lambda v: a @ v, 60, krylov_dim=4, max_restarts=1, tol=0.0
        )
        assert not pairs[0].converged

    def test_residual_contract(self, rng):
        a = random_complex(rng, (30, 30))
        pairs = ness.arnoldi_eigs(
            lambda v: a @ v, 30, krylov_dim=30, max_restarts=10, tol=1e-10, n_eigs=2
        )
        for pair in pairs:
            if pair.converged:
                resid = np.linalg.norm(a @ pair.vector - pair.value * pair.vector)
                assert resid < 1e-9 * abs(pair.value)

    def test_hermitian_real_property(self, rng):
        for _ in range(110):
            prop_arnoldi_hermitian(rng)
