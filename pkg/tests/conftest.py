import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def assert_left_normalized(tensor, tol=1e-10):
    gram = np.einsum("lsr,lst->rt", tensor.conj(), tensor)
    assert np.max(np.abs(gram - np.eye(gram.shape[0]))) < tol


def assert_right_normalized(tensor, tol=1e-10):
    gram = np.einsum("lsr,tsr->lt", tensor, tensor.conj())
    assert np.max(np.abs(gram - np.eye(gram.shape[0]))) < tol


def assert_canonical(state, tol=1e-10):
    for j in range(state.center):
        assert_left_normalized(state.sites[j], tol)
    for j in range(state.center + 1, state.n_sites):
        assert_right_normalized(state.sites[j], tol)
