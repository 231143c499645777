"""Dense-space ground truth for small chains.

Everything here works on the full ``d^2N``-dimensional vectorized density
matrix and is deliberately independent of the tensor-network code paths:
the Liouvillian is assembled from global Kronecker products of the
Hamiltonian and jump operators, the steady state comes from a full
eigendecomposition, and the master equation can be integrated in time as a
cross-check with separate failure modes.

Index convention: vectors are stored site-major, i.e. the slowest index is
the composite ``Sigma_1 = s'_1 d + s_1`` of site 0 (matching the chain
factorization used everywhere else).  :func:`vectorize_density` and
:func:`unvectorize_density` convert between that layout and ordinary
``d^N x d^N`` matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import DegenerateKernelError, DegenerateTraceError, ResourceLimitError
from .model import ModelSpec, hamiltonian_terms, jump_terms

__all__ = [
    "DenseLiouvillian",
    "dense_liouvillian",
    "ness_null_space",
    "evolve_rk4",
    "dense_observable",
    "vectorize_density",
    "unvectorize_density",
    "embed_operator",
    "trace_vector",
]

MAX_DENSE_SITES = 7


def _guard(n_sites: int):
    if n_sites > MAX_DENSE_SITES:
        raise ResourceLimitError(
            f"dense construction limited to {MAX_DENSE_SITES} sites, got {n_sites}"
        )


def _site_major_perm(n_sites: int, d: int) -> np.ndarray:
    """Index map from site-major layout to global column-stacking layout.

    Site-major digit order is ``(s'_1, s_1, s'_2, s_2, ...)``; the global
    column-stacked vector orders them ``(s'_1..s'_N, s_1..s_N)``.
    """
    n = n_sites
    axes = []
    for i in range(n):
        axes.extend([i, n + i])
    return np.arange(d ** (2 * n)).reshape([d] * (2 * n)).transpose(axes).reshape(-1)


def vectorize_density(rho: np.ndarray, n_sites: int, d: int = 2) -> np.ndarray:
    """Column-stack ``rho`` and permute to the site-major layout."""
    vec_global = np.asarray(rho, dtype=complex).reshape(-1, order="F")
    return vec_global[_site_major_perm(n_sites, d)]


def unvectorize_density(vec: np.ndarray, n_sites: int, d: int = 2) -> np.ndarray:
    """Inverse of :func:`vectorize_density`."""
    perm = _site_major_perm(n_sites, d)
    vec_global = np.empty_like(np.asarray(vec, dtype=complex).reshape(-1))
    vec_global[perm] = np.asarray(vec, dtype=complex).reshape(-1)
    dim = d**n_sites
    return vec_global.reshape(dim, dim, order="F")


def embed_operator(op: np.ndarray, sites: list[int], n_sites: int, d: int = 2) -> np.ndarray:
    """Kronecker-embed ``op`` at each listed site (site 0 is the slowest index)."""
    ident = np.eye(d, dtype=complex)
    factors = [op if j in sites else ident for j in range(n_sites)]
    return reduce(np.kron, factors, np.eye(1, dtype=complex))


def trace_vector(n_sites: int, d: int = 2) -> np.ndarray:
    """Site-major vector ``t`` with ``t . vec(rho) = Tr(rho)``."""
    local = np.eye(d, dtype=complex).reshape(-1)
    return reduce(np.kron, [local] * n_sites, np.eye(1, dtype=complex).reshape(-1))


@dataclass
class DenseLiouvillian:
    """Full vectorized Liouvillian of a small chain, site-major layout."""

    n_sites: int
    local_dim: int
    matrix: np.ndarray


def dense_liouvillian(spec: ModelSpec) -> DenseLiouvillian:
    """Assemble the vectorized Liouvillian from global operators.

    The generator is ``-i(I kron H - H^T kron I) + sum_i (1/2)(2 K_i* kron
    K_i - I kron K_i^dag K_i - K_i^T K_i* kron I)`` in the column-stacking
    convention, permuted to the site-major layout afterwards.
    """
    _guard(spec.n_sites)
    n, d = spec.n_sites, spec.local_dim
    dim = d**n
    ham = np.zeros((dim, dim), dtype=complex)
    for term in hamiltonian_terms(spec):
        for left in range(n - term.range):
            full = np.eye(1, dtype=complex)
            for j in range(n):
                if left <= j <= left + term.range:
                    full = np.kron(full, term.operators[j - left])
                else:
                    full = np.kron(full, np.eye(d, dtype=complex))
            ham += term.coefficient * full
    big_ident = np.eye(dim, dtype=complex)
    liou = -1j * (np.kron(big_ident, ham) - np.kron(ham.T, big_ident))
    for jump in jump_terms(spec):
        k = embed_operator(jump.operator, [jump.site], n, d)
        kdk = k.conj().T @ k
        liou += 0.5 * (
            2.0 * np.kron(k.conj(), k)
            - np.kron(big_ident, kdk)
            - np.kron(kdk.T, big_ident)
        )
    perm = _site_major_perm(n, d)
    return DenseLiouvillian(n, d, liou[np.ix_(perm, perm)])


def ness_null_space(liou: DenseLiouvillian) -> np.ndarray:
    """Steady state from the kernel of the dense Liouvillian.

    Performs a full eigendecomposition, requires the kernel to be
    one-dimensional (second-smallest ``|eigenvalue|`` above 1e-10), then
    hermitizes the kernel vector and normalizes it to unit trace.
    """
    values, vectors = np.linalg.eig(liou.matrix)
    order = np.argsort(np.abs(values))
    if len(values) > 1 and np.abs(values[order[1]]) <= 1e-10:
        raise DegenerateKernelError(
            "Liouvillian kernel is (numerically) degenerate: "
            f"|lambda_1| = {abs(values[order[1]]):.3e}"
        )
    rho = unvectorize_density(vectors[:, order[0]], liou.n_sites, liou.local_dim)
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho)
    if abs(tr) < 1e-14:
        raise DegenerateTraceError("kernel vector has vanishing trace")
    return rho / tr


def evolve_rk4(
    liou: DenseLiouvillian, rho0: np.ndarray, dt: float, t_final: float
) -> np.ndarray:
    """Integrate ``d vec(rho)/dt = L vec(rho)`` with classical RK4.

    ``rho0`` is a site-major vector.  Stability needs roughly
    ``dt <= 0.1 / max-row-sum(L)``; a norm blow-up beyond 1e6 times the
    initial norm raises with the advice to reduce ``dt``.
    """
    mat = liou.matrix
    vec = np.asarray(rho0, dtype=complex).reshape(-1).copy()
    limit = 1e6 * max(np.linalg.norm(vec), 1.0)
    n_steps = int(np.ceil(t_final / dt))
    step = t_final / n_steps if n_steps else 0.0
    for _ in range(n_steps):
        k1 = mat @ vec
        k2 = mat @ (vec + 0.5 * step * k1)
        k3 = mat @ (vec + 0.5 * step * k2)
        k4 = mat @ (vec + step * k3)
        vec = vec + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if np.linalg.norm(vec) > limit:
            raise RuntimeError(
                "time integration blew up; decrease dt (heuristic: "
                "dt <= 0.1 / max-row-sum of the Liouvillian)"
            )
    return vec


def dense_observable(rho: np.ndarray, op: np.ndarray, sites: list[int]) -> complex:
    """Trace-normalized expectation ``Tr(rho O)/Tr(rho)`` of ``op`` embedded
    at every listed site."""
    rho = np.asarray(rho, dtype=complex)
    n_sites = round(np.log(rho.shape[0]) / np.log(op.shape[0]))
    tr = np.trace(rho)
    if abs(tr) < 1e-14:
        raise DegenerateTraceError("state has vanishing trace")
    full = embed_operator(np.asarray(op, dtype=complex), sites, n_sites, op.shape[0])
    return complex(np.trace(rho @ full) / tr)
