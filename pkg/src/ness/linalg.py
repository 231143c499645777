"""Dense complex linear-algebra kernels used by every other module.

Conventions
-----------
All tensors are ``numpy.ndarray`` of ``complex128`` stored in C (row-major)
order, last index fastest.  Reshapes and index grouping throughout the
package are defined against this layout.  Every function here is pure:
inputs are never mutated and results are newly allocated.

The decomposition kernels (:func:`qr`, :func:`svd_truncated`,
:func:`lu_solve`) wrap LAPACK through numpy/scipy; the restarted Arnoldi
iteration :func:`arnoldi_eigs` is implemented here directly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, SingularMatrixError

__all__ = [
    "contract",
    "qr",
    "svd_truncated",
    "lu_solve",
    "arnoldi_eigs",
    "RitzPair",
]

_BREAKDOWN = 1e-14


def contract(a: np.ndarray, b: np.ndarray, axes: Sequence[tuple[int, int]]) -> np.ndarray:
    """Contract tensors ``a`` and ``b`` over the given pairs of axes.

    ``axes`` lists ``(axis_of_a, axis_of_b)`` pairs; paired axes must have
    equal extents.  The result carries the free axes of ``a`` followed by
    the free axes of ``b``, each group in original order.  An empty list
    yields the outer product.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if not axes:
        return np.tensordot(a, b, axes=0)
    ax_a = [p[0] for p in axes]
    ax_b = [p[1] for p in axes]
    for i, j in axes:
        if a.shape[i] != b.shape[j]:
            raise DimensionMismatch(
                f"cannot contract axis {i} of shape {a.shape} with "
                f"axis {j} of shape {b.shape}"
            )
    return np.tensordot(a, b, axes=(ax_a, ax_b))


def qr(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Thin QR factorization: ``m = q @ r`` with orthonormal columns in ``q``."""
    m = np.asarray(m, dtype=complex)
    q, r = np.linalg.qr(m, mode="reduced")
    return q, r


def svd_truncated(
    m: np.ndarray, max_rank: int, cutoff: float = 0.0
) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Rank-truncated SVD ``m ~ u @ diag(s) @ vh``.

    Singular values are sorted descending.  The retained rank is
    ``min(max_rank, #{i : s[i]/s[0] > cutoff})`` but at least one; the cutoff
    is relative to the largest singular value so truncation is scale
    invariant.  Returns ``(u, s, vh, discarded_weight)`` where
    ``discarded_weight`` is the sum of the squared dropped singular values.
    A zero matrix yields a rank-1 factorization with ``s = [0]``.
    """
    if max_rank < 1:
        raise ValueError(f"max_rank must be >= 1, got {max_rank}")
    if cutoff < 0:
        raise ValueError(f"cutoff must be >= 0, got {cutoff}")
    m = np.asarray(m, dtype=complex)
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        # gesdd occasionally fails to converge; gesvd is slower but robust
        u, s, vh = scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")
    if s[0] == 0.0:
        return u[:, :1], s[:1], vh[:1, :], 0.0
    keep = int(np.count_nonzero(s / s[0] > cutoff))
    keep = max(1, min(max_rank, keep))
    discarded = float(np.sum(s[keep:] ** 2))
    return u[:, :keep], s[:keep], vh[:keep, :], discarded


def lu_solve(m: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``m @ x = rhs`` by LU factorization with partial pivoting."""
    lu, piv = lu_factor(m)
    return scipy.linalg.lu_solve((lu, piv), rhs)


def lu_factor(m: np.ndarray):
    """LU-factor a square matrix, raising on exact singularity.

    Returns the ``(lu, piv)`` pair accepted by ``scipy.linalg.lu_solve``.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(m)
    diag = np.abs(np.diag(lu))
    if np.any(diag == 0.0):
        pivot = int(np.argmin(diag))
        raise SingularMatrixError(
            f"matrix is exactly singular (zero pivot at index {pivot})", pivot=pivot
        )
    return lu, piv


@dataclass
class RitzPair:
    """One approximate eigenpair produced by :func:`arnoldi_eigs`."""

    value: complex
    vector: np.ndarray
    converged: bool


def arnoldi_eigs(
    apply: Callable[[np.ndarray], np.ndarray],
    dim: int,
    krylov_dim: int = 30,
    max_restarts: int = 10,
    tol: float = 1e-10,
    n_eigs: int = 1,
    start: np.ndarray | None = None,
) -> list[RitzPair]:
    """Dominant-magnitude Ritz pairs of a linear map by restarted Arnoldi.

    Parameters
    ----------
    apply:
        Callable evaluating the fixed linear map on a vector of length ``dim``.
    dim:
        Dimension of the vector space.
    krylov_dim:
        Krylov subspace size per restart cycle (capped at ``dim``).
    max_restarts:
        Number of restart cycles; each cycle restarts from the current
        dominant Ritz vector.
    tol:
        A pair counts as converged when its residual estimate
        ``|A v - lam v|`` falls below ``tol * |lam|``.
    n_eigs:
        Number of pairs to return (sorted by descending ``|lam|``).
    start:
        Optional start vector; defaults to a fixed dense vector.

    The orthogonalization is modified Gram-Schmidt with one
    re-orthogonalization pass.  If the budget runs out before the leading
    pair converges, the best available pairs are returned with
    ``converged=False``.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    m = min(max(1, krylov_dim), dim)
    n_eigs = min(max(1, n_eigs), dim)

    if start is not None and np.linalg.norm(start) > 0:
        v0 = np.asarray(start, dtype=complex).reshape(dim)
    else:
        v0 = np.ones(dim, dtype=complex)
    v0 = v0 / np.linalg.norm(v0)

    pairs: list[RitzPair] = []
    for _ in range(max(1, max_restarts)):
        basis = np.empty((m + 1, dim), dtype=complex)
        hess = np.zeros((m + 1, m), dtype=complex)
        basis[0] = v0
        broke_down = False
        j_eff = m
        for j in range(m):
            w = np.asarray(apply(basis[j]), dtype=complex).reshape(dim)
            scale = np.linalg.norm(w)
            # MGS with one re-orthogonalization pass
            for _pass in range(2):
                for i in range(j + 1):
                    c = np.vdot(basis[i], w)
                    hess[i, j] += c
                    w = w - c * basis[i]
            h = np.linalg.norm(w)
            hess[j + 1, j] = h
            if h <= _BREAKDOWN * max(scale, 1.0):
                j_eff = j + 1
                broke_down = True
                break
            basis[j + 1] = w / h
            # applying the map dominates the cost, so test the dominant Ritz
            # pair every few steps and stop as soon as it has settled
            if j + 1 >= n_eigs + 1 and (j + 1) % 4 == 0 and j + 1 < m:
                t_val, t_vec = np.linalg.eig(hess[: j + 1, : j + 1])
                lead = int(np.argmax(np.abs(t_val)))
                if h * abs(t_vec[j, lead]) <= tol * max(
                    abs(t_val[lead]), np.finfo(float).tiny
                ):
                    j_eff = j + 1
                    break
        theta, y = np.linalg.eig(hess[:j_eff, :j_eff])
        order = np.argsort(-np.abs(theta))
        theta = theta[order]
        y = y[:, order]
        h_last = 0.0 if broke_down else float(np.abs(hess[j_eff, j_eff - 1]))
        pairs = []
        for i in range(min(n_eigs, j_eff)):
            resid = h_last * abs(y[j_eff - 1, i])
            ok = resid <= tol * max(abs(theta[i]), np.finfo(float).tiny)
            vec = basis[:j_eff].T @ y[:, i]
            nrm = np.linalg.norm(vec)
            if nrm > 0:
                vec = vec / nrm
            pairs.append(RitzPair(complex(theta[i]), vec, bool(ok)))
        if broke_down or pairs[0].converged:
            break
        v0 = pairs[0].vector
    return pairs
