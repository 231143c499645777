"""Vectorized density matrices as matrix product states.

A state over ``N`` sites of physical dimension ``d`` is a chain of rank-3
tensors with axes ``(bond_left, phys, bond_right)`` where ``phys = d*d`` is
the composite index ``Sigma = s_bra*d + s_ket`` of the vectorized local
density matrix.  Edge sites carry outer bonds of extent 1.

Mixed canonical form: sites left of ``center`` are left-normalized
(``sum_S A[S]^dag A[S] = 1``), sites right of it are right-normalized
(``sum_S B[S] B[S]^dag = 1``).  Operations producing canonical states keep
that contract; :func:`ness.lmpo.apply_mpo` outputs carry ``center = None``
to mark that no gauge is guaranteed.

States are value types: every operation returns a new ``MpsState`` (site
tensors are shared where unchanged and never mutated in place).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTraceError, DimensionMismatch, ResourceLimitError
from .linalg import qr, svd_truncated

__all__ = [
    "MpsState",
    "product_init",
    "random_state",
    "move_center",
    "normalize",
    "pad_bonds",
    "overlap",
    "norm",
    "trace_overlap",
    "expectation",
    "correlation",
    "reconstruct_dense",
    "reduced_density_matrix",
    "save_mps",
    "load_mps",
]

MPS_FORMAT_VERSION = 1
MAX_DENSE_SITES = 7


@dataclass
class MpsState:
    """Chain of site tensors with an optional canonical center.

    ``d`` is the physical dimension of one site of the underlying chain, so
    each tensor's middle axis has extent ``d*d``.
    """

    sites: list[np.ndarray]
    center: int | None
    d: int

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def phys_dim(self) -> int:
        return self.d * self.d

    @property
    def bond_dims(self) -> list[int]:
        """Extents of the internal bonds (length ``n_sites - 1``)."""
        return [t.shape[2] for t in self.sites[:-1]]

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims, default=1)

    def copy(self) -> "MpsState":
        return MpsState([t.copy() for t in self.sites], self.center, self.d)


def _max_bond_at(bond: int, n_sites: int, phys: int) -> int:
    """Largest representable extent of internal bond index ``bond``."""
    return min(phys ** (bond + 1), phys ** (n_sites - 1 - bond))


def product_init(n_sites: int, local_vector: np.ndarray) -> MpsState:
    """Bond-1 product state with every site carrying ``local_vector`` (normalized)."""
    vec = np.asarray(local_vector, dtype=complex).reshape(-1)
    nrm = np.linalg.norm(vec)
    if nrm == 0:
        raise ValueError("local_vector must be nonzero")
    d = round(np.sqrt(vec.size))
    if d * d != vec.size:
        raise DimensionMismatch(
            f"local_vector length {vec.size} is not a squared local dimension"
        )
    site = (vec / nrm).reshape(1, vec.size, 1)
    return MpsState([site.copy() for _ in range(n_sites)], 0, d)


def random_state(
    n_sites: int, d: int, max_bond: int, rng: np.random.Generator
) -> MpsState:
    """Random canonical state (center 0, unit euclidean norm)."""
    phys = d * d
    dims = [1] + [min(max_bond, _max_bond_at(b, n_sites, phys)) for b in range(n_sites - 1)] + [1]
    sites = []
    for j in range(n_sites):
        shape = (dims[j], phys, dims[j + 1])
        sites.append(rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    state = MpsState(sites, None, d)
    state = _canonicalize(state, 0)
    return normalize(state)


def _canonicalize(state: MpsState, center: int) -> MpsState:
    """Exact QR gauging to the requested center (no truncation)."""
    sites = list(state.sites)
    for j in range(center):
        dl, p, dr = sites[j].shape
        q, r = qr(sites[j].reshape(dl * p, dr))
        sites[j] = q.reshape(dl, p, q.shape[1])
        sites[j + 1] = np.tensordot(r, sites[j + 1], axes=(1, 0))
    for j in range(state.n_sites - 1, center, -1):
        dl, p, dr = sites[j].shape
        q, r = qr(sites[j].reshape(dl, p * dr).T)
        sites[j] = q.T.reshape(q.shape[1], p, dr)
        sites[j - 1] = np.tensordot(sites[j - 1], r.T, axes=(2, 0))
    return MpsState(sites, center, state.d)


def move_center(
    state: MpsState,
    direction: str,
    max_bond: int | None = None,
    cutoff: float = 0.0,
) -> tuple[MpsState, float]:
    """Shift the canonical center one site left or right.

    The departing site is SVD-split; singular values beyond ``max_bond`` or
    below ``cutoff`` (relative to the largest) are dropped and their summed
    squares returned as the discarded weight.  With ``cutoff = 0`` and a
    large ``max_bond`` the represented vector is unchanged.
    """
    if state.center is None:
        raise ValueError("state has no canonical center")
    c = state.center
    sites = list(state.sites)
    theta = sites[c]
    dl, p, dr = theta.shape
    if direction == "right":
        if c == state.n_sites - 1:
            raise ValueError("cannot move right: center already at the last site")
        cap = max_bond if max_bond is not None else dl * p
        u, s, vh, weight = svd_truncated(theta.reshape(dl * p, dr), cap, cutoff)
        k = s.size
        sites[c] = u.reshape(dl, p, k)
        carry = (s[:, None] * vh)
        sites[c + 1] = np.tensordot(carry, sites[c + 1], axes=(1, 0))
        return MpsState(sites, c + 1, state.d), weight
    if direction == "left":
        if c == 0:
            raise ValueError("cannot move left: center already at the first site")
        cap = max_bond if max_bond is not None else p * dr
        u, s, vh, weight = svd_truncated(theta.reshape(dl, p * dr), cap, cutoff)
        k = s.size
        sites[c] = vh.reshape(k, p, dr)
        carry = u * s[None, :]
        sites[c - 1] = np.tensordot(sites[c - 1], carry, axes=(2, 0))
        return MpsState(sites, c - 1, state.d), weight
    raise ValueError(f"direction must be 'left' or 'right', got {direction!r}")


def normalize(state: MpsState) -> MpsState:
    """Scale the state to unit euclidean norm."""
    nrm = norm(state)
    if nrm == 0:
        raise ValueError("cannot normalize a zero state")
    sites = list(state.sites)
    pivot = state.center if state.center is not None else 0
    sites[pivot] = sites[pivot] / nrm
    return MpsState(sites, state.center, state.d)


def pad_bonds(
    state: MpsState,
    new_max: int,
    noise: float = 0.0,
    rng: np.random.Generator | None = None,
) -> MpsState:
    """Grow every internal bond toward ``new_max`` by zero padding.

    New entries are zeros plus a uniform complex perturbation of magnitude
    at most ``noise`` (which keeps subsequent local eigenproblems full
    rank).  Bonds never exceed the extent representable at their position.
    The gauge is restored exactly afterwards, so with ``noise = 0`` the
    represented vector is unchanged.
    """
    if new_max < state.max_bond:
        raise ValueError(
            f"new_max {new_max} is below the current maximal bond {state.max_bond}"
        )
    if rng is None:
        rng = np.random.default_rng(0)
    n, p = state.n_sites, state.phys_dim
    targets = [1] + [
        min(new_max, _max_bond_at(b, n, p)) for b in range(n - 1)
    ] + [1]
    sites = []
    changed = False
    for j, tensor in enumerate(state.sites):
        dl, _, dr = tensor.shape
        tl, tr = targets[j], targets[j + 1]
        if (tl, tr) == (dl, dr):
            sites.append(tensor)
            continue
        changed = True
        grown = np.zeros((tl, p, tr), dtype=complex)
        if noise > 0.0:
            grown += (noise / np.sqrt(2.0)) * (
                rng.uniform(-1, 1, grown.shape) + 1j * rng.uniform(-1, 1, grown.shape)
            )
        grown[:dl, :, :dr] = tensor
        sites.append(grown)
    if not changed:
        return MpsState(list(state.sites), state.center, state.d)
    out = MpsState(sites, state.center, state.d)
    center = state.center if state.center is not None else 0
    return _canonicalize(out, center)


def _transfer(env: np.ndarray, bra_site: np.ndarray, ket_site: np.ndarray) -> np.ndarray:
    return np.einsum("ab,asc,bsd->cd", env, bra_site.conj(), ket_site, optimize=True)


def overlap(a: MpsState, b: MpsState) -> complex:
    """Inner product ``<<a|b>>`` by left-to-right transfer contraction."""
    if a.n_sites != b.n_sites or a.d != b.d:
        raise DimensionMismatch(
            f"incompatible states: {a.n_sites} sites (d={a.d}) vs "
            f"{b.n_sites} sites (d={b.d})"
        )
    env = np.ones((1, 1), dtype=complex)
    for bra, ket in zip(a.sites, b.sites):
        env = _transfer(env, bra, ket)
    return complex(env[0, 0])


def norm(state: MpsState) -> float:
    return float(np.sqrt(max(overlap(state, state).real, 0.0)))


def canonical_norm(state: MpsState) -> float:
    """Euclidean norm via exact QR gauging.

    Equivalent to ``sqrt(overlap(state, state))`` in exact arithmetic but
    immune to the square-root precision loss of the quadratic form: norms
    far below 1 (e.g. of a residual vector held as an MPS with large
    internally cancelling tensors) come out with full relative accuracy.
    """
    gauged = _canonicalize(MpsState(list(state.sites), None, state.d), 0)
    return float(np.linalg.norm(gauged.sites[0]))


def _trace_site_vector(op: np.ndarray) -> np.ndarray:
    """Vector ``t`` with ``sum_S t[S] vec(rho)[S] = Tr(op rho)`` on one site."""
    return np.asarray(op, dtype=complex).reshape(-1)


def _closed_chain(state: MpsState, site_ops: dict[int, np.ndarray]) -> complex:
    """Contract the chain against per-site trace vectors.

    ``site_ops`` maps a site to the operator inserted there; all other sites
    get the identity (plain trace).
    """
    ident = np.eye(state.d, dtype=complex)
    vec = np.ones((1,), dtype=complex)
    for j, tensor in enumerate(state.sites):
        t = _trace_site_vector(site_ops.get(j, ident))
        mat = np.tensordot(t, tensor, axes=(0, 1))
        vec = vec @ mat
    return complex(vec[0])


def trace_overlap(state: MpsState) -> complex:
    """The trace functional ``<<I|rho>>`` of the represented density matrix."""
    return _closed_chain(state, {})


def expectation(state: MpsState, op: np.ndarray, site: int) -> complex:
    """Trace-normalized one-site expectation ``Tr(rho O)/Tr(rho)``."""
    if not 0 <= site < state.n_sites:
        raise ValueError(f"site {site} out of range")
    tr = trace_overlap(state)
    if abs(tr) < 1e-14:
        raise DegenerateTraceError("state trace is numerically zero")
    return _closed_chain(state, {site: op}) / tr


def correlation(
    state: MpsState,
    op_a: np.ndarray,
    op_b: np.ndarray,
    site_a: int,
    site_b: int,
) -> complex:
    """Trace-normalized two-site expectation ``Tr(rho O_a O_b)/Tr(rho)``."""
    if site_a == site_b:
        raise ValueError("site_a and site_b must differ")
    for s in (site_a, site_b):
        if not 0 <= s < state.n_sites:
            raise ValueError(f"site {s} out of range")
    tr = trace_overlap(state)
    if abs(tr) < 1e-14:
        raise DegenerateTraceError("state trace is numerically zero")
    return _closed_chain(state, {site_a: op_a, site_b: op_b}) / tr


def reconstruct_dense(state: MpsState) -> np.ndarray:
    """Full contraction into a ``(d^2)^N`` vector (site 0 slowest index)."""
    if state.n_sites > MAX_DENSE_SITES:
        raise ResourceLimitError(
            f"dense reconstruction limited to {MAX_DENSE_SITES} sites, "
            f"got {state.n_sites}"
        )
    acc = np.ones((1, 1), dtype=complex)  # (flat, bond)
    for tensor in state.sites:
        acc = np.tensordot(acc, tensor, axes=(1, 0))
        acc = acc.reshape(-1, tensor.shape[2])
    return acc[:, 0]


def reduced_density_matrix(state: MpsState, sites: list[int]) -> np.ndarray:
    """Reduced density matrix on one or two contiguous sites, unit trace."""
    kept = sorted(sites)
    if not 1 <= len(kept) <= 2:
        raise ValueError("sites must list one or two site indices")
    if len(kept) == 2 and kept[1] != kept[0] + 1:
        raise ValueError("sites must be contiguous")
    for s in kept:
        if not 0 <= s < state.n_sites:
            raise ValueError(f"site {s} out of range")
    d = state.d
    t_ident = np.eye(d, dtype=complex).reshape(-1)
    acc = np.ones((1,), dtype=complex)
    for j, tensor in enumerate(state.sites):
        if j in kept:
            acc = np.tensordot(acc, tensor, axes=(-1, 0))
        else:
            mat = np.tensordot(t_ident, tensor, axes=(0, 1))
            acc = np.tensordot(acc, mat, axes=(-1, 0))
    acc = acc[..., 0]
    if len(kept) == 1:
        rho = acc.reshape(d, d).T  # Sigma = s_bra*d + s_ket
    else:
        rho = (
            acc.reshape(d, d, d, d)
            .transpose(1, 3, 0, 2)  # (s_ket_a, s_ket_b, s_bra_a, s_bra_b)
            .reshape(d * d, d * d)
        )
    tr = np.trace(rho)
    if abs(tr) < 1e-14:
        raise DegenerateTraceError("reduced state has vanishing trace")
    return rho / tr


def save_mps(state: MpsState, path) -> None:
    """Serialize a state to a ``.npz`` container.

    Layout: little-endian complex128 arrays ``site_0 .. site_{N-1}`` plus a
    JSON header (key ``header``) holding the format version, site count,
    local dimension and canonical center.
    """
    header = json.dumps(
        {
            "format_version": MPS_FORMAT_VERSION,
            "n_sites": state.n_sites,
            "local_dim": state.d,
            "center": state.center,
        }
    )
    arrays = {
        f"site_{j}": np.ascontiguousarray(t, dtype="<c16")
        for j, t in enumerate(state.sites)
    }
    with open(path, "wb") as handle:
        np.savez(handle, header=np.bytes_(header.encode()), **arrays)


def load_mps(path) -> MpsState:
    """Load a state written by :func:`save_mps`."""
    with np.load(path) as data:
        header = json.loads(bytes(data["header"].item()).decode())
        if header["format_version"] != MPS_FORMAT_VERSION:
            raise ValueError(
                f"unsupported state format version {header['format_version']}"
            )
        sites = [
            np.asarray(data[f"site_{j}"], dtype=complex)
            for j in range(header["n_sites"])
        ]
    return MpsState(sites, header["center"], header["local_dim"])
