"""Liouvillian as a matrix product operator.

The vectorized generator is a sum of finite-range products of on-site
superoperators (see :func:`ness.model.local_superoperator_terms`).  Such a
sum has an exact MPO with a small, chain-length-independent bond dimension,
built here as a transfer automaton:

* bond state ``0`` ("done"): the term is fully placed, identities follow;
* bond state ``D_W - 1`` ("ready"): nothing placed yet, identities so far;
* one pending state per partially placed coupling string.

The bulk tensor ``W[left, right, out, in]`` is lower triangular in its bond
indices; the first site keeps only the ready row and the last site only the
done column, which also truncates couplings reaching past the chain edge.
Coupling strings with equal leading operators share pending states, so the
nearest- and next-nearest-neighbour families cost four pending states in
total (bond dimension 6) and the nearest-neighbour model alone costs two
(bond dimension 4).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, ResourceLimitError
from .model import ModelSpec, _superoperator_families
from .mps import MpsState

__all__ = [
    "LiouvillianMpo",
    "build_mpo",
    "mpo_to_dense",
    "apply_mpo",
    "quadratic_form",
]

MAX_DENSE_SITES = 7


@dataclass
class LiouvillianMpo:
    """Chain of rank-4 tensors ``(bond_left, bond_right, phys_out, phys_in)``."""

    tensors: list[np.ndarray]
    local_dim: int

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def phys_dim(self) -> int:
        return self.local_dim * self.local_dim

    @property
    def bond_dim(self) -> int:
        return max(max(t.shape[0], t.shape[1]) for t in self.tensors)


@dataclass
class _Node:
    """Trie node for one partially placed coupling string."""

    edge_op: np.ndarray
    depth: int
    children: list["_Node"] = field(default_factory=list)
    index: int = -1


def build_mpo(spec: ModelSpec) -> LiouvillianMpo:
    """Exact MPO of the vectorized Liouvillian of ``spec``."""
    fams = _superoperator_families(spec)
    p = spec.local_dim**2
    ident = np.eye(p, dtype=complex)

    onsite = np.zeros((p, p), dtype=complex)
    roots: list[_Node] = []
    closings: list[tuple[_Node | None, float, np.ndarray]] = []

    def _child(children: list[_Node], op: np.ndarray, depth: int) -> _Node:
        for node in children:
            if np.array_equal(node.edge_op, op):
                return node
        node = _Node(op, depth)
        children.append(node)
        return node

    for fam in fams:
        if fam.range == 0:
            onsite = onsite + fam.coefficient * fam.operators[0]
            continue
        node = None
        children = roots
        for depth, op in enumerate(fam.operators[:-1], start=1):
            node = _child(children, op, depth)
            children = node.children
        closings.append((node, fam.coefficient, fam.operators[-1]))

    nodes: list[_Node] = []
    stack = list(roots)
    while stack:
        node = stack.pop()
        nodes.append(node)
        stack.extend(node.children)
    # deeper pending states sit closer to "done" so transitions always
    # descend in bond index (lower-triangular automaton)
    nodes.sort(key=lambda node: -node.depth)
    for i, node in enumerate(nodes, start=1):
        node.index = i
    ready = len(nodes) + 1
    d_w = ready + 1

    bulk = np.zeros((d_w, d_w, p, p), dtype=complex)
    bulk[0, 0] = ident
    bulk[ready, ready] = ident
    bulk[ready, 0] = onsite
    for node in roots:
        bulk[ready, node.index] = node.edge_op
    for node in nodes:
        for child in node.children:
            bulk[node.index, child.index] = child.edge_op
    for node, coeff, op in closings:
        bulk[node.index, 0] += coeff * op

    n = spec.n_sites
    if n == 1:
        tensors = [bulk[ready : ready + 1, 0:1]]
    else:
        tensors = [bulk[ready : ready + 1]]
        tensors.extend(bulk.copy() for _ in range(n - 2))
        tensors.append(bulk[:, 0:1])
    return LiouvillianMpo([t.copy() for t in tensors], spec.local_dim)


def mpo_to_dense(mpo: LiouvillianMpo) -> np.ndarray:
    """Contract all bonds into the full matrix (site 0 slowest index)."""
    if mpo.n_sites > MAX_DENSE_SITES:
        raise ResourceLimitError(
            f"dense contraction limited to {MAX_DENSE_SITES} sites, got {mpo.n_sites}"
        )
    acc = mpo.tensors[0][0]  # (bond, out, in)
    for w in mpo.tensors[1:]:
        acc = np.einsum("axy,abst->bxsyt", acc, w, optimize=True)
        b, x, s, y, t = acc.shape
        acc = acc.reshape(b, x * s, y * t)
    return acc[0]


def apply_mpo(mpo: LiouvillianMpo, state: MpsState) -> MpsState:
    """Apply the MPO to a state exactly; bonds multiply by the MPO bonds.

    The result carries no canonical gauge (``center = None``).
    """
    if mpo.n_sites != state.n_sites or mpo.phys_dim != state.phys_dim:
        raise DimensionMismatch(
            f"MPO ({mpo.n_sites} sites, phys {mpo.phys_dim}) does not match "
            f"state ({state.n_sites} sites, phys {state.phys_dim})"
        )
    sites = []
    for w, a in zip(mpo.tensors, state.sites):
        out = np.einsum("abst,ltr->alsbr", w, a, optimize=True)
        wl, dl, s, wr, dr = out.shape
        sites.append(out.reshape(wl * dl, s, wr * dr))
    return MpsState(sites, None, state.d)


def quadratic_form(mpo: LiouvillianMpo, state: MpsState) -> complex:
    """Full sandwich contraction ``<<rho| L |rho>>``."""
    env = np.ones((1, 1, 1), dtype=complex)
    for w, a in zip(mpo.tensors, state.sites):
        env = np.einsum("awl,axb,wvxt,ltr->bvr", env, a.conj(), w, a, optimize=True)
    return complex(env[0, 0, 0])
