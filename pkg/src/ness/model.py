"""Physical model definition and vectorization conventions.

The built-in system is a spin chain with on-site field ``h Z``, nearest
neighbour coupling ``J X X``, next-nearest coupling ``V X I X`` and a
uniform on-site decay channel ``K = sqrt(gamma) (X - iY)/2`` (the lowering
operator in the basis where ``Z = diag(1, -1)``).

Vectorization is column-stacking: a density matrix ``rho`` becomes the
vector ``vec(rho)[s_bra*d + s_ket] = rho[s_ket, s_bra]``, i.e. the
composite per-site index is ``Sigma = s_bra*d + s_ket`` with the ket index
fastest.  Under this map ``X rho Y -> (Y^T kron X) vec(rho)``, which is how
every superoperator in the package is assembled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch

__all__ = [
    "ModelSpec",
    "LocalTerm",
    "JumpTerm",
    "pauli",
    "lowering_jump",
    "super_from_sandwich",
    "dissipator_superoperator",
    "hamiltonian_terms",
    "jump_terms",
    "local_superoperator_terms",
    "terms_to_dense",
]

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli(kind: str) -> np.ndarray:
    """Return the 2x2 Pauli matrix ``kind`` in {I, X, Y, Z}, Z = diag(1, -1)."""
    try:
        return _PAULI[kind.upper()].copy()
    except (KeyError, AttributeError):
        raise ValueError(f"unknown Pauli kind {kind!r}; expected one of I, X, Y, Z")


def lowering_jump(gamma: float) -> np.ndarray:
    """Decay operator ``sqrt(gamma) (X - iY)/2 = sqrt(gamma) [[0,0],[1,0]]``."""
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    return np.sqrt(gamma) * np.array([[0, 0], [1, 0]], dtype=complex)


@dataclass(frozen=True)
class ModelSpec:
    """Parameters of the driven-dissipative chain.

    ``n_sites`` sites of local dimension ``local_dim`` (2 for spins) with
    Hamiltonian couplings ``field_h``, ``coupling_j`` (nearest neighbour),
    ``coupling_v`` (next-nearest) and uniform decay rate ``gamma``.
    Open boundary conditions: couplings reaching past the chain edge drop.
    """

    n_sites: int
    field_h: float = 0.0
    coupling_j: float = 0.0
    coupling_v: float = 0.0
    gamma: float = 0.0
    local_dim: int = 2

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError(f"n_sites must be >= 1, got {self.n_sites}")
        if self.local_dim < 2:
            raise ValueError(f"local_dim must be >= 2, got {self.local_dim}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")

    @property
    def energy_scale(self) -> float:
        """Largest magnitude among the model couplings and the decay rate."""
        return max(
            abs(self.field_h), abs(self.coupling_j), abs(self.coupling_v), self.gamma
        )


@dataclass(eq=False)
class LocalTerm:
    """One finite-range product term: ``coefficient * op[0] ... op[range]``.

    ``range`` counts the span in sites (0 = on-site, 1 = nearest neighbour,
    2 = next-nearest); ``operators`` holds one matrix per involved site,
    including explicit identities for skipped sites.
    """

    range: int
    coefficient: float
    operators: tuple[np.ndarray, ...]

    def __post_init__(self):
        if self.range < 0:
            raise ValueError(f"range must be >= 0, got {self.range}")
        if len(self.operators) != self.range + 1:
            raise ValueError(
                f"term of range {self.range} needs {self.range + 1} operators, "
                f"got {len(self.operators)}"
            )


@dataclass(eq=False)
class JumpTerm:
    """A single decay channel: operator ``operator`` acting on ``site``."""

    site: int
    operator: np.ndarray


def super_from_sandwich(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Matrix of ``rho -> x rho y`` on column-stacked vectors: ``y^T kron x``."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise DimensionMismatch(f"x must be square, got shape {x.shape}")
    if y.shape != x.shape:
        raise DimensionMismatch(f"x and y must match, got {x.shape} and {y.shape}")
    return np.kron(y.T, x)


def dissipator_superoperator(k: np.ndarray) -> np.ndarray:
    """Vectorized dissipator of channel ``k``:
    ``rho -> k rho k^dag - (1/2){k^dag k, rho}``."""
    k = np.asarray(k, dtype=complex)
    kdk = k.conj().T @ k
    ident = np.eye(k.shape[0], dtype=complex)
    return (
        super_from_sandwich(k, k.conj().T)
        - 0.5 * super_from_sandwich(kdk, ident)
        - 0.5 * super_from_sandwich(ident, kdk)
    )


def hamiltonian_terms(spec: ModelSpec) -> list[LocalTerm]:
    """The Hamiltonian of ``spec`` as a list of finite-range product terms."""
    if spec.local_dim != 2:
        raise ValueError("the built-in Hamiltonian is defined for local_dim = 2")
    x = pauli("X")
    ident = pauli("I")
    terms = []
    if spec.field_h != 0.0:
        terms.append(LocalTerm(0, spec.field_h, (pauli("Z"),)))
    if spec.coupling_j != 0.0:
        terms.append(LocalTerm(1, spec.coupling_j, (x, x)))
    if spec.coupling_v != 0.0:
        terms.append(LocalTerm(2, spec.coupling_v, (x, ident, x)))
    return terms


def jump_terms(spec: ModelSpec) -> list[JumpTerm]:
    """Uniform decay channels, one per site; empty when ``gamma`` is zero."""
    if spec.gamma == 0.0:
        return []
    k = lowering_jump(spec.gamma)
    return [JumpTerm(site, k) for site in range(spec.n_sites)]


def _superoperator_families(spec: ModelSpec) -> list[LocalTerm]:
    """Bulk superoperator term families over the d^2-dimensional site spaces.

    Each Hamiltonian term splits into a ket-side family ``-i (I kron A_0)
    ... (I kron A_r)`` and a bra-side family ``+i (A_0^T kron I) ...``;
    the phase is folded into the closing operator so shared prefixes stay
    exactly equal.  The dissipator is a single on-site family with the
    rate as its real coefficient.
    """
    d = spec.local_dim
    ident = np.eye(d, dtype=complex)
    families = []
    for term in hamiltonian_terms(spec):
        ket = [np.kron(ident, a) for a in term.operators]
        bra = [np.kron(a.T, ident) for a in term.operators]
        ket[-1] = -1j * ket[-1]
        bra[-1] = 1j * bra[-1]
        families.append(LocalTerm(term.range, term.coefficient, tuple(ket)))
        families.append(LocalTerm(term.range, term.coefficient, tuple(bra)))
    if spec.gamma != 0.0:
        unit = dissipator_superoperator(lowering_jump(1.0))
        families.append(LocalTerm(0, spec.gamma, (unit,)))
    return families


def local_superoperator_terms(spec: ModelSpec, site: int) -> list[LocalTerm]:
    """Superoperator terms anchored at ``site`` (their leftmost operator).

    Terms that would extend past the last site are omitted, implementing
    open boundaries.  Summing the returned terms of every site, each
    embedded at its anchor, reproduces the full vectorized Liouvillian.
    """
    if not 0 <= site < spec.n_sites:
        raise ValueError(f"site {site} out of range for {spec.n_sites} sites")
    return [
        fam
        for fam in _superoperator_families(spec)
        if site + fam.range < spec.n_sites
    ]


def terms_to_dense(spec: ModelSpec) -> np.ndarray:
    """Assemble the anchored superoperator terms into one dense matrix.

    Site-major index convention (site 0 slowest); intended for small-chain
    checks against the independent construction in :mod:`ness.oracle`.
    """
    p = spec.local_dim**2
    dim = p**spec.n_sites
    ident = np.eye(p, dtype=complex)
    total = np.zeros((dim, dim), dtype=complex)
    for site in range(spec.n_sites):
        for term in local_superoperator_terms(spec, site):
            full = np.eye(1, dtype=complex)
            for j in range(spec.n_sites):
                if site <= j <= site + term.range:
                    full = np.kron(full, term.operators[j - site])
                else:
                    full = np.kron(full, ident)
            total += term.coefficient * full
    return total
