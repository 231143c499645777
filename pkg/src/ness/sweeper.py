"""DMRG-style sweeping solver for the Liouvillian null eigenvector.

The density matrix is kept in mixed canonical form while single-site
eigenproblems are solved along the chain.  At the canonical center the
chain contracted around one site yields the on-site operator, whose
eigenvalue closest to a small shift ``tau`` is found by running the
restarted Arnoldi iteration on the LU-factored resolvent ``(L_site -
tau)^-1``.  When the dense on-site operator would exceed the configured
memory budget, the same outer iteration runs matrix-free with the
resolvent applied by preconditioned GMRES (see
:func:`_kron_sum_resolvent`); ARPACK's non-inverting mode remains as the
last resort.

A run has two phases:

1. small fixed bond dimension, a hard cap of a few Arnoldi steps per site,
   and (optionally) a decay rate annealed exponentially from
   ``gamma_start_factor`` times its target down to the target -- this keeps
   weakly dissipative problems stable;
2. bond growth by zero padding between sweeps and a generous Arnoldi
   budget until the exact global residual ``|L rho| / |rho|`` and the
   tracked observables are stationary.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .errors import NessError, SingularMatrixError
from .linalg import arnoldi_eigs, lu_factor
from .lmpo import LiouvillianMpo, apply_mpo, build_mpo
from .model import ModelSpec, pauli
from .mps import (
    MpsState,
    _canonicalize,
    canonical_norm,
    correlation,
    expectation,
    move_center,
    normalize,
    overlap,
    pad_bonds,
    product_init,
)

__all__ = [
    "SweepSchedule",
    "SweepRecord",
    "ConvergenceReport",
    "EnvironmentCache",
    "LocalProblem",
    "init_environments",
    "assemble_local",
    "shift_invert_solve",
    "sweep",
    "run",
    "global_residual",
    "save_checkpoint",
    "load_checkpoint",
]


@dataclass
class SweepSchedule:
    """Bond-growth ramp, annealing curve, solver budgets and tolerances."""

    d_start: int = 6
    d_max: int = 20
    d_step: int = 4
    gamma_start_factor: float = 10.0
    gamma_decay: float = 0.8
    phase1_arnoldi_iters: int = 8
    phase2_arnoldi_iters: int = 240
    phase1_sweeps: int = 16
    max_sweeps: int = 60
    residual_tol: float = 1e-8
    observable_tol: float = 1e-8
    stall_obs_tol: float = 1e-6
    krylov_dim: int = 30
    max_restarts: int = 10
    arnoldi_tol: float = 1e-12
    svd_cutoff: float = 1e-12
    pad_noise: float = 1e-8
    dense_budget: int = 6_250_000  # max element count of a stored on-site matrix

    def __post_init__(self):
        if self.d_start > self.d_max:
            raise ValueError("d_start must not exceed d_max")
        if self.gamma_start_factor < 1.0:
            raise ValueError("gamma_start_factor must be >= 1")
        if not 0.0 < self.gamma_decay <= 1.0:
            raise ValueError("gamma_decay must lie in (0, 1]")


@dataclass
class SweepRecord:
    """Bookkeeping for one full back-and-forth sweep."""

    sweep: int
    phase: int
    gamma_eff: float
    max_bond: int
    min_abs_eigenvalue: float
    max_abs_eigenvalue: float
    residual: float
    observable_change: float
    discarded_weight: float
    solver_failures: int
    wall_time: float


@dataclass
class ConvergenceReport:
    """Per-sweep records (append-only) plus the final status flag.

    Status is ``"converged"`` (residual and observables within tolerance),
    ``"stalled"`` (truncation-limited optimum at the final bond dimension),
    ``"max_sweeps"`` (budget exhausted) or ``"running"``.
    """

    records: list[SweepRecord] = field(default_factory=list)
    status: str = "running"

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def n_sweeps(self) -> int:
        return len(self.records)

    @property
    def final_residual(self) -> float:
        return self.records[-1].residual if self.records else float("inf")

    def to_dict(self) -> dict:
        return {"status": self.status, "records": [asdict(r) for r in self.records]}


class EnvironmentCache:
    """Left/right contracted environments around the canonical center.

    ``left[j]`` covers sites ``0 .. j-1`` and ``right[j]`` covers sites
    ``j .. N-1``; both are rank-3 with axes (bra bond, MPO bond, ket bond)
    and trivial scalar-1 tensors at the chain ends.
    """

    def __init__(self, n_sites: int):
        self.left: list[np.ndarray | None] = [None] * (n_sites + 1)
        self.right: list[np.ndarray | None] = [None] * (n_sites + 1)
        self.left[0] = np.ones((1, 1, 1), dtype=complex)
        self.right[n_sites] = np.ones((1, 1, 1), dtype=complex)

    def update_left(self, site: int, state: MpsState, mpo: LiouvillianMpo):
        """Recompute ``left[site + 1]`` from ``left[site]`` and site ``site``."""
        a = state.sites[site]
        self.left[site + 1] = np.einsum(
            "awl,axb,wvxt,ltr->bvr",
            self.left[site],
            a.conj(),
            mpo.tensors[site],
            a,
            optimize=True,
        )

    def update_right(self, site: int, state: MpsState, mpo: LiouvillianMpo):
        """Recompute ``right[site]`` from ``right[site + 1]`` and site ``site``."""
        a = state.sites[site]
        self.right[site] = np.einsum(
            "bvr,axb,wvxt,ltr->awl",
            self.right[site + 1],
            a.conj(),
            mpo.tensors[site],
            a,
            optimize=True,
        )


def init_environments(state: MpsState, mpo: LiouvillianMpo) -> EnvironmentCache:
    """Build all environments consistent with the state's canonical center."""
    if state.center is None:
        raise ValueError("state must have a canonical center")
    envs = EnvironmentCache(state.n_sites)
    for site in range(state.center):
        envs.update_left(site, state, mpo)
    for site in range(state.n_sites - 1, state.center, -1):
        envs.update_right(site, state, mpo)
    return envs


@dataclass
class LocalProblem:
    """On-site operator at the canonical center, dense or matrix-free."""

    dimension: int
    target_shift: complex
    matrix: np.ndarray | None = None
    matvec: object = None
    shape: tuple[int, int, int] = (1, 1, 1)
    parts: tuple | None = None  # (left env, MPO tensor, right env)


def assemble_local(
    envs: EnvironmentCache,
    w: np.ndarray,
    site: int,
    target_shift: complex = 0.0,
    dense_budget: int = 16_000_000,
) -> LocalProblem:
    """Contract left environment, MPO tensor and right environment.

    Produces the dense on-site matrix when its element count
    ``(D_l d^2 D_r)^2`` fits the budget, otherwise a matrix-free applicator
    evaluating the same contraction one vector at a time.
    """
    left = envs.left[site]
    right = envs.right[site + 1]
    d_l, p, d_r = left.shape[2], w.shape[2], right.shape[2]
    dim = d_l * p * d_r
    if dim * dim <= dense_budget:
        op = np.einsum("awl,wvxt,bvr->axbltr", left, w, right, optimize=True)
        return LocalProblem(dim, target_shift, matrix=op.reshape(dim, dim),
                            shape=(d_l, p, d_r), parts=(left, w, right))

    def matvec(v):
        t = np.asarray(v, dtype=complex).reshape(d_l, p, d_r)
        tmp = np.einsum("awl,ltr->awtr", left, t, optimize=True)
        tmp = np.einsum("awtr,wvxt->axvr", tmp, w, optimize=True)
        out = np.einsum("axvr,bvr->axb", tmp, right, optimize=True)
        return out.reshape(-1)

    return LocalProblem(dim, target_shift, matvec=matvec, shape=(d_l, p, d_r),
                        parts=(left, w, right))


def _kron_sum_resolvent(left, w, right, tau):
    """Approximate inverse of ``L_site - tau`` from its Kronecker-sum core.

    With canonical environments the identity MPO channels make
    ``L_site = A (+) B (+) C + couplings`` where ``A``/``C`` are the fully
    contracted left/right blocks (``done``/``ready`` env channels) and
    ``B`` the on-site block.  Diagonalizing the three small factors gives a
    cheap resolvent of the sum, an effective preconditioner since the
    neglected couplings are bounded by the bond terms.  Returns ``None``
    when the factor eigenbases are too ill-conditioned to be useful.
    """
    wl, wr, p, _ = w.shape
    d_l, d_r = left.shape[2], right.shape[2]
    a = left[:, 0, :] if wl > 1 else np.zeros((d_l, d_l), dtype=complex)
    c = right[:, wr - 1, :] if wr > 1 else np.zeros((d_r, d_r), dtype=complex)
    b = w[wl - 1, 0]
    try:
        vals, bases, inverses = [], [], []
        for factor in (a, b, c):
            lam, s = np.linalg.eig(factor)
            s_inv = np.linalg.inv(s)
            if np.linalg.norm(s) * np.linalg.norm(s_inv) > 1e8:
                return None
            vals.append(lam)
            bases.append(s)
            inverses.append(s_inv)
    except np.linalg.LinAlgError:
        return None
    denom = (
        vals[0][:, None, None] + vals[1][None, :, None] + vals[2][None, None, :]
    ) - tau
    floor = 1e-12 * max(1.0, np.max(np.abs(denom)))
    small = np.abs(denom) < floor
    if np.any(small):
        denom = np.where(small, floor, denom)

    def apply(v):
        t = np.asarray(v, dtype=complex).reshape(d_l, p, d_r)
        t = np.einsum("al,ltr->atr", inverses[0], t, optimize=True)
        t = np.einsum("xt,atr->axr", inverses[1], t, optimize=True)
        t = np.einsum("cr,axr->axc", inverses[2], t, optimize=True)
        t = t / denom
        t = np.einsum("la,axc->lxc", bases[0], t, optimize=True)
        t = np.einsum("tx,lxc->ltc", bases[1], t, optimize=True)
        t = np.einsum("rc,ltc->ltr", bases[2], t, optimize=True)
        return t.reshape(-1)

    return apply


def _pick_candidate(values, vectors, previous):
    """Among near-degenerate leading candidates keep the branch closest to
    the previous tensor (largest start-vector overlap)."""
    best = 0
    lead = np.abs(values[0])
    best_ov = -1.0
    for i, val in enumerate(values):
        if np.abs(val) < 0.9 * lead:
            break
        ov = abs(np.vdot(vectors[i], previous))
        if ov > best_ov:
            best_ov = ov
            best = i
    return best


def shift_invert_solve(
    problem: LocalProblem,
    previous: np.ndarray,
    krylov_dim: int,
    max_iters: int,
    tol: float = 1e-9,
) -> tuple[complex, np.ndarray, bool]:
    """Eigenpair of the on-site operator closest to ``target_shift``.

    Dense problems are solved by restarted Arnoldi on the LU-factored
    resolvent (eigenvalues map back as ``lam = tau + 1/mu``); if the shift
    collides with an exact eigenvalue the factorization is retried with
    ``tau`` scaled up tenfold.  Matrix-free problems run the same outer
    iteration with the resolvent applied by GMRES, preconditioned with the
    Kronecker-sum core of the on-site operator; when that preconditioner
    cannot be built, ARPACK's non-inverting smallest-magnitude mode is the
    last resort.  ``previous`` seeds the iteration and breaks ties among
    near-degenerate candidates.
    """
    dim = problem.dimension
    previous = np.asarray(previous, dtype=complex).reshape(dim)
    if problem.matrix is not None:
        tau = problem.target_shift
        factored = None
        for _ in range(3):
            shifted = problem.matrix - tau * np.eye(dim, dtype=complex)
            try:
                factored = lu_factor(shifted)
                break
            except SingularMatrixError:
                tau = 10.0 * tau if tau != 0 else 1e-12
        if factored is None:
            raise SingularMatrixError("shifted on-site operator stayed singular", -1)

        def apply(v):
            return scipy.linalg.lu_solve(factored, v)

        kdim = max(2, min(krylov_dim, max_iters, dim))
        restarts = max(1, int(np.ceil(max_iters / kdim)))
        pairs = arnoldi_eigs(
            apply, dim, krylov_dim=kdim, max_restarts=restarts, tol=tol,
            n_eigs=min(2, dim), start=previous,
        )
        idx = _pick_candidate(
            [p.value for p in pairs], [p.vector for p in pairs], previous
        )
        mu = pairs[idx].value
        lam = tau + 1.0 / mu if mu != 0 else complex("inf")
        return lam, pairs[idx].vector, pairs[idx].converged

    precond = None
    if problem.parts is not None:
        precond = _kron_sum_resolvent(*problem.parts, problem.target_shift)
    if precond is not None:
        return _gmres_shift_invert(problem, previous, krylov_dim, max_iters, tol, precond)

    op = scipy.sparse.linalg.LinearOperator(
        (dim, dim), matvec=problem.matvec, dtype=complex
    )
    k = min(2, dim - 2) if dim > 3 else 1
    ncv = min(dim, max(2 * krylov_dim, 20))
    try:
        values, vectors = scipy.sparse.linalg.eigs(
            op, k=k, which="SM", v0=previous, ncv=ncv,
            maxiter=max(200, 20 * max_iters), tol=1e-10,
        )
        ok = True
    except scipy.sparse.linalg.ArpackNoConvergence as err:
        values, vectors = err.eigenvalues, err.eigenvectors
        ok = False
        if values.size == 0:
            return complex("nan"), previous, False
    order = np.argsort(np.abs(values - problem.target_shift))
    values = values[order]
    vectors = vectors[:, order]
    idx = _pick_candidate(
        1.0 / (values - problem.target_shift),
        [vectors[:, i] for i in range(values.size)],
        previous,
    )
    return complex(values[idx]), vectors[:, idx], ok


def _gmres_shift_invert(problem, previous, krylov_dim, max_iters, tol, precond):
    """Outer Arnoldi with the resolvent applied by preconditioned GMRES."""
    dim = problem.dimension
    tau = problem.target_shift
    matvec = problem.matvec
    m_op = scipy.sparse.linalg.LinearOperator((dim, dim), matvec=precond, dtype=complex)
    shifted = scipy.sparse.linalg.LinearOperator(
        (dim, dim), matvec=lambda v: matvec(v) - tau * v, dtype=complex
    )

    def apply(v):
        y, _info = scipy.sparse.linalg.gmres(
            shifted, v, rtol=1e-9, atol=0.0, restart=40, maxiter=6, M=m_op
        )
        return y

    kdim = max(2, min(krylov_dim, max_iters, dim))
    restarts = max(1, int(np.ceil(max_iters / kdim)))
    pairs = arnoldi_eigs(
        apply, dim, krylov_dim=kdim, max_restarts=restarts, tol=tol,
        n_eigs=min(2, dim), start=previous,
    )
    idx = _pick_candidate(
        [p.value for p in pairs], [p.vector for p in pairs], previous
    )
    mu = pairs[idx].value
    lam = tau + 1.0 / mu if mu != 0 else complex("inf")
    return lam, pairs[idx].vector, pairs[idx].converged


def sweep(
    state: MpsState,
    mpo: LiouvillianMpo,
    envs: EnvironmentCache,
    schedule: SweepSchedule,
    phase: int,
    target_shift: complex,
    d_cap: int,
    debug: bool = False,
) -> tuple[MpsState, dict]:
    """One left-to-right plus right-to-left optimization pass.

    At every visited site the on-site problem is assembled and solved, the
    optimized tensor written back (euclidean-normalized), the center moved
    and the single affected environment updated.  A failed site solve keeps
    the previous tensor and is counted, never raised.  The state must enter
    with its center at site 0 and leaves the same way.
    """
    if state.center != 0:
        raise ValueError("sweep expects the canonical center at site 0")
    state = MpsState(list(state.sites), state.center, state.d)
    n = state.n_sites
    iters = schedule.phase1_arnoldi_iters if phase == 1 else schedule.phase2_arnoldi_iters
    stats = {
        "min_abs_eigenvalue": float("inf"),
        "max_abs_eigenvalue": 0.0,
        "discarded_weight": 0.0,
        "solver_failures": 0,
    }

    def optimize(site):
        lp = assemble_local(
            envs, mpo.tensors[site], site, target_shift, schedule.dense_budget
        )
        prev = state.sites[site].reshape(-1)
        try:
            lam, vec, _ok = shift_invert_solve(
                lp, prev, schedule.krylov_dim, iters, schedule.arnoldi_tol
            )
        except (NessError, np.linalg.LinAlgError):
            stats["solver_failures"] += 1
            return
        if not np.all(np.isfinite(vec)) or np.linalg.norm(vec) == 0:
            stats["solver_failures"] += 1
            return
        state.sites[site] = (vec / np.linalg.norm(vec)).reshape(lp.shape)
        if np.isfinite(abs(lam)):
            stats["min_abs_eigenvalue"] = min(stats["min_abs_eigenvalue"], abs(lam))
            stats["max_abs_eigenvalue"] = max(stats["max_abs_eigenvalue"], abs(lam))

    def shift(direction, site):
        nonlocal state
        state, weight = move_center(state, direction, d_cap, schedule.svd_cutoff)
        stats["discarded_weight"] += weight
        if direction == "right":
            envs.update_left(site, state, mpo)
            if debug:
                _check_env(envs.left[site + 1],
                           init_environments(state, mpo).left[site + 1])
        else:
            envs.update_right(site, state, mpo)
            if debug:
                _check_env(envs.right[site],
                           init_environments(state, mpo).right[site])

    if n == 1:
        optimize(0)
        state.sites[0] = state.sites[0] / np.linalg.norm(state.sites[0])
        return state, stats

    for site in range(n - 1):
        optimize(site)
        shift("right", site)
    for site in range(n - 1, 0, -1):
        optimize(site)
        shift("left", site)
    return state, stats


def _check_env(incremental, rebuilt, tol=1e-10):
    scale = max(np.max(np.abs(rebuilt)), 1.0)
    if np.max(np.abs(incremental - rebuilt)) > tol * scale:
        raise AssertionError("incremental environment update drifted from rebuild")


def global_residual(state: MpsState, mpo: LiouvillianMpo) -> float:
    """Exact ``|L rho| / |rho|`` via untruncated MPO application.

    The image norm is taken through QR gauging rather than the overlap
    quadratic form: the latter carries an absolute rounding floor around
    sqrt(machine eps) and cannot certify residuals near 1e-8.
    """
    image = apply_mpo(mpo, state)
    num = canonical_norm(image)
    den = np.sqrt(max(overlap(state, state).real, 0.0))
    return float(num / den)


def _target_shift(spec: ModelSpec, gamma_eff: float) -> complex:
    scale = max(
        abs(spec.field_h), abs(spec.coupling_j), abs(spec.coupling_v), gamma_eff
    )
    return complex(1e-6 * scale) if scale > 0 else complex(1e-6)


def _tracked_observables(state: MpsState) -> np.ndarray:
    """Per-site <Z> and nearest-neighbour <XX>, used for stationarity checks."""
    z = pauli("Z")
    x = pauli("X")
    vals = []
    try:
        for site in range(state.n_sites):
            vals.append(expectation(state, z, site).real)
        for site in range(state.n_sites - 1):
            vals.append(correlation(state, x, x, site, site + 1).real)
    except NessError:
        return np.array([np.inf])
    return np.array(vals)


def run(
    spec: ModelSpec,
    schedule: SweepSchedule,
    initial_state: MpsState | None = None,
    seed: int = 0,
    checkpoint_path=None,
    resume_from=None,
    debug: bool = False,
) -> tuple[MpsState, ConvergenceReport]:
    """Full two-phase solve; never raises on non-convergence.

    Phase 1 sweeps at ``d_start`` with the annealed decay rate
    ``max(gamma, gamma * gamma_start_factor * gamma_decay^k)`` rebuilt into
    the MPO before sweep ``k`` and a hard per-site Arnoldi cap; it ends once
    the rate reaches its target and progress stalls.  Phase 2 pads the bond
    dimension by ``d_step`` before each sweep up to ``d_max`` and stops when
    the exact residual drops below ``residual_tol`` while all tracked
    observables move less than ``observable_tol``; hitting ``max_sweeps``
    instead flags the report.  Randomness (pad noise) is controlled solely
    by ``seed``.
    """
    rng = np.random.default_rng(seed)
    report = ConvergenceReport()
    phase, anneal_step, sweep_idx = 1, 0, 0
    prev_obs = None
    prev_residual = None
    stall_count = 0

    if resume_from is not None:
        state, meta = load_checkpoint(resume_from)
        rng.bit_generator.state = json.loads(meta["rng_state"])
        phase = meta["phase"]
        anneal_step = meta["anneal_step"]
        sweep_idx = meta["sweep_idx"]
        d_current = meta["d_current"]
        stall_count = meta.get("stall_count", 0)
        report.status = meta["status"]
        report.records = [SweepRecord(**r) for r in meta["records"]]
        if report.status in ("converged", "stalled"):
            return state, report
        prev_obs = _tracked_observables(state)
        prev_residual = report.records[-1].residual if report.records else None
    else:
        if initial_state is not None:
            state = normalize(_canonicalize(initial_state.copy(), 0))
        else:
            d = spec.local_dim
            mixed = (np.eye(d, dtype=complex) / d).reshape(-1)
            state = product_init(spec.n_sites, mixed)
        d_current = max(schedule.d_start, state.max_bond)
        state = pad_bonds(state, d_current, schedule.pad_noise, rng)
        state = normalize(state)

    target_mpo = build_mpo(spec)

    while sweep_idx < schedule.max_sweeps:
        if phase == 1:
            gamma_eff = (
                max(spec.gamma,
                    spec.gamma * schedule.gamma_start_factor
                    * schedule.gamma_decay**anneal_step)
                if spec.gamma > 0
                else 0.0
            )
            mpo = build_mpo(replace(spec, gamma=gamma_eff)) if gamma_eff != spec.gamma else target_mpo
        else:
            gamma_eff = spec.gamma
            mpo = target_mpo
            if d_current < schedule.d_max:
                d_current = min(schedule.d_max, d_current + schedule.d_step)
                if d_current > state.max_bond:
                    state = pad_bonds(state, d_current, schedule.pad_noise, rng)
                    state = normalize(state)

        started = time.perf_counter()
        envs = init_environments(state, mpo)
        state, stats = sweep(
            state, mpo, envs, schedule, phase,
            _target_shift(spec, gamma_eff), d_current, debug=debug,
        )
        state = normalize(state)
        residual = global_residual(state, mpo)
        obs = _tracked_observables(state)
        obs_change = (
            float(np.max(np.abs(obs - prev_obs)))
            if prev_obs is not None and obs.shape == prev_obs.shape
            else float("inf")
        )
        prev_obs = obs
        report.records.append(
            SweepRecord(
                sweep=sweep_idx,
                phase=phase,
                gamma_eff=gamma_eff,
                max_bond=state.max_bond,
                min_abs_eigenvalue=stats["min_abs_eigenvalue"],
                max_abs_eigenvalue=stats["max_abs_eigenvalue"],
                residual=residual,
                observable_change=obs_change,
                discarded_weight=stats["discarded_weight"],
                solver_failures=stats["solver_failures"],
                wall_time=time.perf_counter() - started,
            )
        )
        sweep_idx += 1

        if phase == 1:
            anneal_step += 1
            at_target = gamma_eff == spec.gamma
            stalled = (
                prev_residual is not None
                and prev_residual > 0
                and residual > 0.9 * prev_residual
            )
            if at_target and (
                stalled
                or residual < schedule.residual_tol
                or anneal_step >= schedule.phase1_sweeps
            ):
                phase = 2
                prev_residual = None
            else:
                prev_residual = residual
        else:
            if (
                residual < schedule.residual_tol
                and obs_change < schedule.observable_tol
            ):
                report.status = "converged"
            else:
                # with no bond growth left, a residual that stops improving
                # while the observables are stationary marks the
                # truncation-limited optimum of this d_max
                at_final_d = (
                    d_current >= schedule.d_max or state.max_bond < d_current
                )
                if (
                    at_final_d
                    and prev_residual is not None
                    and residual > 0.95 * prev_residual
                    and obs_change < schedule.stall_obs_tol
                ):
                    stall_count += 1
                else:
                    stall_count = 0
                prev_residual = residual
                if stall_count >= 2:
                    report.status = "stalled"

        if checkpoint_path is not None:
            save_checkpoint(
                checkpoint_path, state,
                {
                    "phase": phase,
                    "anneal_step": anneal_step,
                    "sweep_idx": sweep_idx,
                    "d_current": d_current,
                    "stall_count": stall_count,
                    "status": report.status,
                    "rng_state": json.dumps(rng.bit_generator.state),
                    "records": [asdict(r) for r in report.records],
                },
            )
        if report.status in ("converged", "stalled"):
            break

    if report.status == "running":
        report.status = "max_sweeps"
    return state, report


def save_checkpoint(path, state: MpsState, meta: dict) -> None:
    """Write state plus schedule position; see :func:`load_checkpoint`."""
    arrays = {
        f"site_{j}": np.ascontiguousarray(t, dtype="<c16")
        for j, t in enumerate(state.sites)
    }
    header = json.dumps(
        {"n_sites": state.n_sites, "local_dim": state.d, "center": state.center}
    )
    with open(path, "wb") as handle:
        np.savez(
            handle,
            header=np.bytes_(header.encode()),
            meta=np.bytes_(json.dumps(meta).encode()),
            **arrays,
        )


def load_checkpoint(path) -> tuple[MpsState, dict]:
    """Read a checkpoint written by :func:`save_checkpoint`."""
    with np.load(path) as data:
        header = json.loads(bytes(data["header"].item()).decode())
        meta = json.loads(bytes(data["meta"].item()).decode())
        sites = [
            np.asarray(data[f"site_{j}"], dtype=complex)
            for j in range(header["n_sites"])
        ]
    return MpsState(sites, header["center"], header["local_dim"]), meta
