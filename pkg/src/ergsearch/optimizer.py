"""Joint start-location and trajectory optimization.

The planner minimizes the spectral coverage mismatch with projected
gradient descent over per-agent controls and, depending on the mode,
the start locations:

* ``fixed``:     starts are given and stay put; only controls move.
* ``shared``:    one start position, common to every agent, moves with
                 the summed start gradient and is kept inside every
                 type's viable set by cyclic projection.
* ``per-agent``: each agent's start moves independently inside its own
                 type's viable set.

Heading angles of differential-drive agents are free variables in every
mode (they are not constrained by the viable-start sets).

For a single agent type the descent objective is the team metric
against the full target spectrum. With several types the spectrum is
split into frequency bands (see ``allocation``) and the objective is
the sum of per-type metrics against the band targets; each term is
independent except through a shared start. Line search uses Armijo
backtracking with the proximal sufficient-decrease test, so the
recorded objective trace is non-increasing by construction.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .agents import (
    DIFFDRIVE,
    INTEGRATOR,
    ControlSequence,
    project_controls,
    rollout,
    rollout_vjp,
)
from .allocation import band_targets, partition_bands
from .errors import ConfigError, InfeasibleStartError, PreconditionError
from .maps import (
    GridMap,
    StartRegionSet,
    intersect_regions,
    project_to_regions,
    sample_start,
)
from .seeding import rng_for
from .spectral import (
    BasisSpec,
    ergodic_gradient_points,
    ergodic_metric,
    map_coefficients,
    trajectory_coefficients,
)

FIXED_START = "fixed"
SHARED_START = "shared"
PER_AGENT_START = "per-agent"
MODES = (FIXED_START, SHARED_START, PER_AGENT_START)

_MIN_STEP = 1e-14


@dataclass(frozen=True)
class ProblemSpec:
    """One planning instance: map, basis, team, viable starts, mode."""

    grid_map: GridMap
    basis: BasisSpec
    agents: tuple
    regions: StartRegionSet
    mode: str = PER_AGENT_START
    fixed_starts: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        if not self.agents:
            raise ConfigError("need at least one agent")
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}, expected one of {MODES}")
        if len({a.dt for a in self.agents}) != 1 or len(
            {a.horizon_steps for a in self.agents}
        ) != 1:
            raise ConfigError("agents must share dt and horizon_steps")
        if not np.allclose(self.grid_map.domain_lengths, self.basis.domain_lengths):
            raise ConfigError("map and basis domains differ")
        if not np.allclose(
            self.grid_map.domain_lengths, self.regions.domain_lengths
        ):
            raise ConfigError("map and region domains differ")
        if not self.grid_map.is_normalized():
            raise ConfigError("map must be normalized")
        for a in self.agents:
            self.regions.rects_for(a.type_id)  # raises on unknown type
        if self.mode == FIXED_START:
            if self.fixed_starts is None or len(self.fixed_starts) != len(
                self.agents
            ):
                raise ConfigError("fixed mode needs one start per agent")
            starts = tuple(
                np.asarray(p, dtype=float)[:2] for p in self.fixed_starts
            )
            for p, a in zip(starts, self.agents):
                if not self.regions.contains(p, a.type_id):
                    raise PreconditionError(
                        f"fixed start {p} outside type {a.type_id} regions"
                    )
            object.__setattr__(self, "fixed_starts", starts)

    @property
    def domain_lengths(self) -> np.ndarray:
        return self.grid_map.domain_lengths

    @cached_property
    def xi(self) -> np.ndarray:
        return map_coefficients(self.grid_map, self.basis)

    @cached_property
    def type_groups(self):
        """((type_id, (agent indices, ...)), ...) sorted by type id."""
        groups: dict = {}
        for i, a in enumerate(self.agents):
            groups.setdefault(a.type_id, []).append(i)
        return tuple((tid, tuple(idx)) for tid, idx in sorted(groups.items()))

    @cached_property
    def partition(self):
        if len(self.type_groups) == 1:
            return None
        return partition_bands(self.basis, self.xi, self.agents)

    @cached_property
    def targets(self) -> dict:
        """Per-type target coefficients: band targets, or full xi if
        the team is homogeneous."""
        if self.partition is None:
            return {self.type_groups[0][0]: self.xi}
        return dict(
            zip(
                self.partition.type_ids,
                band_targets(self.xi, self.partition, self.basis),
            )
        )

    @cached_property
    def map_centroid(self) -> np.ndarray:
        pts = self.grid_map.cell_points()
        w = self.grid_map.cells.ravel() * self.grid_map.cell_area
        return pts.T @ w


@dataclass(frozen=True)
class OptimizerConfig:
    max_iters: int = 300
    step0: float = 1.0
    backtrack: float = 0.5
    armijo_c: float = 1e-4
    tol: float = 1e-7
    restarts: int = 8
    seed: int = 0
    init_control_scale: float = 0.1
    max_backtracks: int = 40
    record_init: bool = False

    def __post_init__(self):
        if self.max_iters < 0 or self.restarts < 1 or self.max_backtracks < 1:
            raise ConfigError("iteration counts must be nonnegative")
        if self.step0 <= 0 or not 0 < self.backtrack < 1:
            raise ConfigError("need step0 > 0 and backtrack in (0, 1)")
        if self.armijo_c <= 0 or self.tol < 0 or self.init_control_scale < 0:
            raise ConfigError("armijo_c, tol, init_control_scale must be >= 0")


@dataclass(frozen=True)
class Solution:
    """Planner output for one problem.

    ``metric`` is the team metric against the full target spectrum
    (comparable across modes and team compositions). ``metric_trace``
    records the descent objective per accepted iteration: the team
    metric for homogeneous teams, the sum of per-type band metrics for
    heterogeneous teams. It is non-increasing.
    """

    starts: tuple
    controls: tuple
    trajectories: tuple
    metric: float
    per_type_metric: dict
    metric_trace: np.ndarray
    clamp_flags: tuple
    iterations: int
    restart_index: int
    init_starts: tuple | None = None
    init_controls: tuple | None = None


def _full_start(problem: ProblemSpec, i: int, positions, thetas) -> np.ndarray:
    if problem.agents[i].motion == INTEGRATOR:
        return np.asarray(positions[i], dtype=float)
    return np.array([positions[i][0], positions[i][1], thetas[i]])


def _rollout_all(problem: ProblemSpec, positions, thetas, controls):
    dl = problem.domain_lengths
    return [
        rollout(spec, _full_start(problem, i, positions, thetas), controls[i], dl)
        for i, spec in enumerate(problem.agents)
    ]


def _objective(problem: ProblemSpec, trajs):
    total = 0.0
    per_type = {}
    for tid, idx in problem.type_groups:
        c = trajectory_coefficients([trajs[i] for i in idx], problem.basis)
        phi = ergodic_metric(c, problem.targets[tid], problem.basis)
        per_type[tid] = phi
        total += phi
    return total, per_type


def _gradients(problem: ProblemSpec, positions, thetas, controls, trajs):
    n = len(problem.agents)
    grad_p = [np.zeros(2)] * n
    grad_th = np.zeros(n)
    grad_u = [None] * n
    for tid, idx in problem.type_groups:
        point_grads = ergodic_gradient_points(
            [trajs[i] for i in idx], problem.targets[tid], problem.basis
        )
        for j, i in enumerate(idx):
            spec = problem.agents[i]
            x0 = _full_start(problem, i, positions, thetas)
            gx0, gu = rollout_vjp(spec, x0, controls[i], point_grads[j])
            grad_u[i] = gu
            grad_p[i] = gx0[:2]
            if spec.motion == DIFFDRIVE:
                grad_th[i] = gx0[2]
    return grad_p, grad_th, grad_u


def _present_types(problem: ProblemSpec):
    return [tid for tid, _ in problem.type_groups]


def _shared_start_set(problem: ProblemSpec) -> StartRegionSet:
    """Exact viable set for a start shared by every present type.

    Type region unions are rectangle unions, so their intersection is
    computed exactly; an empty intersection means no shared start can
    exist and is reported as infeasibility rather than relaxed.
    """
    types = _present_types(problem)
    rects = intersect_regions(problem.regions, types)
    if not rects:
        raise InfeasibleStartError(types)
    return StartRegionSet(
        domain_lengths=problem.domain_lengths, regions={0: list(rects)}
    )


def _initial_positions(problem: ProblemSpec, rng, shared_set=None):
    if problem.mode == FIXED_START:
        return [p.copy() for p in problem.fixed_starts]
    if problem.mode == PER_AGENT_START:
        return [
            sample_start(problem.regions, spec.type_id, rng)
            for spec in problem.agents
        ]
    shared = sample_start(shared_set, 0, rng)
    return [shared.copy() for _ in problem.agents]


def _initial_thetas(problem: ProblemSpec, positions) -> np.ndarray:
    thetas = np.zeros(len(problem.agents))
    cx, cy = problem.map_centroid
    for i, spec in enumerate(problem.agents):
        if spec.motion == DIFFDRIVE:
            thetas[i] = float(
                np.arctan2(cy - positions[i][1], cx - positions[i][0])
            )
    return thetas


def _initial_controls(problem: ProblemSpec, rng, scale):
    controls = []
    for spec in problem.agents:
        steps = spec.horizon_steps
        if spec.motion == INTEGRATOR:
            ang = rng.uniform(0.0, 2.0 * np.pi, steps)
            mag = rng.uniform(0.0, scale * spec.u_max, steps)
            u = np.column_stack([mag * np.cos(ang), mag * np.sin(ang)])
        else:
            span = spec.u_max - spec.v_min
            v = spec.v_min + rng.uniform(0.0, scale * span, steps)
            w = rng.uniform(-1.0, 1.0, steps) * (scale * spec.kappa_max * v)
            u = np.column_stack([v, w])
        controls.append(project_controls(spec, u))
    return controls


def _step_candidate(
    problem: ProblemSpec, positions, thetas, controls, grads, eta,
    shared_set=None,
):
    """One projected step of size eta; returns the candidate variables
    and the squared post-projection displacement."""
    grad_p, grad_th, grad_u = grads
    dsq = 0.0
    # A start coordinate (position or heading) moves every sample of its
    # trajectory, so the metric's curvature along it is about 1/dt^2
    # times the curvature along an early control coordinate. Scaling the
    # start-block direction by dt^2 equalizes the stable step ranges, so
    # one shared line-search step size serves both blocks.
    eta_start = eta * problem.agents[0].dt ** 2

    new_controls = []
    for i, spec in enumerate(problem.agents):
        u_new = project_controls(spec, controls[i] - eta * grad_u[i])
        dsq += float(((u_new - controls[i]) ** 2).sum())
        new_controls.append(u_new)

    new_thetas = thetas.copy()
    for i, spec in enumerate(problem.agents):
        if spec.motion == DIFFDRIVE:
            new_thetas[i] = thetas[i] - eta_start * grad_th[i]
            dsq += float((new_thetas[i] - thetas[i]) ** 2)

    if problem.mode == FIXED_START:
        new_positions = [p.copy() for p in positions]
    elif problem.mode == PER_AGENT_START:
        new_positions = []
        for i, spec in enumerate(problem.agents):
            p_new = project_to_regions(
                positions[i] - eta_start * grad_p[i],
                problem.regions,
                spec.type_id,
            )
            dsq += float(((p_new - positions[i]) ** 2).sum())
            new_positions.append(p_new)
    else:
        g = np.sum(grad_p, axis=0)
        shared = project_to_regions(
            positions[0] - eta_start * g, shared_set, 0
        )
        dsq += float(((shared - positions[0]) ** 2).sum())
        new_positions = [shared.copy() for _ in problem.agents]

    return new_positions, new_thetas, new_controls, dsq


def _plan_single(
    problem: ProblemSpec, config: OptimizerConfig, restart: int, shared_set=None
):
    rng_starts = rng_for(config.seed, restart, "starts")
    rng_controls = rng_for(config.seed, restart, "controls")

    positions = _initial_positions(problem, rng_starts, shared_set)
    thetas = _initial_thetas(problem, positions)
    controls = _initial_controls(problem, rng_controls, config.init_control_scale)
    init_starts = None
    init_controls = None
    if config.record_init:
        init_starts = tuple(p.copy() for p in positions)
        init_controls = tuple(u.copy() for u in controls)

    trajs = _rollout_all(problem, positions, thetas, controls)
    f_cur, per_type = _objective(problem, trajs)
    trace = [f_cur]
    iterations = 0

    for _ in range(config.max_iters):
        grads = _gradients(problem, positions, thetas, controls, trajs)
        eta = config.step0
        accepted = False
        for _ in range(config.max_backtracks):
            cand = _step_candidate(
                problem, positions, thetas, controls, grads, eta, shared_set
            )
            new_positions, new_thetas, new_controls, dsq = cand
            if dsq == 0.0:
                break  # every variable is pinned by its projection
            new_trajs = _rollout_all(problem, new_positions, new_thetas, new_controls)
            f_new, pt_new = _objective(problem, new_trajs)
            if f_new <= f_cur - (config.armijo_c / eta) * dsq:
                accepted = True
                break
            eta *= config.backtrack
            if eta < _MIN_STEP:
                break
        if not accepted:
            break
        positions, thetas, controls = new_positions, new_thetas, new_controls
        trajs = new_trajs
        f_prev, f_cur, per_type = f_cur, f_new, pt_new
        trace.append(f_cur)
        iterations += 1
        if f_prev - f_cur <= config.tol * max(f_prev, 1e-300):
            break

    c_team = trajectory_coefficients(trajs, problem.basis)
    team_phi = ergodic_metric(c_team, problem.xi, problem.basis)
    dt = problem.agents[0].dt
    return Solution(
        starts=tuple(
            _full_start(problem, i, positions, thetas).copy()
            for i in range(len(problem.agents))
        ),
        controls=tuple(ControlSequence(controls=u, dt=dt) for u in controls),
        trajectories=tuple(trajs),
        metric=team_phi,
        per_type_metric=per_type,
        metric_trace=np.array(trace),
        clamp_flags=tuple(t.clamp_count > 0 for t in trajs),
        iterations=iterations,
        restart_index=restart,
    ), init_starts, init_controls


def plan(problem: ProblemSpec, config: OptimizerConfig | None = None) -> Solution:
    """Run restarted projected gradient descent; return the best restart.

    Restarts differ only in their sampled starts and initial controls
    (independent derived streams, so two modes on the same seed draw
    identical controls). The winner has the lowest team metric; ties go
    to the lowest restart index.
    """
    if config is None:
        config = OptimizerConfig()
    shared_set = (
        _shared_start_set(problem) if problem.mode == SHARED_START else None
    )
    best = None
    best_init = (None, None)
    for r in range(config.restarts):
        sol, init_s, init_u = _plan_single(problem, config, r, shared_set)
        if best is None or sol.metric < best.metric:
            best = sol
            best_init = (init_s, init_u)
    if config.record_init:
        best = Solution(
            starts=best.starts,
            controls=best.controls,
            trajectories=best.trajectories,
            metric=best.metric,
            per_type_metric=best.per_type_metric,
            metric_trace=best.metric_trace,
            clamp_flags=best.clamp_flags,
            iterations=best.iterations,
            restart_index=best.restart_index,
            init_starts=best_init[0],
            init_controls=best_init[1],
        )
    return best


def _check_start_feasible(problem: ProblemSpec, start, spec) -> np.ndarray:
    start = np.asarray(start, dtype=float)
    if start.shape != (spec.state_dim,):
        raise PreconditionError(
            f"start state must have {spec.state_dim} components"
        )
    pos = start[:2]
    proj = project_to_regions(pos, problem.regions, spec.type_id)
    if not np.array_equal(proj, pos):
        raise PreconditionError(
            f"start {pos} infeasible for type {spec.type_id}"
        )
    return start


def evaluate(problem: ProblemSpec, starts, controls):
    """Metric of a candidate plan, no optimization.

    Returns (team metric, per-type metrics). The team metric is always
    measured against the full target spectrum so heterogeneous and
    homogeneous plans compare on the same scale; per-type metrics use
    the same targets the planner descends (band targets when M > 1).
    """
    if len(starts) != len(problem.agents) or len(controls) != len(problem.agents):
        raise PreconditionError("need one start and one control sequence per agent")
    dl = problem.domain_lengths
    trajs = []
    for i, spec in enumerate(problem.agents):
        x0 = _check_start_feasible(problem, starts[i], spec)
        u = np.asarray(getattr(controls[i], "controls", controls[i]), dtype=float)
        feasible = project_controls(spec, u)
        if not np.array_equal(feasible, u):
            raise PreconditionError(f"controls of agent {i} violate bounds")
        trajs.append(rollout(spec, x0, u, dl))
    c_team = trajectory_coefficients(trajs, problem.basis)
    team_phi = ergodic_metric(c_team, problem.xi, problem.basis)
    _, per_type = _objective(problem, trajs)
    return team_phi, per_type


@dataclass(frozen=True)
class GradientCheckReport:
    max_rel_error: float
    start_error: float
    control_error: float
    fd_step: float
    n_coordinates: int


def gradient_check(problem: ProblemSpec, seed: int) -> GradientCheckReport:
    """Compare the analytic team-metric gradient with central finite
    differences on a sampled instance.

    Requires a short horizon (at most 15 steps). The instance is
    resampled away from domain boundaries and clamping so the finite
    differences probe the smooth regime.
    """
    if problem.agents[0].horizon_steps > 15:
        raise PreconditionError("gradient check wants horizon_steps <= 15")
    rng = rng_for(seed, "gradcheck")
    dl = problem.domain_lengths
    center = dl / 2.0
    margin = 1e-3

    starts = []
    controls = []
    for spec in problem.agents:
        pos = sample_start(problem.regions, spec.type_id, rng)
        pos = np.clip(pos, margin, dl - margin)
        if spec.motion == INTEGRATOR:
            starts.append(pos)
            ang = rng.uniform(0.0, 2.0 * np.pi, spec.horizon_steps)
            mag = rng.uniform(0.1, 0.5, spec.horizon_steps) * spec.u_max
            controls.append(np.column_stack([mag * np.cos(ang), mag * np.sin(ang)]))
        else:
            theta = rng.uniform(0.0, 2.0 * np.pi)
            starts.append(np.array([pos[0], pos[1], theta]))
            span = spec.u_max - spec.v_min
            v = spec.v_min + rng.uniform(0.25, 0.6, spec.horizon_steps) * span
            w = rng.uniform(-0.5, 0.5, spec.horizon_steps) * spec.kappa_max * v
            controls.append(np.column_stack([v, w]))

    def roll_all(s, u):
        return [
            rollout(problem.agents[i], s[i], u[i], dl)
            for i in range(len(problem.agents))
        ]

    # shrink toward the interior until nothing clamps near a boundary
    for _ in range(10):
        trajs = roll_all(starts, controls)
        boundary = min(
            min(t.positions.min(), float((dl - t.positions).min())) for t in trajs
        )
        if all(t.clamp_count == 0 for t in trajs) and boundary > 1e-4:
            break
        shrunk = []
        for spec, u in zip(problem.agents, controls):
            if spec.motion == INTEGRATOR:
                shrunk.append(0.5 * u)
            else:
                v = spec.v_min + 0.5 * (u[:, 0] - spec.v_min)
                shrunk.append(np.column_stack([v, 0.5 * u[:, 1]]))
        controls = shrunk
        starts = [
            np.concatenate([0.5 * (s[:2] + center), s[2:]]) for s in starts
        ]
    else:
        raise PreconditionError("could not find a clamp-free instance")

    def team_phi(s, u):
        trajs = roll_all(s, u)
        c = trajectory_coefficients(trajs, problem.basis)
        return ergodic_metric(c, problem.xi, problem.basis)

    trajs = roll_all(starts, controls)
    point_grads = ergodic_gradient_points(trajs, problem.xi, problem.basis)
    analytic_starts = []
    analytic_controls = []
    for i, spec in enumerate(problem.agents):
        gx0, gu = rollout_vjp(spec, starts[i], controls[i], point_grads[i])
        analytic_starts.append(gx0)
        analytic_controls.append(gu)

    h = 1e-6
    start_err = 0.0
    control_err = 0.0
    scale = max(
        max(float(np.abs(g).max()) for g in analytic_starts),
        max(float(np.abs(g).max()) for g in analytic_controls),
        1e-12,
    )
    n_coords = 0
    for i in range(len(problem.agents)):
        for j in range(starts[i].shape[0]):
            sp = [s.copy() for s in starts]
            sm = [s.copy() for s in starts]
            sp[i][j] += h
            sm[i][j] -= h
            fd = (team_phi(sp, controls) - team_phi(sm, controls)) / (2.0 * h)
            err = abs(fd - analytic_starts[i][j]) / scale
            start_err = max(start_err, err)
            n_coords += 1
        for j in range(controls[i].shape[0]):
            for axis in range(2):
                up = [u.copy() for u in controls]
                um = [u.copy() for u in controls]
                up[i][j, axis] += h
                um[i][j, axis] -= h
                fd = (team_phi(starts, up) - team_phi(starts, um)) / (2.0 * h)
                err = abs(fd - analytic_controls[i][j, axis]) / scale
                control_err = max(control_err, err)
                n_coords += 1

    return GradientCheckReport(
        max_rel_error=max(start_err, control_err),
        start_error=start_err,
        control_error=control_err,
        fd_step=h,
        n_coordinates=n_coords,
    )
