"""Agent motion/sensor models, rollouts and their exact adjoints.

Two motion models, both explicit-Euler discretized:

* integrator: state (x, y), control (ux, uy), |u| <= u_max;
* diffdrive:  state (x, y, theta), control (v, omega), with
  v_min <= v <= u_max and |omega| <= kappa_max * v (maximum curvature).

Rollouts clamp positions to the domain and flag when the clamp fired;
the backward pass treats the clamp as identity, so gradients stay usable
while clamp flags surface pathological solutions.
"""

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .maps import GridMap, make_grid_map

INTEGRATOR = "integrator"
DIFFDRIVE = "diffdrive"

_CONTROL_SLACK = 1e-9


@dataclass(frozen=True)
class SensorModel:
    """Gaussian detection footprint: peak probability at the agent,
    falling off with spread sigma (domain-length units)."""

    sigma: float
    peak_prob: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise PreconditionError("sensor sigma must be positive")
        if not 0 < self.peak_prob <= 1:
            raise PreconditionError("peak_prob must be in (0, 1]")


def high_fidelity_sensor(domain_scale: float = 1.0) -> SensorModel:
    """Narrow footprint, high detection probability."""
    return SensorModel(sigma=0.02 * domain_scale, peak_prob=0.95)


def low_fidelity_sensor(domain_scale: float = 1.0) -> SensorModel:
    """Wide footprint, lower detection probability."""
    return SensorModel(sigma=0.08 * domain_scale, peak_prob=0.6)


@dataclass(frozen=True)
class AgentSpec:
    type_id: int
    motion: str
    sensor: SensorModel
    u_max: float
    dt: float
    horizon_steps: int
    kappa_max: float | None = None
    v_min: float = 0.0

    def __post_init__(self):
        if self.motion not in (INTEGRATOR, DIFFDRIVE):
            raise PreconditionError(f"unknown motion model {self.motion!r}")
        if self.u_max <= 0 or self.dt <= 0 or self.horizon_steps < 1:
            raise PreconditionError("u_max, dt, horizon_steps must be positive")
        if self.motion == DIFFDRIVE:
            if self.kappa_max is None or self.kappa_max <= 0:
                raise PreconditionError("diffdrive needs kappa_max > 0")
            if self.v_min < 0 or self.v_min > self.u_max:
                raise PreconditionError("need 0 <= v_min <= u_max")

    @property
    def state_dim(self) -> int:
        return 2 if self.motion == INTEGRATOR else 3


@dataclass(frozen=True)
class Trajectory:
    """Discretized state sequence; positions are states[:, :2]."""

    states: np.ndarray
    dt: float
    clamp_count: int = 0

    @property
    def positions(self) -> np.ndarray:
        return self.states[:, :2]

    @property
    def clamped(self) -> bool:
        return self.clamp_count > 0


@dataclass(frozen=True)
class ControlSequence:
    controls: np.ndarray
    dt: float


def _controls_array(u) -> np.ndarray:
    arr = np.asarray(getattr(u, "controls", u), dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise PreconditionError("controls must have shape (T, 2)")
    return arr


def _check_controls_feasible(spec: AgentSpec, u: np.ndarray) -> None:
    if spec.motion == INTEGRATOR:
        norms = np.hypot(u[:, 0], u[:, 1])
        if np.any(norms > spec.u_max + _CONTROL_SLACK):
            raise PreconditionError("integrator control exceeds u_max")
    else:
        v, w = u[:, 0], u[:, 1]
        if np.any(v < spec.v_min - _CONTROL_SLACK) or np.any(
            v > spec.u_max + _CONTROL_SLACK
        ):
            raise PreconditionError("diffdrive speed outside [v_min, u_max]")
        if np.any(np.abs(w) > spec.kappa_max * v + _CONTROL_SLACK):
            raise PreconditionError("diffdrive turn rate exceeds curvature bound")


def project_controls(spec: AgentSpec, u):
    """Project controls onto the feasible set (idempotent).

    Integrator controls are radially scaled into the u_max ball;
    diffdrive speeds are clamped to [v_min, u_max], then turn rates to
    the curvature cone |omega| <= kappa_max * v.
    """
    arr = _controls_array(u)
    if spec.motion == INTEGRATOR:
        norms = np.hypot(arr[:, 0], arr[:, 1])
        scale = np.where(norms > spec.u_max, spec.u_max / np.maximum(norms, 1e-300), 1.0)
        out = arr * scale[:, None]
        # the multiplicative shrink can land a few ulps above the bound;
        # nudge offending rows down so projection is exactly idempotent
        norms = np.hypot(out[:, 0], out[:, 1])
        bad = norms > spec.u_max
        while bad.any():
            out[bad] = np.nextafter(out[bad], 0.0)
            norms[bad] = np.hypot(out[bad, 0], out[bad, 1])
            bad = norms > spec.u_max
    else:
        v = np.clip(arr[:, 0], spec.v_min, spec.u_max)
        w_lim = spec.kappa_max * v
        w = np.clip(arr[:, 1], -w_lim, w_lim)
        out = np.column_stack([v, w])
    if isinstance(u, ControlSequence):
        return ControlSequence(controls=out, dt=u.dt)
    return out


def _start_state(spec: AgentSpec, x0, domain_lengths) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (spec.state_dim,):
        raise PreconditionError(
            f"{spec.motion} start state must have {spec.state_dim} components"
        )
    dl = np.asarray(domain_lengths, dtype=float)
    if np.any(x0[:2] < 0) or np.any(x0[:2] > dl):
        raise PreconditionError(f"start position {x0[:2]} outside domain")
    return x0


def rollout(
    spec: AgentSpec, x0, u, domain_lengths, include_start: bool = True
) -> Trajectory:
    """Integrate the motion model; positions clamp to the domain.

    Returns horizon_steps post-step states, preceded by the start state
    unless ``include_start`` is false.
    """
    u = _controls_array(u)
    if u.shape[0] != spec.horizon_steps:
        raise PreconditionError(
            f"expected {spec.horizon_steps} controls, got {u.shape[0]}"
        )
    _check_controls_feasible(spec, u)
    x0 = _start_state(spec, x0, domain_lengths)
    dl = np.asarray(domain_lengths, dtype=float)

    if spec.motion == INTEGRATOR:
        increments = spec.dt * u
        thetas = None
    else:
        omega_sum = np.concatenate([[0.0], np.cumsum(u[:, 1])])
        thetas = x0[2] + spec.dt * omega_sum  # theta_0 .. theta_T
        increments = spec.dt * u[:, 0, None] * np.column_stack(
            [np.cos(thetas[:-1]), np.sin(thetas[:-1])]
        )

    raw = x0[:2] + np.cumsum(increments, axis=0)
    clamp_count = 0
    if np.all(raw >= 0) and np.all(raw <= dl):
        positions = raw
    else:
        # clamping is stateful: redo sequentially once the fast path fails
        positions = np.empty_like(raw)
        p = x0[:2].copy()
        for j in range(u.shape[0]):
            p = p + increments[j]
            clamped = np.clip(p, 0.0, dl)
            if clamped[0] != p[0] or clamped[1] != p[1]:
                clamp_count += 1
            p = clamped
            positions[j] = p

    if spec.motion == INTEGRATOR:
        states = positions
        first = x0[None, :]
    else:
        states = np.column_stack([positions, thetas[1:]])
        first = x0[None, :]
    if include_start:
        states = np.vstack([first, states])
    return Trajectory(states=states, dt=spec.dt, clamp_count=clamp_count)


def rollout_vjp(
    spec: AgentSpec,
    x0,
    u,
    point_gradients,
    include_start: bool = True,
):
    """Pull per-sample position gradients back to the start and controls.

    ``point_gradients`` holds one 2-vector per trajectory position sample
    (horizon_steps + 1 with the start included). The clamp is treated as
    identity in the backward pass. Returns (grad_x0, grad_u) where
    grad_x0 matches the start-state dimension (theta included for
    diffdrive).
    """
    u = _controls_array(u)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (spec.state_dim,):
        raise PreconditionError("start state dimension mismatch")
    g = np.asarray(point_gradients, dtype=float)
    steps = u.shape[0]
    expected = steps + 1 if include_start else steps
    if g.shape != (expected, 2):
        raise PreconditionError(
            f"expected {expected} point gradients of dimension 2, got {g.shape}"
        )
    if not include_start:
        g = np.vstack([np.zeros(2), g])

    # cumg[j] = sum of position gradients over samples j..T
    cumg = np.cumsum(g[::-1], axis=0)[::-1]

    if spec.motion == INTEGRATOR:
        grad_u = spec.dt * cumg[1:]
        return cumg[0].copy(), grad_u

    omega_sum = np.concatenate([[0.0], np.cumsum(u[:, 1])])
    thetas = x0[2] + spec.dt * omega_sum
    cos_t = np.cos(thetas[:-1])
    sin_t = np.sin(thetas[:-1])
    v = u[:, 0]

    grad_v = spec.dt * (cos_t * cumg[1:, 0] + sin_t * cumg[1:, 1])
    # step j couples theta_j into positions j+1..T
    contrib = spec.dt * v * (-sin_t * cumg[1:, 0] + cos_t * cumg[1:, 1])
    lam_theta = np.concatenate([np.cumsum(contrib[::-1])[::-1], [0.0]])
    grad_w = spec.dt * lam_theta[1:]
    grad_x0 = np.array([cumg[0, 0], cumg[0, 1], lam_theta[0]])
    return grad_x0, np.column_stack([grad_v, grad_w])


def coverage_reconstruction(
    trajectory, sensor: SensorModel, resolution, domain_lengths
) -> GridMap:
    """Achieved-sensing diagnostic: per cell, the step-averaged Gaussian
    detection likelihood along the trajectory."""
    if np.isscalar(resolution):
        nx = ny = int(resolution)
    else:
        nx, ny = (int(r) for r in resolution)
    if nx < 2 or ny < 2:
        raise PreconditionError("resolution must be at least 2 per axis")
    pos = np.asarray(getattr(trajectory, "positions", trajectory), dtype=float)
    shell = make_grid_map(np.zeros((ny, nx)), domain_lengths)
    pts = shell.cell_points()
    d2 = ((pts[:, None, :] - pos[None, :, :]) ** 2).sum(axis=2)
    values = sensor.peak_prob * np.exp(-d2 / (2.0 * sensor.sigma**2)).mean(axis=1)
    return make_grid_map(values.reshape(ny, nx), domain_lengths)


TRAJECTORY_MAGIC = "ERGTRAJ 1"


def save_trajectories(path, trajectories, specs) -> None:
    """Write per-agent state blocks in the ERGTRAJ text format."""
    if len(trajectories) != len(specs):
        raise PreconditionError("one spec per trajectory required")
    lines = [TRAJECTORY_MAGIC]
    for i, (traj, spec) in enumerate(zip(trajectories, specs)):
        states = np.asarray(traj.states, dtype=float)
        lines.append(f"agent {i} {spec.type_id} {states.shape[0]}")
        for row in states:
            lines.append(" ".join(repr(float(v)) for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
