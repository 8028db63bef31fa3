"""Motion model, adjoint, and control-projection tests.

Rollout adjoints are checked against central finite differences of the
scalar pairing sum_j g_j . p_j, which exercises exactly the contract
rollout_vjp promises. Euler steps are checked against hand arithmetic.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergsearch.agents import (
    DIFFDRIVE,
    INTEGRATOR,
    TRAJECTORY_MAGIC,
    AgentSpec,
    ControlSequence,
    SensorModel,
    coverage_reconstruction,
    high_fidelity_sensor,
    low_fidelity_sensor,
    project_controls,
    rollout,
    rollout_vjp,
    save_trajectories,
)
from ergsearch.errors import PreconditionError

DL = (1.0, 1.0)


def integrator_spec(steps=5, u_max=1.0, dt=0.1):
    return AgentSpec(
        type_id=0,
        motion=INTEGRATOR,
        sensor=high_fidelity_sensor(),
        u_max=u_max,
        dt=dt,
        horizon_steps=steps,
    )


def diffdrive_spec(steps=5, u_max=1.0, dt=0.1, kappa_max=4.0, v_min=0.05):
    return AgentSpec(
        type_id=1,
        motion=DIFFDRIVE,
        sensor=low_fidelity_sensor(),
        u_max=u_max,
        dt=dt,
        horizon_steps=steps,
        kappa_max=kappa_max,
        v_min=v_min,
    )


def interior_problem(motion, steps, seed, dt=0.02):
    """A rollout guaranteed to stay far from the domain walls."""
    rng = np.random.default_rng(seed)
    if motion == INTEGRATOR:
        spec = integrator_spec(steps=steps, u_max=0.5, dt=dt)
        u = rng.uniform(-0.3, 0.3, (steps, 2))
        x0 = np.array([0.5, 0.5])
    else:
        spec = diffdrive_spec(steps=steps, u_max=0.5, dt=dt, v_min=0.05)
        v = rng.uniform(0.1, 0.4, steps)
        w = rng.uniform(-0.9, 0.9, steps) * spec.kappa_max * v
        u = np.column_stack([v, w])
        x0 = np.array([0.5, 0.5, rng.uniform(-np.pi, np.pi)])
    traj = rollout(spec, x0, u, DL)
    assert traj.clamp_count == 0
    assert np.all(traj.positions > 0.05) and np.all(traj.positions < 0.95)
    return spec, x0, u


class TestSensors:
    def test_parameters(self):
        hi, lo = high_fidelity_sensor(), low_fidelity_sensor()
        assert hi.sigma < lo.sigma
        assert hi.peak_prob > lo.peak_prob
        assert high_fidelity_sensor(2.0).sigma == pytest.approx(2 * hi.sigma)

    def test_validation(self):
        with pytest.raises(PreconditionError):
            SensorModel(sigma=0.0, peak_prob=0.5)
        with pytest.raises(PreconditionError):
            SensorModel(sigma=0.1, peak_prob=1.5)


class TestSpecValidation:
    def test_diffdrive_needs_curvature_bound(self):
        with pytest.raises(PreconditionError):
            AgentSpec(
                type_id=0,
                motion=DIFFDRIVE,
                sensor=high_fidelity_sensor(),
                u_max=1.0,
                dt=0.1,
                horizon_steps=5,
            )

    def test_unknown_motion(self):
        with pytest.raises(PreconditionError):
            AgentSpec(
                type_id=0,
                motion="hovercraft",
                sensor=high_fidelity_sensor(),
                u_max=1.0,
                dt=0.1,
                horizon_steps=5,
            )

    def test_state_dims(self):
        assert integrator_spec().state_dim == 2
        assert diffdrive_spec().state_dim == 3


class TestProjectControls:
    def test_integrator_radial_scaling(self):
        spec = integrator_spec(steps=2, u_max=1.0)
        u = np.array([[3.0, 4.0], [0.1, 0.2]])
        out = project_controls(spec, u)
        assert out[0] == pytest.approx([0.6, 0.8])  # norm 5 -> norm 1
        assert np.array_equal(out[1], u[1])  # feasible row untouched

    def test_diffdrive_speed_then_curvature(self):
        spec = diffdrive_spec(steps=3, u_max=1.0, kappa_max=2.0, v_min=0.1)
        u = np.array([[2.0, 5.0], [0.01, -0.1], [0.5, -3.0]])
        out = project_controls(spec, u)
        assert out[0] == pytest.approx([1.0, 2.0])  # v->u_max, w->k*v
        assert out[1] == pytest.approx([0.1, -0.1])  # v->v_min, w fits
        assert out[2] == pytest.approx([0.5, -1.0])  # w -> -k*v
        rollout(spec, np.array([0.5, 0.5, 0.0]), out, DL)  # now feasible

    def test_control_sequence_wrapper_round_trip(self):
        spec = integrator_spec(steps=2)
        seq = ControlSequence(controls=np.array([[3.0, 4.0], [0.0, 0.0]]), dt=0.1)
        out = project_controls(spec, seq)
        assert isinstance(out, ControlSequence)
        assert out.dt == 0.1

    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.booleans())
    def test_projection_idempotent_and_feasible(self, seed, diff):
        rng = np.random.default_rng(seed)
        spec = diffdrive_spec(steps=6) if diff else integrator_spec(steps=6)
        u = rng.uniform(-3.0, 3.0, (6, 2))
        once = project_controls(spec, u)
        twice = project_controls(spec, once)
        assert np.array_equal(once, twice)
        rollout(spec, np.array([0.5, 0.5, 0.0])[: spec.state_dim], once, DL)


class TestRollout:
    def test_integrator_hand_arithmetic(self):
        spec = integrator_spec(steps=2, dt=0.5)
        u = np.array([[0.2, 0.4], [-0.1, 0.6]])
        traj = rollout(spec, np.array([0.3, 0.1]), u, DL)
        np.testing.assert_allclose(
            traj.states, [[0.3, 0.1], [0.4, 0.3], [0.35, 0.6]], atol=1e-15
        )

    def test_integrator_straight_line(self):
        spec = integrator_spec(steps=8, dt=0.05, u_max=1.0)
        u = np.tile([0.4, 0.2], (8, 1))
        traj = rollout(spec, np.array([0.1, 0.1]), u, DL)
        for j in range(9):
            assert traj.states[j] == pytest.approx(
                [0.1 + 0.02 * j, 0.1 + 0.01 * j]
            )

    def test_diffdrive_hand_arithmetic(self):
        spec = diffdrive_spec(steps=2, dt=0.5, kappa_max=10.0, v_min=0.0)
        u = np.array([[0.4, 1.0], [0.2, -2.0]])
        x0 = np.array([0.5, 0.5, np.pi / 2])
        traj = rollout(spec, x0, u, DL)
        # step 1 uses theta=pi/2: move 0.2 in +y, theta -> pi/2 + 0.5
        assert traj.states[1] == pytest.approx([0.5, 0.7, np.pi / 2 + 0.5])
        th1 = np.pi / 2 + 0.5
        assert traj.states[2] == pytest.approx(
            [
                0.5 + 0.1 * np.cos(th1),
                0.7 + 0.1 * np.sin(th1),
                th1 - 1.0,
            ]
        )

    def test_diffdrive_constant_turn_approaches_circle(self):
        # Euler with shrinking dt converges to the exact radius-v/w circle
        v, w = 0.3, 1.2
        errs = []
        for steps, dt in ((100, 0.01), (1000, 0.001)):
            spec = diffdrive_spec(steps=steps, dt=dt, kappa_max=5.0, v_min=0.0)
            u = np.tile([v, w], (steps, 1))
            traj = rollout(spec, np.array([0.5, 0.3, 0.0]), u, DL)
            t = dt * np.arange(steps + 1)
            r = v / w
            exact_x = 0.5 + r * np.sin(w * t)
            exact_y = 0.3 + r * (1 - np.cos(w * t))
            errs.append(
                np.max(np.hypot(traj.positions[:, 0] - exact_x,
                                traj.positions[:, 1] - exact_y))
            )
        assert errs[0] < 5e-3
        assert errs[1] < errs[0] / 5  # roughly first-order in dt

    def test_diffdrive_curvature_bound_holds_on_path(self):
        spec, x0, u = interior_problem(DIFFDRIVE, 40, seed=5)
        traj = rollout(spec, x0, u, DL)
        dtheta = np.abs(np.diff(traj.states[:, 2]))
        steplen = np.hypot(*np.diff(traj.positions, axis=0).T)
        assert np.all(dtheta <= spec.kappa_max * steplen + 1e-12)

    def test_clamp_counts_steps_outside(self):
        spec = integrator_spec(steps=5, dt=0.1, u_max=2.0)
        u = np.tile([2.0, 0.0], (5, 1))  # pushes past x=1 after step 2
        traj = rollout(spec, np.array([0.65, 0.5]), u, DL)
        assert traj.clamp_count == 4
        assert traj.clamped
        assert np.all(traj.positions[:, 0] <= 1.0)
        assert traj.positions[-1] == pytest.approx([1.0, 0.5])

    def test_interior_rollout_never_clamps(self):
        spec, x0, u = interior_problem(INTEGRATOR, 30, seed=9)
        assert rollout(spec, x0, u, DL).clamp_count == 0

    def test_include_start_false_drops_first_row(self):
        spec, x0, u = interior_problem(INTEGRATOR, 6, seed=2)
        full = rollout(spec, x0, u, DL)
        tail = rollout(spec, x0, u, DL, include_start=False)
        assert tail.states.shape == (6, 2)
        assert np.array_equal(tail.states, full.states[1:])

    def test_rejects_wrong_horizon(self):
        spec = integrator_spec(steps=5)
        with pytest.raises(PreconditionError):
            rollout(spec, np.array([0.5, 0.5]), np.zeros((4, 2)), DL)

    def test_rejects_infeasible_controls(self):
        spec = integrator_spec(steps=2, u_max=0.1)
        with pytest.raises(PreconditionError):
            rollout(spec, np.array([0.5, 0.5]), np.tile([1.0, 0.0], (2, 1)), DL)

    def test_rejects_start_outside_domain(self):
        spec = integrator_spec(steps=2)
        with pytest.raises(PreconditionError):
            rollout(spec, np.array([1.2, 0.5]), np.zeros((2, 2)), DL)

    def test_rejects_wrong_state_dim(self):
        with pytest.raises(PreconditionError):
            rollout(diffdrive_spec(steps=2), np.array([0.5, 0.5]),
                    np.tile([0.1, 0.0], (2, 1)), DL)


def pairing(spec, x0, u, g):
    traj = rollout(spec, x0, u, DL)
    return float((g * traj.positions).sum())


def fd_gradients(spec, x0, u, g, h=1e-6):
    gx = np.zeros_like(x0)
    for i in range(x0.size):
        e = np.zeros_like(x0)
        e[i] = h
        gx[i] = (pairing(spec, x0 + e, u, g) - pairing(spec, x0 - e, u, g)) / (
            2 * h
        )
    gu = np.zeros_like(u)
    for j in range(u.shape[0]):
        for c in range(2):
            e = np.zeros_like(u)
            e[j, c] = h
            gu[j, c] = (
                pairing(spec, x0, u + e, g) - pairing(spec, x0, u - e, g)
            ) / (2 * h)
    return gx, gu


class TestRolloutVjp:
    @pytest.mark.parametrize("motion", [INTEGRATOR, DIFFDRIVE])
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_finite_differences(self, motion, seed):
        spec, x0, u = interior_problem(motion, 12, seed)
        g = np.random.default_rng(100 + seed).normal(size=(13, 2))
        gx, gu = rollout_vjp(spec, x0, u, g)
        fx, fu = fd_gradients(spec, x0, u, g)
        scale = max(np.abs(fx).max(), np.abs(fu).max())
        assert np.abs(gx - fx).max() <= 1e-6 * scale
        assert np.abs(gu - fu).max() <= 1e-6 * scale

    def test_integrator_start_gradient_is_total_mass(self):
        # translating the start moves every sample: grad_x0 = sum(g)
        spec, x0, u = interior_problem(INTEGRATOR, 6, seed=3)
        g = np.random.default_rng(8).normal(size=(7, 2))
        gx, _ = rollout_vjp(spec, x0, u, g)
        assert gx == pytest.approx(g.sum(axis=0), rel=1e-12)

    def test_integrator_hand_values(self):
        spec = integrator_spec(steps=5, dt=0.1)
        u = np.zeros((5, 2))
        g = np.ones((6, 2))
        gx, gu = rollout_vjp(spec, np.array([0.5, 0.5]), u, g)
        assert gx == pytest.approx([6.0, 6.0])
        assert gu[0] == pytest.approx([0.5, 0.5])  # dt * 5 remaining samples
        assert gu[-1] == pytest.approx([0.1, 0.1])  # dt * 1 remaining sample

    def test_include_start_false_consistency(self):
        # dropping the start sample must equal zeroing its gradient
        spec, x0, u = interior_problem(DIFFDRIVE, 9, seed=4)
        g = np.random.default_rng(11).normal(size=(10, 2))
        full = rollout_vjp(spec, x0, u, g)
        g0 = g.copy()
        g0[0] = 0.0
        zeroed = rollout_vjp(spec, x0, u, g0)
        tail = rollout_vjp(spec, x0, u, g[1:], include_start=False)
        assert np.allclose(zeroed[0], tail[0], atol=1e-15)
        assert np.allclose(zeroed[1], tail[1], atol=1e-15)
        # and the control gradient never depends on the start sample
        assert np.allclose(full[1], tail[1], atol=1e-15)

    def test_rejects_gradient_shape_mismatch(self):
        spec, x0, u = interior_problem(INTEGRATOR, 5, seed=6)
        with pytest.raises(PreconditionError):
            rollout_vjp(spec, x0, u, np.zeros((5, 2)))  # needs 6 rows


class TestCoverage:
    def test_matches_naive_loop(self):
        spec, x0, u = interior_problem(INTEGRATOR, 7, seed=12)
        traj = rollout(spec, x0, u, DL)
        sensor = spec.sensor
        grid = coverage_reconstruction(traj, sensor, 9, DL)
        pts = grid.cell_points()
        for idx in (0, 17, 44, 80):
            acc = 0.0
            for p in traj.positions:
                d2 = float(((pts[idx] - p) ** 2).sum())
                acc += sensor.peak_prob * np.exp(-d2 / (2 * sensor.sigma**2))
            want = acc / traj.positions.shape[0]
            got = grid.cells.ravel()[idx]
            assert got == pytest.approx(want, rel=1e-12)

    def test_peak_cell_near_trajectory(self):
        spec, x0, u = interior_problem(INTEGRATOR, 7, seed=13)
        traj = rollout(spec, x0, u, DL)
        grid = coverage_reconstruction(traj, spec.sensor, 32, DL)
        best = np.argmax(grid.cells.ravel())
        d = np.hypot(
            *(grid.cell_points()[best] - traj.positions).T
        ).min()
        assert d < 0.1


class TestTrajectoryFile:
    def test_format_and_values(self, tmp_path):
        si, xi0, ui = interior_problem(INTEGRATOR, 4, seed=20)
        sd, xd0, ud = interior_problem(DIFFDRIVE, 3, seed=21)
        trajs = [rollout(si, xi0, ui, DL), rollout(sd, xd0, ud, DL)]
        path = tmp_path / "out.ergtraj"
        save_trajectories(path, trajs, [si, sd])
        lines = path.read_text().splitlines()
        assert lines[0] == TRAJECTORY_MAGIC
        assert lines[1] == f"agent 0 {si.type_id} 5"
        assert lines[7] == f"agent 1 {sd.type_id} 4"
        row0 = np.array([float(t) for t in lines[2].split()])
        assert np.array_equal(row0, trajs[0].states[0])
        last = np.array([float(t) for t in lines[-1].split()])
        assert np.array_equal(last, trajs[1].states[-1])  # repr round-trips

    def test_spec_count_mismatch(self, tmp_path):
        si, xi0, ui = interior_problem(INTEGRATOR, 4, seed=22)
        traj = rollout(si, xi0, ui, DL)
        with pytest.raises(PreconditionError):
            save_trajectories(tmp_path / "x.ergtraj", [traj], [si, si])
