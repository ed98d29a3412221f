import numpy as np
import pytest
from numpy.testing import assert_allclose

from netcontract.fhn import (
    FhnConfig,
    SinusoidInput,
    SpikeTrainInput,
    Trajectory,
    ZeroInput,
    certify,
    closed_loop_jacobian,
    config_from_json,
    config_to_json,
    entrainment_check,
    fhn_gains,
    initial_state,
    input_from_json,
    input_to_json,
    laplacian,
    load_config,
    resolved_gains,
    scaled_norm_weights,
    scaled_state_norm,
    simulate,
    voltage_jacobian_bound,
    write_trajectory_csv,
)
from netcontract.metzler import matrix_measure
from netcontract.stabilization import minimal_effort_stabilize

from generators import random_connected_adjacency

SIX_RING = np.array([
    [0, 1, 1, 0, 0, 0],
    [1, 0, 0, 0, 1, 1],
    [0, 1, 0, 1, 0, 0],
    [0, 0, 1, 0, 0, 0],
    [0, 1, 0, 0, 0, 0],
    [0, 0, 0, 0, 1, 0],
], dtype=float)


def six_config(**overrides):
    return FhnConfig(adjacency=SIX_RING, **overrides)


class TestLaplacian:
    def test_two_node_exchange(self):
        assert np.array_equal(laplacian([[0, 1], [1, 0]]),
                              [[1.0, -1.0], [-1.0, 1.0]])

    def test_six_node_structure(self):
        L = laplacian(SIX_RING)
        assert np.array_equal(np.diag(L), [2, 3, 2, 1, 1, 1])
        assert np.array_equal(L.sum(axis=1), np.zeros(6))  # rows always sum to 0
        assert np.array_equal(L.sum(axis=0), [1, 0, 0, 0, -1, 0])

    def test_empty_graph(self):
        assert np.array_equal(laplacian(np.zeros((3, 3))), np.zeros((3, 3)))

    def test_validation(self):
        with pytest.raises(ValueError, match="square"):
            laplacian(np.zeros((2, 3)))
        with pytest.raises(ValueError, match="diagonal"):
            laplacian(np.eye(3))
        with pytest.raises(ValueError, match="0 or 1"):
            laplacian([[0.0, 0.5], [0.5, 0.0]])


class TestFhnGains:
    def test_six_node_values(self):
        ell = fhn_gains(laplacian(SIX_RING), c=6.0, gamma=0.05, eta=0.05)
        assert_allclose(ell, [6.025, 6.05, 6.05, 6.05, 6.075, 6.05], atol=1e-12)

    def test_closed_loop_bound_abscissa_hits_minus_eta(self):
        L = laplacian(SIX_RING)
        ell = fhn_gains(L, 6.0, 0.05, 0.05)
        closed = voltage_jacobian_bound(L, 6.0, 0.05) - np.diag(ell)
        assert_allclose(np.max(np.linalg.eigvalsh(closed)), -0.05, atol=1e-8)
        assert matrix_measure(closed, "two") <= -0.05 + 1e-8

    def test_symmetric_graph_gains_are_uniform(self):
        # symmetric L has zero column sums, so the correction term vanishes
        adj = random_connected_adjacency(np.random.default_rng(0), 7)
        ell = fhn_gains(laplacian(adj), 6.0, 0.05, 0.05)
        assert np.array_equal(ell, 6.05 * np.ones(7))

    def test_matches_minimum_effort_stabilizer(self):
        rng = np.random.default_rng(1)
        graphs = [SIX_RING] + [random_connected_adjacency(rng, int(rng.integers(3, 8)))
                               for _ in range(5)]
        for adj in graphs:
            L = laplacian(adj)
            bound = voltage_jacobian_bound(L, 6.0, 0.05)
            ref = minimal_effort_stabilize(bound, np.ones(L.shape[0]), target=-0.05)
            assert_allclose(fhn_gains(L, 6.0, 0.05, 0.05), ref.ell_star,
                            rtol=1e-9, atol=1e-12)

    def test_single_neuron(self):
        assert np.array_equal(fhn_gains(np.zeros((1, 1)), 6.0, 0.05, 0.05), [6.05])

    def test_floor_violation_raises(self):
        with pytest.raises(ValueError, match="max degree"):
            fhn_gains(laplacian(SIX_RING), c=6.0, gamma=3.0, eta=0.05)


class TestCertify:
    def test_six_node_auto_gains_pass(self):
        cert = certify(six_config())
        assert cert.passed
        assert cert.eta_certified >= 0.05 - 1e-9
        assert cert.mu_scaled <= -0.05 + 1e-9
        assert sorted(c.name for c in cert.checks) == [
            "bound_plus_eta_nonneg", "eta_le_b_over_c", "scaled_measure_le_minus_eta"]

    def test_zero_gains_fail_measure_check(self):
        cert = certify(six_config(gains=np.zeros(6)))
        assert not cert.passed
        by_name = {c.name: c for c in cert.checks}
        assert not by_name["scaled_measure_le_minus_eta"].passed
        assert cert.mu_scaled > 0  # uncontrolled voltage block expands

    def test_eta_above_recovery_ratio_fails(self):
        cert = certify(six_config(eta=0.5))  # b/c = 1/3 < 0.5
        by_name = {c.name: c for c in cert.checks}
        assert not by_name["eta_le_b_over_c"].passed
        assert not cert.passed


class TestClosedLoopJacobian:
    def test_block_structure(self):
        cfg = six_config()
        rng = np.random.default_rng(2)
        x = rng.uniform(-2, 2, size=12)
        J = closed_loop_jacobian(cfg, x)
        L = laplacian(SIX_RING)
        ell = resolved_gains(cfg)
        v = x[:6]
        assert_allclose(J[:6, :6],
                        6.0 * (np.eye(6) - np.diag(v * v)) - 0.05 * L - np.diag(ell),
                        atol=1e-12)
        assert np.array_equal(J[:6, 6:], 6.0 * np.eye(6))
        assert np.array_equal(J[6:, :6], -np.eye(6) / 6.0)
        assert np.array_equal(J[6:, 6:], -(2.0 / 6.0) * np.eye(6))

    def test_scaled_measure_along_trajectory(self):
        # the certificate promises mu_2 of T J T^{-1} <= -eta at every state
        cfg = six_config(seed=3)
        traj = simulate(cfg, t_end=2.0)
        t_scale = scaled_norm_weights(cfg)
        for state in traj.states[::200]:
            J = closed_loop_jacobian(cfg, state)
            assert matrix_measure(J, "two", scaling=t_scale) <= -0.05 + 1e-8


class TestSimulate:
    def test_origin_is_equilibrium_without_input(self):
        cfg = FhnConfig(adjacency=[[0.0]], a=0.0, input=ZeroInput(),
                        gains=[6.05], t_end=1.0, step=1e-2)
        traj = simulate(cfg, x0=np.zeros(2))
        assert np.all(traj.states == 0.0)
        assert np.all(traj.input_trace == 0.0)

    def test_shapes_and_input_trace(self):
        cfg = six_config()
        traj = simulate(cfg, t_end=0.1)
        assert traj.times.shape == (101,)
        assert traj.states.shape == (101, 12)
        assert traj.input_trace.shape == (101,)
        assert np.array_equal(traj.input_trace, cfg.input(traj.times))
        assert traj.n_neurons == 6
        assert traj.v.shape == (101, 6) and traj.w.shape == (101, 6)

    def test_batched_initial_states(self):
        cfg = six_config()
        x0 = np.stack([initial_state(cfg, np.random.default_rng(s)) for s in (0, 1, 2)])
        traj = simulate(cfg, x0=x0, t_end=0.05)
        assert traj.states.shape == (51, 3, 12)

    def test_deterministic(self):
        cfg = six_config(seed=5)
        t1 = simulate(cfg, t_end=0.2)
        t2 = simulate(cfg, t_end=0.2)
        assert np.array_equal(t1.states, t2.states)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="state dimension"):
            simulate(six_config(), x0=np.zeros(10))


class TestGapDecay:
    def test_certified_envelope_and_derivative(self):
        cfg = six_config()
        rng = np.random.default_rng(11)
        x0 = rng.uniform(-4, 4, size=(2, 12))
        traj = simulate(cfg, x0=x0, t_end=5.0)
        gap = scaled_state_norm(traj.states[:, 0] - traj.states[:, 1], cfg.c)
        envelope = gap[0] * np.exp(-cfg.eta * traj.times)
        assert np.all(gap[1:] <= 1.02 * envelope[1:])
        # one-sided derivative bound D+ gap <= -eta gap, sampled discretely
        rate = np.diff(gap) / cfg.step
        assert np.all(rate <= (-cfg.eta + 2e-3) * gap[1:])


class TestEntrainmentCheck:
    @staticmethod
    def _synthetic(delta=1e-3, eta=0.05, n_samples=5001):
        times = np.arange(n_samples) * 1e-3
        base_v = np.sin(2 * np.pi * times)[:, None] * np.ones(6)
        base_w = np.cos(2 * np.pi * times)[:, None] * np.ones(6)
        base = np.concatenate([base_v, base_w], axis=1)
        drift = delta * np.exp(-eta * times)[:, None] * np.ones(12)
        r = np.zeros(n_samples)
        return (Trajectory(times, base, r),
                Trajectory(times, base + drift, r),
                Trajectory(times, base.copy(), r))

    def test_exact_exponential_gap(self):
        a, b, c = self._synthetic()
        report = entrainment_check(six_config(), [a, b, c], transient_periods=2)
        assert report.n_pairs == 3
        assert abs(report.gap_slack - 1.0) < 1e-9
        assert abs(report.decay_rate - 0.05) < 1e-8
        assert 0.0 < report.periodicity_residual < 1e-3
        assert report.sync_spread == 0.0
        assert report.period == 1.0

    def test_identical_trajectories_skip_gap(self):
        a, _, c = self._synthetic()
        report = entrainment_check(six_config(), [a, c], transient_periods=2)
        assert report.gap_slack == 0.0
        assert report.decay_rate == np.inf

    def test_horizon_validation(self):
        a, b, _ = self._synthetic()
        with pytest.raises(ValueError, match="horizon"):
            entrainment_check(six_config(), [a, b])  # default needs 18 periods

    def test_grid_mismatch(self):
        a, b, _ = self._synthetic()
        other = Trajectory(a.times + 1.0, a.states, a.input_trace)
        with pytest.raises(ValueError, match="time grid"):
            entrainment_check(six_config(), [a, other], transient_periods=2)
        with pytest.raises(ValueError, match="two trajectories"):
            entrainment_check(six_config(), [a], transient_periods=2)

    def test_period_step_divisibility(self):
        times = np.arange(8000) * 0.0007
        states = np.zeros((8000, 12))
        trajs = [Trajectory(times, states, np.zeros(8000)),
                 Trajectory(times, states + 1.0, np.zeros(8000))]
        with pytest.raises(ValueError, match="integer multiple"):
            entrainment_check(six_config(), trajs, transient_periods=2)

    def test_complete_graph_synchronizes(self):
        # uniform gains on a symmetric graph: neurons not only entrain to the
        # input but also collapse onto one another
        adj = np.ones((4, 4)) - np.eye(4)
        cfg = FhnConfig(adjacency=adj, t_end=25.0, step=1e-3)
        assert np.array_equal(resolved_gains(cfg), 6.05 * np.ones(4))
        x0 = np.stack([initial_state(cfg, np.random.default_rng(s)) for s in (0, 1)])
        batch = simulate(cfg, x0=x0)
        trajs = [Trajectory(batch.times, batch.states[:, i], batch.input_trace)
                 for i in range(2)]
        report = entrainment_check(cfg, trajs)
        assert report.sync_spread <= 1e-3
        assert report.periodicity_residual <= 1e-3
        assert report.gap_slack <= 1.05

    def test_integrated_network_entrains(self):
        cfg = six_config()
        x0 = np.stack([initial_state(cfg, np.random.default_rng(s)) for s in (0, 1)])
        traj = simulate(cfg, x0=x0, t_end=5.0)
        trajs = [Trajectory(traj.times, traj.states[:, i], traj.input_trace)
                 for i in range(2)]
        report = entrainment_check(cfg, trajs, transient_periods=2)
        assert report.gap_slack <= 1.05
        assert report.decay_rate >= 0.04
        assert np.isfinite(report.periodicity_residual)


class TestInputs:
    def test_sinusoid(self):
        r = SinusoidInput(offset=4.0, amplitude=4.0, period=1.0)
        assert_allclose(r(0.0), 4.0)
        assert_allclose(r(0.25), 8.0)
        assert_allclose(r(np.array([0.0, 0.5])), [4.0, 4.0], atol=1e-12)

    def test_spike_train_interpolates_periodically(self):
        r = SpikeTrainInput(times=[0.0, 1.0, 2.0], values=[0.0, 10.0, 0.0])
        assert r.period == 2.0
        assert_allclose(r(0.5), 5.0)
        assert_allclose(r(2.5), 5.0)  # wraps around
        assert_allclose(r(np.array([1.0, 3.0])), [10.0, 10.0])

    def test_spike_train_validation(self):
        with pytest.raises(ValueError):
            SpikeTrainInput(times=[0.5, 1.0], values=[1.0, 2.0])
        with pytest.raises(ValueError):
            SpikeTrainInput(times=[0.0, 1.0, 1.0], values=[1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            SpikeTrainInput(times=[0.0, 1.0], values=[1.0])

    def test_json_round_trip(self):
        for inp in (SinusoidInput(2.0, 3.0, 0.5),
                    SpikeTrainInput([0.0, 0.3, 1.0], [1.0, -2.0, 1.0]),
                    ZeroInput()):
            back = input_from_json(input_to_json(inp))
            assert type(back) is type(inp)
            assert_allclose(back(np.linspace(0, 2, 11)), inp(np.linspace(0, 2, 11)))

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown input kind"):
            input_from_json({"kind": "square_wave"})


class TestConfigJson:
    def test_round_trip(self):
        cfg = six_config(eta=0.07, seed=9, gains=np.full(6, 6.1))
        back = config_from_json(config_to_json(cfg))
        assert np.array_equal(back.adjacency, cfg.adjacency)
        assert np.array_equal(back.gains, cfg.gains)
        assert (back.a, back.b, back.c, back.gamma, back.eta) == (0.0, 2.0, 6.0, 0.05, 0.07)
        assert (back.seed, back.t_end, back.step) == (9, 25.0, 1e-3)
        assert back.input == cfg.input

    def test_auto_gains_and_flat_adjacency(self):
        obj = {"N": 2, "adjacency": [0, 1, 1, 0], "gains": "auto"}
        cfg = config_from_json(obj)
        assert cfg.gains is None
        assert np.array_equal(cfg.adjacency, [[0, 1], [1, 0]])
        assert_allclose(resolved_gains(cfg), [6.05, 6.05])

    def test_validation(self):
        with pytest.raises(ValueError, match="N"):
            config_from_json({"N": 3, "adjacency": [[0, 1], [1, 0]]})
        with pytest.raises(ValueError, match="flat adjacency"):
            config_from_json({"adjacency": [0, 1, 1, 0]})
        with pytest.raises(ValueError, match="auto"):
            config_from_json({"adjacency": [[0]], "gains": "default"})

    def test_shipped_config_loads(self):
        from pathlib import Path
        cfg = load_config(Path(__file__).resolve().parents[1] / "configs" / "fhn6.json")
        assert np.array_equal(cfg.adjacency, SIX_RING)
        assert cfg.gains is None
        assert cfg.seed == 7
        assert certify(cfg).passed


class TestTrajectoryCsv:
    def test_header_and_round_trip(self, tmp_path):
        cfg = FhnConfig(adjacency=[[0.0]], t_end=0.01, step=1e-3)
        traj = simulate(cfg)
        path = tmp_path / "traj.csv"
        write_trajectory_csv(path, traj)
        lines = path.read_text().splitlines()
        assert lines[0] == "t,v1,w1,r"
        assert len(lines) == 1 + traj.times.shape[0]
        table = np.loadtxt(path, delimiter=",", skiprows=1)
        assert np.array_equal(table[:, 0], traj.times)
        assert np.array_equal(table[:, 1:3], traj.states)
        assert np.array_equal(table[:, 3], traj.input_trace)

    def test_rejects_batched(self, tmp_path):
        cfg = six_config()
        traj = simulate(cfg, x0=np.zeros((2, 12)), t_end=0.01)
        with pytest.raises(ValueError, match="unbatched"):
            write_trajectory_csv(tmp_path / "x.csv", traj)


class TestConfigValidation:
    def test_parameter_checks(self):
        with pytest.raises(ValueError, match="c must"):
            six_config(c=0.0)
        with pytest.raises(ValueError, match="gains have length"):
            six_config(gains=[1.0, 2.0])
        with pytest.raises(ValueError, match="0 or 1"):
            FhnConfig(adjacency=[[0, 2], [2, 0]])
        with pytest.raises(ValueError, match="step"):
            six_config(step=0.0)
