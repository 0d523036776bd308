"""Single-neuron dynamics, current gathering, f-I curve and energy tests."""

import math

import numpy as np
import pytest

from eqspike.network import (NeuronState, Topology, WeightStore,
                             calibrate_input_current, energy, fi_curve,
                             gather_current, hard_sigmoid,
                             interspike_interval, step_membrane)
from eqspike.params import HyperParams


PARAMS = HyperParams()


def simulate_intervals(params, current, n_spikes=6):
    """Independent scalar recurrence: spike times of one neuron under
    constant current, using only the stated update rule."""
    u, refract = 0.0, 0
    times = []
    t = 0
    while len(times) < n_spikes and t < 100_000:
        if refract > 0:
            refract -= 1
        if refract == 0:
            u = (1.0 - params.gamma_lif) * u + current
            if u > params.u_th:
                u = 0.0
                refract = params.t_refract
                times.append(t)
        t += 1
    return np.diff(times)


class TestStepMembrane:
    def test_zero_input_zero_state_is_fixed_point(self):
        state, spiked = step_membrane(NeuronState(), 0.0, PARAMS)
        assert state.u == 0.0
        assert not spiked

    def test_leak_and_integrate(self):
        state, spiked = step_membrane(NeuronState(u=0.5), 0.2, PARAMS)
        assert state.u == pytest.approx((1 - PARAMS.gamma_lif) * 0.5 + 0.2)
        assert not spiked

    def test_threshold_crossing_resets_and_arms_refractory(self):
        state, spiked = step_membrane(NeuronState(u=0.99), 0.2, PARAMS)
        assert spiked
        assert state.u == 0.0
        assert state.refract_remaining == PARAMS.t_refract

    def test_no_spike_during_refractory_regardless_of_input(self):
        state = NeuronState(u=0.0, refract_remaining=PARAMS.t_refract)
        for _ in range(PARAMS.t_refract - 1):
            state, spiked = step_membrane(state, 1e6, PARAMS)
            assert not spiked

    def test_non_finite_current_rejected(self):
        with pytest.raises(ValueError):
            step_membrane(NeuronState(), float("nan"), PARAMS)
        with pytest.raises(ValueError):
            step_membrane(NeuronState(), float("inf"), PARAMS)

    @pytest.mark.parametrize("current", [0.12, 0.2, 0.5, 0.8, 1.5])
    def test_interval_matches_recurrence_and_closed_form(self, current):
        """Steady interspike interval: simulated == geometric closed form.

        The membrane ramps as u_n = I (1 - (1-g)^n) / g after the refractory
        window; the spike step itself counts toward that window, so the
        interval is (t_refract - 1) + ceil-crossing steps.
        """
        intervals = simulate_intervals(PARAMS, current)
        assert len(set(intervals.tolist())) == 1  # periodic steady state
        expected = interspike_interval(PARAMS, current)
        assert intervals[0] == expected
        g = PARAMS.gamma_lif
        n = expected - (PARAMS.t_refract - 1)
        assert current * (1 - (1 - g) ** n) / g > PARAMS.u_th
        if n > 1:
            assert current * (1 - (1 - g) ** (n - 1)) / g <= PARAMS.u_th

    def test_saturation_interval_is_refractory_period(self):
        intervals = simulate_intervals(PARAMS, 100.0)
        assert np.all(intervals == PARAMS.t_refract)

    def test_consecutive_spikes_separated_by_at_least_t_refract(self):
        for current in (0.11, 0.3, 2.0, 50.0):
            intervals = simulate_intervals(PARAMS, current)
            assert np.all(intervals >= PARAMS.t_refract)


def small_weights():
    topo = Topology([2, 2, 1])
    w = WeightStore(topo)
    w.blocks[0][:] = [[0.5, -0.2], [0.1, 0.4]]
    w.blocks[1][:] = [[0.7], [-0.3]]
    w.biases[:] = [0.0, 0.0, 0.3, 0.0, 0.1]
    return topo, w


class TestGatherCurrent:
    def test_bias_only_when_no_spikes(self):
        _, w = small_weights()
        assert gather_current(w, [], 2) == pytest.approx(0.3)

    def test_linear_sum_over_spiking_neighbours(self):
        # hidden neuron 2 (local 0): lower neighbour 0 spikes (w=0.5),
        # upper neighbour 4 spikes (w=0.7), bias 0.3
        _, w = small_weights()
        assert gather_current(w, [0, 4], 2) == pytest.approx(0.3 + 0.5 + 0.7)

    def test_shared_weight_serves_both_directions(self):
        _, w = small_weights()
        hidden_from_output = gather_current(w, [4], 2) - w.biases[2]
        output_from_hidden = gather_current(w, [2], 4) - w.biases[4]
        assert hidden_from_output == pytest.approx(output_from_hidden)

    def test_input_neuron_returns_clamp_and_ignores_spikes(self):
        _, w = small_weights()
        assert gather_current(w, [2, 3, 4], 0, clamped_current=0.7) == 0.7
        assert gather_current(w, [2, 3, 4], 1, clamped_current=None) == 0.0


class TestFICurve:
    def test_zero_current_zero_rate(self):
        assert fi_curve(PARAMS, 0.0, 500) == 0.0

    def test_subthreshold_asymptote_never_spikes(self):
        # u -> I / gamma stays below threshold
        assert fi_curve(PARAMS, PARAMS.gamma_lif * PARAMS.u_th * 0.99, 2000) == 0.0

    def test_saturates_at_max_rate(self):
        rate = fi_curve(PARAMS, 10.0, 2000)
        assert rate == pytest.approx(PARAMS.f_max_per_step, abs=1e-3)

    def test_monotone_non_decreasing_in_current(self):
        currents = np.linspace(0.0, 1.5, 40)
        rates = [fi_curve(PARAMS, c, 1500) for c in currents]
        assert np.all(np.diff(rates) >= -1e-12)

    @pytest.mark.parametrize("current", [0.15, 0.3, 0.6])
    def test_matches_closed_form_interval(self, current):
        duration = 3000
        rate = fi_curve(PARAMS, current, duration)
        interval = interspike_interval(PARAMS, current)
        assert rate == pytest.approx(1.0 / interval, abs=1.5 / duration)

    def test_calibrated_current_drives_at_max_rate(self):
        i_max = calibrate_input_current(PARAMS)
        assert fi_curve(PARAMS, i_max, 1000) == pytest.approx(
            PARAMS.f_max_per_step, abs=1e-3)
        # barely below calibration: strictly slower
        assert fi_curve(PARAMS, 0.98 * i_max, 1000) < PARAMS.f_max_per_step


class TestEnergy:
    def test_zero_state_zero_energy(self):
        topo = Topology([2, 2, 1])
        w = WeightStore(topo)
        assert energy(np.zeros(5), w) == 0.0

    def test_two_neuron_hand_value(self):
        # E = 1/2 (1 + 1) - w * rho(1) * rho(1) = 1 - 0.5
        topo = Topology([1, 1])
        w = WeightStore(topo)
        w.blocks[0][0, 0] = 0.5
        assert energy(np.array([1.0, 1.0]), w) == pytest.approx(0.5)

    def test_bias_term(self):
        topo = Topology([1, 1])
        w = WeightStore(topo)
        w.biases[1] = 0.4
        u = np.array([0.0, 0.5])
        assert energy(u, w) == pytest.approx(0.5 * 0.25 - 0.4 * 0.5)

    def test_activation_clamps_outside_unit_interval(self):
        topo = Topology([1, 1])
        w = WeightStore(topo)
        w.blocks[0][0, 0] = 1.0
        # rho(2) = 1, rho(-1) = 0
        assert energy(np.array([2.0, -1.0]), w) == pytest.approx(0.5 * (4 + 1))

    def test_hard_sigmoid(self):
        u = np.array([-0.5, 0.0, 0.3, 1.0, 2.0])
        np.testing.assert_allclose(hard_sigmoid(u), [0.0, 0.0, 0.3, 1.0, 1.0])


class TestTopology:
    def test_fan_out_conventions(self):
        topo = Topology([784, 100, 10])
        assert topo.fan_out(0) == 100          # inputs reach hidden only
        assert topo.fan_out(1) == 784 + 10     # hidden transit both blocks
        assert topo.fan_out(2) == 100          # outputs reach hidden only

    def test_rejects_degenerate_shapes(self):
        with pytest.raises(ValueError):
            Topology([5])
        with pytest.raises(ValueError):
            Topology([5, 0, 3])

    def test_weight_store_shape_validation(self):
        topo = Topology([3, 2])
        with pytest.raises(ValueError):
            WeightStore(topo, [np.zeros((2, 2))])
        with pytest.raises(ValueError):
            WeightStore(topo, None, np.zeros(3))

    def test_glorot_init_bounds(self):
        topo = Topology([30, 20, 10])
        w = WeightStore.glorot_init(topo, np.random.default_rng(0))
        for l, b in enumerate(w.blocks):
            bound = math.sqrt(6.0 / (topo.layer_sizes[l] + topo.layer_sizes[l + 1]))
            assert np.abs(b).max() <= bound
        assert np.all(w.biases == 0.0)
