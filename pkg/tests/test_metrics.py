"""SynOps accounting, energy arithmetic, spike statistics, timing curves."""

import numpy as np
import pytest

from eqspike.metrics import (EnergyModel, StdpCurve, block_synops, count_synops,
                             energy_estimate, spike_stats, stdp_curve)
from eqspike.network import Topology
from eqspike.params import HyperParams
from eqspike.sim import Network, SpikeLog, UpdateLog, clamp_inputs, run_phase
from eqspike.trainer import nudging_phase
from eqspike.validation import current_for_interval


def random_log(topology, n_spikes=500, n_steps=300, seed=0):
    rng = np.random.default_rng(seed)
    steps = np.sort(rng.integers(0, n_steps, n_spikes))
    neurons = rng.integers(0, topology.n_neurons, n_spikes)
    return SpikeLog(steps, neurons, n_steps, topology.n_neurons)


class TestCountSynops:
    def test_empty_log(self):
        topo = Topology([784, 100, 10])
        assert count_synops(SpikeLog(n_neurons=894), topo) == 0

    def test_single_spike_counts_fan_out(self):
        """One spike from a hidden neuron with 100 + 10 = 110 synapses."""
        topo = Topology([100, 7, 10])
        log = SpikeLog(np.array([5]), np.array([103]), 10, topo.n_neurons)
        assert topo.fan_out(1) == 110
        assert count_synops(log, topo) == 110

    def test_matches_brute_force_recount(self):
        """Vectorised count equals a per-spike fan-out sum."""
        topo = Topology([30, 20, 10])
        log = random_log(topo, 2000)
        brute = sum(topo.fan_out(int(topo.layer_of[n])) for n in log.neurons)
        assert count_synops(log, topo) == brute

    def test_additive_over_concatenation(self):
        topo = Topology([30, 20, 10])
        a = random_log(topo, 700, seed=1)
        b = random_log(topo, 900, seed=2)
        combined = SpikeLog(np.concatenate([a.steps, a.steps.max() + 1 + b.steps]),
                            np.concatenate([a.neurons, b.neurons]),
                            a.n_steps + b.n_steps, topo.n_neurons)
        assert count_synops(combined, topo) == \
            count_synops(a, topo) + count_synops(b, topo)

    def test_block_synops_sum_to_total(self):
        topo = Topology([50, 40, 30, 10])
        log = random_log(topo, 3000, seed=3)
        assert block_synops(log, topo).sum() == count_synops(log, topo)


class TestEnergyEstimate:
    def test_zero_synops_zero_energy(self):
        assert energy_estimate(0) == 0.0

    def test_paper_scale_inference_arithmetic(self):
        """150,000 SynOps at 10 pJ each are 1.5 microjoules."""
        e = energy_estimate(150_000, EnergyModel(10.0))
        assert e == 150_000 * 10.0 * 1e-12
        assert e == pytest.approx(1.5e-6, rel=1e-12)

    def test_paper_scale_training_arithmetic(self):
        """4.23e12 SynOps at 10 pJ each are 42.3 J (42 J after rounding)."""
        e = energy_estimate(4_230_000_000_000, EnergyModel(10.0))
        assert e == pytest.approx(42.3, rel=1e-12)
        assert round(e) == 42

    def test_linear_in_both_arguments(self):
        m1, m3 = EnergyModel(7.0), EnergyModel(21.0)
        assert energy_estimate(900, m1) == pytest.approx(3 * energy_estimate(300, m1))
        assert energy_estimate(300, m3) == pytest.approx(3 * energy_estimate(300, m1))

    def test_model_validation(self):
        with pytest.raises(ValueError):
            EnergyModel(0.0)


class TestSpikeStats:
    def test_single_spike_single_image(self):
        topo = Topology([4, 3, 2])
        log = SpikeLog(np.array([0]), np.array([5]), 10, 9)
        stats = spike_stats(log, topo, n_images=1)
        assert stats.spikes_per_neuron_per_image == pytest.approx(1 / 9)

    def test_matches_independent_recount(self):
        """All three statistics equal a plain-python recount of the raw log."""
        topo = Topology([30, 20, 10])
        log = random_log(topo, 2500, seed=4)
        stats = spike_stats(log, topo, n_images=5)

        total = len(log.neurons)
        n_input = sum(1 for n in log.neurons if n < 30)
        per_layer = [0, 0, 0]
        for n in log.neurons:
            per_layer[int(topo.layer_of[n])] += 1
        block0 = per_layer[0] * 20 + per_layer[1] * 30
        block1 = per_layer[1] * 10 + per_layer[2] * 20
        assert stats.spikes_per_neuron_per_image == total / (60 * 5)
        assert stats.input_layer_spike_fraction == n_input / total
        assert stats.input_block_synop_fraction == block0 / (block0 + block1)

    def test_requires_positive_image_count(self):
        topo = Topology([4, 3, 2])
        with pytest.raises(ValueError):
            spike_stats(SpikeLog(n_neurons=9), topo, n_images=0)


from protocols import two_neuron_stdp_protocol as two_neuron_protocol


class TestStdpCurve:
    def test_empty_logs_give_empty_curve(self):
        topo = Topology([1, 1])
        curve = stdp_curve(SpikeLog(n_neurons=2), UpdateLog(), topo)
        assert curve.counts.sum() == 0
        assert len(curve.dt_centers) == 20

    def test_bins_cover_symmetric_range(self):
        topo = Topology([1, 1])
        curve = stdp_curve(SpikeLog(n_neurons=2), UpdateLog(), topo,
                           window=200, n_bins=20)
        assert curve.dt_centers[0] == pytest.approx(-190.0)
        assert curve.dt_centers[-1] == pytest.approx(190.0)

    def test_accelerating_post_gives_positive_means(self):
        """Steady pre + accelerating post: every populated timing bin with
        positive lag carries a positive mean update."""
        net, spikes, updates = two_neuron_protocol(beta=0.2, accelerate=True)
        p = net.params
        curve = stdp_curve(spikes, updates, net.topology, block=0,
                           f_max_per_step=p.f_max_per_step, beta_used=p.beta)
        populated = curve.counts > 0
        assert populated.any()
        pos = populated & (curve.dt_centers > 0)
        assert pos.any()
        assert np.all(curve.mean_dw[pos] > 0)

    def test_decelerating_post_gives_negative_means(self):
        net, spikes, updates = two_neuron_protocol(beta=0.2, accelerate=False)
        p = net.params
        curve = stdp_curve(spikes, updates, net.topology, block=0,
                           f_max_per_step=p.f_max_per_step, beta_used=p.beta)
        pos = (curve.counts > 0) & (curve.dt_centers > 0)
        assert pos.any()
        assert np.all(curve.mean_dw[pos] < 0)

    def test_bin_means_flip_sign_between_protocols(self):
        """Qualitative antisymmetry between the accelerate and decelerate
        runs on the shared populated bins."""
        _, s1, u1 = two_neuron_protocol(beta=0.2, accelerate=True)
        net, s2, u2 = two_neuron_protocol(beta=0.2, accelerate=False)
        p = net.params
        c1 = stdp_curve(s1, u1, net.topology, f_max_per_step=p.f_max_per_step)
        c2 = stdp_curve(s2, u2, net.topology, f_max_per_step=p.f_max_per_step)
        both = (c1.counts > 0) & (c2.counts > 0)
        assert both.any()
        assert np.all(np.sign(c1.mean_dw[both]) == -np.sign(c2.mean_dw[both]))

    def test_doubling_beta_increases_peak_amplitude(self):
        net, s1, u1 = two_neuron_protocol(beta=0.2, accelerate=True)
        _, s2, u2 = two_neuron_protocol(beta=0.4, accelerate=True)
        p = net.params
        c1 = stdp_curve(s1, u1, net.topology, f_max_per_step=p.f_max_per_step)
        c2 = stdp_curve(s2, u2, net.topology, f_max_per_step=p.f_max_per_step)
        assert c2.peak_amplitude() > c1.peak_amplitude()

    def test_rate_floor_excludes_quiet_presynaptic_neurons(self):
        """With the floor above the presynaptic rate no pairs survive."""
        net, spikes, updates = two_neuron_protocol(beta=0.2, accelerate=True)
        p = net.params
        curve = stdp_curve(spikes, updates, net.topology, rate_floor=0.99,
                           f_max_per_step=p.f_max_per_step)
        assert curve.counts.sum() == 0

    def test_window_respects_segment_boundaries(self):
        """Pre spikes from a previous image segment never enter the window."""
        topo = Topology([1, 1])
        # segment 0: pre spikes only; segment 1 (from step 100): one pre
        # spike then a post spike with one update
        log = SpikeLog(np.array([10, 20, 30, 110, 130]),
                       np.array([0, 0, 0, 0, 1]), 200, 2,
                       boundaries=[0, 100])
        upd = UpdateLog(steps=[130], blocks=[0], i=[0], j=[0], dw=[0.5],
                        phase=[1])
        curve = stdp_curve(log, upd, topo, window=200, rate_floor=0.0,
                           f_max_per_step=0.5)
        populated = np.flatnonzero(curve.counts)
        assert len(populated) == 1
        # only the in-segment pre spike at 110 counts: dt = 130 - 110 = 20
        assert curve.dt_centers[populated[0]] == pytest.approx(30.0)  # bin centre
        assert curve.mean_dw[populated[0]] == pytest.approx(0.5)
