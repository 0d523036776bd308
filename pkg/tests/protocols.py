"""Shared synthetic protocols used by unit and acceptance tests."""

from __future__ import annotations

import numpy as np

from eqspike.params import HyperParams
from eqspike.sim import Network, SpikeLog, UpdateLog, clamp_inputs, run_phase
from eqspike.trainer import nudging_phase
from eqspike.validation import current_for_interval


def two_neuron_stdp_protocol(beta: float, accelerate: bool = True,
                             t_nudge: int = 200, seed: int = 0):
    """Steady presynaptic input neuron + nudged postsynaptic neuron.

    Acceleration run: the post neuron relaxes freely, then a nudge toward a
    higher rate accelerates it.  Deceleration run: the post neuron is first
    held at the higher rate (recorded, so its spikes stay on one continuous
    step axis), then nudged back toward silence.  The nudge strength sits in
    the weak-force regime where the rate transition stays incomplete over
    the phase, so the measured update amplitudes grow with beta.

    Returns (network, spike_log, update_log) for the single first-block
    synapse.
    """
    p = HyperParams(t_free=300, t_nudge=t_nudge, beta=beta, t_refract=2)
    net = Network.create([1, 1], p, seed=seed)
    net.weights.blocks[0][0, 0] = 0.35
    state = net.new_state()
    clamp_inputs(state, np.array([current_for_interval(p, 3)]))
    spike_log = SpikeLog(n_neurons=2)
    update_log = UpdateLog()
    hi = np.array([0.8 * p.f_max_per_step])
    if accelerate:
        baseline = run_phase(net, state, p.t_free, record_spikes=True)
        targets = hi
    else:
        baseline = run_phase(net, state, p.t_free, nudge=True,
                             record_spikes=True, targets=hi)
        targets = np.array([0.0])
    spike_log.extend(baseline.spike_steps, baseline.spike_neurons,
                     baseline.n_steps)
    res = nudging_phase(net, state, targets, update_log=update_log,
                        record_spikes=True)
    spike_log.extend(res.spike_steps, res.spike_neurons, res.n_steps)
    return net, spike_log, update_log
