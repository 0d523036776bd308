"""Small-instance validation: spiking updates against the rate-based reference.

The protocol builds little three-layer networks with random weights, drives
both the spiking simulator and the rate-based reference with the same
inputs, and compares three quantities pairwise:

* the spiking learner's accumulated nudging-phase weight change,
* the reference two-point (free vs nudged equilibrium) update,
* the central-finite-difference gradient of the fixed-point loss.

Input rates are chosen on the spiking network's achievable-rate grid and the
clamping currents derived from the interspike closed form, so both systems
see identical input activations.  Alignment is reported per weight block as
cosine similarity and sign agreement; overall scale is not compared (the
spiking update carries the learning-rate factor).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import oracle
from .network import Topology, WeightStore, interspike_interval
from .params import HyperParams
from .sim import Network, clamp_inputs, run_phase


def current_for_interval(params: HyperParams, ramp_steps: int) -> float:
    """Constant current making an isolated neuron fire every
    ``t_refract - 1 + ramp_steps`` steps.

    Chosen in the middle of the current band whose geometric membrane ramp
    crosses threshold at exactly ``ramp_steps`` integration steps.
    """
    if ramp_steps < 1:
        raise ValueError("ramp_steps must be >= 1")
    g = params.gamma_lif
    upper = (params.u_th * g / (1.0 - (1.0 - g) ** (ramp_steps - 1))
             if ramp_steps > 1 else 2.0 * params.u_th)
    lower = params.u_th * g / (1.0 - (1.0 - g) ** ramp_steps)
    current = 0.5 * (lower + upper)
    assert interspike_interval(params, current) == params.t_refract - 1 + ramp_steps
    return current


@dataclass
class Instance:
    """One random validation problem: network, inputs in both encodings, target."""

    net: Network
    input_currents: np.ndarray
    input_rates: np.ndarray      # fraction of the maximum rate, used by the oracle
    target_class: int
    seed: int

    @property
    def rate_targets(self) -> np.ndarray:
        """Spiking-side targets in spikes/step (max rate for the labelled class)."""
        t = np.zeros(self.net.topology.n_outputs)
        t[self.target_class] = self.net.params.f_max_per_step
        return t

    @property
    def rho_targets(self) -> np.ndarray:
        """Reference-side targets on the [0, 1] activation scale."""
        t = np.zeros(self.net.topology.n_outputs)
        t[self.target_class] = 1.0
        return t


def make_instance(seed: int, layer_sizes=(5, 8, 3),
                  params: HyperParams | None = None,
                  weight_scale: float = 0.6,
                  hidden_bias: float = 0.2,
                  output_bias: float = 0.15) -> Instance:
    """Random weights, random achievable input rates, random target class.

    Weights are scaled-down uniform fan-based init and hidden/output biases
    mildly positive, keeping the free equilibria responsive (units neither
    dead nor pinned at saturation) so the comparison probes the learning
    dynamics rather than flat regions of the rate curves.
    """
    params = params or HyperParams()
    rng = np.random.default_rng(seed)
    topo = Topology(layer_sizes)
    weights = WeightStore.glorot_init(topo, rng)
    for b in weights.blocks:
        b *= weight_scale
    for l in range(1, topo.n_layers - 1):
        weights.biases[topo.layer_slice(l)] = hidden_bias
    weights.biases[topo.output_slice()] = output_bias
    net = Network(topo, weights, params)

    # input rates on the achievable interspike grid, identical in both systems
    ramp_choices = np.array([2, 3, 4, 5, 6, 8, 10])
    ramps = rng.choice(ramp_choices, size=topo.n_inputs)
    currents = np.array([current_for_interval(params, int(k)) for k in ramps])
    intervals = params.t_refract - 1 + ramps
    rates = (1.0 / intervals) / params.f_max_per_step
    target_class = int(rng.integers(topo.n_outputs))
    return Instance(net, currents, rates, target_class, seed)


def eqspike_updates(inst: Instance, t_free: int | None = None,
                    t_nudge: int | None = None) -> list[np.ndarray]:
    """Accumulated nudging-phase weight change per block (weights restored)."""
    net = inst.net
    p = net.params
    saved = [b.copy() for b in net.weights.blocks]
    saved_bias = net.weights.biases.copy()
    state = net.new_state()
    clamp_inputs(state, inst.input_currents)
    run_phase(net, state, t_free if t_free is not None else p.t_free)
    before = [b.copy() for b in net.weights.blocks]
    run_phase(net, state, t_nudge if t_nudge is not None else p.t_nudge,
              nudge=True, learn=True, targets=inst.rate_targets)
    delta = [after - b4 for after, b4 in zip(net.weights.blocks, before)]
    for b, s in zip(net.weights.blocks, saved):
        b[:] = s
    net.weights.biases[:] = saved_bias
    return delta


def rate_domain_weights(inst: Instance) -> WeightStore:
    """The instance's weights translated to the reference network's units.

    One spike delivers a weight once, so at normalized rate rho = r / f_max
    the mean current is W * f_max * rho per step: the coupling seen on the
    [0, 1] rate scale is the spiking weight times the maximum rate.  Biases
    arrive every step and carry over unchanged.
    """
    f = inst.net.params.f_max_per_step
    w = inst.net.weights
    return WeightStore(inst.net.topology, [b * f for b in w.blocks],
                       w.biases.copy())


def oracle_beta(inst: Instance) -> float:
    """Nudging strength in the reference units (spiking beta times f_max)."""
    return inst.net.params.beta * inst.net.params.f_max_per_step


def oracle_two_point(inst: Instance, beta: float | None = None,
                     **relax_kwargs) -> list[np.ndarray]:
    """Reference two-point update on the instance's weights and inputs."""
    beta = oracle_beta(inst) if beta is None else beta
    relax_kwargs.setdefault("tol", 1e-10)
    relax_kwargs.setdefault("max_steps", 20000)
    w = rate_domain_weights(inst)
    free = oracle.relax(w, inst.input_rates, **relax_kwargs)
    nudged = oracle.relax(w, inst.input_rates, nudge_beta=beta,
                          targets=inst.rho_targets, u0=free.state.u,
                          **relax_kwargs)
    d_blocks, _ = oracle.two_point_update(free.state.rho, nudged.state.rho,
                                          beta, inst.net.topology)
    return d_blocks


def oracle_descent_direction(inst: Instance, epsilon: float = 1e-4) -> list[np.ndarray]:
    """Negated finite-difference loss gradient (the descent direction)."""
    w = rate_domain_weights(inst)
    grads, _ = oracle.finite_diff_gradient(w, inst.input_rates,
                                           inst.rho_targets, epsilon=epsilon,
                                           include_biases=False)
    return [-g for g in grads]


@dataclass
class AlignmentReport:
    """Per-instance, per-block cosine and sign agreement plus their means."""

    seeds: list[int]
    spike_vs_two_point: np.ndarray   # (n_instances, n_blocks, 2): cos, sign
    two_point_vs_gradient: np.ndarray

    def mean_spike_cos(self, block: int) -> float:
        return float(np.nanmean(self.spike_vs_two_point[:, block, 0]))

    def mean_spike_sign(self, block: int) -> float:
        return float(np.nanmean(self.spike_vs_two_point[:, block, 1]))

    def mean_oracle_cos(self, block: int) -> float:
        return float(np.nanmean(self.two_point_vs_gradient[:, block, 0]))


def run_alignment_suite(seeds=range(10), layer_sizes=(5, 8, 3),
                        params: HyperParams | None = None,
                        fd_beta: float = 0.1,
                        check_gradient: bool = True,
                        t_nudge: int | None = 400) -> AlignmentReport:
    """Run the full comparison over a batch of seeded instances."""
    seeds = list(seeds)
    params = params or HyperParams()
    n_blocks = len(layer_sizes) - 1
    sp_tp = np.full((len(seeds), n_blocks, 2), np.nan)
    tp_gr = np.full((len(seeds), n_blocks, 2), np.nan)
    for k, seed in enumerate(seeds):
        inst = make_instance(seed, layer_sizes, params)
        d_spike = eqspike_updates(inst, t_nudge=t_nudge)
        d_tp = oracle_two_point(inst)
        for l in range(n_blocks):
            cos, sign, _ = oracle.compare_updates(d_spike[l], d_tp[l])
            sp_tp[k, l] = (np.nan if cos is None else cos, sign)
        if check_gradient:
            d_tp_small = oracle_two_point(inst, beta=fd_beta)
            descent = oracle_descent_direction(inst)
            for l in range(n_blocks):
                cos, sign, _ = oracle.compare_updates(d_tp_small[l], descent[l])
                tp_gr[k, l] = (np.nan if cos is None else cos, sign)
    return AlignmentReport(seeds, sp_tp, tp_gr)
