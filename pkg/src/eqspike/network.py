"""Layered bidirectional LIF network: topology, weights, membrane dynamics, energy.

The network is a stack of fully connected layers.  Hidden and output layers
are bidirectionally coupled through shared weights: a single matrix per
inter-layer block scales spikes travelling in both directions.  Input neurons
are clamped to static currents and ignore recurrent input, which makes the
first block effectively unidirectional.

Spiking convention (delta synapses): a spike emitted at step t adds the
synaptic weight to the postsynaptic input current at step t+1.  On threshold
crossing the membrane resets to zero and the neuron is refractory; the spike
step itself counts toward the refractory window, so a maximally driven neuron
fires exactly once every ``t_refract`` steps and the peak rate is
``1 / t_refract`` spikes per step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .params import HyperParams


def hard_sigmoid(u):
    """Activation rho(u) = clamp(u, 0, 1), applied elementwise."""
    return np.clip(u, 0.0, 1.0)


class Topology:
    """Fully connected layer stack: sizes, neuron offsets and fan-outs.

    Neurons are globally indexed layer by layer; layer 0 is the input layer
    and the last layer is the output layer.  There are no intra-layer or
    skip connections.
    """

    def __init__(self, layer_sizes: Sequence[int]):
        sizes = tuple(int(s) for s in layer_sizes)
        if len(sizes) < 2:
            raise ValueError("need at least an input and an output layer")
        if any(s < 1 for s in sizes):
            raise ValueError(f"layer sizes must be positive, got {sizes}")
        self.layer_sizes = sizes
        self.offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        self.n_neurons = int(self.offsets[-1])
        self.n_layers = len(sizes)
        # layer index of every global neuron id
        self.layer_of = np.repeat(np.arange(self.n_layers, dtype=np.int64), sizes)

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]

    @property
    def n_blocks(self) -> int:
        return self.n_layers - 1

    def layer_slice(self, layer: int) -> slice:
        return slice(int(self.offsets[layer]), int(self.offsets[layer + 1]))

    def output_slice(self) -> slice:
        return self.layer_slice(self.n_layers - 1)

    def fan_out(self, layer: int) -> int:
        """Number of synapses a spike from ``layer`` transits.

        Input-layer spikes reach the first hidden layer only (clamped inputs
        receive nothing back); spikes from any other layer transit both
        incident blocks.
        """
        if layer == 0:
            return self.layer_sizes[1]
        below = self.layer_sizes[layer - 1]
        above = self.layer_sizes[layer + 1] if layer < self.n_layers - 1 else 0
        return below + above

    def __repr__(self) -> str:
        return f"Topology({'-'.join(str(s) for s in self.layer_sizes)})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Topology) and self.layer_sizes == other.layer_sizes


class WeightStore:
    """Shared symmetric weights per inter-layer block plus per-neuron biases.

    ``blocks[l]`` has shape (layer_sizes[l], layer_sizes[l+1]); the same entry
    W[i, j] scales spikes i -> j and j -> i.  Biases are stored per global
    neuron and are identically zero on the input layer.
    """

    def __init__(self, topology: Topology, blocks: Optional[list] = None,
                 biases: Optional[np.ndarray] = None):
        self.topology = topology
        if blocks is None:
            blocks = [
                np.zeros((topology.layer_sizes[l], topology.layer_sizes[l + 1]))
                for l in range(topology.n_blocks)
            ]
        self.blocks = [np.ascontiguousarray(b, dtype=np.float64) for b in blocks]
        for l, b in enumerate(self.blocks):
            expect = (topology.layer_sizes[l], topology.layer_sizes[l + 1])
            if b.shape != expect:
                raise ValueError(f"block {l} shape {b.shape}, expected {expect}")
        if biases is None:
            biases = np.zeros(topology.n_neurons)
        self.biases = np.ascontiguousarray(biases, dtype=np.float64)
        if self.biases.shape != (topology.n_neurons,):
            raise ValueError("biases must have one entry per neuron")

    @classmethod
    def glorot_init(cls, topology: Topology, rng: np.random.Generator) -> "WeightStore":
        """Uniform init in +-sqrt(6 / (fan_in + fan_out)) per block, zero biases."""
        blocks = []
        for l in range(topology.n_blocks):
            n_in, n_out = topology.layer_sizes[l], topology.layer_sizes[l + 1]
            bound = math.sqrt(6.0 / (n_in + n_out))
            blocks.append(rng.uniform(-bound, bound, size=(n_in, n_out)))
        return cls(topology, blocks)

    def copy(self) -> "WeightStore":
        return WeightStore(
            self.topology,
            [b.copy() for b in self.blocks],
            self.biases.copy(),
        )

    def flat_weights(self) -> np.ndarray:
        return np.concatenate([b.ravel() for b in self.blocks])


@dataclass
class NeuronState:
    """Scalar LIF state used by the single-neuron reference dynamics."""

    u: float = 0.0
    refract_remaining: int = 0
    clamped_current: Optional[float] = None


def step_membrane(state: NeuronState, input_current: float,
                  params: HyperParams) -> tuple[NeuronState, bool]:
    """Advance one LIF neuron by one step; returns the new state and spike flag.

    A refractory neuron first decrements its counter; integration resumes on
    the step the counter reaches zero.  Otherwise the membrane leaks and
    integrates, u <- (1 - gamma_lif) * u + I, and a crossing of u_th emits a
    spike, resets u to zero and arms the refractory counter.
    """
    if not math.isfinite(input_current):
        raise ValueError(f"non-finite input current: {input_current}")
    u = state.u
    refract = state.refract_remaining
    if refract > 0:
        refract -= 1
        if refract > 0:
            return NeuronState(u, refract, state.clamped_current), False
    u = (1.0 - params.gamma_lif) * u + input_current
    spiked = u > params.u_th
    if spiked:
        u = 0.0
        refract = params.t_refract
    return NeuronState(u, refract, state.clamped_current), spiked


def gather_current(weights: WeightStore, spikes_this_step: Iterable[int],
                   neuron: int, clamped_current: Optional[float] = None) -> float:
    """Input current a neuron receives at the next step.

    Returns the neuron's bias plus the shared weight of every spiking
    neighbour (one layer below or above).  Input-layer neurons ignore network
    spikes entirely and return their clamped current.
    """
    topo = weights.topology
    layer = int(topo.layer_of[neuron])
    if layer == 0:
        return 0.0 if clamped_current is None else float(clamped_current)
    local = neuron - int(topo.offsets[layer])
    total = float(weights.biases[neuron])
    for s in spikes_this_step:
        s_layer = int(topo.layer_of[s])
        s_local = s - int(topo.offsets[s_layer])
        if s_layer == layer - 1:
            total += weights.blocks[layer - 1][s_local, local]
        elif s_layer == layer + 1:
            total += weights.blocks[layer][local, s_local]
    return total


def fi_curve(params: HyperParams, current: float, duration: int = 3000) -> float:
    """Empirical firing rate (spikes/step) of an isolated LIF neuron.

    Simulates ``duration`` steps under constant current and divides the spike
    count by the duration.  Monotone non-decreasing in the current and
    saturating at 1 / t_refract.
    """
    state = NeuronState()
    count = 0
    for _ in range(duration):
        state, spiked = step_membrane(state, current, params)
        if spiked:
            count += 1
    return count / duration


def interspike_interval(params: HyperParams, current: float) -> Optional[int]:
    """Closed-form steady interspike interval under constant suprathreshold current.

    The membrane ramps geometrically, u_n = I * (1 - (1-g)^n) / g, after the
    refractory window; the interval is (t_refract - 1) dead steps plus the
    smallest n with u_n > u_th.  Returns None for subthreshold currents
    (asymptote I / g <= u_th never crosses).
    """
    g = params.gamma_lif
    if current <= 0 or current / g <= params.u_th:
        return None
    ratio = 1.0 - g * params.u_th / current
    # smallest integer n with (1-g)^n < ratio
    n = int(math.floor(math.log(ratio) / math.log(1.0 - g))) + 1
    while current * (1.0 - (1.0 - g) ** n) / g <= params.u_th:
        n += 1
    while n > 1 and current * (1.0 - (1.0 - g) ** (n - 1)) / g > params.u_th:
        n -= 1
    return params.t_refract - 1 + n


def calibrate_input_current(params: HyperParams, precision: float = 1e-9) -> float:
    """Smallest current driving an isolated neuron at the saturation rate.

    Used to scale pixel intensities: a full-intensity pixel is clamped to
    this current and fires at f_max.  Bisection against the empirical rate.
    """
    target = params.f_max_per_step
    lo, hi = params.u_th * 0.5, params.u_th * 4.0
    probe_steps = 64 * params.t_refract
    while fi_curve(params, hi, probe_steps) < target:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if fi_curve(params, mid, probe_steps) >= target:
            hi = mid
        else:
            lo = mid
        if hi - lo <= precision:
            break
    return hi


def energy(u: np.ndarray, weights: WeightStore, rho=hard_sigmoid) -> float:
    """Hopfield-style energy of a state vector over the layered topology.

    E(u) = 1/2 sum_i u_i^2 - sum_(i~j) W_ij rho(u_i) rho(u_j)
           - sum_i b_i rho(u_i),

    where i~j runs over connected pairs (each unordered pair once, which is
    the half-sum over ordered pairs of the shared symmetric weights).
    """
    topo = weights.topology
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (topo.n_neurons,):
        raise ValueError(f"state has shape {u.shape}, expected ({topo.n_neurons},)")
    r = rho(u)
    e = 0.5 * float(u @ u)
    for l in range(topo.n_blocks):
        r_lo = r[topo.layer_slice(l)]
        r_hi = r[topo.layer_slice(l + 1)]
        e -= float(r_lo @ weights.blocks[l] @ r_hi)
    e -= float(weights.biases @ r)
    return e
