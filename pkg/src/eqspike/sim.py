"""Full-network simulation state, spike/update logs, and phase execution."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernel
from .network import Topology, WeightStore, calibrate_input_current
from .params import HyperParams


class SpikeLog:
    """Time-ordered record of (step, neuron) spike events.

    ``boundaries`` holds the starting absolute step of each recorded segment
    (one segment per simulated image); windowed analyses must not reach
    across a boundary because state and trackers reset there.
    """

    def __init__(self, steps=None, neurons=None, n_steps: int = 0,
                 n_neurons: int = 0, boundaries=None):
        self.steps = np.asarray(steps if steps is not None else [], dtype=np.int64)
        self.neurons = np.asarray(neurons if neurons is not None else [], dtype=np.int64)
        self.n_steps = int(n_steps)
        self.n_neurons = int(n_neurons)
        self.boundaries = np.asarray(
            boundaries if boundaries is not None else [0], dtype=np.int64)
        if self.steps.shape != self.neurons.shape:
            raise ValueError("steps and neurons must have equal length")
        if len(self.steps) > 1 and np.any(np.diff(self.steps) < 0):
            raise ValueError("spike steps must be non-decreasing")

    def __len__(self) -> int:
        return len(self.steps)

    def extend(self, steps: np.ndarray, neurons: np.ndarray, n_steps: int,
               new_segment: bool = False) -> None:
        if new_segment and self.n_steps > 0:
            self.boundaries = np.append(self.boundaries, self.n_steps)
        self.steps = np.concatenate([self.steps, steps.astype(np.int64)])
        self.neurons = np.concatenate([self.neurons, neurons.astype(np.int64)])
        self.n_steps += int(n_steps)

    def save(self, path) -> None:
        np.savez_compressed(path, steps=self.steps, neurons=self.neurons,
                            n_steps=self.n_steps, n_neurons=self.n_neurons,
                            boundaries=self.boundaries)

    @classmethod
    def load(cls, path) -> "SpikeLog":
        with np.load(path) as z:
            return cls(z["steps"], z["neurons"], int(z["n_steps"]),
                       int(z["n_neurons"]), z["boundaries"])


class UpdateLog:
    """Record of per-spike weight updates (step, block, i, j, delta_w, phase).

    ``phase`` is 0 for the free phase and 1 for the nudging phase; with
    learning gated to the nudging phase every entry carries phase 1.
    """

    FREE, NUDGE = 0, 1

    def __init__(self, steps=None, blocks=None, i=None, j=None, dw=None, phase=None):
        z = lambda a, t: np.asarray(a if a is not None else [], dtype=t)
        self.steps = z(steps, np.int64)
        self.blocks = z(blocks, np.int64)
        self.i = z(i, np.int64)
        self.j = z(j, np.int64)
        self.dw = z(dw, np.float64)
        self.phase = z(phase, np.int64)

    def __len__(self) -> int:
        return len(self.steps)

    def extend(self, steps, blocks, i, j, dw, phase: int) -> None:
        self.steps = np.concatenate([self.steps, steps.astype(np.int64)])
        self.blocks = np.concatenate([self.blocks, blocks.astype(np.int64)])
        self.i = np.concatenate([self.i, i.astype(np.int64)])
        self.j = np.concatenate([self.j, j.astype(np.int64)])
        self.dw = np.concatenate([self.dw, dw.astype(np.float64)])
        self.phase = np.concatenate(
            [self.phase, np.full(len(steps), phase, dtype=np.int64)])

    def accumulated_block(self, block: int, shape: tuple[int, int]) -> np.ndarray:
        """Sum of logged updates per synapse of one block."""
        total = np.zeros(shape)
        sel = self.blocks == block
        np.add.at(total, (self.i[sel], self.j[sel]), self.dw[sel])
        return total

    def save(self, path) -> None:
        np.savez_compressed(path, steps=self.steps, blocks=self.blocks,
                            i=self.i, j=self.j, dw=self.dw, phase=self.phase)

    @classmethod
    def load(cls, path) -> "UpdateLog":
        with np.load(path) as z:
            return cls(z["steps"], z["blocks"], z["i"], z["j"], z["dw"], z["phase"])


@dataclass
class PhaseResult:
    """Counters and optional event arrays produced by one phase run."""

    n_steps: int
    synops: int
    layer_spike_counts: np.ndarray
    spike_steps: Optional[np.ndarray] = None
    spike_neurons: Optional[np.ndarray] = None
    upd_steps: Optional[np.ndarray] = None
    upd_blocks: Optional[np.ndarray] = None
    upd_i: Optional[np.ndarray] = None
    upd_j: Optional[np.ndarray] = None
    upd_dw: Optional[np.ndarray] = None

    @property
    def total_spikes(self) -> int:
        return int(self.layer_spike_counts.sum())


class SimState:
    """Mutable per-run state: membranes, refractory counters, trackers, wiring."""

    def __init__(self, topology: Topology, params: HyperParams):
        n = topology.n_neurons
        self.topology = topology
        self.params = params
        self.u = np.zeros(n)
        self.refract = np.zeros(n, dtype=np.int64)
        self.v_li = np.zeros(n)
        self.delay_ring = np.zeros((params.tau, n))
        self.avg_ring = np.zeros((params.n_filt, n))
        self.ring_sum = np.zeros(n)
        self.rho_bar = np.zeros(n)
        self.tick = 0
        self.prev_spikes = np.zeros(n, dtype=np.int64)
        self.n_prev = 0
        self.clamped = np.zeros(topology.n_inputs)
        self.step = 0  # absolute step within the current segment

    def reset(self) -> None:
        self.u[:] = 0.0
        self.refract[:] = 0
        self.v_li[:] = 0.0
        self.delay_ring[:] = 0.0
        self.avg_ring[:] = 0.0
        self.ring_sum[:] = 0.0
        self.rho_bar[:] = 0.0
        self.tick = 0
        self.n_prev = 0
        self.clamped[:] = 0.0
        self.step = 0

    def output_rates(self) -> np.ndarray:
        """Instantaneous output rate estimates in spikes/step (v_li * gamma_li)."""
        sl = self.topology.output_slice()
        return self.v_li[sl] * self.params.gamma_li

    def layer_rates(self, layer: int) -> np.ndarray:
        sl = self.topology.layer_slice(layer)
        return self.v_li[sl] * self.params.gamma_li


class Network:
    """Topology + weights + parameters, with input-current calibration."""

    def __init__(self, topology: Topology, weights: WeightStore, params: HyperParams):
        if weights.topology != topology:
            raise ValueError("weights were built for a different topology")
        self.topology = topology
        self.weights = weights
        self.params = params
        self._typed_blocks = None
        self._i_max: Optional[float] = None

    @classmethod
    def create(cls, layer_sizes, params: HyperParams, seed: int = 0) -> "Network":
        topo = Topology(layer_sizes)
        rng = np.random.default_rng(seed)
        return cls(topo, WeightStore.glorot_init(topo, rng), params)

    @property
    def i_max(self) -> float:
        """Clamped current of a full-intensity pixel (drives the neuron at f_max)."""
        if self._i_max is None:
            self._i_max = calibrate_input_current(self.params)
        return self._i_max

    def blocks_typed(self):
        if self._typed_blocks is None:
            self._typed_blocks = kernel.typed_blocks(self.weights.blocks)
        return self._typed_blocks

    def new_state(self) -> SimState:
        return SimState(self.topology, self.params)


def clamp_inputs(state: SimState, image_currents: np.ndarray) -> SimState:
    """Set the static input currents; raises on a shape mismatch."""
    currents = np.asarray(image_currents, dtype=np.float64)
    if currents.shape != (state.topology.n_inputs,):
        raise ValueError(
            f"expected {state.topology.n_inputs} input currents, got {currents.shape}")
    state.clamped[:] = currents
    return state


_EMPTY_I64 = np.empty(0, dtype=np.int64)
_EMPTY_F64 = np.empty(0, dtype=np.float64)


def run_phase(net: Network, state: SimState, n_steps: int, *,
              nudge: bool = False, learn: bool = False,
              targets: Optional[np.ndarray] = None,
              fixed_grad: Optional[np.ndarray] = None,
              record_spikes: bool = False,
              record_updates: bool = False,
              update_cap: int = 0,
              update_block_filter: int = -1,
              update_pre_mask: Optional[np.ndarray] = None,
              learn_biases: bool = True) -> PhaseResult:
    """Advance the network by one phase, mutating state (and weights if learning)."""
    topo = net.topology
    p = net.params
    n = topo.n_neurons
    n_out = topo.n_outputs

    if targets is None:
        targets = np.zeros(n_out)
    targets = np.asarray(targets, dtype=np.float64)
    use_fixed = fixed_grad is not None
    fixed = np.asarray(fixed_grad, dtype=np.float64) if use_fixed else np.zeros(n_out)

    spike_cap = 0
    spike_steps = spike_neurons = _EMPTY_I64
    if record_spikes:
        spike_cap = n * (n_steps // p.t_refract + 1)
        spike_steps = np.empty(spike_cap, dtype=np.int64)
        spike_neurons = np.empty(spike_cap, dtype=np.int64)

    upd_cap = 0
    upd_steps = upd_blocks = upd_i = upd_j = _EMPTY_I64
    upd_dw = _EMPTY_F64
    if record_updates:
        if update_cap <= 0:
            # worst case: every possible spike updates every incident synapse
            max_fan = max(topo.fan_out(l) for l in range(topo.n_layers))
            update_cap = n * (n_steps // p.t_refract + 1) * max_fan
        upd_cap = int(update_cap)
        upd_steps = np.empty(upd_cap, dtype=np.int64)
        upd_blocks = np.empty(upd_cap, dtype=np.int64)
        upd_i = np.empty(upd_cap, dtype=np.int64)
        upd_j = np.empty(upd_cap, dtype=np.int64)
        upd_dw = np.empty(upd_cap, dtype=np.float64)
    if update_pre_mask is None:
        pre_mask = np.ones(n, dtype=np.uint8)
    else:
        pre_mask = np.ascontiguousarray(update_pre_mask, dtype=np.uint8)

    layer_counts = np.zeros(topo.n_layers, dtype=np.int64)

    (state.tick, state.n_prev, n_spk, n_upd, synops, overflow) = kernel.run_phase(
        topo.offsets, topo.layer_of, topo.n_layers,
        p.gamma_lif, p.gamma_li, p.u_th, p.tau, p.n_filt, p.t_refract,
        net.blocks_typed(), net.weights.biases,
        state.u, state.refract, state.v_li, state.delay_ring, state.avg_ring,
        state.ring_sum, state.rho_bar,
        state.tick, state.prev_spikes, state.n_prev, state.clamped,
        n_steps, state.step,
        nudge, p.beta, targets, use_fixed, fixed,
        learn, p.eta_r, learn_biases,
        spike_cap, spike_steps, spike_neurons,
        upd_cap, upd_steps, upd_blocks, upd_i, upd_j, upd_dw,
        update_block_filter, pre_mask,
        layer_counts,
    )
    if overflow:
        raise RuntimeError("recording buffer overflow; raise update_cap")
    state.step += n_steps

    return PhaseResult(
        n_steps=n_steps,
        synops=int(synops),
        layer_spike_counts=layer_counts,
        spike_steps=spike_steps[:n_spk] if record_spikes else None,
        spike_neurons=spike_neurons[:n_spk] if record_spikes else None,
        upd_steps=upd_steps[:n_upd] if record_updates else None,
        upd_blocks=upd_blocks[:n_upd] if record_updates else None,
        upd_i=upd_i[:n_upd] if record_updates else None,
        upd_j=upd_j[:n_upd] if record_updates else None,
        upd_dw=upd_dw[:n_upd] if record_updates else None,
    )
