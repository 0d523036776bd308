"""Synaptic-operation accounting, spike statistics and STDP curve extraction.

A synaptic operation (SynOp) is one spike transiting one synapse.  Spikes
from the input layer reach the first hidden layer only (inputs are clamped
and receive nothing back); spikes from every other layer transit both
incident weight blocks.  The energy model charges a fixed number of
picojoules per SynOp.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .network import Topology
from .sim import SpikeLog, UpdateLog


@dataclass(frozen=True)
class EnergyModel:
    """Per-SynOp energy cost in picojoules."""

    pj_per_synop: float = 10.0

    def __post_init__(self):
        if not self.pj_per_synop > 0:
            raise ValueError("pj_per_synop must be positive")


def count_synops(spike_log: SpikeLog, topology: Topology) -> int:
    """Total synaptic operations of a spike log: sum of per-spike fan-outs."""
    if len(spike_log) == 0:
        return 0
    layer_counts = np.bincount(topology.layer_of[spike_log.neurons],
                               minlength=topology.n_layers)
    fans = np.array([topology.fan_out(l) for l in range(topology.n_layers)],
                    dtype=np.int64)
    return int(layer_counts @ fans)


def block_synops(spike_log: SpikeLog, topology: Topology) -> np.ndarray:
    """SynOps per weight block; sums to :func:`count_synops`."""
    counts = np.bincount(topology.layer_of[spike_log.neurons],
                         minlength=topology.n_layers)
    sizes = topology.layer_sizes
    out = np.zeros(topology.n_blocks, dtype=np.int64)
    for l in range(topology.n_blocks):
        out[l] = counts[l] * sizes[l + 1] + counts[l + 1] * sizes[l]
    return out


def energy_estimate(synops: int, model: EnergyModel = EnergyModel()) -> float:
    """Energy in joules for a SynOp count: synops * pj_per_synop * 1e-12."""
    return synops * model.pj_per_synop * 1e-12


@dataclass
class SpikeStats:
    spikes_per_neuron_per_image: float
    input_layer_spike_fraction: float
    input_block_synop_fraction: float


def spike_stats(spike_log: SpikeLog, topology: Topology, n_images: int) -> SpikeStats:
    """Headline spike statistics of a log covering ``n_images`` presentations."""
    if n_images < 1:
        raise ValueError("n_images must be >= 1")
    total = len(spike_log)
    n_input = int(np.count_nonzero(spike_log.neurons < topology.n_inputs))
    per_block = block_synops(spike_log, topology)
    total_synops = int(per_block.sum())
    return SpikeStats(
        spikes_per_neuron_per_image=total / (topology.n_neurons * n_images),
        input_layer_spike_fraction=n_input / total if total else float("nan"),
        input_block_synop_fraction=(per_block[0] / total_synops
                                    if total_synops else float("nan")),
    )


@dataclass
class StdpCurve:
    """Mean weight update per bin of the post-minus-mean-pre spike timing.

    ``dt_centers`` are bin centres in steps over [-window, +window]; empty
    bins report a zero count.  ``beta_used`` records the nudging strength of
    the run the logs came from.
    """

    dt_centers: np.ndarray
    mean_dw: np.ndarray
    counts: np.ndarray
    window: int
    rate_floor: float
    beta_used: float = float("nan")

    CSV_FIELDS = ("dt_center_steps", "mean_delta_w", "count")

    def rows(self) -> list[list]:
        return [[f"{c:.2f}", f"{m:.6e}", int(n)]
                for c, m, n in zip(self.dt_centers, self.mean_dw, self.counts)]

    def peak_amplitude(self) -> float:
        if not self.counts.any():
            return 0.0
        return float(np.abs(self.mean_dw[self.counts > 0]).max())

    def nonzero_extent(self, floor: float = 0.0) -> int:
        """Number of populated bins whose |mean| exceeds ``floor``."""
        return int(np.count_nonzero((self.counts > 0) & (np.abs(self.mean_dw) > floor)))


def stdp_curve(spike_log: SpikeLog, update_log: UpdateLog, topology: Topology,
               block: int = 0, window: int = 200, rate_floor: float = 0.05,
               f_max_per_step: float = 0.5, beta_used: float = float("nan"),
               n_bins: int = 20) -> StdpCurve:
    """Timing-resolved average weight update for one weight block.

    For every spike of a postsynaptic (upper-layer) neuron j at ``t_post``
    and every synapse (i, j) of the block: the timing coordinate is
    ``t_post`` minus the mean spike time of presynaptic neuron i inside
    ``[t_post - window, t_post)``, and the weight coordinate is the total
    update accumulated on (i, j) since j's previous spike (both spike-gated
    directions of the continual rule contribute).  Synapses whose
    presynaptic neuron fired below ``rate_floor * f_max`` over the window
    are excluded, as are post spikes whose window holds no pre spike.
    Windows never reach across segment boundaries (state resets there).

    Empty logs produce an empty curve, not an error.
    """
    edges = np.linspace(-window, window, n_bins + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    sums = np.zeros(n_bins)
    counts = np.zeros(n_bins, dtype=np.int64)

    pre_off = int(topology.offsets[block])
    pre_n = topology.layer_sizes[block]
    post_off = int(topology.offsets[block + 1])
    post_n = topology.layer_sizes[block + 1]

    bsel = update_log.blocks == block
    u_steps = update_log.steps[bsel]
    u_i = update_log.i[bsel]
    u_j = update_log.j[bsel]
    u_dw = update_log.dw[bsel]

    if len(spike_log) and len(u_steps):
        boundaries = list(spike_log.boundaries) + [spike_log.n_steps]
        min_spikes = rate_floor * f_max_per_step * window
        for seg in range(len(boundaries) - 1):
            lo, hi = int(boundaries[seg]), int(boundaries[seg + 1])
            s_in = (spike_log.steps >= lo) & (spike_log.steps < hi)
            seg_steps = spike_log.steps[s_in]
            seg_neurons = spike_log.neurons[s_in]
            u_in = (u_steps >= lo) & (u_steps < hi)
            if not u_in.any():
                continue
            per_pair: dict[tuple[int, int], list] = {}
            for us, ii, jj, dd in zip(u_steps[u_in], u_i[u_in], u_j[u_in], u_dw[u_in]):
                per_pair.setdefault((int(ii), int(jj)), []).append((int(us), float(dd)))
            pre_times = {
                i: seg_steps[seg_neurons == pre_off + i]
                for i in {p[0] for p in per_pair}
            }
            post_times = {
                j: seg_steps[seg_neurons == post_off + j]
                for j in {p[1] for p in per_pair}
            }
            for (i, j), events in per_pair.items():
                ev_steps = np.array([e[0] for e in events])
                ev_dw = np.array([e[1] for e in events])
                pres = pre_times[i]
                posts = post_times[j]
                prev = lo - 1
                for t_post in posts:
                    t_post = int(t_post)
                    in_interval = (ev_steps > prev) & (ev_steps <= t_post)
                    w_lo = max(t_post - window, lo)
                    in_win = pres[(pres >= w_lo) & (pres < t_post)]
                    # only post spikes that actually triggered updates count
                    # as events (spikes outside the learning phase do not)
                    if in_interval.any() and len(in_win) >= max(1, min_spikes):
                        dt = t_post - float(in_win.mean())
                        dw_sum = float(ev_dw[in_interval].sum())
                        b = min(int((dt + window) / (2 * window / n_bins)), n_bins - 1)
                        sums[b] += dw_sum
                        counts[b] += 1
                    prev = t_post
    mean = np.divide(sums, counts, out=np.zeros(n_bins), where=counts > 0)
    return StdpCurve(dt_centers=centers, mean_dw=mean, counts=counts,
                     window=window, rate_floor=rate_floor, beta_used=beta_used)
