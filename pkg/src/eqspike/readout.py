"""Class decisions from output spike activity, and accuracy-versus-time curves.

Two readouts: the highest output spike count over a trailing window (rate
readout), and the earliest output spike (first-spike readout).  Ties break
toward the lowest class index everywhere.  Images without any output spike
within the horizon are scored incorrect rather than excluded, which keeps
the accuracy curves conservative.  Readouts never mutate network state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .metrics import count_synops
from .sim import Network, SpikeLog, clamp_inputs, run_phase


@dataclass
class InferenceResult:
    """Per-image inference outcome under both readouts."""

    rate_class: int
    first_spike_class: Optional[int]
    first_spike_step: Optional[int]
    spikes_before_first_output: Optional[int]
    spike_log: Optional[SpikeLog] = None


@dataclass
class AccuracyCurve:
    """Accuracy and cost of both readouts as a function of the horizon."""

    horizons: np.ndarray          # steps
    t_times_fmax: np.ndarray      # horizons * dt * f_max
    rate_acc: np.ndarray
    first_spike_acc: np.ndarray
    mean_synops: np.ndarray
    mean_spikes: np.ndarray
    mean_first_spike_step: float  # over images that produced an output spike
    mean_spikes_before_first_output: float

    def rows(self) -> list[list]:
        return [
            [f"{self.t_times_fmax[k]:.6g}", f"{self.rate_acc[k]:.6f}",
             f"{self.first_spike_acc[k]:.6f}", f"{self.mean_synops[k]:.2f}",
             f"{self.mean_spikes[k]:.2f}"]
            for k in range(len(self.horizons))
        ]

    CSV_FIELDS = ("t_times_fmax", "rate_acc", "first_spike_acc",
                  "mean_synops", "mean_spikes")


def rate_readout(spike_log: SpikeLog, output_neurons: range, window: int,
                 horizon: Optional[int] = None) -> int:
    """Class with the most output spikes over the trailing window.

    The window covers steps [horizon - window, horizon); the horizon defaults
    to the log's full length.  Ties resolve to the lowest class index.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    horizon = spike_log.n_steps if horizon is None else horizon
    lo = max(horizon - window, 0)
    sel = ((spike_log.steps >= lo) & (spike_log.steps < horizon)
           & (spike_log.neurons >= output_neurons.start)
           & (spike_log.neurons < output_neurons.stop))
    counts = np.bincount(spike_log.neurons[sel] - output_neurons.start,
                         minlength=len(output_neurons))
    return int(np.argmax(counts))


def first_spike_readout(spike_log: SpikeLog, output_neurons: range,
                        horizon: Optional[int] = None) -> Optional[tuple[int, int]]:
    """Class of the earliest output spike, or None if no output spiked.

    Simultaneous first spikes break toward the lowest class index.  The
    caller scores a None as incorrect.
    """
    horizon = spike_log.n_steps if horizon is None else horizon
    sel = ((spike_log.steps < horizon)
           & (spike_log.neurons >= output_neurons.start)
           & (spike_log.neurons < output_neurons.stop))
    if not sel.any():
        return None
    steps = spike_log.steps[sel]
    neurons = spike_log.neurons[sel]
    t = int(steps.min())
    at_t = neurons[steps == t]
    return int(at_t.min() - output_neurons.start), t


def infer_image(net: Network, image: np.ndarray, horizon: int,
                window: int = 100, keep_log: bool = False) -> InferenceResult:
    """Run one free inference to ``horizon`` steps and apply both readouts."""
    state = net.new_state()
    clamp_inputs(state, image * net.i_max)
    res = run_phase(net, state, horizon, record_spikes=True)
    log = SpikeLog(res.spike_steps, res.spike_neurons, horizon,
                   net.topology.n_neurons)
    out = net.topology.output_slice()
    out_range = range(out.start, out.stop)
    first = first_spike_readout(log, out_range)
    n_before = None
    if first is not None:
        n_before = int(np.count_nonzero(log.steps < first[1]))
    return InferenceResult(
        rate_class=rate_readout(log, out_range, min(window, horizon) or 1),
        first_spike_class=None if first is None else first[0],
        first_spike_step=None if first is None else first[1],
        spikes_before_first_output=n_before,
        spike_log=log if keep_log else None,
    )


def accuracy_vs_time(net: Network, images: np.ndarray, labels: np.ndarray,
                     horizons, window: int = 100) -> AccuracyCurve:
    """Score both readouts at every horizon with a single run per image.

    Each image is simulated once to the largest horizon with full spike
    recording; shorter horizons are scored by truncating the log, so all
    points of the curve describe the same spike trains.
    """
    horizons = np.asarray(sorted(int(h) for h in horizons), dtype=np.int64)
    if len(horizons) == 0 or horizons[-1] < 1:
        raise ValueError("need at least one positive horizon")
    max_h = int(horizons[-1])
    topo = net.topology
    out = topo.output_slice()
    out_range = range(out.start, out.stop)

    rate_hits = np.zeros(len(horizons))
    first_hits = np.zeros(len(horizons))
    synops_sum = np.zeros(len(horizons))
    spikes_sum = np.zeros(len(horizons))
    first_steps = []
    before_first = []

    state = net.new_state()
    for img, label in zip(images, labels):
        state.reset()
        clamp_inputs(state, img * net.i_max)
        res = run_phase(net, state, max_h, record_spikes=True)
        log = SpikeLog(res.spike_steps, res.spike_neurons, max_h, topo.n_neurons)
        first = first_spike_readout(log, out_range)
        if first is not None:
            first_steps.append(first[1])
            before_first.append(int(np.count_nonzero(log.steps < first[1])))
        for k, h in enumerate(horizons):
            truncated = log.steps < h
            spikes_sum[k] += int(truncated.sum())
            synops_sum[k] += count_synops(
                SpikeLog(log.steps[truncated], log.neurons[truncated], int(h),
                         topo.n_neurons), topo)
            w = max(1, min(window, int(h)))
            if rate_readout(log, out_range, w, horizon=int(h)) == label:
                rate_hits[k] += 1
            if first is not None and first[1] < h and first[0] == label:
                first_hits[k] += 1
    n = len(labels)
    p = net.params
    return AccuracyCurve(
        horizons=horizons,
        t_times_fmax=horizons * p.dt * p.f_max,
        rate_acc=rate_hits / n,
        first_spike_acc=first_hits / n,
        mean_synops=synops_sum / n,
        mean_spikes=spikes_sum / n,
        mean_first_spike_step=float(np.mean(first_steps)) if first_steps else float("nan"),
        mean_spikes_before_first_output=(float(np.mean(before_first))
                                         if before_first else float("nan")),
    )
