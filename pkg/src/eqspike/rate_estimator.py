"""Per-neuron spike-train to rate-derivative pipeline.

Three stages, evaluated once per step in this order, all on the current
step's spike indicator:

1. leaky integrator (no reset, no spikes): v_li <- (1 - gamma_li) * v_li + s.
   At steady state v_li fluctuates around rate / gamma_li.
2. delayed difference: v_li(t) - v_li(t - tau), approximately
   tau * dv_li/dt, i.e. (tau / gamma_li) times the rate derivative.
3. moving average over the last n_filt difference values, smoothing ripple.

The smoothed output is the signal consumed by the learning rule: a per-spike
weight update of eta_r times this signal realises an effective update of
eta_r * (tau / gamma_li) * (rate derivative).

Warm-up: history that does not exist yet is read as the earliest recorded
value, so the reported derivative starts at exactly zero instead of a
spurious jump.
"""

from __future__ import annotations

import numpy as np

from .params import HyperParams


class RateTracker:
    """Rate-derivative estimator for a single spike train."""

    def __init__(self, params: HyperParams):
        self.params = params
        self.v_li = 0.0
        self.delay_ring = np.zeros(params.tau)
        self.avg_ring = np.zeros(params.n_filt)
        self.ring_sum = 0.0
        self.tick = 0
        self._delayed_value = 0.0
        self.deriv_smoothed = 0.0

    def li_step(self, spiked: bool) -> None:
        """Advance the leaky integrator and its delay line by one step."""
        self.v_li = (1.0 - self.params.gamma_li) * self.v_li + (1.0 if spiked else 0.0)
        if self.tick == 0:
            # missing history reads as the earliest recorded value
            self.delay_ring[:] = self.v_li
        idx = self.tick % self.params.tau
        self._delayed_value = self.delay_ring[idx]
        self.delay_ring[idx] = self.v_li

    def delayed_difference(self) -> float:
        """v_li(t) - v_li(t - tau), with warm-up reads clamped to v_li(1)."""
        return self.v_li - self._delayed_value

    def smooth_and_scale(self) -> float:
        """Fold the current delayed difference into the moving average.

        Must be called exactly once per step, after :meth:`li_step`.  Returns
        the n_filt-point average, the smoothed derivative signal.
        """
        vdel = self.delayed_difference()
        aidx = self.tick % self.params.n_filt
        self.ring_sum += vdel - self.avg_ring[aidx]
        self.avg_ring[aidx] = vdel
        self.tick += 1
        self.deriv_smoothed = self.ring_sum / self.params.n_filt
        return self.deriv_smoothed

    def update(self, spiked: bool) -> float:
        """One full pipeline step; returns the smoothed derivative signal."""
        self.li_step(spiked)
        return self.smooth_and_scale()

    @property
    def rate(self) -> float:
        """Instantaneous rate estimate in spikes/step, v_li * gamma_li."""
        return self.v_li * self.params.gamma_li

    def reset(self) -> None:
        self.v_li = 0.0
        self.delay_ring[:] = 0.0
        self.avg_ring[:] = 0.0
        self.ring_sum = 0.0
        self.tick = 0
        self._delayed_value = 0.0
        self.deriv_smoothed = 0.0


def run_pipeline(spikes: np.ndarray, params: HyperParams) -> np.ndarray:
    """Feed a 0/1 spike train through a fresh tracker; returns the output trace."""
    tracker = RateTracker(params)
    out = np.empty(len(spikes))
    for t, s in enumerate(spikes):
        out[t] = tracker.update(bool(s))
    return out


def periodic_spike_train(period: int, n_steps: int, phase: int = 0) -> np.ndarray:
    """0/1 train spiking every ``period`` steps, first spike at ``phase``."""
    train = np.zeros(n_steps, dtype=np.int8)
    train[phase::period] = 1
    return train


def ramped_rate_spike_train(n_steps: int, rate_start: float, rate_end: float) -> np.ndarray:
    """Deterministic train whose instantaneous rate ramps linearly.

    Spikes are placed by integrating the rate and firing at each unit
    crossing of the accumulated phase, so the realised rate tracks the ramp
    exactly up to one-step quantisation.
    """
    rates = np.linspace(rate_start, rate_end, n_steps)
    train = np.zeros(n_steps, dtype=np.int8)
    acc = 0.0
    for t in range(n_steps):
        acc += rates[t]
        if acc >= 1.0:
            train[t] = 1
            acc -= 1.0
    return train
