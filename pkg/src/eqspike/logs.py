"""Recording spike and update logs during training runs.

Full-network training produces far too many events to keep, so recording is
restricted to the first ``n_images`` presentations of epoch 1 (the protocol
used for timing analyses) and, for weight updates, to one weight block with
an optional presynaptic-neuron stride.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .sim import Network, PhaseResult, SpikeLog, UpdateLog
from .trainer import TrainerConfig, TrainResult, train


@dataclass
class TrainingLogRecorder:
    """Collects per-image spike/update logs for the first images of epoch 1."""

    n_images: int
    block: int = 0
    pre_stride: int = 1
    update_cap_per_image: int = 4_000_000
    spike_log: SpikeLog = field(default_factory=SpikeLog)
    update_log: UpdateLog = field(default_factory=UpdateLog)
    _recorded: int = 0

    def wants(self, epoch: int, presentation_index: int) -> bool:
        return epoch == 1 and presentation_index < self.n_images

    def phase_kwargs(self, net: Network) -> dict:
        mask = np.zeros(net.topology.n_neurons, dtype=np.uint8)
        lo = net.topology.layer_slice(self.block)
        mask[lo.start:lo.stop:self.pre_stride] = 1
        return dict(record_spikes=True, record_updates=True,
                    update_block_filter=self.block, update_pre_mask=mask,
                    update_cap=self.update_cap_per_image)

    def collect(self, net: Network, free: PhaseResult, nudge: PhaseResult | None) -> None:
        # per-image steps are zero-based; re-base them onto the global axis
        offset = self.spike_log.n_steps
        steps = [free.spike_steps]
        neurons = [free.spike_neurons]
        n_steps = free.n_steps
        if nudge is not None:
            steps.append(nudge.spike_steps)
            neurons.append(nudge.spike_neurons)
            n_steps += nudge.n_steps
        self.spike_log.extend(np.concatenate(steps) + offset,
                              np.concatenate(neurons), n_steps, new_segment=True)
        if self.spike_log.n_neurons == 0:
            self.spike_log.n_neurons = net.topology.n_neurons
        if nudge is not None and nudge.upd_steps is not None and len(nudge.upd_steps):
            self.update_log.extend(nudge.upd_steps + offset, nudge.upd_blocks,
                                   nudge.upd_i, nudge.upd_j, nudge.upd_dw,
                                   UpdateLog.NUDGE)
        self._recorded += 1


def train_with_logs(dataset, config: TrainerConfig,
                    recorder: TrainingLogRecorder, **train_kwargs) -> TrainResult:
    """Run :func:`eqspike.trainer.train` with log recording attached.

    Recorded spike steps are re-based onto one global, ever-increasing step
    axis with a segment boundary per image, so windowed analyses can avoid
    crossing image boundaries.
    """
    return train(dataset, config, recorder=recorder, **train_kwargs)
