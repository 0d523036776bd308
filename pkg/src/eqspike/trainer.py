"""Training orchestration: free phase, nudging phase, skip gating, epochs.

One image presentation runs the free phase (inference, no force, no
learning), gates on the output-rate error, and, when the error exceeds the
skip threshold, runs the nudging phase during which output membranes are
pushed toward their target rates and every spike triggers the local weight
updates.  Weights persist across images (online updates, batch size one);
trackers and membranes reset between images.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .params import HyperParams
from .sim import Network, PhaseResult, SimState, UpdateLog, clamp_inputs, run_phase


@dataclass(frozen=True)
class TrainerConfig:
    """Everything the training loop needs beyond the simulator parameters.

    ``target_rate_hi``/``target_rate_lo`` are output rate targets in
    spikes/step (defaults: the maximum rate 1/t_refract for the labelled
    class, zero for the rest).  ``skip_threshold`` is the relative
    rate-deviation threshold of the nudge gate, as a fraction of the maximum
    rate.  ``nudge_with_instantaneous_rates`` selects between recomputing the
    output error from the instantaneous tracker rates every nudging step
    (default) and freezing the error measured at the end of the free phase.
    """

    hyper: HyperParams = field(default_factory=HyperParams)
    layer_sizes: tuple = (784, 100, 10)
    target_rate_hi: Optional[float] = None
    target_rate_lo: float = 0.0
    skip_threshold: float = 0.01
    epochs: int = 10
    seed: int = 0
    shuffle: bool = True
    eval_steps: int = 200
    eval_window: int = 100
    nudge_with_instantaneous_rates: bool = True
    learn_biases: bool = True

    def __post_init__(self):
        hi = self.rate_hi
        if hi > self.hyper.f_max_per_step + 1e-12:
            raise ValueError("target_rate_hi cannot exceed the maximum rate 1/t_refract")
        if self.skip_threshold < 0:
            raise ValueError("skip_threshold must be >= 0")

    @property
    def rate_hi(self) -> float:
        return (self.hyper.f_max_per_step
                if self.target_rate_hi is None else self.target_rate_hi)

    def targets_for(self, label: int, n_classes: int) -> np.ndarray:
        t = np.full(n_classes, self.target_rate_lo)
        t[label] = self.rate_hi
        return t


@dataclass
class EpochMetrics:
    epoch: int
    train_acc: float
    test_acc: float
    nudged_images: int
    spikes_per_neuron_per_image: float
    synops_cumulative: int

    CSV_FIELDS = ("epoch", "train_acc", "test_acc", "nudged_images",
                  "spikes_per_neuron_per_image", "synops_cumulative")

    def row(self) -> list:
        return [self.epoch, f"{self.train_acc:.6f}", f"{self.test_acc:.6f}",
                self.nudged_images, f"{self.spikes_per_neuron_per_image:.6f}",
                self.synops_cumulative]


@dataclass
class TrainResult:
    network: Network
    metrics: list[EpochMetrics]

    @property
    def final_test_acc(self) -> float:
        return self.metrics[-1].test_acc if self.metrics else float("nan")


def compute_error_gradient(output_rates: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Gradient of the squared rate error, rho - target, per output neuron."""
    output_rates = np.asarray(output_rates, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if output_rates.shape != targets.shape:
        raise ValueError("rates and targets must have equal length")
    return output_rates - targets


def nudge_outputs(state: SimState, grad: np.ndarray, hyper: HyperParams) -> SimState:
    """Push output membranes along -beta * grad (applied before the LIF update).

    Refractory neurons receive the nudge into their post-reset potential as
    well; only the leak/integration part of the update is suspended for them.
    """
    sl = state.topology.output_slice()
    state.u[sl] -= hyper.beta * np.asarray(grad, dtype=np.float64)
    return state


def should_nudge(output_rates: np.ndarray, targets: np.ndarray,
                 config: TrainerConfig) -> bool:
    """True iff some output rate misses its target by more than the threshold.

    The deviation is compared per output (max over classes) against
    ``skip_threshold`` times the maximum rate; the boundary case is excluded
    (strict inequality).
    """
    dev = np.abs(np.asarray(targets) - np.asarray(output_rates)).max()
    return bool(dev > config.skip_threshold * config.hyper.f_max_per_step)


def free_phase(net: Network, state: SimState, image_currents: np.ndarray,
               **record_kwargs) -> tuple[np.ndarray, PhaseResult]:
    """Clamp the image and relax for t_free steps without force or learning."""
    clamp_inputs(state, image_currents)
    result = run_phase(net, state, net.params.t_free, nudge=False, learn=False,
                       **record_kwargs)
    return state.output_rates(), result


def nudging_phase(net: Network, state: SimState, targets: np.ndarray,
                  config: Optional[TrainerConfig] = None,
                  update_log: Optional[UpdateLog] = None,
                  **record_kwargs) -> PhaseResult:
    """Run t_nudge steps with the output force on and learning enabled.

    Trackers carry over from the free phase: the free equilibrium is the
    baseline against which nudge-induced rate changes are measured.  All
    updates apply immediately; when an ``update_log`` is given every synapse
    update is appended to it.
    """
    config = config or TrainerConfig(hyper=net.params)
    fixed_grad = None
    if not config.nudge_with_instantaneous_rates:
        fixed_grad = compute_error_gradient(state.output_rates(), targets)
    record_updates = update_log is not None or record_kwargs.pop("record_updates", False)
    result = run_phase(net, state, net.params.t_nudge, nudge=True, learn=True,
                       targets=targets, fixed_grad=fixed_grad,
                       record_updates=record_updates,
                       learn_biases=config.learn_biases, **record_kwargs)
    if update_log is not None and result.upd_steps is not None:
        update_log.extend(result.upd_steps, result.upd_blocks, result.upd_i,
                          result.upd_j, result.upd_dw, UpdateLog.NUDGE)
    return result


def evaluate(net: Network, images: np.ndarray, labels: np.ndarray,
             eval_steps: int, eval_window: int,
             state: Optional[SimState] = None) -> float:
    """Rate-readout accuracy over a dataset with frozen weights.

    Runs each image for ``eval_steps`` free steps and classifies by the
    highest output spike count over the trailing ``eval_window`` steps
    (ties broken toward the lowest class index).
    """
    state = state or net.new_state()
    window = min(eval_window, eval_steps)
    warmup = eval_steps - window
    out = net.topology.output_slice()
    i_max = net.i_max
    correct = 0
    for img, label in zip(images, labels):
        state.reset()
        clamp_inputs(state, img * i_max)
        if warmup:
            run_phase(net, state, warmup)
        res = run_phase(net, state, window, record_spikes=True)
        sel = res.spike_neurons[res.spike_neurons >= out.start]
        counts = np.bincount(sel - out.start, minlength=net.topology.n_outputs)
        if int(np.argmax(counts)) == int(label):
            correct += 1
    return correct / len(labels) if len(labels) else float("nan")


def train(dataset, config: TrainerConfig,
          csv_path=None,
          progress: Optional[Callable[[EpochMetrics], None]] = None,
          net: Optional[Network] = None,
          recorder=None) -> TrainResult:
    """Online training over the dataset; returns the network and epoch metrics.

    ``dataset`` carries train/test images (float intensities in [0, 1]) and
    integer labels; a fresh network is built from ``config.layer_sizes``
    unless an existing one is passed in.  Per-epoch rows can be streamed to
    a CSV run log.  Training accuracy is measured online from the free
    phases of the epoch itself; test accuracy from a frozen-weight
    evaluation pass.

    ``recorder``, when given, selects image presentations to record
    (``recorder.wants(epoch, presentation_index)``) and receives their spike
    and update events (``recorder.collect(...)``); see
    :class:`eqspike.logs.TrainingLogRecorder`.
    """
    if len(dataset.train_images) == 0:
        raise ValueError("training dataset is empty")
    hyper = config.hyper
    if net is None:
        net = Network.create(config.layer_sizes, hyper, seed=config.seed)
    topo = net.topology
    if dataset.train_images.shape[1] != topo.n_inputs:
        raise ValueError(f"dataset has {dataset.train_images.shape[1]} pixels, "
                         f"network expects {topo.n_inputs}")
    n_classes = topo.n_outputs
    rng = np.random.default_rng(config.seed)
    i_max = net.i_max

    state = net.new_state()
    eval_state = net.new_state()
    writer = None
    csv_file = None
    if csv_path is not None:
        csv_file = open(csv_path, "w", newline="")
        writer = csv.writer(csv_file)
        writer.writerow(EpochMetrics.CSV_FIELDS)

    metrics: list[EpochMetrics] = []
    synops_total = 0
    try:
        for epoch in range(1, config.epochs + 1):
            order = (rng.permutation(len(dataset.train_images)) if config.shuffle
                     else np.arange(len(dataset.train_images)))
            nudged = 0
            correct = 0
            spikes = 0
            for k, idx in enumerate(order):
                label = int(dataset.train_labels[idx])
                record = recorder is not None and recorder.wants(epoch, k)
                rec_kwargs = recorder.phase_kwargs(net) if record else {}
                state.reset()
                rates, res_free = free_phase(net, state,
                                             dataset.train_images[idx] * i_max,
                                             **rec_kwargs)
                synops_total += res_free.synops
                spikes += res_free.total_spikes
                if int(np.argmax(rates)) == label:
                    correct += 1
                targets = config.targets_for(label, n_classes)
                res_n = None
                if should_nudge(rates, targets, config):
                    nudged += 1
                    res_n = nudging_phase(net, state, targets, config,
                                          **rec_kwargs)
                    synops_total += res_n.synops
                    spikes += res_n.total_spikes
                if record:
                    recorder.collect(net, res_free, res_n)
            test_acc = evaluate(net, dataset.test_images, dataset.test_labels,
                                config.eval_steps, config.eval_window, eval_state)
            m = EpochMetrics(
                epoch=epoch,
                train_acc=correct / len(order),
                test_acc=test_acc,
                nudged_images=nudged,
                spikes_per_neuron_per_image=spikes / (topo.n_neurons * len(order)),
                synops_cumulative=synops_total,
            )
            metrics.append(m)
            if writer is not None:
                writer.writerow(m.row())
                csv_file.flush()
            if progress is not None:
                progress(m)
    finally:
        if csv_file is not None:
            csv_file.close()
    return TrainResult(network=net, metrics=metrics)
