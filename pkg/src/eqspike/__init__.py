"""Event-driven spiking neural network simulator learning by spike-gated
equilibrium propagation, with a rate-based reference implementation,
finite-difference gradient checking, SynOps/energy accounting and
spike-timing analysis utilities."""

from .params import HyperParams
from .network import (Topology, WeightStore, NeuronState, hard_sigmoid,
                      step_membrane, gather_current, fi_curve, energy)
from .rate_estimator import RateTracker
from .sim import Network, SimState, SpikeLog, UpdateLog, clamp_inputs, run_phase
from .trainer import (TrainerConfig, TrainResult, train, evaluate, free_phase,
                      nudging_phase, should_nudge, compute_error_gradient)
from .readout import accuracy_vs_time, first_spike_readout, infer_image, rate_readout
from .metrics import (EnergyModel, StdpCurve, count_synops, energy_estimate,
                      spike_stats, stdp_curve)
from .data import Dataset, encode_image, load_mnist

__all__ = [
    "HyperParams", "Topology", "WeightStore", "NeuronState", "hard_sigmoid",
    "step_membrane", "gather_current", "fi_curve", "energy", "RateTracker",
    "Network", "SimState", "SpikeLog", "UpdateLog", "clamp_inputs", "run_phase",
    "TrainerConfig", "TrainResult", "train", "evaluate", "free_phase",
    "nudging_phase", "should_nudge", "compute_error_gradient",
    "accuracy_vs_time", "first_spike_readout", "infer_image", "rate_readout",
    "EnergyModel", "StdpCurve", "count_synops", "energy_estimate",
    "spike_stats", "stdp_curve", "Dataset", "encode_image", "load_mnist",
]

__version__ = "0.1.0"
