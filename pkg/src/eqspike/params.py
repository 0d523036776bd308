"""Simulation hyperparameters shared by the network, rate estimator and trainer."""

from __future__ import annotations

from dataclasses import dataclass, fields


@dataclass(frozen=True)
class HyperParams:
    """All scalar knobs of the simulator.

    Attributes
    ----------
    gamma_lif : float
        Per-step membrane leak fraction of the spiking neurons, in (0, 1).
    gamma_li : float
        Per-step leak fraction of the non-spiking rate integrators, in (0, 1).
    u_th : float
        Spike threshold in membrane-potential units.
    beta : float
        Output nudging strength (>= 0; 0 disables the nudge force).
    eta_r : float
        Per-spike weight-update coefficient.  The effective learning rate is
        ``eta_r * tau / gamma_li`` (see :attr:`learning_rate`).
    tau : int
        Delay, in steps, used by the rate-derivative estimator.
    n_filt : int
        Moving-average window, in steps, smoothing the derivative estimate.
    t_free : int
        Number of steps of the free (inference) phase.
    t_nudge : int
        Number of steps of the nudging (learning) phase.
    t_refract : int
        Refractory period in steps.  A neuron firing at every opportunity
        spikes once every ``t_refract`` steps, so the maximum rate is
        ``1 / t_refract`` spikes per step.
    dt : float
        Physical duration of one simulation step.  Only enters through
        ``f_max = 1 / (t_refract * dt)``; all internal dynamics operate in
        per-step units.
    """

    gamma_lif: float = 0.05
    gamma_li: float = 0.01
    u_th: float = 1.0
    beta: float = 0.5
    eta_r: float = 7.5e-7
    tau: int = 20
    n_filt: int = 20
    t_free: int = 400
    t_nudge: int = 200
    t_refract: int = 2
    dt: float = 1.0

    def __post_init__(self) -> None:
        if not (0.0 < self.gamma_lif < 1.0):
            raise ValueError(f"gamma_lif must be in (0, 1), got {self.gamma_lif}")
        if not (0.0 < self.gamma_li < 1.0):
            raise ValueError(f"gamma_li must be in (0, 1), got {self.gamma_li}")
        if self.beta < 0.0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.tau < 1 or self.n_filt < 1 or self.t_refract < 1:
            raise ValueError("tau, n_filt and t_refract must be integers >= 1")
        if self.t_free < 0 or self.t_nudge < 0:
            raise ValueError("phase lengths must be non-negative")
        if self.dt <= 0.0 or not self.u_th > 0.0:
            raise ValueError("dt and u_th must be positive")

    @property
    def f_max(self) -> float:
        """Maximum firing rate in physical units, 1 / (t_refract * dt)."""
        return 1.0 / (self.t_refract * self.dt)

    @property
    def f_max_per_step(self) -> float:
        """Maximum firing rate in spikes per simulation step."""
        return 1.0 / self.t_refract

    @property
    def learning_rate(self) -> float:
        """Effective learning rate eta_r * tau / gamma_li."""
        return self.eta_r * self.tau / self.gamma_li

    @classmethod
    def from_learning_rate(cls, learning_rate: float = 1.5e-3, **kwargs) -> "HyperParams":
        """Build params choosing eta_r so that the effective rate is ``learning_rate``."""
        tau = kwargs.get("tau", cls.tau)
        gamma_li = kwargs.get("gamma_li", cls.gamma_li)
        kwargs["eta_r"] = learning_rate * gamma_li / tau
        return cls(**kwargs)

    def replace(self, **kwargs) -> "HyperParams":
        current = {f.name: getattr(self, f.name) for f in fields(self)}
        current.update(kwargs)
        return HyperParams(**current)
