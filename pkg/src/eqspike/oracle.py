"""Rate-based reference implementation used to validate the spiking learner.

The reference network shares the spiking network's weights and energy
function but evolves continuous membrane potentials by explicit Euler
integration of the gradient flow du/dt = -dE/du, with an optional nudging
force beta * (target - rho) * rho'(u) on the output units.  Comparing a free
and a nudged equilibrium yields the classic two-point weight update; its
continual variant integrates d(rho_i rho_j)/dt along the nudging trajectory.
A central-finite-difference gradient of the fixed-point loss provides the
independent ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .network import Topology, WeightStore, hard_sigmoid


def rho_prime(u: np.ndarray) -> np.ndarray:
    """Derivative mask of the hard sigmoid; 1 on the closed interval [0, 1].

    Including both boundaries keeps units pinned at a saturation value
    stable under the projected dynamics and lets units glued at zero
    re-activate when their drive turns positive.
    """
    return ((u >= 0.0) & (u <= 1.0)).astype(np.float64)


@dataclass
class RateNetworkState:
    """Continuous membrane potentials of the rate-based network."""

    u: np.ndarray

    @property
    def rho(self) -> np.ndarray:
        return hard_sigmoid(self.u)


@dataclass
class RelaxResult:
    state: RateNetworkState
    converged: bool
    n_steps: int
    max_residual: float
    trajectory: Optional[np.ndarray] = None  # (n_steps+1, n) rho values


def energy_gradient(u: np.ndarray, weights: WeightStore) -> np.ndarray:
    """dE/du for the layered energy; input entries are reported as zero."""
    topo = weights.topology
    rho = hard_sigmoid(u)
    drive = weights.biases.copy()
    for l in range(topo.n_blocks):
        lo, hi = topo.layer_slice(l), topo.layer_slice(l + 1)
        drive[hi] += rho[lo] @ weights.blocks[l]
        drive[lo] += weights.blocks[l] @ rho[hi]
    grad = u - rho_prime(u) * drive
    grad[topo.layer_slice(0)] = 0.0
    return grad


def relax(weights: WeightStore, inputs: np.ndarray, nudge_beta: float = 0.0,
          targets: Optional[np.ndarray] = None, u0: Optional[np.ndarray] = None,
          max_steps: int = 5000, step_size: float = 0.1, tol: float = 1e-8,
          record: bool = False, divergence_bound: float = 1e6,
          clip_state: bool = True) -> RelaxResult:
    """Euler-integrate the gradient flow with inputs clamped.

    ``nudge_beta = 0`` is the free phase.  Stops at the first step where the
    state change falls below ``tol`` (max norm) or at ``max_steps``,
    whichever comes first; the result reports which.  By default the free
    units are projected back into [0, 1] after every Euler step, which keeps
    saturated units stable instead of chattering around the boundary of the
    hard sigmoid; ``clip_state=False`` runs the unconstrained flow.
    """
    topo = weights.topology
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.shape != (topo.n_inputs,):
        raise ValueError(f"expected {topo.n_inputs} inputs, got {inputs.shape}")
    u = np.zeros(topo.n_neurons) if u0 is None else np.asarray(u0, dtype=np.float64).copy()
    u[topo.layer_slice(0)] = inputs
    out = topo.output_slice()
    if targets is None:
        targets = np.zeros(topo.n_outputs)
    targets = np.asarray(targets, dtype=np.float64)

    free = slice(int(topo.offsets[1]), topo.n_neurons)
    traj = [hard_sigmoid(u).copy()] if record else None
    converged = False
    steps_done = 0
    residual = np.inf
    for step in range(max_steps):
        du = -energy_gradient(u, weights)
        if nudge_beta != 0.0:
            rho_out = hard_sigmoid(u[out])
            du[out] += nudge_beta * (targets - rho_out) * rho_prime(u[out])
        u_prev = u[free].copy()
        u += step_size * du
        if clip_state:
            u[free] = np.clip(u[free], 0.0, 1.0)
        if record:
            traj.append(hard_sigmoid(u).copy())
        steps_done = step + 1
        if not np.all(np.isfinite(u)) or np.abs(u).max() > divergence_bound:
            raise FloatingPointError(
                f"relaxation diverged at step {steps_done} (|u| > {divergence_bound:g})")
        residual = float(np.abs(u[free] - u_prev).max())
        if residual < tol:
            converged = True
            break
    return RelaxResult(
        state=RateNetworkState(u),
        converged=converged,
        n_steps=steps_done,
        max_residual=residual,
        trajectory=np.array(traj) if record else None,
    )


def _pair_products(rho: np.ndarray, topo: Topology) -> list[np.ndarray]:
    return [
        np.outer(rho[topo.layer_slice(l)], rho[topo.layer_slice(l + 1)])
        for l in range(topo.n_blocks)
    ]


def two_point_update(rho_free: np.ndarray, rho_nudge: np.ndarray, beta: float,
                     topology: Topology) -> tuple[list[np.ndarray], np.ndarray]:
    """Equilibrium-comparison update: (1/beta) * (rho_i rho_j |nudged - |free).

    Returns per-block weight updates plus the bias analog (pseudo-presynaptic
    rate of one), computed only over connected pairs.  The 1/beta scaling
    makes the result directly comparable to a loss gradient.
    """
    if beta == 0.0:
        raise ZeroDivisionError("two-point update undefined at beta = 0")
    prod_f = _pair_products(rho_free, topology)
    prod_n = _pair_products(rho_nudge, topology)
    d_blocks = [(pn - pf) / beta for pf, pn in zip(prod_f, prod_n)]
    d_bias = (rho_nudge - rho_free) / beta
    d_bias[topology.layer_slice(0)] = 0.0
    return d_blocks, d_bias


def continual_update_trace(trajectory: np.ndarray, beta: float,
                           topology: Topology) -> list[np.ndarray]:
    """Accumulate d(rho_i)/dt * rho_j + rho_i * d(rho_j)/dt along a trajectory.

    First-order discretisation with rates taken at the start of each step;
    the total approaches the two-point update as the step size shrinks.
    """
    if beta == 0.0:
        raise ZeroDivisionError("continual update undefined at beta = 0")
    total = [
        np.zeros((topology.layer_sizes[l], topology.layer_sizes[l + 1]))
        for l in range(topology.n_blocks)
    ]
    for t in range(trajectory.shape[0] - 1):
        rho, rho_next = trajectory[t], trajectory[t + 1]
        drho = rho_next - rho
        for l in range(topology.n_blocks):
            lo, hi = topology.layer_slice(l), topology.layer_slice(l + 1)
            total[l] += np.outer(drho[lo], rho[hi]) + np.outer(rho[lo], drho[hi])
    return [m / beta for m in total]


def fixed_point_loss(weights: WeightStore, inputs: np.ndarray,
                     targets: np.ndarray, **relax_kwargs) -> float:
    """Squared-error loss 1/2 sum (target - rho_out)^2 at the free fixed point."""
    res = relax(weights, inputs, nudge_beta=0.0, **relax_kwargs)
    rho_out = res.state.rho[weights.topology.output_slice()]
    return 0.5 * float(np.sum((np.asarray(targets) - rho_out) ** 2))


def finite_diff_gradient(weights: WeightStore, inputs: np.ndarray,
                         targets: np.ndarray, epsilon: float = 1e-4,
                         include_biases: bool = True,
                         **relax_kwargs) -> tuple[list[np.ndarray], np.ndarray]:
    """Central-difference gradient of the fixed-point loss per weight and bias.

    Each parameter is perturbed by +-epsilon, the free relaxation re-run, and
    the loss differenced.  Slow but entirely independent of the equilibrium-
    comparison formulas.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    topo = weights.topology
    relax_kwargs.setdefault("tol", 1e-12)
    relax_kwargs.setdefault("max_steps", 20000)
    grads = []
    for l in range(topo.n_blocks):
        g = np.zeros_like(weights.blocks[l])
        block = weights.blocks[l]
        for idx in np.ndindex(block.shape):
            orig = block[idx]
            block[idx] = orig + epsilon
            lp = fixed_point_loss(weights, inputs, targets, **relax_kwargs)
            block[idx] = orig - epsilon
            lm = fixed_point_loss(weights, inputs, targets, **relax_kwargs)
            block[idx] = orig
            g[idx] = (lp - lm) / (2.0 * epsilon)
        grads.append(g)
    bias_grad = np.zeros(topo.n_neurons)
    if include_biases:
        for i in range(topo.n_inputs, topo.n_neurons):
            orig = weights.biases[i]
            weights.biases[i] = orig + epsilon
            lp = fixed_point_loss(weights, inputs, targets, **relax_kwargs)
            weights.biases[i] = orig - epsilon
            lm = fixed_point_loss(weights, inputs, targets, **relax_kwargs)
            weights.biases[i] = orig
            bias_grad[i] = (lp - lm) / (2.0 * epsilon)
    return grads, bias_grad


def compare_updates(delta_a, delta_b, noise_floor: float = 1e-6):
    """Alignment metrics between two update tensors (or lists of tensors).

    Returns (cosine, sign_agreement, scale_ratio).  The cosine is None when
    either input is identically zero; sign agreement counts matching signs
    among entries where both magnitudes exceed the noise floor.
    """
    a = _flatten(delta_a)
    b = _flatten(delta_b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    cosine = None if na == 0.0 or nb == 0.0 else float(a @ b / (na * nb))
    mask = (np.abs(a) > noise_floor) & (np.abs(b) > noise_floor)
    if mask.any():
        sign_agreement = float(np.mean(np.sign(a[mask]) == np.sign(b[mask])))
    else:
        sign_agreement = float("nan")
    scale_ratio = float("inf") if nb == 0.0 else na / nb
    return cosine, sign_agreement, scale_ratio


def _flatten(delta) -> np.ndarray:
    if isinstance(delta, np.ndarray):
        return delta.ravel()
    return np.concatenate([np.asarray(d).ravel() for d in delta])
