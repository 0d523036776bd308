"""Event-driven simulation engine for full-network runs.

The per-step loop: spikes from the previous step are delivered through both
directions of the shared weight blocks (delta synapses, one step of axonal
bookkeeping), output membranes receive the nudge force, every neuron does its
LIF update, every rate tracker advances, and, when learning is on, each spike
triggers the per-synapse updates reading the smoothed derivative signal of
the opposite neuron.

Everything here is numba-compiled; the pure-Python modules in this package
implement the same arithmetic step by step and the two paths agree bit for
bit (set NUMBA_DISABLE_JIT=1 to run this module uncompiled).
"""

from __future__ import annotations

import numpy as np
from numba import njit
from numba.typed import List as NumbaList


def typed_blocks(blocks):
    """Wrap the weight matrices in a numba typed list."""
    out = NumbaList()
    for b in blocks:
        out.append(b)
    return out


@njit(cache=True)
def run_phase(
    # topology
    offsets, layer_of, n_layers,
    # parameters
    gamma_lif, gamma_li, u_th, tau, n_filt, t_refract,
    # weights (mutated when learn_on)
    blocks, biases,
    # state (mutated)
    u, refract, v_li, delay_ring, avg_ring, ring_sum, rho_bar,
    tick, prev_spikes, n_prev, clamped,
    # phase control
    n_steps, step_offset,
    nudge_on, beta, targets, use_fixed_grad, fixed_grad,
    learn_on, eta_r, learn_biases,
    # spike recording (used when spike_cap > 0)
    spike_cap, spike_steps, spike_neurons,
    # update recording (used when upd_cap > 0)
    upd_cap, upd_steps, upd_blocks, upd_i, upd_j, upd_dw,
    upd_block_filter, upd_pre_mask,
    # per-layer spike counters (mutated)
    layer_spike_counts,
):
    """Run ``n_steps`` of one phase; returns bookkeeping counters.

    Returns (tick, n_prev, n_spikes_recorded, n_updates_recorded, synops,
    overflow) where overflow is nonzero if a recording buffer filled up.
    """
    n = u.shape[0]
    n_in = offsets[1]
    out_base = offsets[n_layers - 1]
    n_out = n - out_base

    cur = np.zeros(n)
    spiked = np.zeros(n, dtype=np.uint8)
    new_spikes = np.empty(n, dtype=np.int64)

    n_spk_rec = 0
    n_upd_rec = 0
    synops = 0
    overflow = 0

    for step in range(n_steps):
        abs_step = step_offset + step

        # 1) deliver previous step's spikes through both directions
        for i in range(n_in):
            cur[i] = clamped[i]
        for i in range(n_in, n):
            cur[i] = biases[i]
        for si in range(n_prev):
            s = prev_spikes[si]
            l = layer_of[s]
            loc = s - offsets[l]
            if l < n_layers - 1:
                w = blocks[l]
                base = offsets[l + 1]
                for jj in range(w.shape[1]):
                    cur[base + jj] += w[loc, jj]
            if l >= 2:
                w = blocks[l - 1]
                base = offsets[l - 1]
                for ii in range(w.shape[0]):
                    cur[base + ii] += w[ii, loc]

        # 2) nudge output membranes toward the target rates
        if nudge_on:
            for k in range(n_out):
                o = out_base + k
                if use_fixed_grad:
                    grad = fixed_grad[k]
                else:
                    grad = v_li[o] * gamma_li - targets[k]
                u[o] -= beta * grad

        # 3) LIF update; the spike step counts toward the refractory window
        n_new = 0
        for i in range(n):
            spiked[i] = 0
            r = refract[i]
            if r > 0:
                r -= 1
                refract[i] = r
                if r > 0:
                    continue
            ui = (1.0 - gamma_lif) * u[i] + cur[i]
            if ui > u_th:
                u[i] = 0.0
                refract[i] = t_refract
                spiked[i] = 1
                new_spikes[n_new] = i
                n_new += 1
            else:
                u[i] = ui

        # 4) rate trackers (same step's spikes)
        didx = tick % tau
        aidx = tick % n_filt
        if tick == 0:
            for i in range(n):
                vv = (1.0 - gamma_li) * v_li[i] + spiked[i]
                v_li[i] = vv
                for slot in range(tau):
                    delay_ring[slot, i] = vv
        else:
            for i in range(n):
                v_li[i] = (1.0 - gamma_li) * v_li[i] + spiked[i]
        for i in range(n):
            old = delay_ring[didx, i]
            delay_ring[didx, i] = v_li[i]
            vdel = v_li[i] - old
            ring_sum[i] += vdel - avg_ring[aidx, i]
            avg_ring[aidx, i] = vdel
            rho_bar[i] = ring_sum[i] / n_filt
        tick += 1

        # 5) spike-gated weight updates, reading the opposite end's signal
        if learn_on:
            for si in range(n_new):
                s = new_spikes[si]
                l = layer_of[s]
                loc = s - offsets[l]
                if l >= 1:
                    w = blocks[l - 1]
                    base = offsets[l - 1]
                    for ii in range(w.shape[0]):
                        dw = eta_r * rho_bar[base + ii]
                        w[ii, loc] += dw
                        if upd_cap > 0 and (upd_block_filter < 0 or upd_block_filter == l - 1):
                            if upd_pre_mask[base + ii] != 0:
                                if n_upd_rec < upd_cap:
                                    upd_steps[n_upd_rec] = abs_step
                                    upd_blocks[n_upd_rec] = l - 1
                                    upd_i[n_upd_rec] = ii
                                    upd_j[n_upd_rec] = loc
                                    upd_dw[n_upd_rec] = dw
                                    n_upd_rec += 1
                                else:
                                    overflow = 1
                if l < n_layers - 1:
                    w = blocks[l]
                    base = offsets[l + 1]
                    for jj in range(w.shape[1]):
                        dw = eta_r * rho_bar[base + jj]
                        w[loc, jj] += dw
                        if upd_cap > 0 and (upd_block_filter < 0 or upd_block_filter == l):
                            if upd_pre_mask[s] != 0:
                                if n_upd_rec < upd_cap:
                                    upd_steps[n_upd_rec] = abs_step
                                    upd_blocks[n_upd_rec] = l
                                    upd_i[n_upd_rec] = loc
                                    upd_j[n_upd_rec] = jj
                                    upd_dw[n_upd_rec] = dw
                                    n_upd_rec += 1
                                else:
                                    overflow = 1
            if learn_biases:
                # bias acts as a synapse from an always-active unit of rate 1
                for i in range(n_in, n):
                    biases[i] += eta_r * rho_bar[i]

        # 6) bookkeeping
        for si in range(n_new):
            s = new_spikes[si]
            l = layer_of[s]
            layer_spike_counts[l] += 1
            if l == 0:
                synops += offsets[2] - offsets[1]
            else:
                synops += offsets[l] - offsets[l - 1]
                if l < n_layers - 1:
                    synops += offsets[l + 2] - offsets[l + 1]
            if spike_cap > 0:
                if n_spk_rec < spike_cap:
                    spike_steps[n_spk_rec] = abs_step
                    spike_neurons[n_spk_rec] = s
                    n_spk_rec += 1
                else:
                    overflow = 1

        # 7) this step's spikes drive the next step
        for si in range(n_new):
            prev_spikes[si] = new_spikes[si]
        n_prev = n_new

    return tick, n_prev, n_spk_rec, n_upd_rec, synops, overflow
