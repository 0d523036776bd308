"""Binary checkpoints: topology, weights, biases, hyperparameters, RNG state.

Layout (all integers and floats little-endian):

    offset  size  field
    0       8     magic ``b"EQSPCKPT"``
    8       1     format version (currently 1)
    9       4     n_layers (u32)
    13      4*L   layer sizes (u32 each)
    ...     8*6   gamma_lif, gamma_li, u_th, beta, eta_r, dt (f64 each)
    ...     4*5   tau, n_filt, t_free, t_nudge, t_refract (u32 each)
    ...     4     epoch counter (u32)
    ...     1     RNG flag (u8; 1 = PCG64 state follows)
    ...     16    PCG64 state (u128), if flagged
    ...     16    PCG64 inc (u128), if flagged
    ...     4+4   has_uint32 (u32), uinteger (u32), if flagged
    ...     8*Σ   weight blocks, row-major, block 0 first (f64 each)
    ...     8*N   biases, one per neuron (f64 each)

Saving and re-loading is bit-exact, so identical runs produce byte-identical
checkpoint files.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .network import Topology, WeightStore
from .params import HyperParams
from .sim import Network

MAGIC = b"EQSPCKPT"
VERSION = 1

_HYPER_FLOATS = ("gamma_lif", "gamma_li", "u_th", "beta", "eta_r", "dt")
_HYPER_INTS = ("tau", "n_filt", "t_free", "t_nudge", "t_refract")


class CheckpointError(ValueError):
    """Unreadable checkpoint (bad magic, version or truncation)."""


@dataclass
class Checkpoint:
    network: Network
    epoch: int = 0
    rng: Optional[np.random.Generator] = None


def _pack_u128(value: int) -> bytes:
    return value.to_bytes(16, "little")


def _rng_state(rng: np.random.Generator) -> tuple[int, int, int, int]:
    st = rng.bit_generator.state
    if st["bit_generator"] != "PCG64":
        raise CheckpointError("only PCG64 generators are checkpointable")
    return (st["state"]["state"], st["state"]["inc"],
            int(st["has_uint32"]), int(st["uinteger"]))


def save(path, network: Network, epoch: int = 0,
         rng: Optional[np.random.Generator] = None) -> None:
    p = network.params
    topo = network.topology
    parts = [MAGIC, struct.pack("<B", VERSION),
             struct.pack("<I", topo.n_layers),
             struct.pack(f"<{topo.n_layers}I", *topo.layer_sizes)]
    parts.append(struct.pack("<6d", *(getattr(p, f) for f in _HYPER_FLOATS)))
    parts.append(struct.pack("<5I", *(getattr(p, f) for f in _HYPER_INTS)))
    parts.append(struct.pack("<I", epoch))
    if rng is None:
        parts.append(struct.pack("<B", 0))
    else:
        state, inc, has32, uint = _rng_state(rng)
        parts.append(struct.pack("<B", 1))
        parts.append(_pack_u128(state))
        parts.append(_pack_u128(inc))
        parts.append(struct.pack("<II", has32, uint))
    for block in network.weights.blocks:
        parts.append(np.ascontiguousarray(block, dtype="<f8").tobytes())
    parts.append(np.ascontiguousarray(network.weights.biases, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


class _Reader:
    def __init__(self, data: bytes, path):
        self.data = data
        self.off = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.off + n > len(self.data):
            raise CheckpointError(f"{self.path}: truncated checkpoint")
        out = self.data[self.off:self.off + n]
        self.off += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load(path) -> Checkpoint:
    data = Path(path).read_bytes()
    r = _Reader(data, path)
    if r.take(8) != MAGIC:
        raise CheckpointError(f"{path}: bad magic, not a checkpoint file")
    (version,) = r.unpack("<B")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    (n_layers,) = r.unpack("<I")
    sizes = r.unpack(f"<{n_layers}I")
    floats = r.unpack("<6d")
    ints = r.unpack("<5I")
    (epoch,) = r.unpack("<I")
    (rng_flag,) = r.unpack("<B")
    rng = None
    if rng_flag:
        state = int.from_bytes(r.take(16), "little")
        inc = int.from_bytes(r.take(16), "little")
        has32, uint = r.unpack("<II")
        bg = np.random.PCG64()
        bg.state = {"bit_generator": "PCG64",
                    "state": {"state": state, "inc": inc},
                    "has_uint32": has32, "uinteger": uint}
        rng = np.random.Generator(bg)
    params = HyperParams(**dict(zip(_HYPER_FLOATS, floats)),
                         **dict(zip(_HYPER_INTS, ints)))
    topo = Topology(sizes)
    blocks = []
    for l in range(topo.n_blocks):
        shape = (sizes[l], sizes[l + 1])
        raw = r.take(8 * shape[0] * shape[1])
        blocks.append(np.frombuffer(raw, dtype="<f8").reshape(shape).copy())
    raw = r.take(8 * topo.n_neurons)
    biases = np.frombuffer(raw, dtype="<f8").copy()
    if r.off != len(data):
        raise CheckpointError(f"{path}: {len(data) - r.off} trailing bytes")
    net = Network(topo, WeightStore(topo, blocks, biases), params)
    return Checkpoint(network=net, epoch=epoch, rng=rng)
