"""Checkpoint format tests: bit-exact round trips, validation."""

import numpy as np
import pytest

from eqspike import checkpoint
from eqspike.params import HyperParams
from eqspike.sim import Network


def trained_ish_network():
    p = HyperParams(gamma_lif=0.07, tau=15, t_free=250, beta=0.8)
    net = Network.create([6, 5, 4], p, seed=11)
    net.weights.biases[6:] = np.linspace(-0.2, 0.4, 9)
    return net


class TestRoundTrip:
    def test_save_load_save_is_byte_identical(self, tmp_path):
        net = trained_ish_network()
        rng = np.random.default_rng(123)
        rng.random(17)  # advance the stream to a nontrivial state
        p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
        checkpoint.save(p1, net, epoch=4, rng=rng)
        ck = checkpoint.load(p1)
        checkpoint.save(p2, ck.network, epoch=ck.epoch, rng=ck.rng)
        assert p1.read_bytes() == p2.read_bytes()

    def test_all_fields_preserved(self, tmp_path):
        net = trained_ish_network()
        path = tmp_path / "m.ckpt"
        checkpoint.save(path, net, epoch=7)
        ck = checkpoint.load(path)
        assert ck.epoch == 7
        assert ck.rng is None
        assert ck.network.topology.layer_sizes == (6, 5, 4)
        assert ck.network.params == net.params
        for a, b in zip(ck.network.weights.blocks, net.weights.blocks):
            np.testing.assert_array_equal(a, b)
        np.testing.assert_array_equal(ck.network.weights.biases,
                                      net.weights.biases)

    def test_rng_stream_continues_identically(self, tmp_path):
        net = trained_ish_network()
        rng = np.random.default_rng(55)
        rng.integers(0, 100, size=9)
        path = tmp_path / "r.ckpt"
        checkpoint.save(path, net, rng=rng)
        restored = checkpoint.load(path).rng
        np.testing.assert_array_equal(rng.integers(0, 1000, 20),
                                      restored.integers(0, 1000, 20))


class TestValidation:
    def test_bad_magic_rejected(self, tmp_path):
        f = tmp_path / "bad.ckpt"
        f.write_bytes(b"NOTACKPT" + b"\x00" * 50)
        with pytest.raises(checkpoint.CheckpointError):
            checkpoint.load(f)

    def test_truncation_rejected(self, tmp_path):
        net = trained_ish_network()
        path = tmp_path / "t.ckpt"
        checkpoint.save(path, net)
        data = path.read_bytes()
        path.write_bytes(data[:-16])
        with pytest.raises(checkpoint.CheckpointError):
            checkpoint.load(path)

    def test_trailing_garbage_rejected(self, tmp_path):
        net = trained_ish_network()
        path = tmp_path / "g.ckpt"
        checkpoint.save(path, net)
        path.write_bytes(path.read_bytes() + b"\x99")
        with pytest.raises(checkpoint.CheckpointError):
            checkpoint.load(path)

    def test_unsupported_version_rejected(self, tmp_path):
        net = trained_ish_network()
        path = tmp_path / "v.ckpt"
        checkpoint.save(path, net)
        data = bytearray(path.read_bytes())
        data[8] = 99
        path.write_bytes(bytes(data))
        with pytest.raises(checkpoint.CheckpointError):
            checkpoint.load(path)
