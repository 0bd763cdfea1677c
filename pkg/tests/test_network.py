import numpy as np
import pytest

from scriptoria.errors import FormatError, ValidationError
from scriptoria.network import (
    ConvLayer,
    DenseLayer,
    EmbeddingNetwork,
    MaxPoolLayer,
    load_network,
    random_network,
    save_network,
)


def reference_embedding(net: EmbeddingNetwork, image: np.ndarray) -> np.ndarray:
    """Naive float64 forward pass straight from the layer definitions."""
    a = image.astype(np.float64)  # (1, 28, 28)
    for layer in net.layers[:-2]:
        if isinstance(layer, ConvLayer):
            w = layer.weights.astype(np.float64)
            oc, ic, kh, kw = w.shape
            _, h, wd = a.shape
            out = np.zeros((oc, h - kh + 1, wd - kw + 1))
            for o in range(oc):
                for i in range(out.shape[1]):
                    for j in range(out.shape[2]):
                        out[o, i, j] = (
                            a[:, i : i + kh, j : j + kw] * w[o]
                        ).sum() + float(layer.bias[o])
            a = np.maximum(out, 0.0)
        else:
            c, h, wd = a.shape
            oh, ow = h // 2, wd // 2
            out = np.zeros((c, oh, ow))
            for ch in range(c):
                for i in range(oh):
                    for j in range(ow):
                        out[ch, i, j] = a[ch, 2 * i : 2 * i + 2, 2 * j : 2 * j + 2].max()
            a = out
    dense1 = net.layers[-2]
    flat = a.reshape(-1)
    pre = dense1.weights.astype(np.float64) @ flat + dense1.bias.astype(np.float64)
    return np.maximum(pre, 0.0)


@pytest.fixture(scope="module")
def tiny_net():
    return random_network(17, (4, 8, 8))


class TestForward:
    def test_matches_naive_reference(self, tiny_net):
        rng = np.random.default_rng(0)
        for _ in range(3):
            x = rng.random((1, 1, 28, 28)).astype(np.float32)
            fast = tiny_net.embed_batch(x)[0]
            ref = reference_embedding(tiny_net, x[0])
            assert np.max(np.abs(fast.astype(np.float64) - ref)) <= 1e-5

    def test_batch_matches_single(self, tiny_net):
        rng = np.random.default_rng(1)
        x = rng.random((4, 1, 28, 28)).astype(np.float32)
        batch = tiny_net.embed_batch(x)
        for i in range(4):
            single = tiny_net.embed_batch(x[i : i + 1])[0]
            assert np.max(np.abs(batch[i] - single)) <= 1e-5

    def test_input_shape_contract(self, tiny_net):
        with pytest.raises(ValidationError):
            tiny_net.embed_batch(np.zeros((1, 1, 27, 27), dtype=np.float32))


class TestFileFormat:
    def test_save_load_round_trip(self, tmp_path, tiny_net):
        p1, p2 = tmp_path / "a.hwnet", tmp_path / "b.hwnet"
        save_network(tiny_net, p1)
        loaded = load_network(p1)
        save_network(loaded, p2)
        assert p1.read_bytes() == p2.read_bytes()
        for la, lb in zip(tiny_net.layers, loaded.layers):
            if isinstance(la, ConvLayer) or isinstance(la, DenseLayer):
                assert np.array_equal(la.weights, lb.weights)
                assert np.array_equal(la.bias, lb.bias)

    def test_magic_header(self, tmp_path, tiny_net):
        p = tmp_path / "w.hwnet"
        save_network(tiny_net, p)
        raw = bytearray(p.read_bytes())
        raw[0:6] = b"NOTNET"
        p.write_bytes(bytes(raw))
        with pytest.raises(FormatError):
            load_network(p)

    def test_version_check(self, tmp_path, tiny_net):
        p = tmp_path / "w.hwnet"
        save_network(tiny_net, p)
        raw = bytearray(p.read_bytes())
        raw[6] = 9
        p.write_bytes(bytes(raw))
        with pytest.raises(FormatError):
            load_network(p)

    def test_truncated_file(self, tmp_path, tiny_net):
        p = tmp_path / "w.hwnet"
        save_network(tiny_net, p)
        p.write_bytes(p.read_bytes()[:-10])
        with pytest.raises(OSError):
            load_network(p)

    def test_wrong_class_count_rejected(self, tiny_net):
        layers = list(tiny_net.layers)
        head = layers[-1]
        bad = DenseLayer(
            weights=np.zeros((40, head.weights.shape[1]), dtype=np.float32),
            bias=np.zeros(40, dtype=np.float32),
        )
        with pytest.raises(ValidationError):
            EmbeddingNetwork(tuple(layers[:-1] + [bad]))

    def test_wrong_layer_order_rejected(self, tiny_net):
        layers = list(tiny_net.layers)
        with pytest.raises(ValidationError):
            EmbeddingNetwork(tuple(layers[1:] + [MaxPoolLayer(2, 2)]))

    def test_incompatible_chain_rejected(self, tiny_net):
        layers = list(tiny_net.layers)
        conv2 = layers[2]
        assert isinstance(conv2, ConvLayer)
        bad = ConvLayer(
            weights=np.zeros((8, 5, 3, 3), dtype=np.float32),  # in_ch 5 != 4
            bias=np.zeros(8, dtype=np.float32),
        )
        layers[2] = bad
        with pytest.raises(ValidationError):
            EmbeddingNetwork(tuple(layers))

    def test_bundled_probe_weights_load(self):
        from importlib.resources import files

        path = files("scriptoria").joinpath("data/probe_tiny.hwnet")
        net = load_network(str(path))
        assert net.conv_filters == (4, 8, 8)
