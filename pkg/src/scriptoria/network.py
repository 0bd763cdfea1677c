"""Embedding network: forward pass and the HWNET1 weight file format.

The network is a fixed small pyramid: three conv(3x3)+ReLU+maxpool(2x2)
blocks, a 128-wide dense layer whose post-ReLU activation is the
embedding tap, and a 36-wide dense head used only at training time.
Convolutions are unpadded cross-correlations; pooling drops trailing
odd rows/columns.  All weights are float32 and inference is float32
end to end, so a weight file yields bit-identical activations on every
machine.

HWNET1 layout (little-endian):

    bytes 0..5   magic "HWNET1"
    u8           version (= 1)
    u32          layer count
    per layer:
      u8         kind: 1 = conv, 2 = maxpool, 3 = dense
      u32        dim count
      u32[...]   dims — conv (out_ch, in_ch, kh, kw); pool (kh, kw);
                 dense (out, in)
      f32[...]   weights, row-major (conv/dense only)
      f32[...]   biases, length out_ch / out (conv/dense only)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import FormatError, ValidationError

MAGIC = b"HWNET1"
VERSION = 1
INPUT_SIDE = 28
EMBEDDING_DIM = 128
CLASS_COUNT = 36

KIND_CONV = 1
KIND_MAXPOOL = 2
KIND_DENSE = 3


@dataclass(frozen=True)
class ConvLayer:
    weights: np.ndarray  # (out_ch, in_ch, kh, kw) float32
    bias: np.ndarray  # (out_ch,) float32


@dataclass(frozen=True)
class MaxPoolLayer:
    kh: int
    kw: int


@dataclass(frozen=True)
class DenseLayer:
    weights: np.ndarray  # (out, in) float32
    bias: np.ndarray  # (out,) float32


Layer = ConvLayer | MaxPoolLayer | DenseLayer


@dataclass(frozen=True)
class EmbeddingNetwork:
    """Validated layer stack ready for inference."""

    layers: tuple[Layer, ...]

    def __post_init__(self) -> None:
        _validate_architecture(self.layers)

    @property
    def conv_filters(self) -> tuple[int, int, int]:
        convs = [l for l in self.layers if isinstance(l, ConvLayer)]
        return tuple(int(c.weights.shape[0]) for c in convs)  # type: ignore[return-value]

    def embed_batch(self, x: np.ndarray) -> np.ndarray:
        """Forward pass to the 128-wide tap.

        x: (n, 1, 28, 28) float32 in [0, 1].  Returns (n, 128) float32,
        ReLU applied, *not* normalized.
        """
        if x.ndim != 4 or x.shape[1:] != (1, INPUT_SIDE, INPUT_SIDE):
            raise ValidationError(f"expected (n, 1, 28, 28) input, got {x.shape}")
        a = np.ascontiguousarray(x, dtype=np.float32)
        for layer in self.layers[:-2]:
            if isinstance(layer, ConvLayer):
                a = np.maximum(_conv2d(a, layer.weights, layer.bias), 0.0)
            else:
                a = _maxpool2d(a, layer.kh, layer.kw)
        flat = a.reshape(a.shape[0], -1)
        dense1 = self.layers[-2]
        assert isinstance(dense1, DenseLayer)
        return np.maximum(flat @ dense1.weights.T + dense1.bias, 0.0)


def _conv2d(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Unpadded stride-1 cross-correlation via im2col."""
    n, _, h, wd = x.shape
    out_ch, in_ch, kh, kw = w.shape
    oh, ow = h - kh + 1, wd - kw + 1
    cols = sliding_window_view(x, (kh, kw), axis=(2, 3))  # (n, c, oh, ow, kh, kw)
    cols = cols.transpose(0, 2, 3, 1, 4, 5).reshape(n, oh * ow, in_ch * kh * kw)
    out = cols @ w.reshape(out_ch, -1).T + b
    return out.transpose(0, 2, 1).reshape(n, out_ch, oh, ow)


def _maxpool2d(x: np.ndarray, kh: int, kw: int) -> np.ndarray:
    """Non-overlapping max pooling; trailing partial windows are dropped."""
    n, c, h, w = x.shape
    oh, ow = h // kh, w // kw
    v = x[:, :, : oh * kh, : ow * kw].reshape(n, c, oh, kh, ow, kw)
    return v.max(axis=(3, 5))


def _validate_architecture(layers: tuple[Layer, ...]) -> None:
    kinds = tuple(type(l) for l in layers)
    expected = (ConvLayer, MaxPoolLayer) * 3 + (DenseLayer, DenseLayer)
    if kinds != expected:
        raise ValidationError(
            "layer stack must be conv/pool x3 followed by two dense layers"
        )

    ch, h, w = 1, INPUT_SIDE, INPUT_SIDE
    for layer in layers[:-2]:
        if isinstance(layer, ConvLayer):
            out_ch, in_ch, kh, kw = layer.weights.shape
            if in_ch != ch:
                raise ValidationError(
                    f"conv expects {in_ch} input channels, pipeline has {ch}"
                )
            if kh > h or kw > w:
                raise ValidationError("conv kernel larger than its input")
            if layer.bias.shape != (out_ch,):
                raise ValidationError("conv bias length must equal out channels")
            ch, h, w = out_ch, h - kh + 1, w - kw + 1
        else:
            if (layer.kh, layer.kw) != (2, 2):
                raise ValidationError("only 2x2 max pooling is supported")
            if h < 2 or w < 2:
                raise ValidationError("feature map too small to pool")
            h, w = h // 2, w // 2

    flat = ch * h * w
    d1, d2 = layers[-2], layers[-1]
    assert isinstance(d1, DenseLayer) and isinstance(d2, DenseLayer)
    if d1.weights.shape != (EMBEDDING_DIM, flat):
        raise ValidationError(
            f"embedding dense must be ({EMBEDDING_DIM}, {flat}), "
            f"got {d1.weights.shape}"
        )
    if d2.weights.shape != (CLASS_COUNT, EMBEDDING_DIM):
        raise ValidationError(
            f"class dense must be ({CLASS_COUNT}, {EMBEDDING_DIM}), "
            f"got {d2.weights.shape}"
        )
    for d in (d1, d2):
        if d.bias.shape != (d.weights.shape[0],):
            raise ValidationError("dense bias length must equal output size")


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise OSError("truncated weight file")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def f32_array(self, count: int, shape: tuple[int, ...]) -> np.ndarray:
        raw = self.take(4 * count)
        return np.frombuffer(raw, dtype="<f4", count=count).reshape(shape).copy()


def load_network(path: str | Path) -> EmbeddingNetwork:
    """Load and validate an HWNET1 weight file.

    Raises:
        FormatError: wrong magic or version, or unknown layer kind.
        ValidationError: shapes incompatible with the fixed architecture.
        OSError: file shorter than its declared contents.
    """
    data = Path(path).read_bytes()
    r = _Reader(data)
    if r.take(len(MAGIC)) != MAGIC:
        raise FormatError("not an HWNET1 weight file (bad magic)")
    version = r.u8()
    if version != VERSION:
        raise FormatError(f"unsupported HWNET1 version {version}")

    layer_count = r.u32()
    layers: list[Layer] = []
    for _ in range(layer_count):
        kind = r.u8()
        ndim = r.u32()
        dims = tuple(r.u32() for _ in range(ndim))
        if kind == KIND_CONV:
            if len(dims) != 4:
                raise ValidationError(f"conv layer needs 4 dims, got {dims}")
            weights = r.f32_array(int(np.prod(dims)), dims)
            bias = r.f32_array(dims[0], (dims[0],))
            layers.append(ConvLayer(weights, bias))
        elif kind == KIND_MAXPOOL:
            if len(dims) != 2:
                raise ValidationError(f"maxpool layer needs 2 dims, got {dims}")
            layers.append(MaxPoolLayer(dims[0], dims[1]))
        elif kind == KIND_DENSE:
            if len(dims) != 2:
                raise ValidationError(f"dense layer needs 2 dims, got {dims}")
            weights = r.f32_array(dims[0] * dims[1], dims)
            bias = r.f32_array(dims[0], (dims[0],))
            layers.append(DenseLayer(weights, bias))
        else:
            raise FormatError(f"unknown layer kind {kind}")

    return EmbeddingNetwork(tuple(layers))


def save_network(net: EmbeddingNetwork, path: str | Path) -> None:
    """Write an HWNET1 file; load_network(save_network(x)) is byte-stable."""
    out = bytearray()
    out += MAGIC
    out.append(VERSION)
    out += struct.pack("<I", len(net.layers))
    for layer in net.layers:
        if isinstance(layer, ConvLayer):
            out.append(KIND_CONV)
            dims = layer.weights.shape
            out += struct.pack("<I", len(dims))
            out += struct.pack(f"<{len(dims)}I", *dims)
            out += layer.weights.astype("<f4").tobytes(order="C")
            out += layer.bias.astype("<f4").tobytes(order="C")
        elif isinstance(layer, MaxPoolLayer):
            out.append(KIND_MAXPOOL)
            out += struct.pack("<I", 2)
            out += struct.pack("<2I", layer.kh, layer.kw)
        else:
            out.append(KIND_DENSE)
            dims = layer.weights.shape
            out += struct.pack("<I", len(dims))
            out += struct.pack(f"<{len(dims)}I", *dims)
            out += layer.weights.astype("<f4").tobytes(order="C")
            out += layer.bias.astype("<f4").tobytes(order="C")
    Path(path).write_bytes(bytes(out))


def random_network(seed: int, filters: tuple[int, int, int] = (4, 8, 8)) -> EmbeddingNetwork:
    """Small randomly-initialized network for inference tests and probes."""
    rng = np.random.default_rng(seed)
    layers: list[Layer] = []
    ch, h, w = 1, INPUT_SIDE, INPUT_SIDE
    for out_ch in filters:
        std = np.sqrt(2.0 / (ch * 9))
        weights = rng.normal(0.0, std, size=(out_ch, ch, 3, 3)).astype(np.float32)
        bias = rng.normal(0.0, 0.01, size=(out_ch,)).astype(np.float32)
        layers.append(ConvLayer(weights, bias))
        layers.append(MaxPoolLayer(2, 2))
        ch, h, w = out_ch, (h - 2) // 2, (w - 2) // 2
    flat = ch * h * w
    for out_dim, in_dim in ((EMBEDDING_DIM, flat), (CLASS_COUNT, EMBEDDING_DIM)):
        std = np.sqrt(2.0 / in_dim)
        weights = rng.normal(0.0, std, size=(out_dim, in_dim)).astype(np.float32)
        bias = rng.normal(0.0, 0.01, size=(out_dim,)).astype(np.float32)
        layers.append(DenseLayer(weights, bias))
    return EmbeddingNetwork(tuple(layers))
