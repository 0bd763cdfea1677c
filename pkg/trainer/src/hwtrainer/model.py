"""The 36-class character network and the HWNET1 export format.

Architecture (fixed): three conv(3x3, valid) + ReLU + maxpool(2x2)
blocks with 32/64/128 filters, a 128-wide dense layer (post-ReLU
activation is the embedding tap consumed downstream), and a 36-wide
softmax head.  Input is 28x28 grayscale in [0, 1], ink bright.

The exporter writes the same HWNET1 byte layout the measurement toolkit
reads: magic "HWNET1", version u8=1, u32 layer count, then per layer a
u8 kind (1 conv / 2 pool / 3 dense), u32 dim count, u32 dims, and f32
row-major weights followed by f32 biases for conv/dense layers.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
import torch
from torch import nn

MAGIC = b"HWNET1"
VERSION = 1
INPUT_SIDE = 28
EMBEDDING_DIM = 128
CLASS_COUNT = 36
CONV_FILTERS = (32, 64, 128)

KIND_CONV = 1
KIND_MAXPOOL = 2
KIND_DENSE = 3


class CharacterNet(nn.Module):
    def __init__(self, filters: tuple[int, int, int] = CONV_FILTERS):
        super().__init__()
        f1, f2, f3 = filters
        self.conv1 = nn.Conv2d(1, f1, 3)
        self.conv2 = nn.Conv2d(f1, f2, 3)
        self.conv3 = nn.Conv2d(f2, f3, 3)
        self.pool = nn.MaxPool2d(2, 2)
        self.relu = nn.ReLU()
        self.fc_embed = nn.Linear(f3, EMBEDDING_DIM)
        self.fc_class = nn.Linear(EMBEDDING_DIM, CLASS_COUNT)

    def embed(self, x: torch.Tensor) -> torch.Tensor:
        """Post-ReLU 128-wide tap, not normalized."""
        x = self.pool(self.relu(self.conv1(x)))
        x = self.pool(self.relu(self.conv2(x)))
        x = self.pool(self.relu(self.conv3(x)))
        x = torch.flatten(x, 1)
        return self.relu(self.fc_embed(x))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.fc_class(self.embed(x))


def embed_patches(model: CharacterNet, patches: np.ndarray) -> np.ndarray:
    """L2-normalized embeddings of (n, 28, 28) float patches in [0, 1].

    This is the trainer-side twin of the measurement toolkit's embed();
    the parity between the two is the cross-package contract.
    """
    model.eval()
    with torch.no_grad():
        x = torch.from_numpy(patches.astype(np.float32)).reshape(-1, 1, INPUT_SIDE, INPUT_SIDE)
        raw = model.embed(x).numpy()
    norms = np.linalg.norm(raw, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return raw / norms


def _emit_array(out: bytearray, arr: np.ndarray) -> None:
    out += arr.astype("<f4").tobytes(order="C")


def export_weights(model: CharacterNet, path: str | Path) -> None:
    """Write the model as an HWNET1 file, byte for byte."""
    convs = [model.conv1, model.conv2, model.conv3]
    out = bytearray()
    out += MAGIC
    out.append(VERSION)
    out += struct.pack("<I", 8)
    for conv in convs:
        w = conv.weight.detach().numpy()
        out.append(KIND_CONV)
        out += struct.pack("<I", 4)
        out += struct.pack("<4I", *w.shape)
        _emit_array(out, w)
        _emit_array(out, conv.bias.detach().numpy())
        out.append(KIND_MAXPOOL)
        out += struct.pack("<I", 2)
        out += struct.pack("<2I", 2, 2)
    for dense in (model.fc_embed, model.fc_class):
        w = dense.weight.detach().numpy()
        out.append(KIND_DENSE)
        out += struct.pack("<I", 2)
        out += struct.pack("<2I", *w.shape)
        _emit_array(out, w)
        _emit_array(out, dense.bias.detach().numpy())
    Path(path).write_bytes(bytes(out))


def load_weights(path: str | Path) -> CharacterNet:
    """Read an HWNET1 file back into a CharacterNet (for re-export checks)."""
    data = Path(path).read_bytes()
    pos = 0

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(data):
            raise OSError("truncated weight file")
        chunk = data[pos : pos + n]
        pos += n
        return chunk

    if take(6) != MAGIC:
        raise ValueError("not an HWNET1 file")
    if take(1)[0] != VERSION:
        raise ValueError("unsupported HWNET1 version")
    (count,) = struct.unpack("<I", take(4))
    tensors: list[tuple[np.ndarray, np.ndarray]] = []
    filters = []
    for _ in range(count):
        kind = take(1)[0]
        (ndim,) = struct.unpack("<I", take(4))
        dims = struct.unpack(f"<{ndim}I", take(4 * ndim))
        if kind == KIND_MAXPOOL:
            continue
        n = int(np.prod(dims))
        weights = np.frombuffer(take(4 * n), dtype="<f4").reshape(dims).copy()
        bias = np.frombuffer(take(4 * dims[0]), dtype="<f4").copy()
        tensors.append((weights, bias))
        if kind == KIND_CONV:
            filters.append(dims[0])

    model = CharacterNet(tuple(filters))
    with torch.no_grad():
        for layer, (w, b) in zip(
            (model.conv1, model.conv2, model.conv3, model.fc_embed, model.fc_class),
            tensors,
        ):
            layer.weight.copy_(torch.from_numpy(w))
            layer.bias.copy_(torch.from_numpy(b))
    return model
