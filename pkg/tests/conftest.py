from __future__ import annotations

import numpy as np
import pytest
from PIL import Image


@pytest.fixture
def make_png(tmp_path):
    """Write an array (H, W) grayscale or (H, W, 3) RGB as a PNG file."""

    def _make(arr: np.ndarray, name: str = "img.png"):
        arr = np.asarray(arr, dtype=np.uint8)
        mode = "L" if arr.ndim == 2 else "RGB"
        path = tmp_path / name
        Image.fromarray(arr, mode=mode).save(path)
        return path

    return _make


@pytest.fixture
def make_pgm(tmp_path):
    """Write a (H, W) uint8 array as a binary P5 PGM file."""

    def _make(arr: np.ndarray, name: str = "img.pgm"):
        arr = np.asarray(arr, dtype=np.uint8)
        h, w = arr.shape
        path = tmp_path / name
        with open(path, "wb") as fh:
            fh.write(f"P5\n{w} {h}\n255\n".encode())
            fh.write(arr.tobytes())
        return path

    return _make
