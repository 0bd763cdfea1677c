"""Dataset loading: a labeled glyph directory or the synthetic bank.

A dataset directory holds one subdirectory per class label, each with
28x28 grayscale PNGs (ink bright on dark).  "synthetic" shells out to
the measurement toolkit's generator CLI, which owns the glyph bank, and
then loads the directory it produced.
"""

from __future__ import annotations

import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from .model import CLASS_COUNT, INPUT_SIDE


class DatasetError(Exception):
    """The dataset violates the 36-class / 28x28 contract."""


def load_directory(root: str | Path) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Load (images (n, 28, 28) float32 in [0, 1], labels (n,), class names)."""
    root = Path(root)
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if len(class_dirs) != CLASS_COUNT:
        raise DatasetError(
            f"expected {CLASS_COUNT} class directories, found {len(class_dirs)}"
        )
    images: list[np.ndarray] = []
    labels: list[int] = []
    names: list[str] = []
    for index, class_dir in enumerate(class_dirs):
        names.append(class_dir.name)
        files = sorted(class_dir.glob("*.png"))
        if len(files) < 50:
            raise DatasetError(
                f"class {class_dir.name!r} has {len(files)} samples, need >= 50"
            )
        for f in files:
            arr = np.asarray(Image.open(f).convert("L"))
            if arr.shape != (INPUT_SIDE, INPUT_SIDE):
                raise DatasetError(f"{f} is {arr.shape}, expected 28x28")
            images.append(arr.astype(np.float32) / 255.0)
            labels.append(index)
    return np.stack(images), np.asarray(labels, dtype=np.int64), names


def generate_synthetic(out_dir: str | Path, per_class: int = 200, seed: int = 0) -> Path:
    """Produce the glyph dataset through the toolkit CLI (the glyph bank
    lives there; the directory layout is the shared interface)."""
    out_dir = Path(out_dir)
    subprocess.run(
        [
            sys.executable,
            "-m",
            "scriptoria",
            "gen",
            "glyphs",
            "--out",
            str(out_dir),
            "--per-class",
            str(per_class),
            "--seed",
            str(seed),
        ],
        check=True,
        capture_output=True,
    )
    return out_dir


def resolve_dataset(
    spec: str, per_class: int = 200, seed: int = 0
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Load --data argument: a directory path or the literal "synthetic"."""
    if spec == "synthetic":
        tmp = Path(tempfile.mkdtemp(prefix="glyphs-"))
        return load_directory(generate_synthetic(tmp, per_class, seed))
    return load_directory(spec)
