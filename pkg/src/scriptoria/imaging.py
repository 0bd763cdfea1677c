"""Image ingestion, grayscale conversion and binarization.

The raster types defined here (GrayImage, BinaryImage) are the substrate
every measurement module works on.  Both are immutable after construction:
the backing numpy arrays are flagged non-writeable so instances can be
shared freely between concurrent analyses.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DegenerateInputError, FormatError, ValidationError

# Integer BT.601 luminance: (299 R + 587 G + 114 B + 500) // 1000 is exact
# half-up rounding of 0.299 R + 0.587 G + 0.114 B with no float drift.
_BT601 = (299, 587, 114)

MEDIA = ("paper-scan", "tablet")


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GrayImage:
    """Row-major 8-bit luminance raster."""

    width: int
    height: int
    samples: np.ndarray  # shape (height, width), dtype uint8

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValidationError("image dimensions must be at least 1x1")
        if self.samples.shape != (self.height, self.width):
            raise ValidationError(
                f"sample buffer shape {self.samples.shape} does not match "
                f"{self.height}x{self.width}"
            )
        object.__setattr__(self, "samples", _frozen(self.samples.astype(np.uint8)))


@dataclass(frozen=True)
class BinaryImage:
    """Ink mask: 1 = ink (dark stroke), 0 = background."""

    width: int
    height: int
    mask: np.ndarray  # shape (height, width), dtype uint8, values {0, 1}

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValidationError("image dimensions must be at least 1x1")
        if self.mask.shape != (self.height, self.width):
            raise ValidationError(
                f"mask shape {self.mask.shape} does not match "
                f"{self.height}x{self.width}"
            )
        m = self.mask.astype(np.uint8)
        if m.size and m.max() > 1:
            raise ValidationError("mask values must be 0 or 1")
        object.__setattr__(self, "mask", _frozen(m))

    def ink_count(self) -> int:
        return int(self.mask.sum())

    def to_gray(self) -> GrayImage:
        """Render the mask back to grayscale, ink black on white."""
        return GrayImage(self.width, self.height, np.where(self.mask == 1, 0, 255).astype(np.uint8))


@dataclass(frozen=True)
class DocumentRecord:
    """Provenance of one analyzed document."""

    id: str
    source_path: str
    binarization_method: str
    binarization_threshold: int
    medium: str = "paper-scan"

    def __post_init__(self) -> None:
        if not 0 <= self.binarization_threshold <= 255:
            raise ValidationError("binarization threshold must be in [0, 255]")
        if self.medium not in MEDIA:
            raise ValidationError(f"medium must be one of {MEDIA}")

    def to_json(self) -> str:
        return json.dumps(
            {
                "id": self.id,
                "source_path": self.source_path,
                "binarization": {
                    "method": self.binarization_method,
                    "threshold": self.binarization_threshold,
                },
                "medium": self.medium,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "DocumentRecord":
        obj = json.loads(text)
        return cls(
            id=obj["id"],
            source_path=obj["source_path"],
            binarization_method=obj["binarization"]["method"],
            binarization_threshold=obj["binarization"]["threshold"],
            medium=obj["medium"],
        )


def load_gray(path: str | Path) -> GrayImage:
    """Load a PNG or PGM file and convert it to 8-bit luminance.

    Color inputs are reduced with the BT.601 weighting
    (0.299 R + 0.587 G + 0.114 B), rounded half-up, so the same file
    produces bit-identical luminance everywhere.

    Raises:
        FormatError: unsupported or undecodable file format.
        ValidationError: image decodes to zero width or height.
        OSError: unreadable file (propagated I/O failure).
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such image file: {path}")
    try:
        img = Image.open(path)
        img.load()
    except UnidentifiedImageError as exc:
        raise FormatError(f"unsupported image format: {path}") from exc

    if img.format not in ("PNG", "PPM"):  # Pillow reports PGM under "PPM"
        raise FormatError(f"unsupported image format {img.format!r}: {path}")
    if img.width < 1 or img.height < 1:
        raise ValidationError(f"zero-dimension image: {path}")

    if img.mode == "L":
        samples = np.asarray(img, dtype=np.uint8)
    elif img.mode == "1":
        samples = np.asarray(img.convert("L"), dtype=np.uint8)
    elif img.mode in ("RGB", "RGBA", "P", "LA"):
        rgb = np.asarray(img.convert("RGB"), dtype=np.uint32)
        weighted = rgb[..., 0] * _BT601[0] + rgb[..., 1] * _BT601[1] + rgb[..., 2] * _BT601[2]
        samples = ((weighted + 500) // 1000).astype(np.uint8)
    else:
        raise FormatError(f"unsupported pixel mode {img.mode!r}: {path}")

    return GrayImage(img.width, img.height, samples)


def otsu_threshold(img: GrayImage) -> int:
    """Otsu's threshold for the ink-is-darker convention.

    The returned t maximizes the between-class variance of the split
    {samples < t} / {samples >= t} over t in 1..255; ties break toward
    the smaller t.

    Raises:
        DegenerateInputError: constant-valued image (no two classes).
    """
    hist = np.bincount(img.samples.ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    if np.count_nonzero(hist) < 2:
        raise DegenerateInputError("constant-valued image has no Otsu split")

    levels = np.arange(256, dtype=np.float64)
    # Cumulative weight/mean of the dark class {v < t} for t = 1..255.
    w0 = np.cumsum(hist)[:-1]
    sum0 = np.cumsum(hist * levels)[:-1]
    w1 = total - w0
    grand = float((hist * levels).sum())

    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = np.where(w0 > 0, sum0 / w0, 0.0)
        mu1 = np.where(w1 > 0, (grand - sum0) / w1, 0.0)
        variance = w0 * w1 * (mu0 - mu1) ** 2

    # argmax returns the first (lowest) maximizer; +1 maps index to t.
    return int(np.argmax(variance)) + 1


def binarize(img: GrayImage, method: str = "otsu", threshold: int | None = None) -> BinaryImage:
    """Binarize a grayscale image; ink is dark (mask = samples < t).

    method "otsu" derives t from the 256-bin histogram; method "fixed"
    uses the given threshold unchanged.  Callers that need to record the
    Otsu threshold should call otsu_threshold() themselves.

    Raises:
        ValidationError: unknown method, or "fixed" without a threshold
            in [0, 255].
        DegenerateInputError: constant-valued image under "otsu".
    """
    if method == "otsu":
        t = otsu_threshold(img)
    elif method == "fixed":
        if threshold is None or not 0 <= threshold <= 255:
            raise ValidationError("fixed binarization needs a threshold in [0, 255]")
        t = int(threshold)
    else:
        raise ValidationError(f"unknown binarization method {method!r}")

    mask = (img.samples < t).astype(np.uint8)
    return BinaryImage(img.width, img.height, mask)
