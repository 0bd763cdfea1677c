"""Synthetic manuscript generator with exact ground truth.

Documents are assembled from a bank of 36 procedural glyphs (letters and
digits).  A glyph is a polyline over a 3x3 anchor grid inside the
x-height box, rasterized as a thick stroke; ascender/descender labels add
a thin vertical stroke above/below the box.  The construction guarantees
properties the measurement pipeline is tested against:

* glyph ink touches all four edges of its box, so stamped boxes equal
  ink extents and planted word gaps survive as exact zero-column runs;
* no path segment is horizontal, so x-height rows carry comparably high
  ink counts while ascender/descender rows stay far below the page mean;
* every label is re-stamped from one master patch per document, so each
  occurrence is a pixel-exact copy of the first.

Writer identity lives in a WriterProfile: per-document values of the
x-height, zone ratios, gaps, stroke density and glyph aspect are drawn
from its (mean, jitter) distributions.  The same (profile, seed) always
renders the same bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import PageLayoutError, ValidationError
from .imaging import BinaryImage

LABELS = "abcdefghijklmnopqrstuvwxyz0123456789"
ASCENDER_LABELS = frozenset("bdfhklt189")
DESCENDER_LABELS = frozenset("gjpqy247")
DEFAULT_ALPHABET = "aeinorstlgpy"
DEFAULT_CANVAS = (840, 620)

_BANK_SEED = 20240601


@dataclass(frozen=True)
class GlyphSpec:
    label: str
    path: tuple[int, ...]  # anchor ids on the 3x3 grid, row-major 0..8
    width_factor: float
    mid_row_f: float  # vertical position of the middle anchor row
    has_ascender: bool
    has_descender: bool


def _build_glyph_bank() -> dict[str, GlyphSpec]:
    """Fixed, importable-everywhere bank of 36 distinct glyph paths."""
    rng = np.random.default_rng(_BANK_SEED)
    used: set[tuple[int, ...]] = set()
    bank: dict[str, GlyphSpec] = {}
    for label in LABELS:
        while True:
            length = int(rng.integers(4, 7))
            path = [int(rng.integers(0, 9))]
            ok = True
            for _ in range(length - 1):
                prev = path[-1]
                choices = [a for a in range(9) if a // 3 != prev // 3]
                path.append(int(choices[rng.integers(0, len(choices))]))
            rows = {a // 3 for a in path}
            cols = {a % 3 for a in path}
            ok = rows >= {0, 2} and cols >= {0, 2} and tuple(path) not in used
            if ok:
                used.add(tuple(path))
                break
        bank[label] = GlyphSpec(
            label=label,
            path=tuple(path),
            width_factor=float(rng.uniform(0.8, 1.2)),
            mid_row_f=float(rng.uniform(0.3, 0.7)),
            has_ascender=label in ASCENDER_LABELS,
            has_descender=label in DESCENDER_LABELS,
        )
    return bank


GLYPH_BANK = _build_glyph_bank()


def render_glyph(
    spec: GlyphSpec,
    body_h: int,
    body_w: int,
    asc_h: int,
    desc_h: int,
    stroke_r: float,
) -> np.ndarray:
    """Rasterize one glyph; returns a uint8 ink mask.

    The x-height body spans rows [asc, asc + body_h) of the result where
    asc is asc_h for ascender labels and 0 otherwise (descenders mirror
    this below the body).  Ink is guaranteed in the body's first/last row
    and first/last column.
    """
    if body_h < 5 or body_w < 4:
        raise ValidationError("glyph body must be at least 5x4")
    asc = asc_h if spec.has_ascender else 0
    desc = desc_h if spec.has_descender else 0
    canvas = np.zeros((asc + body_h + desc, body_w), dtype=np.uint8)

    anchor_rows = np.array([0.0, (body_h - 1) * spec.mid_row_f, body_h - 1.0])
    anchor_cols = np.array([0.0, (body_w - 1) / 2.0, body_w - 1.0])
    pts: list[np.ndarray] = []
    for a, b in zip(spec.path, spec.path[1:]):
        p0 = np.array([anchor_rows[a // 3], anchor_cols[a % 3]])
        p1 = np.array([anchor_rows[b // 3], anchor_cols[b % 3]])
        n = max(2, int(np.ceil(2 * np.abs(p1 - p0).max())) + 1)
        t = np.linspace(0.0, 1.0, n)[:, None]
        pts.append(p0 + t * (p1 - p0))
    points = np.concatenate(pts)

    ii, jj = np.mgrid[0:body_h, 0:body_w]
    d2 = (ii[..., None] - points[:, 0]) ** 2 + (jj[..., None] - points[:, 1]) ** 2
    body = (d2.min(axis=2) <= stroke_r**2).astype(np.uint8)
    canvas[asc : asc + body_h] = body

    top_anchors = [a for a in spec.path if a // 3 == 0]
    bottom_anchors = [a for a in spec.path if a // 3 == 2]
    if asc:
        col = int(round(anchor_cols[top_anchors[0] % 3]))
        canvas[0:asc, col] = 1
    if desc:
        col = int(round(anchor_cols[bottom_anchors[0] % 3]))
        canvas[asc + body_h :, col] = 1
    return canvas


@dataclass(frozen=True)
class WriterProfile:
    """Per-writer (mean, jitter) distributions of every planted measure."""

    middle_height: tuple[float, float] = (16.0, 0.5)
    upper_ratio: tuple[float, float] = (0.45, 0.03)
    lower_ratio: tuple[float, float] = (0.45, 0.03)
    word_gap: tuple[float, float] = (14.0, 1.0)
    intra_gap: tuple[float, float] = (2.0, 0.3)
    ink_density: tuple[float, float] = (1.1, 0.08)
    width_ratio: tuple[float, float] = (0.7, 0.04)

    def __post_init__(self) -> None:
        for name in (
            "middle_height",
            "upper_ratio",
            "lower_ratio",
            "word_gap",
            "intra_gap",
            "ink_density",
            "width_ratio",
        ):
            mean, jitter = getattr(self, name)
            if mean <= 0:
                raise ValidationError(f"{name} mean must be positive")
            if jitter < 0:
                raise ValidationError(f"{name} jitter must be non-negative")

    def to_json(self) -> str:
        fields = {
            name: {"mean": getattr(self, name)[0], "jitter": getattr(self, name)[1]}
            for name in (
                "middle_height",
                "upper_ratio",
                "lower_ratio",
                "word_gap",
                "intra_gap",
                "ink_density",
                "width_ratio",
            )
        }
        return json.dumps(fields, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "WriterProfile":
        obj = json.loads(text)
        return cls(**{k: (v["mean"], v["jitter"]) for k, v in obj.items()})


@dataclass(frozen=True)
class GTLine:
    upper_start: int
    middle_start: int
    middle_end: int
    lower_end: int
    word_gaps: tuple[int, ...]
    words: tuple[tuple[int, int], ...]  # (col_start, col_end) per word

    @property
    def upper_height(self) -> int:
        return self.middle_start - self.upper_start

    @property
    def middle_height(self) -> int:
        return self.middle_end - self.middle_start + 1

    @property
    def lower_height(self) -> int:
        return self.lower_end - self.middle_end


@dataclass(frozen=True)
class GTGlyph:
    line_index: int
    row: int
    col: int
    height: int
    width: int
    label: str


@dataclass(frozen=True)
class GroundTruth:
    lines: tuple[GTLine, ...]
    glyphs: tuple[GTGlyph, ...]
    middle_height: int
    intra_gap: int

    def glyphs_for(self, label: str) -> list[GTGlyph]:
        return [g for g in self.glyphs if g.label == label]

    def to_json(self) -> str:
        return json.dumps(
            {
                "middle_height": self.middle_height,
                "intra_gap": self.intra_gap,
                "lines": [
                    {
                        "upper_start": l.upper_start,
                        "middle_start": l.middle_start,
                        "middle_end": l.middle_end,
                        "lower_end": l.lower_end,
                        "word_gaps": list(l.word_gaps),
                        "words": [list(w) for w in l.words],
                    }
                    for l in self.lines
                ],
                "glyphs": [
                    {
                        "line": g.line_index,
                        "row": g.row,
                        "col": g.col,
                        "height": g.height,
                        "width": g.width,
                        "label": g.label,
                    }
                    for g in self.glyphs
                ],
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        obj = json.loads(text)
        return cls(
            lines=tuple(
                GTLine(
                    upper_start=l["upper_start"],
                    middle_start=l["middle_start"],
                    middle_end=l["middle_end"],
                    lower_end=l["lower_end"],
                    word_gaps=tuple(l["word_gaps"]),
                    words=tuple(tuple(w) for w in l["words"]),
                )
                for l in obj["lines"]
            ),
            glyphs=tuple(
                GTGlyph(
                    line_index=g["line"],
                    row=g["row"],
                    col=g["col"],
                    height=g["height"],
                    width=g["width"],
                    label=g["label"],
                )
                for g in obj["glyphs"]
            ),
            middle_height=obj["middle_height"],
            intra_gap=obj["intra_gap"],
        )


def _sample(rng: np.random.Generator, dist: tuple[float, float]) -> float:
    return dist[0] + dist[1] * rng.standard_normal()


def _clamp_int(x: float, lo: int, hi: int) -> int:
    return int(np.clip(int(round(x)), lo, hi))


def generate_document(
    profile: WriterProfile,
    seed: int,
    lines: int = 5,
    words_per_line: int = 5,
    canvas: tuple[int, int] = DEFAULT_CANVAS,
    alphabet: str = DEFAULT_ALPHABET,
    required_labels: Sequence[str] = (),
) -> tuple[BinaryImage, GroundTruth]:
    """Render one page and its exact ground truth.

    Raises:
        ValidationError: bad counts or unknown alphabet labels.
        PageLayoutError: the page does not fit the canvas.
    """
    if lines < 1 or words_per_line < 1:
        raise ValidationError("lines and words_per_line must be at least 1")
    for label in list(alphabet) + list(required_labels):
        if label not in GLYPH_BANK:
            raise ValidationError(f"unknown glyph label {label!r}")

    width, height = canvas
    rng = np.random.default_rng(seed)

    mid_h = _clamp_int(_sample(rng, profile.middle_height), 8, 34)
    asc_h = _clamp_int(mid_h * _sample(rng, profile.upper_ratio), 2, 26)
    desc_h = _clamp_int(mid_h * _sample(rng, profile.lower_ratio), 2, 26)
    gap_mu = max(4.0, _sample(rng, profile.word_gap))
    intra_gap = _clamp_int(_sample(rng, profile.intra_gap), 1, 4)
    stroke_r = float(np.clip(_sample(rng, profile.ink_density), 0.7, 2.0))
    width_ratio = float(np.clip(_sample(rng, profile.width_ratio), 0.45, 1.1))
    clearance = max(3, mid_h // 2)
    top_margin = 8 + int(rng.integers(0, 6))
    left_base = 10

    # Label grid first, then force required labels to appear at least twice.
    grid: list[list[list[str]]] = []
    for _ in range(lines):
        line_words = []
        for _ in range(words_per_line):
            n = int(rng.integers(2, 6))
            line_words.append([alphabet[rng.integers(0, len(alphabet))] for _ in range(n)])
        grid.append(line_words)

    # Cap ascender/descender glyphs per line: their thin strokes must stay
    # far below the row-profile mean or denoising stops isolating lines.
    plain = [l for l in alphabet if l not in ASCENDER_LABELS and l not in DESCENDER_LABELS]
    if plain:
        for line_words in grid:
            n_glyphs = sum(len(word) for word in line_words)
            cap = max(2, round(0.18 * n_glyphs))
            for zone_labels in (ASCENDER_LABELS, DESCENDER_LABELS):
                seen = 0
                for word in line_words:
                    for gi, label in enumerate(word):
                        if label in zone_labels:
                            seen += 1
                            if seen > cap:
                                word[gi] = plain[rng.integers(0, len(plain))]

    flat_slots = [
        (li, wi, gi)
        for li, lw in enumerate(grid)
        for wi, word in enumerate(lw)
        for gi in range(len(word))
    ]
    for label in required_labels:
        have = sum(1 for li, wi, gi in flat_slots if grid[li][wi][gi] == label)
        while have < 2:
            li, wi, gi = flat_slots[rng.integers(0, len(flat_slots))]
            if grid[li][wi][gi] != label:
                grid[li][wi][gi] = label
                have += 1

    # One master patch per label: every occurrence is a pixel-exact copy.
    patches: dict[str, np.ndarray] = {}
    for label in sorted({g for lw in grid for word in lw for g in word}):
        spec = GLYPH_BANK[label]
        body_w = _clamp_int(mid_h * width_ratio * spec.width_factor, 5, 40)
        patches[label] = render_glyph(spec, mid_h, body_w, asc_h, desc_h, stroke_r)

    page = np.zeros((height, width), dtype=np.uint8)
    gt_lines: list[GTLine] = []
    gt_glyphs: list[GTGlyph] = []

    y = top_margin
    for li, line_words in enumerate(grid):
        m0 = y + asc_h
        m1 = m0 + mid_h - 1
        if m1 + desc_h + 1 >= height:
            raise PageLayoutError("page is taller than the canvas")

        x = left_base + int(rng.integers(0, 8))
        word_spans: list[tuple[int, int]] = []
        word_gaps: list[int] = []
        line_top = m0
        line_bottom = m1
        for wi, word in enumerate(line_words):
            if wi > 0:
                gap = _clamp_int(rng.normal(gap_mu, 1.0), 4, 80)
                word_gaps.append(gap)
                x += gap
            word_start = x
            for gi, label in enumerate(word):
                if gi > 0:
                    x += intra_gap
                patch = patches[label]
                ph, pw = patch.shape
                asc_eff = asc_h if GLYPH_BANK[label].has_ascender else 0
                top = m0 - asc_eff
                if x + pw >= width:
                    raise PageLayoutError("line is wider than the canvas")
                page[top : top + ph, x : x + pw] |= patch
                gt_glyphs.append(
                    GTGlyph(
                        line_index=li,
                        row=top,
                        col=x,
                        height=ph,
                        width=pw,
                        label=label,
                    )
                )
                line_top = min(line_top, top)
                line_bottom = max(line_bottom, top + ph - 1)
                x += pw
            word_spans.append((word_start, x - 1))

        gt_lines.append(
            GTLine(
                upper_start=line_top - 1,
                middle_start=m0,
                middle_end=m1,
                lower_end=line_bottom + 1,
                word_gaps=tuple(word_gaps),
                words=tuple(word_spans),
            )
        )
        y = m1 + desc_h + 1 + clearance

    img = BinaryImage(width, height, page)
    gt = GroundTruth(
        lines=tuple(gt_lines),
        glyphs=tuple(gt_glyphs),
        middle_height=mid_h,
        intra_gap=intra_gap,
    )
    return img, gt


def generate_bar_document(
    seed: int,
    lines: int = 3,
    bars_per_line: int = 3,
    bar_h: int = 12,
    bar_w: int = 10,
    extra: int = 4,
    canvas: tuple[int, int] = (400, 200),
) -> tuple[BinaryImage, list[tuple[int, int, int, int]]]:
    """Page of solid rectangles for template-matching oracles.

    Each bar is bar_h tall and (bar_w + extra) wide, so a bar_h x bar_w
    solid template produces a horizontal run of exactly extra + 1
    distance-zero windows inside every bar.  Returns the page and the
    planted (row, col, h, w_total) bar boxes.
    """
    width, height = canvas
    rng = np.random.default_rng(seed)
    page = np.zeros((height, width), dtype=np.uint8)
    bars: list[tuple[int, int, int, int]] = []
    w_total = bar_w + extra
    spacing = max(2 * bar_w, 24)
    y = 10
    for _ in range(lines):
        if y + bar_h + 2 >= height:
            raise PageLayoutError("bar page is taller than the canvas")
        x = 8 + int(rng.integers(0, 6))
        for _ in range(bars_per_line):
            if x + w_total >= width:
                raise PageLayoutError("bar line is wider than the canvas")
            page[y : y + bar_h, x : x + w_total] = 1
            bars.append((y, x, bar_h, w_total))
            x += w_total + spacing + int(rng.integers(0, 8))
        y += bar_h + 14 + int(rng.integers(0, 6))
    return BinaryImage(width, height, page), bars


def render_glyph_sample(label: str, rng: np.random.Generator, side: int = 28) -> np.ndarray:
    """One jittered 28x28 training sample (ink 255 on 0) for a label.

    Samples are near-centered with mild size/stroke jitter: the bundled
    training recipe runs a short fixed schedule, so within-class variance
    is kept small enough for it to converge at desk scale.
    """
    spec = GLYPH_BANK[label]
    mid_h = int(rng.integers(13, 17))
    asc = int(rng.integers(5, 7)) if spec.has_ascender else 0
    desc = int(rng.integers(5, 7)) if spec.has_descender else 0
    body_w = _clamp_int(mid_h * rng.uniform(0.68, 0.82) * spec.width_factor, 5, side - 2)
    stroke_r = float(rng.uniform(1.05, 1.35))
    glyph = render_glyph(spec, mid_h, body_w, asc, desc, stroke_r)
    gh, gw = glyph.shape

    out = np.zeros((side, side), dtype=np.uint8)
    top = int(np.clip((side - gh) // 2 + rng.integers(-1, 2), 0, side - gh))
    left = int(np.clip((side - gw) // 2 + rng.integers(-1, 2), 0, side - gw))
    out[top : top + gh, left : left + gw] = glyph * 255
    return out


def export_glyph_dataset(out_dir, per_class: int = 200, seed: int = 0) -> None:
    """Write a labeled glyph dataset: <out_dir>/<label>/NNN.png, 28x28."""
    from pathlib import Path

    from PIL import Image

    root = Path(out_dir)
    for index, label in enumerate(LABELS):
        rng = np.random.default_rng([seed, index])
        label_dir = root / label
        label_dir.mkdir(parents=True, exist_ok=True)
        for i in range(per_class):
            sample = render_glyph_sample(label, rng)
            Image.fromarray(sample, mode="L").save(label_dir / f"{i:04d}.png")


def profile_grid(n_writers: int, seed: int = 0) -> list[WriterProfile]:
    """Deterministic bank of writer profiles separated well beyond their
    own jitter (grid over x-height and word-gap means, mild ratio drift)."""
    rng = np.random.default_rng(seed)
    mids = [11.0, 14.0, 17.0, 20.0, 23.0]
    gaps = [10.0, 16.0, 22.0, 28.0]
    profiles = []
    for w in range(n_writers):
        mid = mids[w % len(mids)]
        gap = gaps[(w // len(mids)) % len(gaps)]
        wave = (w // (len(mids) * len(gaps))) % 3
        profiles.append(
            WriterProfile(
                middle_height=(mid, 0.15),
                upper_ratio=(0.38 + 0.06 * wave + float(rng.uniform(0, 0.01)), 0.01),
                lower_ratio=(0.38 + 0.06 * ((wave + 1) % 3), 0.01),
                word_gap=(gap, 0.4),
                intra_gap=(2.0, 0.2),
                ink_density=(1.0 + 0.1 * wave, 0.05),
                width_ratio=(0.62 + 0.05 * wave, 0.015),
            )
        )
    return profiles
