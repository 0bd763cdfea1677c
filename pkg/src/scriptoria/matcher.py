"""Template search: embed the operator's character crop, slide a window
along every detected line, gate hits by embedding distance and keep only
runs of consecutive hits.

Patches are embedded after rendering ink as 1.0 on a 0.0 background (the
convention the trainer uses, and the one that makes a blank window embed
to the zero vector).  Two embedders exist:

* a loaded EmbeddingNetwork, tapping its 128-wide dense activation;
* a pixel fallback that area-averages the patch to 16x16 and pairs the
  256 values down to 128 -- a pure linear map, so pixel-identical patches
  embed identically and an exact copy of the template sits at distance 0.

Both embeddings are L2-normalized, which keeps the default distance gate
of 0.1 meaningful for either embedder.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DegeneratePatchError, NoFitError, ValidationError
from .imaging import BinaryImage, GrayImage
from .layout import LineBand
from .network import EMBEDDING_DIM, INPUT_SIDE, EmbeddingNetwork

FALLBACK_SIDE = 16
DEFAULT_T_C = 0.1
DEFAULT_RUN_LENGTH = 5
OVERLAP_MERGE_FRACTION = 0.5
MIN_TEMPLATE_SIDE = 4


@dataclass(frozen=True)
class TemplateQuery:
    """An operator-selected character crop to search for."""

    doc_id: str
    bbox: tuple[int, int, int, int]  # (row, col, h, w) in document pixels
    label: str
    patch: GrayImage  # ink rendered white (255) on black (0)

    @classmethod
    def from_document(
        cls, doc: BinaryImage, doc_id: str, bbox: tuple[int, int, int, int], label: str
    ) -> "TemplateQuery":
        row, col, h, w = bbox
        if h < MIN_TEMPLATE_SIDE or w < MIN_TEMPLATE_SIDE:
            raise ValidationError(
                f"template must be at least {MIN_TEMPLATE_SIDE}x{MIN_TEMPLATE_SIDE}"
            )
        if row < 0 or col < 0 or row + h > doc.height or col + w > doc.width:
            raise ValidationError("template bbox exceeds document bounds")
        crop = doc.mask[row : row + h, col : col + w]
        patch = GrayImage(w, h, (crop * 255).astype(np.uint8))
        return cls(doc_id=doc_id, bbox=bbox, label=label, patch=patch)


@dataclass(frozen=True)
class CharMatch:
    """One accepted occurrence of the template."""

    line_index: int
    window: tuple[int, int, int, int]  # (row, col, h, w)
    distance: float
    ink_height: int
    ink_width: int


@dataclass(frozen=True)
class MatcherConfig:
    t_c: float = DEFAULT_T_C
    run_length: int = DEFAULT_RUN_LENGTH
    stride: int = 1
    embedder: Optional[EmbeddingNetwork] = None  # None -> pixel fallback
    workers: int = 1
    time_budget_s: Optional[float] = None

    def __post_init__(self) -> None:
        if self.t_c <= 0:
            raise ValidationError("t_c must be positive")
        if self.run_length < 1:
            raise ValidationError("run_length must be at least 1")
        if self.stride < 1:
            raise ValidationError("stride must be at least 1")


@dataclass(frozen=True)
class SearchResult:
    matches: list[CharMatch]
    partial: bool = False


@lru_cache(maxsize=64)
def _overlap_weights(n_out: int, n_in: int) -> np.ndarray:
    """Row-normalized box-overlap weights for 1-D area resampling."""
    m = np.zeros((n_out, n_in), dtype=np.float64)
    scale = n_in / n_out
    for i in range(n_out):
        lo, hi = i * scale, (i + 1) * scale
        for j in range(int(np.floor(lo)), min(int(np.ceil(hi)), n_in)):
            ov = min(hi, j + 1) - max(lo, j)
            if ov > 0:
                m[i, j] = ov
    return m / scale


def area_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Exact box-overlap (area-average) resampling to out_h x out_w."""
    r = _overlap_weights(out_h, img.shape[0])
    c = _overlap_weights(out_w, img.shape[1])
    return r @ img.astype(np.float64) @ c.T


@lru_cache(maxsize=64)
def _fallback_projection(h: int, w: int) -> np.ndarray:
    """Linear map from a flattened h*w patch to the 128-d fallback space.

    Composition of 16x16 area resampling (a Kronecker product of the two
    1-D weight matrices) and 2:1 averaging of adjacent flattened values.
    """
    k = np.kron(_overlap_weights(FALLBACK_SIDE, h), _overlap_weights(FALLBACK_SIDE, w))
    pairs = np.zeros((EMBEDDING_DIM, FALLBACK_SIDE * FALLBACK_SIDE), dtype=np.float64)
    for i in range(EMBEDDING_DIM):
        pairs[i, 2 * i] = 0.5
        pairs[i, 2 * i + 1] = 0.5
    return (pairs @ k).astype(np.float32)


@lru_cache(maxsize=64)
def _input_projection(h: int, w: int) -> np.ndarray:
    """Linear map from a flattened h*w patch to the 28x28 network input."""
    k = np.kron(_overlap_weights(INPUT_SIDE, h), _overlap_weights(INPUT_SIDE, w))
    return k.astype(np.float32)


def _embed_rows(
    flat: np.ndarray, h: int, w: int, net: Optional[EmbeddingNetwork]
) -> tuple[np.ndarray, np.ndarray]:
    """Embed many flattened patches at once.

    flat: (n, h*w) float32 with values in [0, 1], ink = 1.
    Returns (embeddings (n, 128) float32 L2-normalized, valid (n,) bool);
    rows whose raw embedding is all zero are marked invalid and left as
    zero vectors.
    """
    if net is None:
        raw = flat @ _fallback_projection(h, w).T
    else:
        x = (flat @ _input_projection(h, w).T).reshape(-1, 1, INPUT_SIDE, INPUT_SIDE)
        raw = net.embed_batch(x)
    norms = np.linalg.norm(raw, axis=1)
    valid = norms > 0
    safe = np.where(valid, norms, 1.0)
    return (raw / safe[:, None]).astype(np.float32), valid


def embed(patch: GrayImage, net: Optional[EmbeddingNetwork] = None) -> np.ndarray:
    """Embed one grayscale patch (ink = bright) to a unit-norm 128-vector.

    Raises:
        DegeneratePatchError: the patch embeds to the zero vector
            (typically: no ink at all).
    """
    flat = (patch.samples.astype(np.float32) / 255.0).reshape(1, -1)
    emb, valid = _embed_rows(flat, patch.height, patch.width, net)
    if not valid[0]:
        raise DegeneratePatchError("patch has an all-zero embedding")
    return emb[0]


def distance(f1: np.ndarray, f2: np.ndarray) -> float:
    """Euclidean distance between two equal-length vectors."""
    f1 = np.asarray(f1, dtype=np.float64)
    f2 = np.asarray(f2, dtype=np.float64)
    if f1.shape != f2.shape:
        raise ValidationError(f"vector lengths differ: {f1.shape} vs {f2.shape}")
    return float(np.sqrt(((f1 - f2) ** 2).sum()))


@dataclass(frozen=True)
class _Candidate:
    line_index: int
    row: int
    col: int
    distance: float


def _scan_band(
    mask: np.ndarray,
    band: LineBand,
    line_index: int,
    t_flat: np.ndarray,
    h: int,
    w: int,
    cfg: MatcherConfig,
    deadline: Optional[float],
) -> tuple[list[_Candidate], bool]:
    """All run-smoothed candidates in one band; second item flags a
    deadline abort."""
    sub = mask[band.upper_start : band.lower_end + 1]
    if not sub.any():
        return [], False
    sub_f = sub.astype(np.float32)
    windows = sliding_window_view(sub_f, (h, w))  # (n_y, n_x, h, w)
    n_y, n_x = windows.shape[:2]
    xs = np.arange(0, n_x, cfg.stride)

    candidates: list[_Candidate] = []
    for y_off in range(n_y):
        if deadline is not None and time.monotonic() > deadline:
            return candidates, True
        flat = windows[y_off, xs].reshape(len(xs), h * w)
        if not flat.any():
            continue
        # The template rides along as row 0 of every batch: identical rows
        # of one matmul embed bit-identically, so a pixel-exact copy of
        # the template lands at distance exactly 0.
        emb, valid = _embed_rows(np.concatenate([t_flat, flat]), h, w, cfg.embedder)
        d = np.linalg.norm(emb[1:].astype(np.float64) - emb[0].astype(np.float64), axis=1)
        d[~valid[1:]] = np.inf
        hits = d < cfg.t_c
        for start, end in _true_runs(hits):
            if end - start + 1 < cfg.run_length:
                continue
            best = start + int(np.argmin(d[start : end + 1]))
            candidates.append(
                _Candidate(
                    line_index=line_index,
                    row=band.upper_start + y_off,
                    col=int(xs[best]),
                    distance=float(d[best]),
                )
            )
    return candidates, False


def _true_runs(flags: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of True as inclusive (start, end) index pairs."""
    if not flags.any():
        return []
    padded = np.concatenate(([False], flags, [False]))
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    return [(int(s), int(e) - 1) for s, e in zip(edges[::2], edges[1::2])]


def _suppress(cands: list[_Candidate], h: int, w: int) -> list[_Candidate]:
    """Greedy keep-the-closest merge of windows overlapping > 50% area."""
    order = sorted(cands, key=lambda c: (c.distance, c.row, c.col))
    kept: list[_Candidate] = []
    limit = OVERLAP_MERGE_FRACTION * h * w
    for c in order:
        clash = False
        for k in kept:
            inter = max(0, h - abs(c.row - k.row)) * max(0, w - abs(c.col - k.col))
            if inter > limit:
                clash = True
                break
        if not clash:
            kept.append(c)
    return kept


def _ink_extent(mask: np.ndarray, row: int, col: int, h: int, w: int) -> tuple[int, int]:
    win = mask[row : row + h, col : col + w]
    rows = np.flatnonzero(win.any(axis=1))
    cols = np.flatnonzero(win.any(axis=0))
    if rows.size == 0:
        return 0, 0
    return int(rows[-1] - rows[0] + 1), int(cols[-1] - cols[0] + 1)


def run_search(
    doc: BinaryImage,
    bands: Sequence[LineBand],
    query: TemplateQuery,
    cfg: MatcherConfig = MatcherConfig(),
) -> SearchResult:
    """Search every line band for the template.

    Returns accepted matches sorted by (line, column, row) plus a flag
    marking results truncated by the optional time budget.

    Raises:
        NoFitError: the template fits inside no band.
        DegeneratePatchError: the template itself carries no ink.
    """
    row, col, h, w = query.bbox
    if not bands:  # blank page: nothing to search, nothing to fit
        return SearchResult(matches=[], partial=False)
    eligible = [
        (idx, band)
        for idx, band in enumerate(bands)
        if band.band_height >= h and doc.width >= w
    ]
    if not eligible:
        raise NoFitError("template is larger than every detected line band")

    embed(query.patch, cfg.embedder)  # reject degenerate templates up front
    t_flat = (query.patch.samples.astype(np.float32) / 255.0).reshape(1, -1)
    deadline = (
        time.monotonic() + cfg.time_budget_s if cfg.time_budget_s is not None else None
    )

    per_band: dict[int, list[_Candidate]] = {}
    partial = False
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            futures = {
                idx: pool.submit(
                    _scan_band, doc.mask, band, idx, t_flat, h, w, cfg, deadline
                )
                for idx, band in eligible
            }
            for idx, fut in futures.items():
                cands, aborted = fut.result()
                per_band[idx] = cands
                partial = partial or aborted
    else:
        for idx, band in eligible:
            cands, aborted = _scan_band(doc.mask, band, idx, t_flat, h, w, cfg, deadline)
            per_band[idx] = cands
            if aborted:
                partial = True
                break

    matches: list[CharMatch] = []
    for idx in sorted(per_band):
        for c in _suppress(per_band[idx], h, w):
            ink_h, ink_w = _ink_extent(doc.mask, c.row, c.col, h, w)
            if ink_h == 0:
                continue
            matches.append(
                CharMatch(
                    line_index=c.line_index,
                    window=(c.row, c.col, h, w),
                    distance=c.distance,
                    ink_height=ink_h,
                    ink_width=ink_w,
                )
            )
    matches.sort(key=lambda m: (m.line_index, m.window[1], m.window[0]))
    return SearchResult(matches=matches, partial=partial)


def search_template(
    doc: BinaryImage,
    bands: Sequence[LineBand],
    query: TemplateQuery,
    cfg: MatcherConfig = MatcherConfig(),
) -> list[CharMatch]:
    """run_search without the partial flag; see run_search."""
    return run_search(doc, bands, query, cfg).matches


def occurrence_measures(matches: Sequence[CharMatch]) -> tuple[list[int], list[int]]:
    """Ink heights and widths of the accepted occurrences, in match order."""
    return [m.ink_height for m in matches], [m.ink_width for m in matches]


def hit_distances(
    doc: BinaryImage,
    band: LineBand,
    query: TemplateQuery,
    cfg: MatcherConfig = MatcherConfig(),
) -> np.ndarray:
    """Raw pre-smoothing distance grid for one band (tests, diagnostics).

    Shape (vertical offsets, horizontal positions); np.inf marks windows
    that embed degenerately.
    """
    row, col, h, w = query.bbox
    embed(query.patch, cfg.embedder)
    t_flat = (query.patch.samples.astype(np.float32) / 255.0).reshape(1, -1)
    sub = doc.mask[band.upper_start : band.lower_end + 1].astype(np.float32)
    windows = sliding_window_view(sub, (h, w))
    n_y, n_x = windows.shape[:2]
    out = np.full((n_y, n_x), np.inf)
    for y_off in range(n_y):
        flat = windows[y_off].reshape(n_x, h * w)
        emb, valid = _embed_rows(np.concatenate([t_flat, flat]), h, w, cfg.embedder)
        d = np.linalg.norm(emb[1:].astype(np.float64) - emb[0].astype(np.float64), axis=1)
        d[~valid[1:]] = np.inf
        out[y_off] = d
    return out
