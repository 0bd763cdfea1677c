"""Text-line and word geometry from projection profiles.

Lines are found on the row projection of the ink mask: the profile is
denoised against its own mean, peaks are pulled out one by one, and each
peak is grown into a middle band (the x-height zone).  Upper and lower
zones are then grown on the *original* profile, because ascender and
descender rows carry counts the denoising step deliberately removes.
Words come from per-line column projections: a zero-run longer than the
space threshold separates two words.

All indices are inclusive.  Derived heights follow one fixed convention:

    upper_height  = middle_start - upper_start
    middle_height = middle_end - middle_start + 1
    lower_height  = lower_end - middle_end
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ValidationError
from .imaging import BinaryImage

DEFAULT_MIN_LINE_HEIGHT = 3


@dataclass(frozen=True)
class RowHistogram:
    """Ink-pixel count per image row."""

    counts: np.ndarray  # shape (height,), int64

    def __post_init__(self) -> None:
        object.__setattr__(self, "counts", np.asarray(self.counts, dtype=np.int64))


@dataclass(frozen=True)
class ColumnHistogram:
    """Ink-pixel count per column, restricted to one line band's rows."""

    counts: np.ndarray  # shape (width,), int64

    def __post_init__(self) -> None:
        object.__setattr__(self, "counts", np.asarray(self.counts, dtype=np.int64))


@dataclass(frozen=True)
class LineBand:
    """One detected text line with its three vertical zones."""

    upper_start: int
    middle_start: int
    middle_end: int
    lower_end: int
    peak_index: int
    peak_value: int

    def __post_init__(self) -> None:
        ordered = (
            self.upper_start <= self.middle_start <= self.peak_index
            <= self.middle_end <= self.lower_end
        )
        if not ordered:
            raise ValidationError(f"band indices out of order: {self}")

    @property
    def upper_height(self) -> int:
        return self.middle_start - self.upper_start

    @property
    def middle_height(self) -> int:
        return self.middle_end - self.middle_start + 1

    @property
    def lower_height(self) -> int:
        return self.lower_end - self.middle_end

    @property
    def band_height(self) -> int:
        return self.lower_end - self.upper_start + 1


@dataclass(frozen=True)
class WordBox:
    """One word on one line, trimmed to ink-bearing columns."""

    line_index: int
    col_start: int
    col_end: int
    gap_before: Optional[int] = None  # None for the first word on a line

    def __post_init__(self) -> None:
        if self.col_start > self.col_end:
            raise ValidationError("word with col_start > col_end")


@dataclass(frozen=True)
class LayoutMeasures:
    """Per-document pixel measures feeding the feature vector."""

    upper_heights: list[int]
    middle_heights: list[int]
    lower_heights: list[int]
    word_gaps: list[int]


def row_histogram(img: BinaryImage) -> RowHistogram:
    """Exact ink count of every image row."""
    return RowHistogram(img.mask.sum(axis=1, dtype=np.int64))


def denoise(h: RowHistogram) -> RowHistogram:
    """Zero every row whose count falls below the profile mean.

    The mean is kept real-valued and the comparison is strict, so a
    uniform profile passes through unchanged.
    """
    counts = h.counts
    if counts.size == 0:
        return RowHistogram(counts.copy())
    mean = counts.mean()
    return RowHistogram(np.where(counts < mean, 0, counts))


def detect_middle_bands(
    hd: RowHistogram, min_line_height: int = DEFAULT_MIN_LINE_HEIGHT
) -> list[tuple[int, int, int, int]]:
    """Extract (middle_start, middle_end, peak_index, peak_value) per line.

    Repeatedly takes the global maximum of the denoised profile (ties to
    the smallest index), grows the maximal contiguous interval around it
    where the profile stays >= max/4, then erases the whole contiguous
    nonzero run containing the peak so shoulders cannot re-trigger as
    phantom lines.  Bands shorter than min_line_height are dropped;
    output is sorted by middle_start.
    """
    work = hd.counts.astype(np.float64).copy()
    n = work.size
    bands: list[tuple[int, int, int, int]] = []

    while True:
        peak = int(np.argmax(work))
        peak_value = work[peak]
        if peak_value <= 0:
            break
        val = peak_value / 4.0

        start = peak
        while start - 1 >= 0 and work[start - 1] >= val:
            start -= 1
        end = peak
        while end + 1 < n and work[end + 1] >= val:
            end += 1

        bands.append((start, end, peak, int(peak_value)))

        # Erase the full nonzero run around the peak, not just the band.
        lo = peak
        while lo - 1 >= 0 and work[lo - 1] > 0:
            lo -= 1
        hi = peak
        while hi + 1 < n and work[hi + 1] > 0:
            hi += 1
        work[lo : hi + 1] = 0.0

    bands = [b for b in bands if b[1] - b[0] + 1 >= min_line_height]
    bands.sort(key=lambda b: b[0])
    return bands


def _argmin_first(values: np.ndarray, offset: int) -> int:
    """Index of the minimum, smallest index on ties, shifted by offset."""
    return offset + int(np.argmin(values))


def extend_zones(
    h: RowHistogram, bands: Sequence[tuple[int, int, int, int]]
) -> list[LineBand]:
    """Grow upper and lower zones for each middle band.

    Scans the *original* (pre-denoise) profile away from the band until a
    zero row is hit; that zero row is the zone boundary.  If the scan
    instead runs into the neighboring line's middle band (or the image
    edge) while the profile stays nonzero, the boundary falls back to the
    profile minimum over the scanned range (smallest index on ties).
    """
    counts = h.counts
    n = counts.size
    out: list[LineBand] = []

    for i, (m_start, m_end, peak, peak_value) in enumerate(bands):
        # Upward scan for the start of the upper zone.
        stop = bands[i - 1][1] if i > 0 else 0
        x = m_start
        while counts[x] != 0 and x > stop:
            x -= 1
        if counts[x] == 0:
            upper_start = x
        else:
            upper_start = _argmin_first(counts[x : m_start + 1], x)

        # Downward scan for the end of the lower zone.
        stop = bands[i + 1][0] if i + 1 < len(bands) else n - 1
        x = m_end
        while counts[x] != 0 and x < stop:
            x += 1
        if counts[x] == 0:
            lower_end = x
        else:
            lower_end = _argmin_first(counts[m_end : x + 1], m_end)

        out.append(
            LineBand(
                upper_start=upper_start,
                middle_start=m_start,
                middle_end=m_end,
                lower_end=lower_end,
                peak_index=peak,
                peak_value=peak_value,
            )
        )
    return out


def detect_line_bands(
    img: BinaryImage, min_line_height: int = DEFAULT_MIN_LINE_HEIGHT
) -> list[LineBand]:
    """Full text-line detection: profile, denoise, peaks, zones."""
    h = row_histogram(img)
    bands = detect_middle_bands(denoise(h), min_line_height)
    return extend_zones(h, bands)


def column_histogram(img: BinaryImage, band: LineBand) -> ColumnHistogram:
    """Ink count per column over the band's rows [upper_start, lower_end]."""
    if band.upper_start < 0 or band.lower_end >= img.height:
        raise ValidationError("band rows exceed image bounds")
    rows = img.mask[band.upper_start : band.lower_end + 1]
    return ColumnHistogram(rows.sum(axis=0, dtype=np.int64))


def detect_words(hc: ColumnHistogram, so: int, line_index: int = 0) -> list[WordBox]:
    """Split one line's column profile into words.

    A zero-run separates two words iff it is strictly longer than so;
    shorter interior runs are absorbed into the surrounding word.  Words
    are trimmed so both end columns carry ink, and runs touching either
    profile edge never produce a gap.
    """
    if so < 0:
        raise ValidationError("space threshold so must be >= 0")
    counts = hc.counts
    nz = np.flatnonzero(counts)
    if nz.size == 0:
        return []

    # Walk the ink-bearing columns; a jump of more than so zero columns
    # between consecutive ones closes the current word.
    spans: list[tuple[int, int]] = []
    word_start = int(nz[0])
    prev = word_start
    for col in nz[1:]:
        col = int(col)
        if col - prev - 1 > so:
            spans.append((word_start, prev))
            word_start = col
        prev = col
    spans.append((word_start, prev))

    words = [WordBox(line_index, spans[0][0], spans[0][1], None)]
    for (_, left_end), (start, end) in zip(spans, spans[1:]):
        words.append(WordBox(line_index, start, end, start - left_end - 1))
    return words


def default_so(band: LineBand) -> int:
    """Default space threshold: half the middle-zone height, at least 1."""
    return max(1, _round_half_up(0.5 * band.middle_height))


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def analyze_layout(
    img: BinaryImage,
    so: Optional[int] = None,
    so_per_line: Optional[dict[int, int]] = None,
    min_line_height: int = DEFAULT_MIN_LINE_HEIGHT,
) -> tuple[list[LineBand], list[list[WordBox]]]:
    """Detect lines and words in one pass.

    so, when given, overrides the per-band default threshold globally;
    so_per_line overrides it for individual lines (keyed by line index).
    """
    bands = detect_line_bands(img, min_line_height)
    words: list[list[WordBox]] = []
    for idx, band in enumerate(bands):
        line_so = default_so(band) if so is None else so
        if so_per_line and idx in so_per_line:
            line_so = so_per_line[idx]
        hc = column_histogram(img, band)
        words.append(detect_words(hc, line_so, idx))
    return bands, words


def layout_measures(bands: Sequence[LineBand], words: Sequence[Sequence[WordBox]]) -> LayoutMeasures:
    """Collect per-line zone heights and all inter-word gaps."""
    gaps = [w.gap_before for line in words for w in line if w.gap_before is not None]
    return LayoutMeasures(
        upper_heights=[b.upper_height for b in bands],
        middle_heights=[b.middle_height for b in bands],
        lower_heights=[b.lower_height for b in bands],
        word_gaps=gaps,
    )


def layout_to_json(bands: Sequence[LineBand], words: Sequence[Sequence[WordBox]]) -> str:
    """Serialize the analysis the way the service and CLI persist it."""
    lines = []
    for band, line_words in zip(bands, words):
        entry: dict = {
            "upper_start": band.upper_start,
            "middle_start": band.middle_start,
            "middle_end": band.middle_end,
            "lower_end": band.lower_end,
            "words": [],
        }
        for w in line_words:
            wd: dict = {"col_start": w.col_start, "col_end": w.col_end}
            if w.gap_before is not None:
                wd["gap_before"] = w.gap_before
            entry["words"].append(wd)
        lines.append(entry)
    return json.dumps({"lines": lines}, indent=2)


def layout_from_json(text: str) -> tuple[list[LineBand], list[list[WordBox]]]:
    """Parse layout JSON back into bands and words.

    peak_index/peak_value are not part of the wire format; they are
    restored as the band midpoint with a zero count.
    """
    obj = json.loads(text)
    bands: list[LineBand] = []
    words: list[list[WordBox]] = []
    for idx, entry in enumerate(obj["lines"]):
        mid = (entry["middle_start"] + entry["middle_end"]) // 2
        bands.append(
            LineBand(
                upper_start=entry["upper_start"],
                middle_start=entry["middle_start"],
                middle_end=entry["middle_end"],
                lower_end=entry["lower_end"],
                peak_index=mid,
                peak_value=0,
            )
        )
        words.append(
            [
                WordBox(idx, w["col_start"], w["col_end"], w.get("gap_before"))
                for w in entry["words"]
            ]
        )
    return bands, words
