"""Per-document feature vectors and pairwise authorship comparison.

Each measure list collapses to a (mean, population standard deviation)
pair.  Entries follow one canonical layout -- the three zone heights,
the word gaps, then height/width pairs per template label in ascending
label order -- and comparison works on the id intersection of the two
vectors so a missing template never injects fake distance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

from .errors import (
    CalibrationError,
    EmptyDocumentError,
    IncomparableDocumentsError,
    NormalizationError,
    ValidationError,
)
from .layout import LayoutMeasures

_BASE_IDS = ("upper", "middle", "lower", "word_gap")
MODES = ("raw", "scale_invariant")


@dataclass(frozen=True)
class MeasureSet:
    """All raw measures extracted from one document."""

    upper_heights: list[float] = field(default_factory=list)
    middle_heights: list[float] = field(default_factory=list)
    lower_heights: list[float] = field(default_factory=list)
    word_gaps: list[float] = field(default_factory=list)
    per_template: dict[str, tuple[list[float], list[float]]] = field(default_factory=dict)

    @classmethod
    def from_layout(
        cls,
        layout: LayoutMeasures,
        per_template: Optional[dict[str, tuple[list[float], list[float]]]] = None,
    ) -> "MeasureSet":
        return cls(
            upper_heights=list(layout.upper_heights),
            middle_heights=list(layout.middle_heights),
            lower_heights=list(layout.lower_heights),
            word_gaps=list(layout.word_gaps),
            per_template=dict(per_template or {}),
        )


@dataclass(frozen=True)
class FeatureEntry:
    id: str
    mean: float
    std: float


@dataclass(frozen=True)
class FeatureVector:
    """Ordered (mean, std) pairs -- the document's forensic signature."""

    entries: tuple[FeatureEntry, ...]
    doc_id: Optional[str] = None
    mode: str = "raw"

    def ids(self) -> list[str]:
        return [e.id for e in self.entries]

    def flattened(self) -> list[float]:
        flat: list[float] = []
        for e in self.entries:
            flat.extend((e.mean, e.std))
        return flat

    def entry(self, measure_id: str) -> FeatureEntry:
        for e in self.entries:
            if e.id == measure_id:
                return e
        raise KeyError(measure_id)

    def to_json(self) -> str:
        return json.dumps(
            {
                "doc_id": self.doc_id,
                "mode": self.mode,
                "entries": [
                    {"id": e.id, "mean": e.mean, "std": e.std} for e in self.entries
                ],
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "FeatureVector":
        obj = json.loads(text)
        return cls(
            entries=tuple(
                FeatureEntry(e["id"], e["mean"], e["std"]) for e in obj["entries"]
            ),
            doc_id=obj.get("doc_id"),
            mode=obj.get("mode", "raw"),
        )


@dataclass(frozen=True)
class ComparisonResult:
    distance: float
    shared_measure_ids: tuple[str, ...]
    same_writer: bool
    threshold_used: float

    def to_json(self, a: Optional[str] = None, b: Optional[str] = None) -> str:
        return json.dumps(
            {
                "a": a,
                "b": b,
                "distance": self.distance,
                "threshold": self.threshold_used,
                "same_writer": self.same_writer,
                "shared_ids": list(self.shared_measure_ids),
            },
            indent=2,
        )


def summarize(values: Sequence[float]) -> Optional[tuple[float, float]]:
    """Mean and population standard deviation; None for an empty list."""
    if not values:
        return None
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / n
    return mean, math.sqrt(var)


def _canonical_key(measure_id: str) -> tuple:
    if measure_id in _BASE_IDS:
        return (0, _BASE_IDS.index(measure_id), "", 0)
    kind, _, label = measure_id.partition("_")
    if kind not in ("height", "width") or not label:
        raise ValidationError(f"unknown measure id {measure_id!r}")
    return (1, 0, label, 0 if kind == "height" else 1)


def canonical_order(ids: Iterable[str]) -> list[str]:
    """Sort measure ids into the fixed feature-vector layout."""
    return sorted(ids, key=_canonical_key)


def build_feature_vector(
    m: MeasureSet, doc_id: Optional[str] = None, mode: str = "raw"
) -> FeatureVector:
    """Summarize every non-empty measure list into the canonical layout.

    Raises:
        EmptyDocumentError: no measure list has any values.
    """
    values: dict[str, Sequence[float]] = {
        "upper": m.upper_heights,
        "middle": m.middle_heights,
        "lower": m.lower_heights,
        "word_gap": m.word_gaps,
    }
    for label, (heights, widths) in m.per_template.items():
        values[f"height_{label}"] = heights
        values[f"width_{label}"] = widths

    entries = []
    for measure_id in canonical_order(values):
        stats = summarize(values[measure_id])
        if stats is not None:
            entries.append(FeatureEntry(measure_id, stats[0], stats[1]))
    if not entries:
        raise EmptyDocumentError("document yields no measures at all")
    return FeatureVector(entries=tuple(entries), doc_id=doc_id, mode=mode)


def feature_distance(a: FeatureVector, b: FeatureVector) -> tuple[float, tuple[str, ...]]:
    """Euclidean distance over the shared measure ids, canonical order.

    Raises:
        IncomparableDocumentsError: the vectors share no measure id.
    """
    shared = canonical_order(set(a.ids()) & set(b.ids()))
    if not shared:
        raise IncomparableDocumentsError("feature vectors share no measure")
    total = 0.0
    for measure_id in shared:
        ea, eb = a.entry(measure_id), b.entry(measure_id)
        total += (ea.mean - eb.mean) ** 2 + (ea.std - eb.std) ** 2
    return math.sqrt(total), tuple(shared)


def compare(a: FeatureVector, b: FeatureVector, threshold: float) -> ComparisonResult:
    """Decide authorship of a pair: same writer iff distance < threshold."""
    dist, shared = feature_distance(a, b)
    return ComparisonResult(
        distance=dist,
        shared_measure_ids=shared,
        same_writer=dist < threshold,
        threshold_used=threshold,
    )


def calibrate_threshold(
    pairs: Sequence[tuple[FeatureVector, FeatureVector, bool]]
) -> float:
    """Pick the cut between adjacent pair distances maximizing accuracy.

    Candidate thresholds are the midpoints of adjacent distinct distances
    (plus the lone distance itself if all pairs coincide); accuracy counts
    positives below and negatives at-or-above the cut; ties go to the
    smaller threshold.

    Raises:
        CalibrationError: pairs are all-positive or all-negative.
    """
    labeled = [(feature_distance(a, b)[0], same) for a, b, same in pairs]
    n_pos = sum(1 for _, same in labeled if same)
    if n_pos == 0 or n_pos == len(labeled):
        raise CalibrationError("calibration needs both same- and different-writer pairs")

    distinct = sorted({d for d, _ in labeled})
    if len(distinct) == 1:
        return distinct[0]
    candidates = [(lo + hi) / 2.0 for lo, hi in zip(distinct, distinct[1:])]

    best_t, best_acc = candidates[0], -1.0
    for t in candidates:
        correct = sum(
            1 for d, same in labeled if (d < t) == same
        )
        acc = correct / len(labeled)
        if acc > best_acc:
            best_t, best_acc = t, acc
    return best_t


def normalize_mode(m: MeasureSet, mode: str) -> MeasureSet:
    """raw: identity.  scale_invariant: divide every pixel measure by the
    document's mean middle-zone height.

    Raises:
        ValidationError: unknown mode.
        NormalizationError: scale_invariant without a positive mean
            middle height.
    """
    if mode == "raw":
        return m
    if mode != "scale_invariant":
        raise ValidationError(f"unknown normalization mode {mode!r}")
    if not m.middle_heights:
        raise NormalizationError("scale normalization needs middle-zone heights")
    ref = sum(m.middle_heights) / len(m.middle_heights)
    if ref <= 0:
        raise NormalizationError("mean middle height must be positive")

    def scaled(values: Sequence[float]) -> list[float]:
        return [v / ref for v in values]

    return MeasureSet(
        upper_heights=scaled(m.upper_heights),
        middle_heights=scaled(m.middle_heights),
        lower_heights=scaled(m.lower_heights),
        word_gaps=scaled(m.word_gaps),
        per_template={
            label: (scaled(h), scaled(w)) for label, (h, w) in m.per_template.items()
        },
    )
