"""Pairwise authorship evaluation over a document corpus.

Every document is reduced to a feature vector (layout measures plus
occurrence sizes of the configured templates), a same-writer threshold
is calibrated on a stratified fraction of the N(N-1)/2 unordered pairs,
and the remaining pairs are classified by Euclidean distance.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

logger = logging.getLogger("scriptoria.evaluate")

from .errors import CalibrationError, ScriptoriaError, ValidationError
from .features import (
    FeatureVector,
    MeasureSet,
    build_feature_vector,
    calibrate_threshold,
    feature_distance,
    normalize_mode,
)
from .imaging import BinaryImage
from .layout import analyze_layout, layout_measures
from .matcher import MatcherConfig, TemplateQuery, occurrence_measures, run_search
from .synthetic import GroundTruth


@dataclass(frozen=True)
class CorpusDoc:
    """One corpus entry: mask, writer identity, optional ground truth."""

    doc_id: str
    image: BinaryImage
    writer_id: str
    ground_truth: Optional[GroundTruth] = None


@dataclass(frozen=True)
class EvalConfig:
    templates: tuple[str, ...] = ()
    so: Optional[int] = None
    t_c: float = 0.1
    run_length: int = 1
    normalization: str = "raw"
    calib_fraction: float = 0.3
    seed: int = 7
    workers: int = 1
    threshold: Optional[float] = None  # skip calibration when given

    def __post_init__(self) -> None:
        if not 0 < self.calib_fraction < 1:
            raise ValidationError("calib_fraction must be in (0, 1)")


@dataclass(frozen=True)
class PairResult:
    a: str
    b: str
    distance: float
    same_writer_true: bool
    same_writer_pred: bool


@dataclass(frozen=True)
class EvalReport:
    pair_count: int
    accuracy: float
    false_same: int
    false_different: int
    threshold: float
    calibration_pair_count: int
    pairs: tuple[PairResult, ...]
    excluded: tuple[tuple[str, str], ...] = ()

    def to_json(self) -> str:
        return json.dumps(
            {
                "pair_count": self.pair_count,
                "accuracy": self.accuracy,
                "false_same": self.false_same,
                "false_different": self.false_different,
                "threshold": self.threshold,
                "calibration_pair_count": self.calibration_pair_count,
                "excluded": [list(e) for e in self.excluded],
                "pairs": [
                    {
                        "a": p.a,
                        "b": p.b,
                        "distance": p.distance,
                        "same_writer_true": p.same_writer_true,
                        "same_writer_pred": p.same_writer_pred,
                    }
                    for p in self.pairs
                ],
            },
            indent=2,
        )


def extract_features(doc: CorpusDoc, config: EvalConfig) -> FeatureVector:
    """Layout + template measures -> feature vector for one document.

    Template occurrences are searched with the first ground-truth glyph
    of each configured label as the query, mirroring the operator's
    pick-a-character workflow; labels absent from the document are
    simply not measured.
    """
    bands, words = analyze_layout(doc.image, so=config.so)
    per_template: dict[str, tuple[list[float], list[float]]] = {}
    if config.templates:
        if doc.ground_truth is None:
            raise ValidationError(
                f"document {doc.doc_id}: template search needs ground-truth "
                "glyph boxes (synthetic corpora) or an operator selection"
            )
        cfg = MatcherConfig(
            t_c=config.t_c, run_length=config.run_length, workers=config.workers
        )
        for label in config.templates:
            glyphs = doc.ground_truth.glyphs_for(label)
            if not glyphs:
                continue
            g0 = min(glyphs, key=lambda g: (g.line_index, g.col, g.row))
            query = TemplateQuery.from_document(
                doc.image, doc.doc_id, (g0.row, g0.col, g0.height, g0.width), label
            )
            matches = run_search(doc.image, bands, query, cfg).matches
            heights, widths = occurrence_measures(matches)
            if heights:
                per_template[label] = (list(map(float, heights)), list(map(float, widths)))

    measures = MeasureSet.from_layout(layout_measures(bands, words), per_template)
    measures = normalize_mode(measures, config.normalization)
    return build_feature_vector(measures, doc_id=doc.doc_id, mode=config.normalization)


def _split_pairs(
    pairs: Sequence[tuple[int, int, bool]], fraction: float, seed: int
) -> tuple[list[tuple[int, int, bool]], list[tuple[int, int, bool]]]:
    """Stratified calibration/evaluation split, deterministic in seed."""
    rng = np.random.default_rng(seed)
    positives = [p for p in pairs if p[2]]
    negatives = [p for p in pairs if not p[2]]
    if not positives or not negatives:
        raise CalibrationError("corpus yields no pairs of both classes")
    calib: list[tuple[int, int, bool]] = []
    rest: list[tuple[int, int, bool]] = []
    for group in (positives, negatives):
        order = rng.permutation(len(group))
        take = min(len(group) - 1, max(1, int(round(fraction * len(group)))))
        chosen = {int(i) for i in order[:take]}
        for i, p in enumerate(group):
            (calib if i in chosen else rest).append(p)
    rest.sort()
    return calib, rest


def extract_corpus_features(
    corpus: Sequence[CorpusDoc], config: EvalConfig
) -> tuple[list[tuple[CorpusDoc, FeatureVector]], list[tuple[str, str]]]:
    """Features for every document; failures are logged and excluded."""
    features: list[tuple[CorpusDoc, FeatureVector]] = []
    excluded: list[tuple[str, str]] = []
    for doc in corpus:
        try:
            features.append((doc, extract_features(doc, config)))
        except ScriptoriaError as exc:
            logger.warning("excluding document %s: %s", doc.doc_id, exc)
            excluded.append((doc.doc_id, f"{exc.code}: {exc}"))
    return features, excluded


def evaluate_pairwise(
    corpus: Sequence[CorpusDoc],
    config: EvalConfig,
    precomputed: Optional[
        tuple[list[tuple[CorpusDoc, FeatureVector]], list[tuple[str, str]]]
    ] = None,
) -> EvalReport:
    """Run the full pairwise protocol and assemble the report.

    Documents whose feature extraction fails are excluded (and listed in
    the report) rather than aborting the run.

    Raises:
        ValidationError: fewer than 2 writers or docs per writer.
        CalibrationError: the surviving pairs are single-class.
    """
    writers = {d.writer_id for d in corpus}
    if len(writers) < 2 or any(
        sum(1 for d in corpus if d.writer_id == w) < 2 for w in writers
    ):
        raise ValidationError("evaluation needs >= 2 writers with >= 2 documents each")

    features, excluded = precomputed or extract_corpus_features(corpus, config)

    pairs = [
        (i, j, features[i][0].writer_id == features[j][0].writer_id)
        for i in range(len(features))
        for j in range(i + 1, len(features))
    ]
    if config.threshold is not None:
        calib: list[tuple[int, int, bool]] = []
        rest = pairs
        threshold = config.threshold
    else:
        calib, rest = _split_pairs(pairs, config.calib_fraction, config.seed)
        threshold = calibrate_threshold(
            [(features[i][1], features[j][1], same) for i, j, same in calib]
        )

    results: list[PairResult] = []
    false_same = false_different = 0
    for i, j, same in rest:
        dist, _ = feature_distance(features[i][1], features[j][1])
        pred = dist < threshold
        if pred and not same:
            false_same += 1
        elif not pred and same:
            false_different += 1
        results.append(
            PairResult(
                a=features[i][0].doc_id,
                b=features[j][0].doc_id,
                distance=dist,
                same_writer_true=same,
                same_writer_pred=pred,
            )
        )

    total = len(results)
    correct = total - false_same - false_different
    return EvalReport(
        pair_count=total,
        accuracy=correct / total if total else 0.0,
        false_same=false_same,
        false_different=false_different,
        threshold=threshold,
        calibration_pair_count=len(calib),
        pairs=tuple(results),
        excluded=tuple(excluded),
    )


def distance_matrix_csv(features: Sequence[FeatureVector]) -> str:
    """Symmetric pairwise distance matrix as CSV, doc ids on both axes."""
    ids = [fv.doc_id or f"doc{i}" for i, fv in enumerate(features)]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["doc_id", *ids])
    for i, fv in enumerate(features):
        row: list[object] = [ids[i]]
        for j, other in enumerate(features):
            row.append(0.0 if i == j else feature_distance(fv, other)[0])
        writer.writerow(row)
    return buf.getvalue()


def load_manifest(path: str | Path) -> list[tuple[Path, str]]:
    """Read a corpus manifest CSV with a path,writer_id header row.

    Relative paths resolve against the manifest's directory.
    """
    path = Path(path)
    rows: list[tuple[Path, str]] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"path", "writer_id"} <= set(reader.fieldnames):
            raise ValidationError("manifest must have path,writer_id columns")
        for row in reader:
            doc_path = Path(row["path"])
            if not doc_path.is_absolute():
                doc_path = path.parent / doc_path
            rows.append((doc_path, row["writer_id"]))
    return rows
