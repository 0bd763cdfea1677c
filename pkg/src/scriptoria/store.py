"""On-disk analysis store and the shared ingestion pipeline.

One folder per document id (the id is a content hash, so re-ingesting
the same image is idempotent) holding the source image and every derived
artifact as JSON.  All writes go through a temp-file + rename so a crash
mid-write never corrupts the previous version.  Mutations on one
document are serialized by a per-id lock; distinct documents never
contend.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from .errors import DegenerateInputError, NotFoundError, ValidationError
from .features import FeatureVector, MeasureSet, build_feature_vector, normalize_mode
from .imaging import BinaryImage, DocumentRecord, GrayImage, binarize, load_gray, otsu_threshold
from .layout import analyze_layout, layout_from_json, layout_measures, layout_to_json
from .matcher import CharMatch, MatcherConfig, SearchResult, TemplateQuery, run_search


def binarize_auto(
    gray: GrayImage, method: str = "otsu", threshold: Optional[int] = None
) -> tuple[BinaryImage, str, int]:
    """Binarize with the Otsu-then-fixed(128) fallback used at ingestion.

    Returns (mask, method actually applied, threshold actually applied);
    a constant-valued image (e.g. a blank page) falls back to fixed(128).
    """
    if method == "otsu":
        try:
            t = otsu_threshold(gray)
            return binarize(gray, "fixed", t), "otsu", t
        except DegenerateInputError:
            return binarize(gray, "fixed", 128), "fixed", 128
    return binarize(gray, method, threshold), method, int(threshold or 0)


def invert_gray(gray: GrayImage) -> GrayImage:
    """Flip polarity for light-on-dark captures (tablet exports)."""
    return GrayImage(gray.width, gray.height, (255 - gray.samples).astype(np.uint8))


@dataclass(frozen=True)
class DocumentAnalysis:
    record: DocumentRecord
    image: BinaryImage
    layout_json: str


def analyze_source(
    image_bytes: bytes,
    source_name: str,
    method: str = "otsu",
    threshold: Optional[int] = None,
    medium: str = "paper-scan",
    invert: bool = False,
    so: Optional[int] = None,
    so_per_line: Optional[dict[int, int]] = None,
) -> DocumentAnalysis:
    """The one ingestion path shared by CLI and HTTP (identical artifacts).

    The document id is the SHA-256 of the raw image bytes, so the same
    input always lands in the same store folder.
    """
    doc_id = hashlib.sha256(image_bytes).hexdigest()[:16]
    with tempfile.NamedTemporaryFile(suffix=Path(source_name).suffix or ".png") as tmp:
        tmp.write(image_bytes)
        tmp.flush()
        gray = load_gray(tmp.name)
    if invert:
        gray = invert_gray(gray)
    mask, used_method, used_threshold = binarize_auto(gray, method, threshold)
    record = DocumentRecord(
        id=doc_id,
        source_path=Path(source_name).name,
        binarization_method=used_method,
        binarization_threshold=used_threshold,
        medium=medium,
    )
    bands, words = analyze_layout(mask, so=so, so_per_line=so_per_line)
    return DocumentAnalysis(record=record, image=mask, layout_json=layout_to_json(bands, words))


def matches_to_json(result: SearchResult, template_id: str, label: str) -> str:
    return json.dumps(
        {
            "template_id": template_id,
            "label": label,
            "partial": result.partial,
            "matches": [
                {
                    "line": m.line_index,
                    "row": m.window[0],
                    "col": m.window[1],
                    "h": m.window[2],
                    "w": m.window[3],
                    "distance": m.distance,
                    "ink_height": m.ink_height,
                    "ink_width": m.ink_width,
                }
                for m in result.matches
            ],
        },
        indent=2,
    )


class AnalysisStore:
    """Folder-per-document artifact store with atomic writes."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def lock(self, doc_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(doc_id, threading.Lock())

    def doc_dir(self, doc_id: str, must_exist: bool = True) -> Path:
        d = self.root / doc_id
        if must_exist and not d.is_dir():
            raise NotFoundError(f"unknown document id {doc_id!r}")
        return d

    def list_documents(self) -> list[str]:
        return sorted(p.name for p in self.root.iterdir() if (p / "record.json").exists())

    @staticmethod
    def _write_atomic(path: Path, data: bytes) -> None:
        fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp_name, path)
        except BaseException:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise

    def write_text(self, doc_id: str, name: str, text: str) -> None:
        d = self.doc_dir(doc_id)
        target = d / name
        target.parent.mkdir(parents=True, exist_ok=True)
        self._write_atomic(target, text.encode())

    def read_text(self, doc_id: str, name: str) -> str:
        path = self.doc_dir(doc_id) / name
        if not path.exists():
            raise NotFoundError(f"document {doc_id} has no artifact {name!r}")
        return path.read_text()

    # ------------------------------------------------------------------
    # Document lifecycle
    # ------------------------------------------------------------------

    def ingest(
        self,
        image_bytes: bytes,
        source_name: str,
        method: str = "otsu",
        threshold: Optional[int] = None,
        medium: str = "paper-scan",
        invert: bool = False,
        so: Optional[int] = None,
    ) -> DocumentAnalysis:
        analysis = analyze_source(
            image_bytes, source_name, method, threshold, medium, invert, so
        )
        doc_id = analysis.record.id
        d = self.doc_dir(doc_id, must_exist=False)
        d.mkdir(parents=True, exist_ok=True)
        suffix = Path(source_name).suffix or ".png"
        self._write_atomic(d / f"source{suffix}", image_bytes)
        self.write_text(doc_id, "record.json", analysis.record.to_json())
        self.write_text(doc_id, "layout.json", analysis.layout_json)
        session = {"so": so, "per_line": {}, "invert": invert}
        self.write_text(doc_id, "session.json", json.dumps(session, indent=2))
        return analysis

    def load_record(self, doc_id: str) -> DocumentRecord:
        return DocumentRecord.from_json(self.read_text(doc_id, "record.json"))

    def source_path(self, doc_id: str) -> Path:
        d = self.doc_dir(doc_id)
        for p in sorted(d.glob("source.*")):
            return p
        raise NotFoundError(f"document {doc_id} has no source image")

    def load_mask(self, doc_id: str) -> BinaryImage:
        record = self.load_record(doc_id)
        session = json.loads(self.read_text(doc_id, "session.json"))
        gray = load_gray(self.source_path(doc_id))
        if session.get("invert"):
            gray = invert_gray(gray)
        return binarize(gray, "fixed", record.binarization_threshold)

    def session(self, doc_id: str) -> dict:
        return json.loads(self.read_text(doc_id, "session.json"))

    def update_so(
        self, doc_id: str, so: Optional[int], per_line: Optional[dict[int, int]]
    ) -> str:
        """Re-run word detection with new space-threshold overrides."""
        mask = self.load_mask(doc_id)
        session = self.session(doc_id)
        if so is not None:
            if so < 0:
                raise ValidationError("so must be >= 0")
            session["so"] = so
        if per_line is not None:
            bands, _ = analyze_layout(mask, so=session.get("so"))
            merged = {int(k): int(v) for k, v in session.get("per_line", {}).items()}
            for idx, value in per_line.items():
                idx = int(idx)
                if not 0 <= idx < len(bands):
                    raise ValidationError(f"line index {idx} out of range")
                if value < 0:
                    raise ValidationError("per-line so must be >= 0")
                merged[idx] = int(value)
            session["per_line"] = {str(k): v for k, v in sorted(merged.items())}
        per_line_map = {int(k): v for k, v in session.get("per_line", {}).items()}
        bands, words = analyze_layout(mask, so=session.get("so"), so_per_line=per_line_map)
        layout_json = layout_to_json(bands, words)
        self.write_text(doc_id, "layout.json", layout_json)
        self.write_text(doc_id, "session.json", json.dumps(session, indent=2))
        return layout_json

    # ------------------------------------------------------------------
    # Templates and matches
    # ------------------------------------------------------------------

    def add_template(self, doc_id: str, bbox: tuple[int, int, int, int], label: str) -> str:
        mask = self.load_mask(doc_id)
        query = TemplateQuery.from_document(mask, doc_id, bbox, label)
        template_id = hashlib.sha256(
            json.dumps({"bbox": list(bbox), "label": label}).encode()
        ).hexdigest()[:12]
        payload = {"template_id": template_id, "bbox": list(bbox), "label": label}
        self.write_text(doc_id, f"templates/{template_id}.json", json.dumps(payload, indent=2))
        crop = (1 - query.patch.samples // 255) * 255  # display render: ink black
        d = self.doc_dir(doc_id)
        buf_path = d / "templates" / f"{template_id}.png"
        buf_path.parent.mkdir(parents=True, exist_ok=True)
        img = Image.fromarray(crop.astype(np.uint8), mode="L")
        tmp = buf_path.with_suffix(".png.tmp")
        img.save(tmp, format="PNG")
        os.replace(tmp, buf_path)
        return template_id

    def list_templates(self, doc_id: str) -> list[dict]:
        d = self.doc_dir(doc_id) / "templates"
        out = []
        if d.is_dir():
            for p in sorted(d.glob("*.json")):
                out.append(json.loads(p.read_text()))
        return out

    def template_query(self, doc_id: str, template_id: str) -> TemplateQuery:
        text = self.read_text(doc_id, f"templates/{template_id}.json")
        obj = json.loads(text)
        mask = self.load_mask(doc_id)
        return TemplateQuery.from_document(mask, doc_id, tuple(obj["bbox"]), obj["label"])

    def run_template_search(
        self, doc_id: str, template_id: str, cfg: MatcherConfig
    ) -> SearchResult:
        mask = self.load_mask(doc_id)
        session = self.session(doc_id)
        per_line_map = {int(k): v for k, v in session.get("per_line", {}).items()}
        bands, _ = analyze_layout(mask, so=session.get("so"), so_per_line=per_line_map)
        query = self.template_query(doc_id, template_id)
        result = run_search(mask, bands, query, cfg)
        self.write_text(
            doc_id,
            f"matches/{template_id}.json",
            matches_to_json(result, template_id, query.label),
        )
        return result

    # ------------------------------------------------------------------
    # Features
    # ------------------------------------------------------------------

    def build_features(self, doc_id: str, mode: str = "raw") -> FeatureVector:
        bands, words = layout_from_json(self.read_text(doc_id, "layout.json"))
        per_template: dict[str, tuple[list[float], list[float]]] = {}
        matches_dir = self.doc_dir(doc_id) / "matches"
        if matches_dir.is_dir():
            for p in sorted(matches_dir.glob("*.json")):
                obj = json.loads(p.read_text())
                label = obj["label"]
                heights = [float(m["ink_height"]) for m in obj["matches"]]
                widths = [float(m["ink_width"]) for m in obj["matches"]]
                if not heights:
                    continue
                if label in per_template:
                    per_template[label][0].extend(heights)
                    per_template[label][1].extend(widths)
                else:
                    per_template[label] = (heights, widths)

        measures = MeasureSet.from_layout(layout_measures(bands, words), per_template)
        measures = normalize_mode(measures, mode)
        fv = build_feature_vector(measures, doc_id=doc_id, mode=mode)
        self.write_text(doc_id, f"features-{mode}.json", fv.to_json())
        return fv
