import io
import json
import os

import numpy as np
import pytest
from PIL import Image

from scriptoria.errors import NotFoundError, ValidationError
from scriptoria.imaging import GrayImage
from scriptoria.matcher import MatcherConfig
from scriptoria.store import AnalysisStore, analyze_source, binarize_auto, invert_gray
from scriptoria.synthetic import generate_document, profile_grid


def png_bytes(mask: np.ndarray) -> bytes:
    buf = io.BytesIO()
    arr = ((1 - mask) * 255).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(buf, format="PNG")
    return buf.getvalue()


@pytest.fixture
def doc_bytes():
    img, gt = generate_document(profile_grid(1)[0], seed=8, required_labels=("a",))
    return png_bytes(img.mask), gt


class TestBinarizeAuto:
    def test_blank_page_falls_back_to_fixed(self):
        gray = GrayImage(4, 4, np.full((4, 4), 255, dtype=np.uint8))
        mask, method, threshold = binarize_auto(gray)
        assert (method, threshold) == ("fixed", 128)
        assert mask.ink_count() == 0

    def test_invert(self):
        gray = GrayImage(2, 1, np.array([[0, 255]], dtype=np.uint8))
        flipped = invert_gray(gray)
        assert flipped.samples.tolist() == [[255, 0]]


class TestAnalyzeSource:
    def test_content_hash_id_stable(self, doc_bytes):
        data, _ = doc_bytes
        a = analyze_source(data, "x.png")
        b = analyze_source(data, "y/x.png")
        assert a.record.id == b.record.id
        assert a.layout_json == b.layout_json

    def test_source_path_is_basename(self, doc_bytes):
        data, _ = doc_bytes
        a = analyze_source(data, "/long/path/to/scan.png")
        assert a.record.source_path == "scan.png"


class TestStore:
    def test_ingest_round_trip(self, tmp_path, doc_bytes):
        data, _ = doc_bytes
        store = AnalysisStore(tmp_path)
        analysis = store.ingest(data, "doc.png")
        doc_id = analysis.record.id
        assert store.list_documents() == [doc_id]
        assert store.load_record(doc_id) == analysis.record
        assert store.read_text(doc_id, "layout.json") == analysis.layout_json
        assert np.array_equal(store.load_mask(doc_id).mask, analysis.image.mask)

    def test_unknown_id(self, tmp_path):
        store = AnalysisStore(tmp_path)
        with pytest.raises(NotFoundError):
            store.read_text("nope", "layout.json")

    def test_update_so_idempotent(self, tmp_path, doc_bytes):
        data, _ = doc_bytes
        store = AnalysisStore(tmp_path)
        doc_id = store.ingest(data, "doc.png").record.id
        first = store.update_so(doc_id, 9, {0: 4})
        second = store.update_so(doc_id, 9, {0: 4})
        assert first == second
        assert store.read_text(doc_id, "layout.json") == second

    def test_update_so_validates_line_index(self, tmp_path, doc_bytes):
        data, _ = doc_bytes
        store = AnalysisStore(tmp_path)
        doc_id = store.ingest(data, "doc.png").record.id
        with pytest.raises(ValidationError):
            store.update_so(doc_id, None, {99: 4})
        with pytest.raises(ValidationError):
            store.update_so(doc_id, -3, None)

    def test_atomic_write_keeps_previous_on_crash(self, tmp_path, doc_bytes, monkeypatch):
        data, _ = doc_bytes
        store = AnalysisStore(tmp_path)
        doc_id = store.ingest(data, "doc.png").record.id
        before = store.read_text(doc_id, "layout.json")

        real_replace = os.replace

        def exploding_replace(src, dst):
            raise OSError("simulated crash between temp write and rename")

        monkeypatch.setattr(os, "replace", exploding_replace)
        with pytest.raises(OSError):
            store.write_text(doc_id, "layout.json", "{...new...}")
        monkeypatch.setattr(os, "replace", real_replace)

        assert store.read_text(doc_id, "layout.json") == before
        leftovers = [p for p in (tmp_path / doc_id).iterdir() if p.name.startswith(".tmp-")]
        assert leftovers == []

    def test_template_search_and_features(self, tmp_path, doc_bytes):
        data, gt = doc_bytes
        store = AnalysisStore(tmp_path)
        doc_id = store.ingest(data, "doc.png").record.id
        g = gt.glyphs_for("a")[0]
        template_id = store.add_template(doc_id, (g.row, g.col, g.height, g.width), "a")
        assert store.list_templates(doc_id)[0]["template_id"] == template_id
        result = store.run_template_search(doc_id, template_id, MatcherConfig(run_length=1))
        assert len(result.matches) == len(gt.glyphs_for("a"))
        fv = store.build_features(doc_id, "raw")
        assert "height_a" in fv.ids()
        stored = json.loads(store.read_text(doc_id, "features-raw.json"))
        assert stored["doc_id"] == doc_id
