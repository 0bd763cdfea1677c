import numpy as np
import pytest

from scriptoria.errors import PageLayoutError, ValidationError
from scriptoria.imaging import BinaryImage
from scriptoria.layout import analyze_layout, default_so, layout_measures
from scriptoria.synthetic import (
    GLYPH_BANK,
    LABELS,
    GroundTruth,
    WriterProfile,
    generate_bar_document,
    generate_document,
    profile_grid,
    render_glyph,
    render_glyph_sample,
)


class TestGlyphBank:
    def test_thirty_six_distinct_labels(self):
        assert len(GLYPH_BANK) == 36
        assert set(GLYPH_BANK) == set(LABELS)
        assert len({spec.path for spec in GLYPH_BANK.values()}) == 36

    def test_rendered_glyph_touches_its_box(self):
        for label in "agtkx0479":
            spec = GLYPH_BANK[label]
            glyph = render_glyph(spec, body_h=14, body_w=9, asc_h=6, desc_h=6, stroke_r=1.1)
            asc = 6 if spec.has_ascender else 0
            desc = 6 if spec.has_descender else 0
            assert glyph.shape == (asc + 14 + desc, 9)
            body = glyph[asc : asc + 14]
            assert body[0].any() and body[-1].any()  # top and bottom body rows
            assert glyph[:, 0].any() and glyph[:, -1].any()  # both edge columns
            assert glyph[0].any() and glyph[-1].any()  # full canvas extent inked
            assert set(np.unique(glyph)) <= {0, 1}

    def test_every_body_row_inked(self):
        for label in LABELS:
            glyph = render_glyph(GLYPH_BANK[label], 16, 10, 0, 0, 1.0)
            assert glyph.any(axis=1).all()


class TestGenerateDocument:
    def test_minimal_document(self):
        img, gt = generate_document(profile_grid(1)[0], seed=0, lines=1, words_per_line=1)
        assert len(gt.lines) == 1
        assert len(gt.lines[0].words) == 1
        assert gt.lines[0].word_gaps == ()

    def test_bit_for_bit_determinism(self):
        prof = profile_grid(3)[2]
        img1, gt1 = generate_document(prof, seed=42)
        img2, gt2 = generate_document(prof, seed=42)
        assert np.array_equal(img1.mask, img2.mask)
        assert gt1.to_json() == gt2.to_json()

    def test_different_seeds_differ(self):
        prof = profile_grid(1)[0]
        img1, _ = generate_document(prof, seed=1)
        img2, _ = generate_document(prof, seed=2)
        assert not np.array_equal(img1.mask, img2.mask)

    def test_layout_recovers_ground_truth(self):
        for seed in range(10):
            prof = profile_grid(5)[seed % 5]
            img, gt = generate_document(prof, seed=seed)
            bands, words = analyze_layout(img)
            assert len(bands) == len(gt.lines)
            for band, gl in zip(bands, gt.lines):
                assert abs(band.middle_start - gl.middle_start) <= 1
                assert abs(band.middle_end - gl.middle_end) <= 1

    def test_gaps_recovered_exactly_when_eligible(self):
        for seed in range(10):
            prof = profile_grid(5)[seed % 5]
            img, gt = generate_document(prof, seed=seed)
            bands, words = analyze_layout(img)
            for band, gl, ws in zip(bands, gt.lines, words):
                so = default_so(band)
                if all(g > so for g in gl.word_gaps) and gt.intra_gap <= so:
                    detected = [w.gap_before for w in ws if w.gap_before is not None]
                    assert detected == list(gl.word_gaps)

    def test_word_boxes_recovered_exactly(self):
        img, gt = generate_document(profile_grid(2)[1], seed=3)
        bands, words = analyze_layout(img, so=6)
        for gl, ws in zip(gt.lines, words):
            assert [(w.col_start, w.col_end) for w in ws] == list(gl.words)

    def test_required_labels_present(self):
        img, gt = generate_document(
            profile_grid(1)[0], seed=9, required_labels=("a", "e", "q")
        )
        for label in ("a", "e", "q"):
            assert len(gt.glyphs_for(label)) >= 2

    def test_glyph_boxes_match_ink_exactly(self):
        img, gt = generate_document(profile_grid(3)[1], seed=4)
        for g in gt.glyphs[:40]:
            window = img.mask[g.row : g.row + g.height, g.col : g.col + g.width]
            rows = np.flatnonzero(window.any(axis=1))
            cols = np.flatnonzero(window.any(axis=0))
            assert rows[0] == 0 and rows[-1] == g.height - 1
            assert cols[0] == 0 and cols[-1] == g.width - 1

    def test_same_label_occurrences_are_pixel_copies(self):
        img, gt = generate_document(profile_grid(1)[0], seed=5, required_labels=("a",))
        occs = gt.glyphs_for("a")
        first = img.mask[
            occs[0].row : occs[0].row + occs[0].height,
            occs[0].col : occs[0].col + occs[0].width,
        ]
        for g in occs[1:]:
            window = img.mask[g.row : g.row + g.height, g.col : g.col + g.width]
            assert np.array_equal(window, first)

    def test_measures_match_ground_truth(self):
        img, gt = generate_document(profile_grid(4)[3], seed=6)
        bands, words = analyze_layout(img, so=6)
        measures = layout_measures(bands, words)
        assert measures.upper_heights == [l.upper_height for l in gt.lines]
        assert measures.middle_heights == [l.middle_height for l in gt.lines]
        assert measures.lower_heights == [l.lower_height for l in gt.lines]

    def test_page_overflow(self):
        with pytest.raises(PageLayoutError):
            generate_document(profile_grid(1)[0], seed=0, lines=40, canvas=(840, 200))
        with pytest.raises(PageLayoutError):
            generate_document(profile_grid(1)[0], seed=0, words_per_line=30, canvas=(300, 620))

    def test_unknown_label_rejected(self):
        with pytest.raises(ValidationError):
            generate_document(profile_grid(1)[0], seed=0, alphabet="abc?")

    def test_ground_truth_json_round_trip(self):
        _, gt = generate_document(profile_grid(1)[0], seed=7)
        back = GroundTruth.from_json(gt.to_json())
        assert back == gt
        assert back.to_json() == gt.to_json()


class TestProfile:
    def test_json_round_trip(self):
        prof = profile_grid(6)[5]
        assert WriterProfile.from_json(prof.to_json()) == prof

    def test_validation(self):
        with pytest.raises(ValidationError):
            WriterProfile(middle_height=(0.0, 1.0))
        with pytest.raises(ValidationError):
            WriterProfile(word_gap=(10.0, -1.0))

    def test_grid_profiles_distinct(self):
        profiles = profile_grid(20)
        assert len({(p.middle_height[0], p.word_gap[0]) for p in profiles}) == 20


class TestBarDocument:
    def test_bar_geometry(self):
        img, bars = generate_bar_document(0, lines=2, bars_per_line=2, bar_h=12, bar_w=10, extra=4)
        assert len(bars) == 4
        for r, c, h, w in bars:
            assert img.mask[r : r + h, c : c + w].all()
            assert not img.mask[r - 1, c : c + w].any()
            assert not img.mask[r : r + h, c - 1].any()

    def test_determinism(self):
        a, _ = generate_bar_document(3)
        b, _ = generate_bar_document(3)
        assert np.array_equal(a.mask, b.mask)


class TestGlyphSamples:
    def test_shape_and_polarity(self):
        rng = np.random.default_rng(0)
        sample = render_glyph_sample("g", rng)
        assert sample.shape == (28, 28)
        assert set(np.unique(sample)) <= {0, 255}
        assert sample.max() == 255
