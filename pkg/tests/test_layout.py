import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scriptoria.imaging import BinaryImage
from scriptoria.layout import (
    ColumnHistogram,
    LineBand,
    RowHistogram,
    analyze_layout,
    column_histogram,
    default_so,
    denoise,
    detect_middle_bands,
    detect_words,
    extend_zones,
    layout_from_json,
    layout_to_json,
    row_histogram,
)
from scriptoria.synthetic import generate_document, profile_grid


def brute_force_bands(counts, min_line_height=3):
    """Independent oracle for detect_middle_bands: plain-list peak walk."""
    work = [float(v) for v in counts]
    n = len(work)
    bands = []
    while max(work, default=0.0) > 0:
        peak = work.index(max(work))
        val = work[peak] / 4.0
        start = peak
        while start - 1 >= 0 and work[start - 1] >= val:
            start -= 1
        end = peak
        while end + 1 < n and work[end + 1] >= val:
            end += 1
        bands.append((start, end, peak, int(work[peak])))
        lo = peak
        while lo - 1 >= 0 and work[lo - 1] > 0:
            lo -= 1
        hi = peak
        while hi + 1 < n and work[hi + 1] > 0:
            hi += 1
        for i in range(lo, hi + 1):
            work[i] = 0.0
    return sorted(
        [b for b in bands if b[1] - b[0] + 1 >= min_line_height], key=lambda b: b[0]
    )


class TestRowHistogram:
    def test_blank(self):
        img = BinaryImage(10, 10, np.zeros((10, 10), dtype=np.uint8))
        assert row_histogram(img).counts.tolist() == [0] * 10

    def test_full_row(self):
        mask = np.zeros((6, 10), dtype=np.uint8)
        mask[3] = 1
        counts = row_histogram(BinaryImage(10, 6, mask)).counts
        assert counts[3] == 10 and counts.sum() == 10

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_matches_recount(self, seed):
        rng = np.random.default_rng(seed)
        mask = rng.integers(0, 2, size=(16, 16), dtype=np.uint8)
        counts = row_histogram(BinaryImage(16, 16, mask)).counts
        naive = [sum(int(mask[y][x]) for x in range(16)) for y in range(16)]
        assert counts.tolist() == naive


class TestDenoise:
    def test_mean_below_all_peaks(self):
        # mean = 16/6 = 2.667: zeros stay, eights stay.
        out = denoise(RowHistogram(np.array([0, 0, 8, 8, 0, 0])))
        assert out.counts.tolist() == [0, 0, 8, 8, 0, 0]

    def test_small_values_cleared(self):
        # mean = 20/6 = 3.333: ones fall below, eights survive.
        out = denoise(RowHistogram(np.array([1, 1, 8, 8, 1, 1])))
        assert out.counts.tolist() == [0, 0, 8, 8, 0, 0]

    def test_all_zero(self):
        out = denoise(RowHistogram(np.zeros(5, dtype=np.int64)))
        assert out.counts.tolist() == [0] * 5


class TestDetectMiddleBands:
    def test_two_peaks(self):
        hd = RowHistogram(np.array([0, 0, 4, 16, 4, 0, 0, 0, 4, 16, 4, 0]))
        assert detect_middle_bands(hd) == [(2, 4, 3, 16), (8, 10, 9, 16)]

    def test_plateau_ties_to_first(self):
        hd = RowHistogram(np.array([0, 8, 8, 8, 0]))
        assert detect_middle_bands(hd) == [(1, 3, 1, 8)]

    def test_empty(self):
        assert detect_middle_bands(RowHistogram(np.zeros(4, dtype=np.int64))) == []

    def test_min_height_filter(self):
        hd = RowHistogram(np.array([0, 9, 9, 0, 0, 7, 0]))
        assert detect_middle_bands(hd, min_line_height=2) == [(1, 2, 1, 9)]
        assert detect_middle_bands(hd, min_line_height=1) == [(1, 2, 1, 9), (5, 5, 5, 7)]

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        mask = (rng.random((rng.integers(4, 33), rng.integers(4, 33))) < 0.3).astype(np.uint8)
        img = BinaryImage(mask.shape[1], mask.shape[0], mask)
        hd = denoise(row_histogram(img))
        assert detect_middle_bands(hd) == brute_force_bands(hd.counts)


class TestExtendZones:
    def test_zero_boundary_both_sides(self):
        h = RowHistogram(np.array([0, 2, 4, 16, 16, 4, 2, 0, 0, 0]))
        (band,) = extend_zones(h, [(3, 4, 3, 16)])
        assert (band.upper_start, band.lower_end) == (0, 7)
        assert (band.upper_height, band.middle_height, band.lower_height) == (3, 2, 3)

    def test_adjacent_zero_gives_height_one(self):
        h = RowHistogram(np.array([0, 0, 9, 9, 0, 0]))
        (band,) = extend_zones(h, [(2, 3, 2, 9)])
        assert band.upper_start == 1 and band.upper_height == 1
        assert band.lower_end == 4 and band.lower_height == 1

    def test_valley_minimum_shared_boundary(self):
        h = RowHistogram(np.array([1, 16, 16, 4, 2, 4, 16, 16, 1, 0]))
        bands = extend_zones(h, [(1, 2, 1, 16), (6, 7, 6, 16)])
        assert bands[0].lower_end == 4  # the value-2 valley row
        assert bands[1].upper_start == 4  # shared boundary
        # first band's upper scan reaches row 0 with h nonzero -> minimum fallback
        assert bands[0].upper_start == 0

    def test_zone_heights_sum(self):
        h = RowHistogram(np.array([0, 2, 4, 16, 16, 4, 2, 0, 0]))
        (band,) = extend_zones(h, [(3, 4, 3, 16)])
        assert (
            band.upper_height + band.middle_height + band.lower_height
            == band.lower_end - band.upper_start + 1
        )


class TestColumnHistogram:
    def _band(self, u, m0, m1, l):
        return LineBand(u, m0, m1, l, peak_index=m0, peak_value=1)

    def test_blank_region(self):
        img = BinaryImage(6, 8, np.zeros((8, 6), dtype=np.uint8))
        hc = column_histogram(img, self._band(1, 2, 4, 6))
        assert hc.counts.tolist() == [0] * 6

    def test_single_column(self):
        mask = np.zeros((8, 6), dtype=np.uint8)
        mask[2:5, 3] = 1
        hc = column_histogram(BinaryImage(6, 8, mask), self._band(1, 2, 4, 6))
        assert hc.counts.tolist() == [0, 0, 0, 3, 0, 0]

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_matches_recount(self, seed):
        rng = np.random.default_rng(seed)
        mask = rng.integers(0, 2, size=(12, 9), dtype=np.uint8)
        band = self._band(2, 4, 6, 9)
        hc = column_histogram(BinaryImage(9, 12, mask), band)
        naive = [sum(int(mask[y][x]) for y in range(2, 10)) for x in range(9)]
        assert hc.counts.tolist() == naive


class TestDetectWords:
    def test_qualifying_run(self):
        words = detect_words(ColumnHistogram(np.array([3, 2, 0, 0, 0, 0, 1, 2])), so=3)
        assert [(w.col_start, w.col_end, w.gap_before) for w in words] == [
            (0, 1, None),
            (6, 7, 4),
        ]

    def test_run_not_longer_than_so(self):
        words = detect_words(ColumnHistogram(np.array([3, 2, 0, 0, 0, 0, 1, 2])), so=4)
        assert [(w.col_start, w.col_end, w.gap_before) for w in words] == [(0, 7, None)]

    def test_all_zero(self):
        assert detect_words(ColumnHistogram(np.zeros(5, dtype=np.int64)), so=1) == []

    def test_edge_runs_trimmed(self):
        words = detect_words(ColumnHistogram(np.array([0, 0, 0, 5, 1, 0, 0, 0])), so=1)
        assert [(w.col_start, w.col_end, w.gap_before) for w in words] == [(3, 4, None)]

    def test_words_start_and_end_on_ink(self):
        hc = ColumnHistogram(np.array([0, 2, 0, 1, 0, 0, 0, 4, 0]))
        for w in detect_words(hc, so=2):
            assert hc.counts[w.col_start] > 0 and hc.counts[w.col_end] > 0

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(0, 6), st.integers(0, 6))
    def test_word_count_monotone_in_so(self, seed, so1, so2):
        so1, so2 = min(so1, so2), max(so1, so2)
        rng = np.random.default_rng(seed)
        hc = ColumnHistogram((rng.random(30) < 0.4) * rng.integers(1, 5, 30))
        assert len(detect_words(hc, so1)) >= len(detect_words(hc, so2))


class TestDefaultSo:
    @pytest.mark.parametrize(
        "middle_height,expected", [(20, 10), (1, 1), (7, 4)]
    )
    def test_half_middle_height(self, middle_height, expected):
        band = LineBand(0, 1, middle_height, middle_height + 1, 1, 1)
        assert default_so(band) == expected


class TestOnGeneratedDocuments:
    def test_translation_equivariance(self):
        img, _ = generate_document(profile_grid(1)[0], seed=5)
        k = 9
        assert not img.mask[-k:].any()  # room to shift
        shifted = BinaryImage(img.width, img.height, np.roll(img.mask, k, axis=0))
        bands_a, _ = analyze_layout(img)
        bands_b, _ = analyze_layout(shifted)
        assert len(bands_a) == len(bands_b)
        for a, b in zip(bands_a, bands_b):
            assert b.upper_start == a.upper_start + k
            assert b.middle_start == a.middle_start + k
            assert b.middle_end == a.middle_end + k
            assert b.lower_end == a.lower_end + k
            assert (a.upper_height, a.middle_height, a.lower_height) == (
                b.upper_height,
                b.middle_height,
                b.lower_height,
            )

    def test_zone_heights_sum_everywhere(self):
        for seed in range(8):
            img, _ = generate_document(profile_grid(4)[seed % 4], seed=seed)
            bands, _ = analyze_layout(img)
            for band in bands:
                assert (
                    band.upper_height + band.middle_height + band.lower_height
                    == band.lower_end - band.upper_start + 1
                )

    def test_json_round_trip(self):
        img, _ = generate_document(profile_grid(1)[0], seed=2)
        bands, words = analyze_layout(img)
        text = layout_to_json(bands, words)
        bands2, words2 = layout_from_json(text)
        assert layout_to_json(bands2, words2) == text
        assert [w for line in words2 for w in line] == [w for line in words for w in line]
