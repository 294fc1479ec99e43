import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import ndimage

import turbrestore as tr
from turbrestore.frames import Frame, FrameSequence
from turbrestore.sharpness import export_series_csv, select_frames, sharpness, sharpness_series


def seq_of(arrays):
    return FrameSequence(tuple(Frame(a) for a in arrays),
                         tuple(f"f{i}" for i in range(len(arrays))))


class TestSharpness:
    def test_constant_frame_is_zero(self):
        assert sharpness(Frame(np.full((8, 8), 0.3))) == 0.0

    def test_hand_sobel_single_interior_pixel(self):
        # columns 0, 0.5, 1: the lone interior pixel sees Gx = 4, Gy = 0
        a = np.array([[0.0, 0.5, 1.0]] * 3)
        assert sharpness(Frame(a)) == pytest.approx(4.0, abs=1e-15)

    def test_blur_strictly_reduces_score(self, text_frame):
        blurred = Frame(ndimage.gaussian_filter(text_frame.data, 1.5))
        assert sharpness(blurred) < sharpness(text_frame)

    def test_too_small_errors(self):
        with pytest.raises(ValueError):
            sharpness(Frame(np.zeros((2, 5))))

    @given(st.floats(0.3, 3.0), st.integers(0, 2 ** 31 - 1))
    @settings(max_examples=20, deadline=None)
    def test_score_scales_linearly_with_intensity(self, c, seed):
        a = np.random.default_rng(seed).uniform(0, 1, (10, 10))
        s1 = sharpness(Frame(a))
        s2 = sharpness(Frame(c * a))
        assert s2 == pytest.approx(c * s1, rel=1e-9)


class TestSeries:
    def test_identical_frames_normalize_to_one(self, rng):
        a = rng.uniform(0, 1, (8, 8))
        series = sharpness_series(seq_of([a, a, a]))
        assert np.allclose(series.normalized, 1.0)

    def test_constant_frames_normalize_to_zero(self):
        series = sharpness_series(seq_of([np.full((8, 8), 0.5)] * 3))
        assert np.all(series.normalized == 0.0)

    def test_two_frame_normalization(self):
        # raw scores in ratio 1:2 normalize to (0.5, 1.0)
        base = np.zeros((8, 8))
        base[:, 4:] = 0.5
        double = np.zeros((8, 8))
        double[:, 4:] = 1.0
        series = sharpness_series(seq_of([base, double]))
        assert series.raw[1] == pytest.approx(2 * series.raw[0])
        assert tuple(series.normalized) == pytest.approx((0.5, 1.0))

    def test_normalization_preserves_ranking(self, rng):
        frames = [rng.uniform(0, 1, (10, 10)) for _ in range(6)]
        series = sharpness_series(seq_of(frames))
        assert np.array_equal(np.argsort(series.raw), np.argsort(series.normalized))

    def test_simulator_series_fluctuates(self, sim_sequence):
        seq, _ = sim_sequence
        series = sharpness_series(seq)
        cv = series.raw.std() / series.raw.mean()
        assert cv > 0.01


class TestSelect:
    def test_fraction_one_is_identity(self, small_sim_sequence):
        _, seq, _ = small_sim_sequence
        out = select_frames(seq, 1.0)
        assert out.source_ids == seq.source_ids
        assert all(np.array_equal(a.data, b.data) for a, b in zip(out.frames, seq.frames))

    def test_hundred_frames_half(self, sim_sequence):
        seq, _ = sim_sequence
        assert len(select_frames(seq, 0.5)) == 50

    def test_tie_break_prefers_earlier_index(self):
        def frame_with_score(mult):
            a = np.zeros((8, 8))
            a[:, 4:] = 0.25 * mult
            return a

        # raw scores proportional to (1, 3, 2, 3); keep half -> indices 1 and 3
        seq = seq_of([frame_with_score(m) for m in (1, 3, 2, 3)])
        out = select_frames(seq, 0.5)
        assert out.source_ids == ("f1", "f3")

    def test_selection_invariant_under_intensity_scaling(self, rng):
        frames = [rng.uniform(0, 1, (12, 12)) for _ in range(8)]
        picked = select_frames(seq_of(frames), 0.4).source_ids
        scaled = select_frames(seq_of([0.37 * f for f in frames]), 0.4).source_ids
        assert picked == scaled

    def test_output_is_subsequence(self, rng):
        frames = [rng.uniform(0, 1, (12, 12)) for _ in range(9)]
        seq = seq_of(frames)
        out = select_frames(seq, 0.51)
        positions = [seq.source_ids.index(sid) for sid in out.source_ids]
        assert positions == sorted(positions)

    @pytest.mark.parametrize("fraction", [0.0, -0.5, 1.01])
    def test_bad_fraction(self, fraction, rng):
        seq = seq_of([rng.uniform(0, 1, (8, 8))])
        with pytest.raises(ValueError):
            select_frames(seq, fraction)

    def test_matches_bruteforce_sort_oracle(self, rng):
        frames = [rng.uniform(0, 1, (10, 10)) for _ in range(7)]
        seq = seq_of(frames)
        raw = [sharpness(f) for f in seq.frames]
        order = sorted(range(7), key=lambda i: (-raw[i], i))[:4]
        expected = tuple(f"f{i}" for i in sorted(order))
        assert select_frames(seq, 4 / 7).source_ids == expected


class TestCsv:
    def test_row_count_and_header(self, tmp_path, rng):
        series = sharpness_series(seq_of([rng.uniform(0, 1, (8, 8)) for _ in range(2)]))
        out = tmp_path / "series.csv"
        export_series_csv(series, out)
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 3
        assert lines[0] == "frame_id,raw,normalized"

    def test_normalized_max_is_one(self, tmp_path, rng):
        series = sharpness_series(seq_of([rng.uniform(0, 1, (8, 8)) for _ in range(5)]))
        out = tmp_path / "series.csv"
        export_series_csv(series, out)
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        assert max(float(r["normalized"]) for r in rows) == 1.0

    def test_round_trip_recovers_raw(self, tmp_path, rng):
        series = sharpness_series(seq_of([rng.uniform(0, 1, (9, 9)) for _ in range(4)]))
        out = tmp_path / "series.csv"
        export_series_csv(series, out)
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        back = np.array([float(r["raw"]) for r in rows])
        assert np.abs(back - series.raw).max() < 1e-9
