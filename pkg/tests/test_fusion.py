import numpy as np
import pytest
from scipy import ndimage

import turbrestore as tr
from turbrestore.dtcwt import DtcwtPyramid, default_filter_bank, forward, inverse
from turbrestore.frames import Frame, FrameSequence
from turbrestore.fusion import (FusionConfig, activity, fuse_frames,
                                fuse_sequence, segment)
from turbrestore.sharpness import sharpness

from oracles import connected_components_bruteforce

BANK = default_filter_bank()


def scaled_pyramid(pyr, factor):
    return DtcwtPyramid(
        levels=tuple(b * factor for b in pyr.levels),
        lowpass=pyr.lowpass * factor,
        original_size=pyr.original_size,
        pads=pyr.pads,
    )


class TestConfig:
    def test_bad_mode(self):
        with pytest.raises(ValueError):
            FusionConfig(mode="median")

    def test_bad_threshold(self):
        with pytest.raises(ValueError):
            FusionConfig(activity_threshold_k=0.0)


class TestActivity:
    def test_zero_pyramid_gives_zero_activity(self, rng):
        pyr = forward(Frame(rng.uniform(0, 1, (64, 64))), 3, BANK)
        zero = scaled_pyramid(pyr, 0.0)
        act = activity(zero)
        assert all(np.all(m == 0.0) for m in act.levels)

    def test_single_coefficient_magnitude(self, rng):
        pyr = forward(Frame(rng.uniform(0, 1, (64, 64))), 2, BANK)
        levels = [np.zeros_like(b) for b in pyr.levels]
        levels[0][4, 5, 2] = 3.0 + 4.0j
        made = DtcwtPyramid(levels=tuple(levels), lowpass=pyr.lowpass,
                            original_size=pyr.original_size, pads=pyr.pads)
        act = activity(made)
        assert act.levels[0][4, 5] == pytest.approx(5.0)
        assert np.count_nonzero(act.levels[0]) == 1

    def test_invariant_to_negation(self, rng):
        pyr = forward(Frame(rng.uniform(0, 1, (64, 64))), 2, BANK)
        neg = scaled_pyramid(pyr, -1.0)
        for a, b in zip(activity(pyr).levels, activity(neg).levels):
            assert np.abs(a - b).max() < 1e-12


class TestSegment:
    def test_constant_map_is_all_background(self):
        regions = segment([np.full((16, 16), 2.0)], 1.0)
        assert regions.region_counts == (0,)
        assert np.all(regions.labels[0] == 0)

    def test_two_bright_blocks_two_regions(self):
        m = np.zeros((20, 20))
        m[2:5, 2:5] = 10.0
        m[12:15, 12:15] = 10.0
        regions = segment([m], 1.0)
        assert regions.region_counts == (2,)
        labels, count = connected_components_bruteforce(
            m > m.mean() + m.std())
        assert count == 2
        assert np.array_equal(regions.labels[0], labels)

    def test_raster_order_and_determinism(self):
        m = np.zeros((12, 12))
        m[8:10, 1:3] = 5.0   # lower-left block
        m[1:3, 8:10] = 5.0   # upper-right block: first in raster order
        a = segment([m], 1.0)
        b = segment([m], 1.0)
        assert np.array_equal(a.labels[0], b.labels[0])
        assert a.labels[0][1, 8] == 1
        assert a.labels[0][8, 1] == 2

    def test_labels_contiguous(self, rng):
        m = ndimage.gaussian_filter(rng.uniform(0, 1, (40, 40)), 1.0)
        regions = segment([m], 0.5)
        present = np.unique(regions.labels[0])
        assert present.max() == regions.region_counts[0]
        assert np.array_equal(present, np.arange(present.size))


class TestFuseSequence:
    def test_idempotent_on_copies(self, rng):
        f = Frame(rng.uniform(0, 1, (64, 64)))
        pyrs = [forward(f, 3, BANK) for _ in range(4)]
        for mode in ("pixel_max", "region"):
            fused = fuse_sequence(pyrs, FusionConfig(mode=mode, levels=3))
            for a, b in zip(fused.levels, pyrs[0].levels):
                assert np.array_equal(a, b)
            assert np.abs(fused.lowpass - pyrs[0].lowpass).max() < 1e-12
            out = inverse(fused, BANK)
            assert np.abs(out.data - f.data).max() < 1e-8

    def test_pixel_max_takes_dominant_frame(self, rng):
        f = Frame(rng.uniform(0, 1, (64, 64)))
        base = forward(f, 3, BANK)
        double = scaled_pyramid(base, 2.0)
        fused = fuse_sequence([base, double], FusionConfig(mode="pixel_max", levels=3))
        for lev in range(3):
            assert np.array_equal(fused.levels[lev], double.levels[lev])
        assert np.abs(fused.lowpass - 1.5 * base.lowpass).max() < 1e-12

    def test_pixel_max_tie_goes_to_first_frame(self, rng):
        f = Frame(rng.uniform(0, 1, (64, 64)))
        base = forward(f, 2, BANK)
        neg = scaled_pyramid(base, -1.0)  # same magnitudes everywhere
        fused = fuse_sequence([base, neg], FusionConfig(mode="pixel_max", levels=2))
        for lev in range(2):
            assert np.array_equal(fused.levels[lev], base.levels[lev])

    def test_structure_mismatch_reports_level(self, rng):
        a = forward(Frame(rng.uniform(0, 1, (64, 64))), 3, BANK)
        b = forward(Frame(rng.uniform(0, 1, (96, 96))), 3, BANK)
        with pytest.raises(ValueError, match="pyramid shape mismatch at level 1"):
            fuse_sequence([a, b], FusionConfig(levels=3))

    def test_lowpass_is_exact_mean(self, rng):
        pyrs = [forward(Frame(rng.uniform(0, 1, (64, 64))), 2, BANK) for _ in range(3)]
        fused = fuse_sequence(pyrs, FusionConfig(mode="pixel_max", levels=2))
        expected = (pyrs[0].lowpass + pyrs[1].lowpass + pyrs[2].lowpass) / 3.0
        assert np.abs(fused.lowpass - expected).max() < 1e-15

    def test_permutation_invariant_with_distinct_magnitudes(self, rng):
        f = Frame(rng.uniform(0, 1, (64, 64)))
        base = forward(f, 2, BANK)
        pyrs = [scaled_pyramid(base, c) for c in (0.5, 1.0, 2.0)]
        fwd_order = fuse_sequence(pyrs, FusionConfig(mode="pixel_max", levels=2))
        rev_order = fuse_sequence(pyrs[::-1], FusionConfig(mode="pixel_max", levels=2))
        for lev in range(2):
            assert np.array_equal(fwd_order.levels[lev], rev_order.levels[lev])
        assert np.abs(fwd_order.lowpass - rev_order.lowpass).max() < 1e-12

    def test_region_mode_degenerates_to_pixel_max_without_regions(self, rng):
        # identical activity everywhere -> stddev threshold kills every region
        f = Frame(rng.uniform(0, 1, (64, 64)))
        pyrs = [forward(f, 2, BANK), scaled_pyramid(forward(f, 2, BANK), -1.0)]
        region = fuse_sequence(pyrs, FusionConfig(mode="region", levels=2,
                                                  activity_threshold_k=1e9))
        pixel = fuse_sequence(pyrs, FusionConfig(mode="pixel_max", levels=2))
        for lev in range(2):
            assert np.array_equal(region.levels[lev], pixel.levels[lev])

    def test_region_winner_contributes_whole_region(self, rng):
        # frame 1 dominates activity in a localized block; inside the block
        # every orientation must come from frame 1, even where frame 0's
        # individual coefficient would win a pixel fight.
        quiet = forward(Frame(np.full((64, 64), 0.5)), 2, BANK)
        loud_img = np.full((64, 64), 0.5)
        loud_img[16:32, 16:32] = 1.0
        loud = forward(Frame(loud_img), 2, BANK)
        fused = fuse_sequence([quiet, loud], FusionConfig(mode="region", levels=2))
        act = activity(loud)
        regions = segment([np.mean([activity(quiet).levels[0], act.levels[0]], axis=0),
                           np.mean([activity(quiet).levels[1], act.levels[1]], axis=0)], 1.0)
        assert regions.region_counts[0] >= 1
        mask = regions.labels[0] > 0
        assert np.array_equal(fused.levels[0][mask, :], loud.levels[0][mask, :])


class TestFuseFrames:
    def test_single_frame_round_trip(self, rng):
        f = Frame(rng.uniform(0, 1, (64, 64)))
        seq = FrameSequence((f,), ("a",))
        out = fuse_frames(seq, FusionConfig(levels=3), BANK)
        assert np.abs(out.data - f.data).max() < 1e-8

    def test_identical_frames_round_trip(self, rng):
        f = Frame(rng.uniform(0, 1, (64, 64)))
        seq = FrameSequence((f, f, f), ("a", "b", "c"))
        out = fuse_frames(seq, FusionConfig(levels=3), BANK)
        assert np.abs(out.data - f.data).max() < 1e-8

    def test_complementary_blur_fuses_sharper_than_inputs(self):
        card = tr.text_card(128, 128, "SHARP FUSION CHECK")
        top_blur = card.data.copy()
        top_blur[:64] = ndimage.gaussian_filter(card.data, 2.0)[:64]
        bottom_blur = card.data.copy()
        bottom_blur[64:] = ndimage.gaussian_filter(card.data, 2.0)[64:]
        seq = FrameSequence((Frame(top_blur), Frame(bottom_blur)), ("t", "b"))
        for mode in ("pixel_max", "region"):
            fused = fuse_frames(seq, FusionConfig(mode=mode), BANK)
            s_fused = sharpness(Frame(np.clip(fused.data, 0, 1)))
            assert s_fused > max(sharpness(Frame(top_blur)), sharpness(Frame(bottom_blur)))


class TestRegionDump:
    def test_indexed_pngs_per_level(self, tmp_path):
        from PIL import Image

        from turbrestore.fusion import dump_region_maps, region_maps_for

        card = tr.text_card(64, 64, "REGIONS")
        seq = FrameSequence((card, card), ("a", "b"))
        regions = region_maps_for(seq, FusionConfig(levels=3), BANK)
        dump_region_maps(regions, tmp_path)
        files = sorted(tmp_path.glob("regions_level*.png"))
        assert [f.name for f in files] == [f"regions_level{i}.png" for i in (1, 2, 3)]
        with Image.open(files[0]) as img:
            assert img.mode == "P"
            assert img.size == (32, 32)


class TestFusedVsMean:
    def test_registered_fusion_beats_temporal_mean(self, small_sim_sequence):
        from turbrestore.frames import psnr

        card, seq, _ = small_sim_sequence
        registered = tr.register_sequence(tr.select_frames(seq, 0.5))
        fused = fuse_frames(registered, FusionConfig(), BANK)
        fused = Frame(np.clip(fused.data, 0, 1))
        mean = Frame(registered.stack().mean(axis=0))
        assert psnr(fused, card) >= psnr(mean, card)
