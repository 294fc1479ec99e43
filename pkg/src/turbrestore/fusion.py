"""Combine registered frames into one image in the wavelet domain.

The lowpass residual is always averaged. Subband coefficients are chosen
either per position (largest complex magnitude wins) or per region: the
orientation-summed magnitude forms an activity map, the cross-frame mean
activity is thresholded and 8-connected components become regions, and the
frame with the highest mean activity inside a region contributes all six
orientations over it. Background pixels fall back to the pixel rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from turbrestore.dtcwt import DtcwtPyramid, FilterBank, default_filter_bank, forward, inverse
from turbrestore.frames import Frame, FrameSequence

_MODES = ("pixel_max", "region")

_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


@dataclass(frozen=True, eq=False)
class ActivityMap:
    """Per-level orientation-summed coefficient magnitudes for one frame."""

    levels: tuple[np.ndarray, ...]


@dataclass(frozen=True, eq=False)
class RegionMap:
    """Per-level integer label images; 0 is background, 1..R are regions
    numbered in raster-scan discovery order."""

    labels: tuple[np.ndarray, ...]
    region_counts: tuple[int, ...]


@dataclass(frozen=True)
class FusionConfig:
    mode: str = "region"
    levels: int = 4
    activity_threshold_k: float = 1.0

    def __post_init__(self) -> None:
        if self.mode not in _MODES:
            raise ValueError(f"fusion mode must be one of {_MODES}, got {self.mode!r}")
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if self.activity_threshold_k <= 0.0:
            raise ValueError("activity_threshold_k must be positive")


def activity(pyr: DtcwtPyramid) -> ActivityMap:
    """Sum of the six orientation magnitudes at every level position."""
    return ActivityMap(tuple(np.abs(band).sum(axis=2) for band in pyr.levels))


def _label_raster_order(mask: np.ndarray) -> tuple[np.ndarray, int]:
    labels, count = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    if count == 0:
        return labels, 0
    # Renumber so region 1 is the first encountered in raster order.
    flat = labels.ravel()
    first = np.full(count + 1, flat.size, dtype=np.intp)
    nz = np.flatnonzero(flat)
    np.minimum.at(first, flat[nz], nz)
    order = np.argsort(first[1:], kind="stable")
    remap = np.zeros(count + 1, dtype=labels.dtype)
    remap[1 + order] = np.arange(1, count + 1)
    return remap[labels], count


def segment(mean_activity: Sequence[np.ndarray], threshold_k: float) -> RegionMap:
    """Threshold each level's mean-activity map at mean + k*stddev and label
    the 8-connected feature components."""
    labels = []
    counts = []
    for level_map in mean_activity:
        m = np.asarray(level_map, dtype=np.float64)
        if not np.all(np.isfinite(m)):
            raise ValueError("activity map must be finite")
        threshold = m.mean() + threshold_k * m.std()
        lab, count = _label_raster_order(m > threshold)
        labels.append(lab)
        counts.append(count)
    return RegionMap(labels=tuple(labels), region_counts=tuple(counts))


def _check_same_structure(pyrs: Sequence[DtcwtPyramid]) -> None:
    ref = pyrs[0]
    for p in pyrs[1:]:
        if p.depth != ref.depth:
            raise ValueError(f"pyramid shape mismatch at level {min(p.depth, ref.depth) + 1}")
        for lev in range(ref.depth):
            if p.levels[lev].shape != ref.levels[lev].shape:
                raise ValueError(f"pyramid shape mismatch at level {lev + 1}")
        if p.lowpass.shape != ref.lowpass.shape or p.original_size != ref.original_size:
            raise ValueError("pyramid shape mismatch at lowpass")


def _pixel_max_level(stack: np.ndarray) -> np.ndarray:
    """stack: (N, h, w, 6) complex. Ties go to the lowest frame index."""
    winner = np.argmax(np.abs(stack), axis=0)
    return np.take_along_axis(stack, winner[None, ...], axis=0)[0]


def fuse_sequence(pyrs: Sequence[DtcwtPyramid], config: FusionConfig = FusionConfig()) -> DtcwtPyramid:
    """Fuse same-structure pyramids into one."""
    if len(pyrs) < 1:
        raise ValueError("need at least one pyramid")
    _check_same_structure(pyrs)
    ref = pyrs[0]
    lowpass = np.mean([p.lowpass for p in pyrs], axis=0)

    fused_levels = []
    if config.mode == "pixel_max":
        for lev in range(ref.depth):
            stack = np.stack([p.levels[lev] for p in pyrs], axis=0)
            fused_levels.append(_pixel_max_level(stack))
    else:
        acts = [activity(p) for p in pyrs]
        mean_act = [np.mean([a.levels[lev] for a in acts], axis=0) for lev in range(ref.depth)]
        regions = segment(mean_act, config.activity_threshold_k)
        for lev in range(ref.depth):
            stack = np.stack([p.levels[lev] for p in pyrs], axis=0)
            fused = _pixel_max_level(stack)
            labels = regions.labels[lev]
            for r in range(1, regions.region_counts[lev] + 1):
                mask = labels == r
                scores = [float(a.levels[lev][mask].mean()) for a in acts]
                winner = int(np.argmax(scores))
                fused[mask, :] = pyrs[winner].levels[lev][mask, :]
            fused_levels.append(fused)

    return DtcwtPyramid(
        levels=tuple(fused_levels),
        lowpass=lowpass,
        original_size=ref.original_size,
        pads=ref.pads,
    )


def fuse_frames(frames: FrameSequence, config: FusionConfig = FusionConfig(),
                bank: FilterBank | None = None) -> Frame:
    """Forward-transform every frame, fuse, and synthesize (no clamping)."""
    if bank is None:
        bank = default_filter_bank()
    pyrs = [forward(f, config.levels, bank) for f in frames]
    fused = fuse_sequence(pyrs, config)
    return inverse(fused, bank)


def region_maps_for(frames: FrameSequence, config: FusionConfig = FusionConfig(),
                    bank: FilterBank | None = None) -> RegionMap:
    """The segmentation the region mode would use for these frames."""
    if bank is None:
        bank = default_filter_bank()
    acts = [activity(forward(f, config.levels, bank)) for f in frames]
    mean_act = [np.mean([a.levels[lev] for a in acts], axis=0)
                for lev in range(config.levels)]
    return segment(mean_act, config.activity_threshold_k)


def dump_region_maps(regions: RegionMap, out_dir) -> None:
    """Debug dump: one indexed PNG per level (label 0 = background).

    Labels above 255 wrap around the palette; the dump is for eyeballing
    segmentation, not round-tripping labels.
    """
    from pathlib import Path

    from PIL import Image

    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(0)
    palette = [0, 0, 0] + rng.integers(40, 255, size=255 * 3).tolist()
    for lev, labels in enumerate(regions.labels, start=1):
        idx = (labels % 256).astype(np.uint8)
        idx[(labels > 0) & (idx == 0)] = 255
        img = Image.fromarray(idx, mode="P")
        img.putpalette(palette)
        img.save(root / f"regions_level{lev}.png")
