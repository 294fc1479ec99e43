"""Sharpness scoring and lucky-frame selection.

A frame's score is the mean Sobel gradient magnitude over interior pixels
(borders excluded so padding policy cannot leak into scores). Scores scale
linearly with global intensity, so selection is invariant to exposure.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from turbrestore.frames import Frame, FrameSequence


@dataclass(frozen=True, eq=False)
class SharpnessSeries:
    """Per-frame raw scores, the max-normalized series, and aligned labels."""

    raw: np.ndarray
    normalized: np.ndarray
    frame_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        raw = np.asarray(self.raw, dtype=np.float64)
        norm = np.asarray(self.normalized, dtype=np.float64)
        if not (len(raw) == len(norm) == len(self.frame_ids)):
            raise ValueError("raw, normalized, and frame_ids must have equal length")
        object.__setattr__(self, "raw", raw)
        object.__setattr__(self, "normalized", norm)
        object.__setattr__(self, "frame_ids", tuple(self.frame_ids))

    def __len__(self) -> int:
        return len(self.raw)


def sharpness(frame: Frame) -> float:
    """Mean interior gradient magnitude from standard 3x3 Sobel responses."""
    a = frame.data
    if a.shape[0] < 3 or a.shape[1] < 3:
        raise ValueError("frame smaller than 3x3")
    gx = (a[:-2, 2:] + 2.0 * a[1:-1, 2:] + a[2:, 2:]) - (a[:-2, :-2] + 2.0 * a[1:-1, :-2] + a[2:, :-2])
    gy = (a[2:, :-2] + 2.0 * a[2:, 1:-1] + a[2:, 2:]) - (a[:-2, :-2] + 2.0 * a[:-2, 1:-1] + a[:-2, 2:])
    return float(np.mean(np.sqrt(gx * gx + gy * gy)))


def sharpness_series(seq: FrameSequence) -> SharpnessSeries:
    """Score every frame; normalize by the sequence max (all-zero stays zero)."""
    raw = np.array([sharpness(f) for f in seq.frames], dtype=np.float64)
    peak = raw.max()
    normalized = raw / peak if peak > 0.0 else np.zeros_like(raw)
    return SharpnessSeries(raw=raw, normalized=normalized, frame_ids=seq.source_ids)


def select_frames(seq: FrameSequence, fraction: float) -> FrameSequence:
    """Keep the top ceil(fraction*N) frames by raw score, in original order.

    Ties go to the earlier original index.
    """
    if not (0.0 < fraction <= 1.0):
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    raw = [sharpness(f) for f in seq.frames]
    n_keep = math.ceil(fraction * len(seq))
    ranked = sorted(range(len(seq)), key=lambda i: (-raw[i], i))
    chosen = sorted(ranked[:n_keep])
    return FrameSequence(
        tuple(seq.frames[i] for i in chosen),
        tuple(seq.source_ids[i] for i in chosen),
    )


def export_series_csv(series: SharpnessSeries, path) -> None:
    """Write ``frame_id,raw,normalized`` rows at full float precision."""
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame_id", "raw", "normalized"])
        for fid, r, n in zip(series.frame_ids, series.raw, series.normalized):
            writer.writerow([fid, repr(float(r)), repr(float(n))])
