"""Final artifact-removal stage.

The builtin path is phase-preserving soft shrinkage of complex wavelet
magnitudes with a universal threshold, driven by a JPEG-style quality factor
(lower = stronger). An external command hook lets a learned restorer replace
the builtin without rebuilding: it exchanges 8-bit PNGs through {in}/{out}
placeholders and receives the quality factor via {qf}.
"""

from __future__ import annotations

import math
import shlex
import shutil
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from turbrestore.dtcwt import DtcwtPyramid, FilterBank, default_filter_bank, forward, inverse
from turbrestore.frames import Frame, _load_image, save_frame

_MODES = ("builtin_shrinkage", "external", "none")

_SHRINK_LEVELS = 4

# Gaussian MAD-to-sigma factor.
_MAD_SCALE = 0.6745


@dataclass(frozen=True)
class DeartifactConfig:
    quality_factor: int = 20
    mode: str = "builtin_shrinkage"
    external_cmd: str = ""

    def __post_init__(self) -> None:
        if not (1 <= int(self.quality_factor) <= 100):
            raise ValueError(f"quality_factor must be in [1, 100], got {self.quality_factor}")
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {self.mode!r}")


def shrinkage_strength(quality_factor: int) -> float:
    """Map the quality factor onto a shrinkage multiplier.

    QF 100 is a no-op, QF 20 is the reference strength 1, and the line
    (100 - QF)/80 is clamped to [0, 1.25].
    """
    qf = int(quality_factor)
    if not (1 <= qf <= 100):
        raise ValueError(f"quality_factor must be in [1, 100], got {quality_factor}")
    return float(min(max((100.0 - qf) / 80.0, 0.0), 1.25))


def soft_threshold(z: np.ndarray, threshold: float) -> np.ndarray:
    """Shrink complex magnitudes by ``threshold``, preserving phase."""
    mags = np.abs(z)
    shrunk = np.maximum(mags - threshold, 0.0)
    scale = np.divide(shrunk, mags, out=np.zeros_like(mags), where=mags > 0.0)
    return z * scale


def estimate_noise_sigma(pyr: DtcwtPyramid) -> float:
    """Robust noise estimate from finest-level coefficient magnitudes."""
    return float(np.median(np.abs(pyr.levels[0]))) / _MAD_SCALE


def deartifact_builtin(frame: Frame, config: DeartifactConfig,
                       bank: FilterBank | None = None) -> Frame:
    """Soft-threshold every subband at s * sigma * sqrt(2 ln N_level); the
    lowpass is untouched and the output is clamped to [0, 1]."""
    if bank is None:
        bank = default_filter_bank()
    side = min(frame.height, frame.width)
    levels = min(_SHRINK_LEVELS, max(1, int(math.floor(math.log2(side)))))
    pyr = forward(frame, levels, bank)
    sigma = estimate_noise_sigma(pyr)
    strength = shrinkage_strength(config.quality_factor)
    shrunk = []
    for band in pyr.levels:
        threshold = strength * sigma * math.sqrt(2.0 * math.log(band.size))
        shrunk.append(soft_threshold(band, threshold))
    out = inverse(
        DtcwtPyramid(levels=tuple(shrunk), lowpass=pyr.lowpass,
                     original_size=pyr.original_size, pads=pyr.pads),
        bank,
    )
    return Frame.from_array(np.clip(out.data, 0.0, 1.0))


def deartifact_external(frame: Frame, config: DeartifactConfig) -> Frame:
    """Run the configured external command on a temp PNG of the frame.

    The template must contain {in}, {out}, and {qf}; the command runs via
    the shell, one fresh temp directory per call.
    """
    template = config.external_cmd
    if not template:
        raise ValueError("external mode requires external_cmd")
    for ph in ("{in}", "{out}", "{qf}"):
        if ph not in template:
            raise ValueError(f"external_cmd must contain the {ph} placeholder")
    workdir = Path(tempfile.mkdtemp(prefix="deartifact-"))
    try:
        in_path = workdir / "in.png"
        out_path = workdir / "out.png"
        save_frame(frame, in_path)
        cmd = (template
               .replace("{in}", shlex.quote(str(in_path)))
               .replace("{out}", shlex.quote(str(out_path)))
               .replace("{qf}", str(int(config.quality_factor))))
        result = subprocess.run(cmd, shell=True, capture_output=True, text=True)
        if result.returncode != 0:
            raise RuntimeError(
                f"deartifact command failed with exit status {result.returncode}: {cmd}\n"
                f"{result.stderr.strip()}"
            )
        if not out_path.is_file():
            raise RuntimeError(f"deartifact command produced no output image: {cmd}")
        try:
            arr = _load_image(out_path)
        except Exception as exc:
            raise RuntimeError(f"deartifact command produced an invalid image ({exc}): {cmd}")
        if arr.shape != frame.shape:
            raise RuntimeError(
                f"deartifact command changed dimensions from {frame.width}x{frame.height}"
                f" to {arr.shape[1]}x{arr.shape[0]}: {cmd}"
            )
        return Frame(arr)
    finally:
        shutil.rmtree(workdir, ignore_errors=True)


def deartifact(frame: Frame, config: DeartifactConfig,
               bank: FilterBank | None = None) -> Frame:
    """Dispatch on the configured mode; ``none`` is the exact identity."""
    if config.mode == "none":
        return frame
    if config.mode == "external":
        return deartifact_external(frame, config)
    return deartifact_builtin(frame, config, bank)
