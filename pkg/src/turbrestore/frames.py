"""Image/sequence data model, PNG/PGM I/O, and the PSNR/SSIM quality metrics.

All frames are single-channel float64 luminance on the unit range. RGB input
is reduced with Rec.601 weights; integer samples are scaled by their max code
value. Quantization back to 8 bits happens only in :func:`save_frame`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np
from PIL import Image

# Rec.601 luma weights as integers over 1000, so a gray (v, v, v) pixel maps
# to exactly v (the division by max_code * 1000 happens once).
_REC601 = (299, 587, 114)

_GRAY16_MODES = {"I", "I;16", "I;16B", "I;16L", "I;16N"}


@dataclass(frozen=True, eq=False)
class Frame:
    """One single-channel image; ``data`` is a read-only 2-D float64 array.

    The plain constructor checks shape and finiteness only, so pipeline
    intermediates may hold values outside [0, 1]. Use :meth:`from_array`
    (or the I/O loaders) when the unit-range invariant must hold.
    """

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("frame data must be a non-empty 2-D array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("frame data must be finite")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @classmethod
    def from_array(cls, arr) -> "Frame":
        """Validating constructor: every value must lie in [0, 1]."""
        frame = cls(np.asarray(arr, dtype=np.float64))
        lo = float(frame.data.min())
        hi = float(frame.data.max())
        if lo < 0.0 or hi > 1.0:
            raise ValueError(f"frame values must lie in [0, 1], got range [{lo}, {hi}]")
        return frame


@dataclass(frozen=True, eq=False)
class FrameSequence:
    """Ordered frames of identical size plus a per-frame origin label."""

    frames: tuple[Frame, ...]
    source_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        frames = tuple(self.frames)
        ids = tuple(self.source_ids)
        if len(frames) < 1:
            raise ValueError("sequence must contain at least one frame")
        if len(ids) != len(frames):
            raise ValueError("source_ids must align with frames")
        w, h = frames[0].width, frames[0].height
        for f, sid in zip(frames, ids):
            if f.width != w or f.height != h:
                raise ValueError(
                    f"inconsistent frame size: {sid} is {f.width}x{f.height}, expected {w}x{h}"
                )
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "source_ids", ids)

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self) -> Iterator[Frame]:
        return iter(self.frames)

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height

    def stack(self) -> np.ndarray:
        """All frames as one (N, H, W) array."""
        return np.stack([f.data for f in self.frames], axis=0)


@dataclass(frozen=True)
class MetricReport:
    """PSNR (dB) and mean SSIM of a restored frame against a reference."""

    psnr: float
    ssim: float


def _to_luma(img: Image.Image, path: Path) -> np.ndarray:
    mode = img.mode
    if mode == "L":
        return np.asarray(img, dtype=np.float64) / 255.0
    if mode in _GRAY16_MODES:
        arr = np.asarray(img, dtype=np.float64)
        return arr / 65535.0
    if mode == "RGB":
        arr = np.asarray(img, dtype=np.float64)
        num = arr[..., 0] * _REC601[0] + arr[..., 1] * _REC601[1] + arr[..., 2] * _REC601[2]
        return num / (255.0 * 1000.0)
    raise ValueError(f"unsupported image mode {mode!r} in {path}")


def _load_pgm(path: Path) -> np.ndarray:
    """Binary (P5) PGM reader; 16-bit samples are big-endian per the format."""
    raw = path.read_bytes()
    if raw[:2] != b"P5":
        raise ValueError(f"unsupported PGM flavor in {path} (binary P5 only)")
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        fields.append(int(raw[start:pos]))
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    if not (0 < maxval < 65536):
        raise ValueError(f"bad PGM maxval {maxval} in {path}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = width * height
    data = np.frombuffer(raw, dtype=dtype, offset=pos)
    if data.size < count:
        raise ValueError(f"truncated PGM data in {path}")
    return data[:count].reshape(height, width).astype(np.float64) / float(maxval)


def _load_image(path: Path) -> np.ndarray:
    if path.suffix.lower() == ".pgm":
        arr = _load_pgm(path)
    else:
        with Image.open(path) as img:
            arr = _to_luma(img, path)
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError(f"sample values out of range in {path}")
    return arr


def load_sequence(dir_path, pattern: str = "*.png") -> FrameSequence:
    """Load a directory of frames, sorted lexicographically by filename."""
    root = Path(dir_path)
    if not root.is_dir():
        raise ValueError(f"not a directory: {root}")
    files = sorted(root.glob(pattern), key=lambda p: p.name)
    files = [p for p in files if p.is_file()]
    if not files:
        raise ValueError(f"no frames found in {root} matching {pattern!r}")
    frames = []
    ids = []
    shape = None
    for p in files:
        arr = _load_image(p)
        if shape is None:
            shape = arr.shape
        elif arr.shape != shape:
            raise ValueError(
                f"inconsistent frame size: {p.name} is {arr.shape[1]}x{arr.shape[0]},"
                f" expected {shape[1]}x{shape[0]}"
            )
        frames.append(Frame(arr))
        ids.append(p.name)
    return FrameSequence(tuple(frames), tuple(ids))


def save_frame(frame: Frame, path) -> None:
    """Write an 8-bit grayscale PNG; values are clamped then quantized."""
    q = np.clip(frame.data, 0.0, 1.0)
    q = np.rint(q * 255.0).astype(np.uint8)
    Image.fromarray(q, mode="L").save(Path(path), format="PNG")


def psnr(a: Frame, b: Frame) -> float:
    """10*log10(1/MSE) on unit dynamic range; +inf for identical images."""
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a.data - b.data) ** 2))
    if mse == 0.0:
        return math.inf
    return -10.0 * math.log10(mse)


def _gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _windowed(x: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Separable valid-mode correlation with a 1-D window along both axes."""
    m = len(k)
    v = np.lib.stride_tricks.sliding_window_view(x, m, axis=0) @ k
    return np.lib.stride_tricks.sliding_window_view(v, m, axis=1) @ k


def ssim(a: Frame, b: Frame) -> float:
    """Mean local SSIM, 11x11 Gaussian window (sigma 1.5), C1/C2 for unit range."""
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if min(a.shape) < 11:
        raise ValueError("image smaller than the 11x11 SSIM window")
    c1 = 0.01 ** 2
    c2 = 0.03 ** 2
    k = _gaussian_window()
    x, y = a.data, b.data
    mu_x = _windowed(x, k)
    mu_y = _windowed(y, k)
    xx = _windowed(x * x, k) - mu_x * mu_x
    yy = _windowed(y * y, k) - mu_y * mu_y
    xy = _windowed(x * y, k) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * xy + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (xx + yy + c2)
    return float(np.mean(num / den))


def compare(a: Frame, b: Frame) -> MetricReport:
    return MetricReport(psnr=psnr(a, b), ssim=ssim(a, b))
