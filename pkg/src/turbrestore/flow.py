"""Dense registration: pyramidal Horn-Schunck flow and backward warping.

Every selected frame is aligned to a reference built by temporal averaging.
Flow fields follow the backward-warp convention: ``warp(moving, flow)``
samples ``moving`` at ``(x + u, y + v)``, so a frame whose content sits one
pixel to the right of the reference recovers ``u ~ +1``.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from turbrestore.frames import Frame, FrameSequence

# Weighted neighbour average used by the classic Horn-Schunck update.
_HS_KERNEL = np.array(
    [[1 / 12, 1 / 6, 1 / 12],
     [1 / 6, 0.0, 1 / 6],
     [1 / 12, 1 / 6, 1 / 12]]
)

_BINOMIAL5 = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0

_MIN_PYRAMID_SIDE = 16


@dataclass(frozen=True, eq=False)
class FlowField:
    """Per-pixel displacement in pixels; u is horizontal, v vertical."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self) -> None:
        u = np.asarray(self.u, dtype=np.float64)
        v = np.asarray(self.v, dtype=np.float64)
        if u.ndim != 2 or u.shape != v.shape:
            raise ValueError("u and v must be 2-D arrays of identical shape")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise ValueError("flow values must be finite")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def height(self) -> int:
        return self.u.shape[0]

    @property
    def width(self) -> int:
        return self.u.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.u.shape

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.u, self.v)

    @classmethod
    def zero(cls, height: int, width: int) -> "FlowField":
        return cls(np.zeros((height, width)), np.zeros((height, width)))


@dataclass(frozen=True)
class FlowParams:
    """Horn-Schunck tunables; ``pyramid_levels=None`` picks the depth
    automatically and the depth always auto-clamps so the coarsest level
    keeps a minimum side of 16 px."""

    alpha: float = 0.1
    iterations: int = 150
    pyramid_levels: int | None = None
    scale: float = 0.5
    warps_per_level: int = 2

    def __post_init__(self) -> None:
        if self.alpha <= 0.0:
            raise ValueError("alpha must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.pyramid_levels is not None and self.pyramid_levels < 1:
            raise ValueError("pyramid_levels must be >= 1")
        if not (0.0 < self.scale < 1.0):
            raise ValueError("scale must be in (0, 1)")
        if self.warps_per_level < 1:
            raise ValueError("warps_per_level must be >= 1")


def reference_frame(seq: FrameSequence) -> Frame:
    """Per-pixel arithmetic mean of the sequence."""
    return Frame(seq.stack().mean(axis=0))


def _bilinear(a: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Sample ``a`` at float coordinates, clamping to the nearest edge pixel."""
    h, w = a.shape
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0
    top = a[y0, x0] * (1.0 - fx) + a[y0, x1] * fx
    bot = a[y1, x0] * (1.0 - fx) + a[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


def _warp_array(a: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    if np.count_nonzero(u) == 0 and np.count_nonzero(v) == 0:
        return a.copy()
    h, w = a.shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    return _bilinear(a, xs + u, ys + v)


def warp(frame: Frame, flow: FlowField) -> Frame:
    """Backward warp with bilinear sampling; out-of-range samples edge-clamp."""
    if frame.shape != flow.shape:
        raise ValueError(f"dimension mismatch: frame {frame.shape} vs flow {flow.shape}")
    return Frame(_warp_array(frame.data, flow.u, flow.v))


def _resize_bilinear(a: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    h, w = a.shape
    nh, nw = shape
    ys = (np.arange(nh) + 0.5) * (h / nh) - 0.5
    xs = (np.arange(nw) + 0.5) * (w / nw) - 0.5
    xs, ys = np.meshgrid(xs, ys)
    return _bilinear(a, xs, ys)


def _downsample(a: np.ndarray, scale: float) -> np.ndarray:
    smoothed = ndimage.convolve1d(a, _BINOMIAL5, axis=0, mode="nearest")
    smoothed = ndimage.convolve1d(smoothed, _BINOMIAL5, axis=1, mode="nearest")
    nh = max(int(round(a.shape[0] * scale)), 1)
    nw = max(int(round(a.shape[1] * scale)), 1)
    return _resize_bilinear(smoothed, (nh, nw))


def _auto_levels(h: int, w: int, scale: float) -> int:
    side = min(h, w)
    levels = max(1, min(5, int(math.floor(math.log2(side / _MIN_PYRAMID_SIDE)))))
    return _clamp_levels(levels, h, w, scale)


def _clamp_levels(requested: int, h: int, w: int, scale: float) -> int:
    side = min(h, w)
    levels = 1
    while levels < requested and side * scale ** levels >= _MIN_PYRAMID_SIDE:
        levels += 1
    return levels


def estimate_flow(moving: Frame, reference: Frame, params: FlowParams = FlowParams()) -> FlowField:
    """Coarse-to-fine Horn-Schunck with warping.

    At each pyramid level the coarser flow is upsampled and rescaled, then
    ``warps_per_level`` outer warps each run ``iterations`` Jacobi sweeps of
    the Horn-Schunck equations, with image derivatives taken by central
    differences on the warped pair.
    """
    if moving.shape != reference.shape:
        raise ValueError(f"dimension mismatch: {moving.shape} vs {reference.shape}")
    h, w = moving.shape
    if min(h, w) < _MIN_PYRAMID_SIDE:
        raise ValueError(f"frame too small for flow estimation (min side {_MIN_PYRAMID_SIDE})")
    if params.pyramid_levels is None:
        levels = _auto_levels(h, w, params.scale)
    else:
        levels = _clamp_levels(params.pyramid_levels, h, w, params.scale)

    pyr_m = [moving.data]
    pyr_r = [reference.data]
    for _ in range(levels - 1):
        pyr_m.append(_downsample(pyr_m[-1], params.scale))
        pyr_r.append(_downsample(pyr_r[-1], params.scale))

    alpha2 = params.alpha * params.alpha
    u = np.zeros_like(pyr_m[-1])
    v = np.zeros_like(pyr_m[-1])
    for lev in range(levels - 1, -1, -1):
        m, r = pyr_m[lev], pyr_r[lev]
        if u.shape != m.shape:
            su = m.shape[1] / u.shape[1]
            sv = m.shape[0] / u.shape[0]
            u = _resize_bilinear(u, m.shape) * su
            v = _resize_bilinear(v, m.shape) * sv
        for _ in range(params.warps_per_level):
            warped = _warp_array(m, u, v)
            gy_w, gx_w = np.gradient(warped)
            gy_r, gx_r = np.gradient(r)
            ix = 0.5 * (gx_w + gx_r)
            iy = 0.5 * (gy_w + gy_r)
            it = warped - r
            # Linearization around the flow used for this warp.
            it0 = it - ix * u - iy * v
            denom = alpha2 + ix * ix + iy * iy
            for _ in range(params.iterations):
                ubar = ndimage.convolve(u, _HS_KERNEL, mode="nearest")
                vbar = ndimage.convolve(v, _HS_KERNEL, mode="nearest")
                shared = (ix * ubar + iy * vbar + it0) / denom
                u = ubar - ix * shared
                v = vbar - iy * shared
    return FlowField(u, v)


def register_sequence(seq: FrameSequence, params: FlowParams = FlowParams(), passes: int = 1) -> FrameSequence:
    """Align every frame to the temporal mean; optionally iterate the reference."""
    if passes < 1:
        raise ValueError("passes must be >= 1")
    current = seq
    for _ in range(passes):
        ref = reference_frame(current)
        registered = []
        for f in current.frames:
            flow = estimate_flow(f, ref, params)
            registered.append(warp(f, flow))
        current = FrameSequence(tuple(registered), current.source_ids)
    return current


_FLO2_MAGIC = b"FLO2"


def write_flo2(flow: FlowField, path) -> None:
    """Debug dump: magic, little-endian int32 width/height, then the u and v
    planes as little-endian float32."""
    with open(Path(path), "wb") as fh:
        fh.write(_FLO2_MAGIC)
        fh.write(struct.pack("<ii", flow.width, flow.height))
        fh.write(flow.u.astype("<f4").tobytes())
        fh.write(flow.v.astype("<f4").tobytes())


def read_flo2(path) -> FlowField:
    raw = Path(path).read_bytes()
    if raw[:4] != _FLO2_MAGIC:
        raise ValueError(f"not a FLO2 file: {path}")
    w, h = struct.unpack("<ii", raw[4:12])
    plane = h * w * 4
    u = np.frombuffer(raw[12:12 + plane], dtype="<f4").reshape(h, w)
    v = np.frombuffer(raw[12 + plane:12 + 2 * plane], dtype="<f4").reshape(h, w)
    return FlowField(u.astype(np.float64), v.astype(np.float64))
