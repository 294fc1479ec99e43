"""Seeded synthetic turbulence degradation with ground truth.

Each frame of a clean image receives a smoothed random tilt field (backward
warp), a per-frame Gaussian blur, and additive Gaussian noise. Per-frame RNG
substreams derive from (seed, frame_index), so generation is reproducible
bit for bit and parallelizable. A procedural text card supplies text-like
high-contrast content without any font dependency.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from turbrestore.flow import FlowField, warp, write_flo2
from turbrestore.frames import Frame, FrameSequence, save_frame

_MIN_DEGRADE_SIDE = 32


@dataclass(frozen=True)
class TurbulenceParams:
    warp_amplitude: float = 2.0
    warp_smoothness: float = 8.0
    blur_sigma_range: tuple[float, float] = (0.5, 2.5)
    noise_sigma: float = 0.01
    frames: int = 100
    seed: int = 42

    def __post_init__(self) -> None:
        lo, hi = self.blur_sigma_range
        if self.warp_amplitude < 0 or self.warp_smoothness < 0 or self.noise_sigma < 0:
            raise ValueError("turbulence parameters must be non-negative")
        if lo < 0 or hi < lo:
            raise ValueError(f"bad blur_sigma_range {self.blur_sigma_range}")
        if self.frames < 1:
            raise ValueError("frames must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def _tilt_field(rng: np.random.Generator, shape: tuple[int, int],
                amplitude: float, smoothness: float) -> tuple[np.ndarray, np.ndarray]:
    u = rng.standard_normal(shape)
    v = rng.standard_normal(shape)
    if smoothness > 0:
        u = ndimage.gaussian_filter(u, smoothness, mode="reflect")
        v = ndimage.gaussian_filter(v, smoothness, mode="reflect")
    peak = float(np.hypot(u, v).max())
    if amplitude == 0.0 or peak == 0.0:
        return np.zeros(shape), np.zeros(shape)
    scale = amplitude / peak
    return u * scale, v * scale


def degrade(clean: Frame, params: TurbulenceParams) -> tuple[FrameSequence, list[FlowField]]:
    """Generate the distorted sequence plus the ground-truth tilt fields."""
    if min(clean.height, clean.width) < _MIN_DEGRADE_SIDE:
        raise ValueError(f"clean image min side must be >= {_MIN_DEGRADE_SIDE}")
    blur_lo, blur_hi = params.blur_sigma_range
    frames = []
    ids = []
    flows = []
    for k in range(params.frames):
        rng = np.random.default_rng([params.seed, k])
        u, v = _tilt_field(rng, clean.shape, params.warp_amplitude, params.warp_smoothness)
        flow = FlowField(u, v)
        img = warp(clean, flow).data
        blur_sigma = float(rng.uniform(blur_lo, blur_hi))
        if blur_sigma > 0.0:
            img = ndimage.gaussian_filter(img, blur_sigma, mode="reflect")
        if params.noise_sigma > 0.0:
            img = img + rng.standard_normal(img.shape) * params.noise_sigma
        frames.append(Frame.from_array(np.clip(img, 0.0, 1.0)))
        ids.append(f"sim-{params.seed}-{k:04d}")
        flows.append(flow)
    return FrameSequence(tuple(frames), tuple(ids)), flows


def _glyph_bits(byte: int, position: int) -> int:
    """15 deterministic bits per (character, position) via integer mixing."""
    h = (byte * 2654435761 + position * 40503 + 12345) & 0xFFFFFFFF
    h ^= h >> 13
    h = (h * 1103515245 + 12345) & 0xFFFFFFFF
    return (h >> 8) & 0x7FFF


def text_card(width: int, height: int, text: str) -> Frame:
    """Render glyph-like stroke blocks (0.1 ink on 0.9 paper) for the string.

    Glyph patterns derive from the string's bytes, not from any font; the
    same string always renders the same card.
    """
    if width < 64 or height < 32:
        raise ValueError("text card must be at least 64x32")
    card = np.full((height, width), 0.9)
    margin = 4
    cell_w, cell_h = 12, 20
    block_w, block_h = 3, 3
    cols = max((width - 2 * margin) // cell_w, 1)
    data = text.encode("utf-8")
    for idx, byte in enumerate(data):
        row, col = divmod(idx, cols)
        y0 = margin + row * cell_h
        x0 = margin + col * cell_w
        if y0 + 5 * block_h > height - margin:
            break
        bits = _glyph_bits(byte, idx)
        for bit in range(15):
            if not (bits >> bit) & 1:
                continue
            by, bx = divmod(bit, 3)
            ys = y0 + by * block_h
            xs = x0 + bx * block_w
            card[ys:ys + block_h, xs:xs + block_w] = 0.1
    return Frame.from_array(card)


MANIFEST_NAME = "manifest.json"


def write_sequence_dir(out_dir, clean: Frame, seq: FrameSequence,
                       flows: list[FlowField] | None, params: TurbulenceParams,
                       dump_flows: bool = False) -> Path:
    """Write the simulator interchange layout.

    ``<out>/frames/*.png`` holds the distorted frames, ``<out>/clean.png``
    the ground truth, and ``manifest.json`` records parameters and paths.
    Flow dumps (optional) go to ``<out>/flows/*.flo2``.
    """
    root = Path(out_dir)
    frames_dir = root / "frames"
    frames_dir.mkdir(parents=True, exist_ok=True)
    for sid, frame in zip(seq.source_ids, seq.frames):
        save_frame(frame, frames_dir / f"{sid}.png")
    save_frame(clean, root / "clean.png")
    if dump_flows and flows is not None:
        flow_dir = root / "flows"
        flow_dir.mkdir(exist_ok=True)
        for sid, flow in zip(seq.source_ids, flows):
            write_flo2(flow, flow_dir / f"{sid}.flo2")
    manifest = {
        "frames_dir": "frames",
        "clean": "clean.png",
        "seed": params.seed,
        "params": {
            "warp_amplitude": params.warp_amplitude,
            "warp_smoothness": params.warp_smoothness,
            "blur_sigma_range": list(params.blur_sigma_range),
            "noise_sigma": params.noise_sigma,
            "frames": params.frames,
        },
    }
    (root / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2))
    return root
