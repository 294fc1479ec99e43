#!/usr/bin/env python3
"""Temporal sharpness analysis: how much frame quality fluctuates under
turbulence of different severities.

Simulates a mild and a strong sequence from the same text card, exports the
per-frame normalized-gradient series as CSV, and (when matplotlib is
importable) plots both series side by side.

Usage: python scripts/sharpness_fluctuation.py [--out OUT_DIR]
"""

import argparse
from pathlib import Path

import turbrestore as tr
from turbrestore.sharpness import export_series_csv, sharpness_series


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="experiments/sharpness")
    ap.add_argument("--frames", type=int, default=100)
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    card = tr.text_card(128, 128, "LUCKY IMAGING 123")

    cases = {
        "mild": tr.TurbulenceParams(warp_amplitude=1.0, blur_sigma_range=(0.3, 1.2),
                                    frames=args.frames, seed=args.seed),
        "strong": tr.TurbulenceParams(warp_amplitude=3.0, blur_sigma_range=(0.8, 3.5),
                                      frames=args.frames, seed=args.seed),
    }
    series = {}
    for name, params in cases.items():
        seq, _ = tr.degrade(card, params)
        s = sharpness_series(seq)
        series[name] = s
        export_series_csv(s, out / f"series_{name}.csv")
        cv = s.raw.std() / s.raw.mean()
        print(f"{name:7s}: raw mean {s.raw.mean():.4f}, CV {cv:.3f}, "
              f"min/max normalized {s.normalized.min():.3f}/{s.normalized.max():.3f}")

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not available; CSVs written, skipping plot")
        return

    fig, axes = plt.subplots(1, 2, figsize=(10, 3.5), sharey=True)
    for ax, (name, s) in zip(axes, series.items()):
        ax.plot(s.normalized, lw=1)
        ax.set_title(f"{name} turbulence")
        ax.set_xlabel("frame")
        ax.set_ylim(0, 1.05)
    axes[0].set_ylabel("normalized gradient")
    fig.tight_layout()
    fig.savefig(out / "sharpness_fluctuation.png", dpi=130)
    print(f"plot written to {out / 'sharpness_fluctuation.png'}")


if __name__ == "__main__":
    main()
