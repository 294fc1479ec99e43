"""Independent brute-force oracles used to freeze expected values.

Everything here is deliberately slow and simple, and shares no code with
the library paths it checks.
"""

import math

import numpy as np


def ssim_bruteforce(a: np.ndarray, b: np.ndarray) -> float:
    """Direct per-window SSIM with an 11x11 Gaussian, sigma 1.5."""
    size, sigma = 11, 1.5
    ax = np.arange(size) - 5.0
    k1 = np.exp(-(ax ** 2) / (2 * sigma ** 2))
    k1 /= k1.sum()
    w = np.outer(k1, k1)
    c1, c2 = 0.01 ** 2, 0.03 ** 2
    h, wid = a.shape
    vals = []
    for i in range(h - size + 1):
        for j in range(wid - size + 1):
            pa = a[i:i + size, j:j + size]
            pb = b[i:i + size, j:j + size]
            mu_a = (w * pa).sum()
            mu_b = (w * pb).sum()
            va = (w * pa * pa).sum() - mu_a ** 2
            vb = (w * pb * pb).sum() - mu_b ** 2
            cov = (w * pa * pb).sum() - mu_a * mu_b
            vals.append(((2 * mu_a * mu_b + c1) * (2 * cov + c2))
                        / ((mu_a ** 2 + mu_b ** 2 + c1) * (va + vb + c2)))
    return float(np.mean(vals))


def connected_components_bruteforce(mask: np.ndarray):
    """8-connected labeling by BFS in raster-scan discovery order."""
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=int)
    count = 0
    for i in range(h):
        for j in range(w):
            if not mask[i, j] or labels[i, j]:
                continue
            count += 1
            stack = [(i, j)]
            labels[i, j] = count
            while stack:
                y, x = stack.pop()
                for dy in (-1, 0, 1):
                    for dx in (-1, 0, 1):
                        ny, nx = y + dy, x + dx
                        if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and not labels[ny, nx]:
                            labels[ny, nx] = count
                            stack.append((ny, nx))
    return labels, count


def dwt_level_energies(x: np.ndarray, levels: int, h0: np.ndarray, h1: np.ndarray):
    """Detail-band energies of a critically sampled separable DWT that reuses
    the level-1 analysis pair at every level (shift-invariance baseline)."""

    def filt_cols(a, h):
        m = len(h)
        c = m // 2
        n = a.shape[0]
        idx = np.arange(-c, n + c)
        period = 2 * n
        idx = np.mod(idx, period)
        idx = np.where(idx >= n, period - 1 - idx, idx)
        ae = a[idx]
        out = np.zeros_like(a, dtype=float)
        for k in range(m):
            out += h[m - 1 - k] * ae[k:k + n]
        return out

    L = np.asarray(x, dtype=float)
    energies = []
    for _ in range(levels):
        if L.shape[0] % 2:
            L = np.vstack([L, L[-1:]])
        if L.shape[1] % 2:
            L = np.hstack([L, L[:, -1:]])
        lo = filt_cols(L, h0)[0::2]
        hi = filt_cols(L, h1)[0::2]
        ll = filt_cols(lo.T, h0).T[:, 0::2]
        lh = filt_cols(lo.T, h1).T[:, 0::2]
        hl = filt_cols(hi.T, h0).T[:, 0::2]
        hh = filt_cols(hi.T, h1).T[:, 0::2]
        energies.append(float((lh ** 2).sum() + (hl ** 2).sum() + (hh ** 2).sum()))
        L = ll
    return energies


def grating(theta_deg: float, freq: float, n: int = 128) -> np.ndarray:
    """Sinusoidal grating whose wave vector sits theta degrees from +x."""
    t = math.radians(theta_deg)
    yy, xx = np.mgrid[0:n, 0:n].astype(float)
    return 0.5 + 0.5 * np.cos(2 * np.pi * freq * (xx * math.cos(t) + yy * math.sin(t)))


def translate_replicate(a: np.ndarray, dx: int) -> np.ndarray:
    """Integer horizontal shift with replicate border."""
    out = np.roll(a, dx, axis=1)
    if dx > 0:
        out[:, :dx] = out[:, [dx]]
    elif dx < 0:
        out[:, dx:] = out[:, [dx - 1]]
    return out
