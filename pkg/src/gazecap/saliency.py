"""Boolean Map Saliency (BMS).

The image is thresholded into boolean maps on three opponent colour channels;
regions of a map that do not touch the image border ("surrounded" regions)
attract attention.  Averaging over all maps and blurring gives the saliency.

Fidelity note: the channels are a simple opponent transform (intensity,
R-G, B-(R+G)/2), not CIE Lab.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


def opponent_channels(img: np.ndarray) -> np.ndarray:
    """``(3, h, w)`` channels, each spanning [0, 255]."""
    rgb = np.asarray(img, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] != 3 or rgb.shape[0] < 1 or rgb.shape[1] < 1:
        raise ValueError("expected an (h, w, 3) image")
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    return np.stack([(r + g + b) / 3.0, (r - g) / 2.0 + 127.5, (b - (r + g) / 2.0) / 2.0 + 127.5])


def boolean_maps(img: np.ndarray, delta: int = 8) -> list[np.ndarray]:
    """``channel > theta`` and its complement for theta in 0, delta, ..., <= 255."""
    if delta < 1:
        raise ValueError("threshold step must be >= 1")
    maps = []
    for ch in opponent_channels(img):
        for theta in range(0, 256, delta):
            b = ch > theta
            maps.append(b)
            maps.append(~b)
    return maps


def attention_from_map(bmap: np.ndarray) -> np.ndarray:
    """Indicator of 1-pixels not 4-connected to the border, L2-normalized."""
    bmap = np.asarray(bmap, dtype=bool)
    labels, _ = ndimage.label(bmap, structure=FOUR_CONNECTED)
    border = np.unique(np.concatenate([labels[0], labels[-1], labels[:, 0], labels[:, -1]]))
    surrounded = bmap & ~np.isin(labels, border)
    count = int(surrounded.sum())
    out = surrounded.astype(np.float64)
    if count:
        # the indicator's L2 norm is sqrt(count); integer-exact, so flips commute
        out /= math.sqrt(count)
    return out


def _blur_axis(x: np.ndarray, weights: np.ndarray, axis: int) -> np.ndarray:
    r = len(weights) - 1
    n = x.shape[axis]
    pad = [(0, 0)] * x.ndim
    pad[axis] = (r, r)
    xp = np.pad(x, pad, mode="symmetric")

    def sl(offset):
        idx = [slice(None)] * x.ndim
        idx[axis] = slice(r + offset, r + offset + n)
        return xp[tuple(idx)]

    out = weights[0] * x
    for k in range(1, r + 1):
        # pairing x[i-k] + x[i+k] keeps the result exactly mirror-symmetric
        out = out + weights[k] * (sl(-k) + sl(k))
    return out


def gaussian_blur(x: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with symmetric boundary; exactly flip-equivariant."""
    if sigma <= 0:
        return np.array(x, dtype=np.float64)
    r = max(1, int(math.ceil(3.0 * sigma)))
    k = np.arange(r + 1)
    w = np.exp(-(k**2) / (2.0 * sigma**2))
    w /= w[0] + 2.0 * w[1:].sum()
    return _blur_axis(_blur_axis(np.asarray(x, dtype=np.float64), w, 0), w, 1)


def bms_saliency(img: np.ndarray, delta: int = 8, blur_sigma: float | None = None) -> np.ndarray:
    """Saliency in [0, 1] (max 1 unless the image has no surrounded region)."""
    maps = boolean_maps(img, delta)
    total = np.zeros(maps[0].shape)
    for b in maps:
        total += attention_from_map(b)
    mean = total / len(maps)
    if blur_sigma is None:
        blur_sigma = 0.03 * max(mean.shape)
    sal = gaussian_blur(mean, blur_sigma)
    m = sal.max()
    return sal / m if m > 0 else np.zeros_like(sal)
