"""Fixation records, grid histograms, and the dense maps used for masking."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.ndimage import gaussian_filter


@dataclass
class FixationRecord:
    image_id: str
    points: np.ndarray  # (n, 2) normalized x, y  or (n, 3) with duration in ms

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.size == 0:
            pts = pts.reshape(0, 2)
        if pts.ndim != 2 or pts.shape[1] not in (2, 3):
            raise ValueError(f"{self.image_id}: fixations must be [x, y] or [x, y, duration]")
        if np.any(pts[:, :2] < 0) or np.any(pts[:, :2] > 1):
            raise ValueError(f"{self.image_id}: fixation coordinates must lie in [0, 1]")
        if pts.shape[1] == 3 and np.any(pts[:, 2] <= 0):
            raise ValueError(f"{self.image_id}: fixation durations must be positive")
        self.points = pts

    @classmethod
    def from_json(cls, obj: dict) -> "FixationRecord":
        fix = obj["fixations"]
        widths = {len(f) for f in fix}
        if len(widths) > 1:
            raise ValueError(f"{obj['image_id']}: mixed fixations with and without durations")
        return cls(str(obj["image_id"]), np.array(fix, dtype=np.float64))

    def to_json(self) -> dict:
        return {"image_id": self.image_id, "fixations": self.points.tolist()}

    @property
    def weights(self) -> np.ndarray:
        if self.points.shape[1] == 3:
            return self.points[:, 2]
        return np.ones(len(self.points))


def read_fixations(path) -> dict[str, FixationRecord]:
    out = {}
    with open(path) as fh:
        for line in fh:
            if line.strip():
                rec = FixationRecord.from_json(json.loads(line))
                out[rec.image_id] = rec
    return out


def write_fixations(path, records: Iterable[FixationRecord]) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json(), separators=(",", ":")) + "\n")


@dataclass(frozen=True)
class CropSpec:
    """Shortest-side resize followed by a centred square crop.

    ``resize_short=None`` skips the resize and ``crop=None`` the crop, in which
    case normalized coordinates pass through unchanged.
    """

    width: int = 1
    height: int = 1
    resize_short: int | None = None
    crop: int | None = None

    def apply(self, xy: np.ndarray) -> np.ndarray:
        """Normalized image coordinates -> normalized crop coordinates."""
        scale = 1.0 if self.resize_short is None else self.resize_short / min(self.width, self.height)
        w, h = self.width * scale, self.height * scale
        px, py = xy[:, 0] * w, xy[:, 1] * h
        if self.crop is None:
            return np.stack([px / w, py / h], axis=1)
        ox, oy = (w - self.crop) / 2.0, (h - self.crop) / 2.0
        return np.stack([(px - ox) / self.crop, (py - oy) / self.crop], axis=1)


@dataclass
class GazeHistogram:
    grid_h: int
    grid_w: int
    g: np.ndarray  # (grid_h * grid_w,), row-major

    @property
    def grid(self) -> np.ndarray:
        return self.g.reshape(self.grid_h, self.grid_w)


def _max_normalize(x: np.ndarray) -> np.ndarray:
    m = x.max(initial=0.0)
    return x / m if m > 0 else np.zeros_like(x)


def fixation_histogram(rec: FixationRecord, grid: tuple[int, int], crop: CropSpec | None = None,
                       sigma: float = 0.0) -> GazeHistogram:
    """Per-cell fixation mass scaled so the busiest cell is 1.

    Durations weight the fixations when present.  Fixations outside the crop
    are dropped.  ``sigma`` (in cells) applies Gaussian smoothing first.
    """
    gh, gw = grid
    if gh < 1 or gw < 1:
        raise ValueError("grid dims must be positive")
    hist = np.zeros((gh, gw))
    if len(rec.points):
        uv = (crop or CropSpec()).apply(rec.points[:, :2])
        keep = np.all((uv >= 0) & (uv <= 1), axis=1)
        uv, w = uv[keep], rec.weights[keep]
        cols = np.minimum((uv[:, 0] * gw).astype(int), gw - 1)
        rows = np.minimum((uv[:, 1] * gh).astype(int), gh - 1)
        np.add.at(hist, (rows, cols), w)
    if sigma > 0:
        hist = gaussian_filter(hist, sigma, mode="constant")
    return GazeHistogram(gh, gw, _max_normalize(hist).reshape(-1))


def fixation_density_map(rec: FixationRecord, h: int, w: int, sigma: float = 0.0) -> np.ndarray:
    """Pixel-resolution fixation map (for visibility masking), max-normalized."""
    m = np.zeros((h, w))
    if len(rec.points):
        cols = np.minimum((rec.points[:, 0] * w).astype(int), w - 1)
        rows = np.minimum((rec.points[:, 1] * h).astype(int), h - 1)
        np.add.at(m, (rows, cols), rec.weights)
    if sigma > 0:
        m = gaussian_filter(m, sigma, mode="constant")
    return _max_normalize(m)


def resample_to_grid(dense: np.ndarray, grid: tuple[int, int]) -> GazeHistogram:
    """Average-pool a dense map onto the feature grid, then max-normalize."""
    gh, gw = grid
    h, w = dense.shape
    if h < gh or w < gw:
        raise ValueError("map smaller than grid")
    ys = np.linspace(0, h, gh + 1).round().astype(int)
    xs = np.linspace(0, w, gw + 1).round().astype(int)
    out = np.array([[dense[ys[i]:ys[i + 1], xs[j]:xs[j + 1]].mean() for j in range(gw)] for i in range(gh)])
    return GazeHistogram(gh, gw, _max_normalize(out).reshape(-1))


def center_map(h: int, w: int) -> np.ndarray:
    """Negative distance from the image centre, shifted to be nonnegative."""
    if h < 1 or w < 1:
        raise ValueError("map dims must be positive")
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    dist = np.sqrt((yy - (h - 1) / 2.0) ** 2 + (xx - (w - 1) / 2.0) ** 2)
    return dist.max() - dist


def exposed_count(r: float, n: int) -> int:
    if not 0.0 <= r <= 1.0:
        raise ValueError("ratio must lie in [0, 1]")
    # tolerate representation error such as 0.3 * 100 = 30.000000000000004
    return min(n, math.ceil(r * n - 1e-9))


def threshold_to_ratio(dense: np.ndarray, r: float) -> np.ndarray:
    """Boolean mask exposing the ceil(r*h*w) highest-valued pixels.

    Ties go to the earlier pixel in row-major order.
    """
    dense = np.asarray(dense)
    k = exposed_count(r, dense.size)
    order = np.argsort(-dense.reshape(-1), kind="stable")
    mask = np.zeros(dense.size, dtype=bool)
    mask[order[:k]] = True
    return mask.reshape(dense.shape)


def histogram_csv(hist: GazeHistogram) -> str:
    return "\n".join(",".join(f"{v:.6g}" for v in row) for row in hist.grid) + "\n"
