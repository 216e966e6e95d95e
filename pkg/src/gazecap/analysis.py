"""Masked top-k classification curves and occlusion importance maps.

Classifiers are plain callables ``img (h, w, 3) -> scores (n_categories,)``.
The toy classifiers here read fixed pixel regions so the harness can be
checked against known answers; a real recognizer plugs in the same way.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .gaze import threshold_to_ratio
from .parallel import pmap

Classifier = Callable[[np.ndarray], np.ndarray]
Region = tuple[int, int, int, int]  # y0, y1, x0, x1 (half-open)


def _crop(img: np.ndarray, region: Region) -> np.ndarray:
    y0, y1, x0, x1 = region
    return np.asarray(img, dtype=np.float64)[y0:y1, x0:x1]


class RegionOracleClassifier:
    """Scores category k by the fraction of region pixels within ``tol`` of palette colour k."""

    def __init__(self, region: Region, palette: np.ndarray, tol: float = 40.0):
        self.region = region
        self.palette = np.asarray(palette, dtype=np.float64)
        self.tol = tol

    def __call__(self, img: np.ndarray) -> np.ndarray:
        px = _crop(img, self.region).reshape(-1, 3)
        dist = np.linalg.norm(px[:, None, :] - self.palette[None], axis=2)
        return (dist < self.tol).mean(axis=0)


class RegionBrightnessClassifier:
    """Single category scored by mean intensity of the region."""

    def __init__(self, region: Region):
        self.region = region

    def __call__(self, img: np.ndarray) -> np.ndarray:
        return np.array([_crop(img, self.region).mean()])


class ConstantClassifier:
    """Ignores its input entirely."""

    def __init__(self, scores: Sequence[float]):
        self.scores = np.asarray(scores, dtype=np.float64)

    def __call__(self, img: np.ndarray) -> np.ndarray:
        return self.scores.copy()


def top_k(scores: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k best scores; equal scores rank by lower category index."""
    order = np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")
    return order[:k]


def top_k_hit(scores: np.ndarray, labels: Sequence[int]) -> bool:
    return bool(set(top_k(scores, len(labels)).tolist()) & set(labels))


@dataclass
class LabelRecord:
    image_id: str
    labels: list[int]
    mentioned: list[int] = field(default_factory=list)
    ignored: list[int] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"image_id": self.image_id, "labels": self.labels, "mentioned": self.mentioned, "ignored": self.ignored}


def read_labels(path) -> dict[str, LabelRecord]:
    out = {}
    with open(path) as fh:
        for line in fh:
            if line.strip():
                o = json.loads(line)
                out[o["image_id"]] = LabelRecord(o["image_id"], list(o["labels"]), list(o.get("mentioned", [])),
                                                 list(o.get("ignored", [])))
    return out


def write_labels(path, records: Sequence[LabelRecord]) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(r.to_json(), separators=(",", ":")) + "\n")


def dataset_mean_color(images: Sequence[np.ndarray]) -> np.ndarray:
    return np.mean([np.asarray(im, dtype=np.float64).reshape(-1, 3).mean(axis=0) for im in images], axis=0)


def apply_mask(img: np.ndarray, mask: np.ndarray, fill) -> np.ndarray:
    out = np.array(img, dtype=np.float64)
    out[~mask] = fill
    return out


@dataclass
class CurvePoint:
    ratio: float
    accuracy: float
    n_images: int


def masked_accuracy_curve(images: Mapping[str, np.ndarray], maps: Mapping[str, np.ndarray],
                          labels: Mapping[str, Sequence[int]], clf: Classifier, ratios: Sequence[float],
                          fill=None) -> list[CurvePoint]:
    """Mean per-image top-k hit rate (k = label count) when only the top-r of each map is visible."""
    ids = sorted(images)
    for i in ids:
        if i not in maps:
            raise KeyError(f"no importance map for image {i!r}")
        if not labels.get(i):
            raise KeyError(f"no labels for image {i!r}")
    if fill is None:
        fill = dataset_mean_color([images[i] for i in ids])

    def hits_at(r: float) -> float:
        hits = 0
        for i in ids:
            mask = threshold_to_ratio(maps[i], r)
            hits += top_k_hit(clf(apply_mask(images[i], mask, fill)), labels[i])
        return hits / len(ids)

    return [CurvePoint(float(r), acc, len(ids)) for r, acc in zip(ratios, pmap(hits_at, ratios))]


def unmasked_accuracy(images: Mapping[str, np.ndarray], labels: Mapping[str, Sequence[int]], clf: Classifier) -> float:
    ids = sorted(images)
    return sum(top_k_hit(clf(np.asarray(images[i], dtype=np.float64)), labels[i]) for i in ids) / len(ids)


@dataclass
class ImportanceMap:
    values: np.ndarray  # (rows, cols), one per occluder position
    window: int
    stride: int
    image_shape: tuple[int, int]

    def geometry(self) -> tuple:
        return self.values.shape, self.window, self.stride, self.image_shape

    def positions(self) -> tuple[np.ndarray, np.ndarray]:
        """Top-left pixel coordinates of each occluder row and column."""
        return (np.arange(self.values.shape[0]) * self.stride, np.arange(self.values.shape[1]) * self.stride)


def occlusion_importance(img: np.ndarray, label: int, clf: Classifier, window: int, stride: int,
                         fill=0.0) -> ImportanceMap:
    """Score drop for ``label`` when a window x window patch is filled, per stride position."""
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[:2]
    if window < 1 or stride < 1:
        raise ValueError("window and stride must be positive")
    if window > h or window > w:
        raise ValueError("occluder larger than image")
    base = clf(img)[label]
    ys = range(0, h - window + 1, stride)
    xs = range(0, w - window + 1, stride)

    def drop(pos):
        y, x = pos
        occluded = img.copy()
        occluded[y:y + window, x:x + window] = fill
        return base - clf(occluded)[label]

    vals = pmap(drop, [(y, x) for y in ys for x in xs])
    return ImportanceMap(np.array(vals, dtype=np.float64).reshape(len(ys), len(xs)), window, stride, (h, w))


def positive_mass_in_region(imp: ImportanceMap, region: Region) -> float:
    """Share of positive importance carried by windows that overlap ``region``."""
    y0, y1, x0, x1 = region
    py, px = imp.positions()
    hit_y = (py < y1) & (py + imp.window > y0)
    hit_x = (px < x1) & (px + imp.window > x0)
    pos = np.clip(imp.values, 0.0, None)
    total = pos.sum()
    return float(pos[np.outer(hit_y, hit_x)].sum() / total) if total > 0 else 1.0


def rank_equalize(x: np.ndarray) -> np.ndarray:
    """Rank-based histogram equalization to [0, 1]; ties share their average rank."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if n == 1:
        return np.full(x.shape, 0.5)
    return ((rankdata(x.reshape(-1), method="average") - 1.0) / (n - 1)).reshape(x.shape)


def mean_importance_overlay(maps: Sequence[ImportanceMap]) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise mean of same-geometry maps and its equalized render."""
    if not maps:
        raise ValueError("no maps to average")
    g = maps[0].geometry()
    for m in maps[1:]:
        if m.geometry() != g:
            raise ValueError(f"geometry mismatch: {m.geometry()} vs {g}")
    mean = np.mean([m.values for m in maps], axis=0)
    return mean, rank_equalize(mean)
