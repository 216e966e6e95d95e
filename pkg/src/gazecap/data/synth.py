"""Synthetic captioning scenes with informative gaze.

Each 64x64 image holds a few coloured shapes on a grey texture, one shape
per cell of a 4x4 layout.  Two shapes are mentioned in the captions; the
rest are distractors.  Fixations fall on mentioned shapes with probability
``p_fix`` and uniformly over the image otherwise, so gaze tells a model which
shapes the captions talk about.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..analysis import LabelRecord, write_labels
from ..gaze import FixationRecord, write_fixations
from ..imageio import write_ppm
from ..parallel import pmap
from .features import FEATURE_DIM, FeatureFile, toy_extract, write_features

SIZE = 64
LAYOUT = 4  # shapes sit in distinct cells of a LAYOUT x LAYOUT arrangement
COLORS = {"red": (215, 40, 40), "green": (40, 185, 60), "blue": (45, 70, 225), "yellow": (230, 205, 35)}
SHAPES = ("circle", "square", "triangle")
N_FIXATIONS = 8
# difficulty -> (shapes per image, shape side in pixels)
DIFFICULTY = {0: (2, 12), 1: (3, 12), 2: (4, 10)}


@dataclass
class Shape:
    kind: str
    color: str
    cell: int
    cx: float
    cy: float
    size: int
    mentioned: bool

    @property
    def bbox(self) -> tuple[int, int, int, int]:
        """x0, y0, x1, y1 in pixels, half-open."""
        half = self.size / 2.0
        return (int(round(self.cx - half)), int(round(self.cy - half)),
                int(round(self.cx + half)), int(round(self.cy + half)))

    @property
    def category(self) -> int:
        return list(COLORS).index(self.color) * len(SHAPES) + SHAPES.index(self.kind)


@dataclass
class Scene:
    image_id: str
    image: np.ndarray
    shapes: list[Shape]
    captions: list[str]
    fixations: np.ndarray  # (N_FIXATIONS, 3): x, y normalized, duration ms


def category_names() -> list[str]:
    return [f"{c} {s}" for c in COLORS for s in SHAPES]


def _shape_mask(shape: Shape) -> np.ndarray:
    yy, xx = np.mgrid[0:SIZE, 0:SIZE] + 0.5
    half = shape.size / 2.0
    dx, dy = xx - shape.cx, yy - shape.cy
    inside_box = (np.abs(dx) < half) & (np.abs(dy) < half)
    if shape.kind == "square":
        return inside_box
    if shape.kind == "circle":
        return dx**2 + dy**2 < half**2
    # upward triangle: apex at top centre, base along the bottom edge
    frac = (dy + half) / shape.size
    return inside_box & (np.abs(dx) <= frac * half)


def relation(a: Shape, b: Shape) -> str:
    """Where ``a`` sits relative to ``b``; the dominant axis wins, rows before columns."""
    ra, ca = divmod(a.cell, LAYOUT)
    rb, cb = divmod(b.cell, LAYOUT)
    if abs(ra - rb) >= abs(ca - cb):
        return "above" if ra < rb else "below"
    return "to the left of" if ca < cb else "to the right of"


def captions_for(a: Shape, b: Shape) -> list[str]:
    return [f"a {a.color} {a.kind} {relation(a, b)} a {b.color} {b.kind}",
            f"a {b.color} {b.kind} {relation(b, a)} a {a.color} {a.kind}"]


def render_scene(image_id: str, rng: np.random.Generator, difficulty: int = 1, p_fix: float = 0.8) -> Scene:
    n_shapes, size = DIFFICULTY[difficulty]
    cells = rng.choice(LAYOUT * LAYOUT, size=n_shapes, replace=False)
    colors = rng.choice(len(COLORS), size=n_shapes)
    kinds = rng.choice(len(SHAPES), size=n_shapes)
    mentioned = set(rng.choice(n_shapes, size=2, replace=False).tolist())
    step = SIZE / LAYOUT
    slack = (step - size) / 2.0
    shapes = []
    for k in range(n_shapes):
        r, c = divmod(int(cells[k]), LAYOUT)
        jx, jy = rng.uniform(-slack, slack, size=2)
        shapes.append(Shape(SHAPES[kinds[k]], list(COLORS)[colors[k]], int(cells[k]),
                            (c + 0.5) * step + jx, (r + 0.5) * step + jy, size, k in mentioned))

    img = rng.integers(105, 150, size=(SIZE, SIZE, 1)) + rng.integers(-6, 7, size=(SIZE, SIZE, 3))
    img = img.astype(np.int64)
    for s in shapes:
        img[_shape_mask(s)] = COLORS[s.color]
    img = np.clip(img, 0, 255).astype(np.uint8)

    ment = [s for s in shapes if s.mentioned]
    fix = np.empty((N_FIXATIONS, 3))
    for f in range(N_FIXATIONS):
        if rng.random() < p_fix:
            x0, y0, x1, y1 = ment[rng.integers(2)].bbox
            fix[f, :2] = rng.uniform([x0, y0], [x1, y1]) / SIZE
        else:
            fix[f, :2] = rng.uniform(0, 1, size=2)
        fix[f, 2] = float(rng.integers(100, 401))
    return Scene(image_id, img, shapes, captions_for(ment[0], ment[1]), np.clip(fix, 0.0, 1.0))


@dataclass
class SynthConfig:
    train: int = 500
    val: int = 100
    test: int = 100
    seed: int = 0
    difficulty: int = 1
    p_fix: float = 0.8
    grid: int = LAYOUT

    def __post_init__(self):
        if self.train + self.val + self.test < 1:
            raise ValueError("need at least one image")
        if min(self.train, self.val, self.test) < 0:
            raise ValueError("split sizes must be nonnegative")
        if self.difficulty not in DIFFICULTY:
            raise ValueError(f"difficulty must be one of {sorted(DIFFICULTY)}")
        if not 0.0 <= self.p_fix <= 1.0:
            raise ValueError("p_fix must lie in [0, 1]")


def _jsonl(path: Path, objs) -> None:
    with open(path, "w") as fh:
        for o in objs:
            fh.write(json.dumps(o, sort_keys=True, separators=(",", ":")) + "\n")


def synth_generate(out, cfg: SynthConfig) -> list[Scene]:
    """Write a dataset directory; everything is a function of ``cfg`` alone."""
    out = Path(out)
    (out / "images").mkdir(parents=True, exist_ok=True)
    n = cfg.train + cfg.val + cfg.test
    ids = [f"img{i:05d}" for i in range(n)]
    # one stream per image keeps the output independent of worker scheduling
    scenes = pmap(lambda i: render_scene(ids[i], np.random.default_rng([cfg.seed, i]), cfg.difficulty, cfg.p_fix),
                  range(n))
    meta = asdict(cfg)
    for s in scenes:
        write_ppm(out / "images" / f"{s.image_id}.ppm", s.image, comments={"seed": cfg.seed, "image_id": s.image_id})
    _jsonl(out / "captions.jsonl", ({"image_id": s.image_id, "captions": s.captions} for s in scenes))
    write_fixations(out / "fixations.jsonl", (FixationRecord(s.image_id, s.fixations) for s in scenes))
    write_labels(out / "labels.jsonl", [
        LabelRecord(s.image_id, sorted({x.category for x in s.shapes}),
                    sorted({x.category for x in s.shapes if x.mentioned}),
                    sorted({x.category for x in s.shapes if not x.mentioned} - {x.category for x in s.shapes
                                                                                 if x.mentioned}))
        for s in scenes])
    _jsonl(out / "shapes.jsonl", ({"image_id": s.image_id,
                                   "shapes": [dict(asdict(x), bbox=list(x.bbox)) for x in s.shapes]}
                                  for s in scenes))
    splits = {"train": ids[:cfg.train], "val": ids[cfg.train:cfg.train + cfg.val],
              "test": ids[cfg.train + cfg.val:]}
    (out / "splits.json").write_text(json.dumps(splits, indent=1) + "\n")
    feats = pmap(lambda s: toy_extract(s.image, (cfg.grid, cfg.grid)), scenes)
    write_features(out / "features.gfc", FeatureFile((cfg.grid, cfg.grid), FEATURE_DIM,
                                                     {s.image_id: f for s, f in zip(scenes, feats)},
                                                     {"synth": meta, "extractor": "toy"}))
    manifest = {"generator": "synth", "config": meta, "categories": category_names(),
                "files": ["captions.jsonl", "features.gfc", "fixations.jsonl", "images/", "labels.jsonl",
                          "shapes.jsonl", "splits.json"]}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return scenes
