"""Loading a dataset directory into captioner examples."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..captioner import Example, Vocabulary
from ..gaze import FixationRecord, fixation_histogram, read_fixations, resample_to_grid
from ..imageio import read_ppm
from ..parallel import pmap
from ..saliency import bms_saliency
from ..text import tokenize
from .features import FeatureFile, read_features


def read_captions(path) -> dict[str, list[str]]:
    """``{"image_id", "captions": [...]}`` or ``{"image_id", "caption"}`` lines; the latter accumulate."""
    out: dict[str, list[str]] = {}
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            o = json.loads(line)
            caps = o["captions"] if "captions" in o else [o["caption"]]
            out.setdefault(str(o["image_id"]), []).extend(caps)
    return out


@dataclass
class Dataset:
    root: Path
    splits: dict[str, list[str]]
    captions: dict[str, list[str]]
    fixations: dict[str, FixationRecord]
    features: FeatureFile

    @classmethod
    def load(cls, root, features_path=None) -> "Dataset":
        root = Path(root)
        splits = json.loads((root / "splits.json").read_text())
        ff = read_features(features_path or root / "features.gfc")
        fix_path = root / "fixations.jsonl"
        fixations = read_fixations(fix_path) if fix_path.exists() else {}
        return cls(root, splits, read_captions(root / "captions.jsonl"), fixations, ff)

    def image(self, image_id: str) -> np.ndarray:
        return read_ppm(self.root / "images" / f"{image_id}.ppm")

    def gaze(self, ids: list[str], source: str, sigma: float = 0.0) -> dict[str, np.ndarray]:
        """Per-image length-L gate values from fixations or from BMS saliency."""
        grid = self.features.grid
        if source == "fixations":
            missing = [i for i in ids if i not in self.fixations]
            if missing:
                raise KeyError(f"no fixations for images {missing[:5]}")
            return {i: fixation_histogram(self.fixations[i], grid, sigma=sigma).g for i in ids}
        if source == "saliency":
            maps = pmap(lambda i: resample_to_grid(bms_saliency(self.image(i)), grid).g, ids)
            return dict(zip(ids, maps))
        raise ValueError(f"unknown gaze source {source!r}")

    def examples(self, split: str, vocab: Vocabulary, gaze: dict[str, np.ndarray] | None,
                 per_caption: bool = True) -> list[Example]:
        """One example per caption (training) or per image (evaluation), in split order."""
        out = []
        for iid in self.splits[split]:
            feats = self.features.records[iid]
            g = None if gaze is None else gaze[iid]
            refs = [tokenize(c) for c in self.captions[iid]]
            caps = self.captions[iid] if per_caption else self.captions[iid][:1]
            for cap in caps:
                out.append(Example(iid, feats, g, vocab.encode(cap, add_eos=True), refs))
        return out

    def training_captions(self) -> list[str]:
        return [c for i in self.splits["train"] for c in self.captions[i]]
