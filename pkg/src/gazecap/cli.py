"""Command-line entry point: ``gazecap <command> [options]``.

Exit status is 0 on success, 2 on usage errors and 1 on runtime failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    ConstantClassifier,
    masked_accuracy_curve,
    mean_importance_overlay,
    occlusion_importance,
    read_labels,
)
from .captioner import checkpoint
from .data import Dataset, FeatureFile, RunConfig, SynthConfig, read_captions, synth_generate, toy_extract
from .data.features import FEATURE_DIM, write_features
from .data.synth import COLORS, SHAPES
from .gaze import center_map, fixation_density_map
from .imageio import read_ppm, write_pgm
from .metrics import METRIC_COLUMNS, EvalPair, evaluate, word_pr, word_pr_delta
from .parallel import pmap
from .pipeline import caption_split, run_training
from .saliency import bms_saliency
from .tables import write_table
from .text import tokenize

log = logging.getLogger("gazecap")


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# classifiers available from the command line
# --------------------------------------------------------------------------

class ColorCountClassifier:
    """Scores each (colour, shape) category by the share of pixels near its colour.

    Shape-blind by design: categories of one colour tie and fall back to index order.
    """

    def __init__(self, tol: float = 40.0):
        self.palette = np.array([COLORS[c] for c in COLORS for _ in SHAPES], dtype=np.float64)
        self.tol = tol

    def __call__(self, img: np.ndarray) -> np.ndarray:
        px = np.asarray(img, dtype=np.float64).reshape(-1, 3)
        d = np.linalg.norm(px[:, None, :] - self.palette[None], axis=2)
        return (d < self.tol).mean(axis=0)


def make_classifier(name: str):
    if name == "color-count":
        return ColorCountClassifier()
    if name == "constant":
        return ConstantClassifier(np.zeros(len(COLORS) * len(SHAPES)))
    raise UsageError(f"unknown classifier {name!r}")


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_synth(args) -> None:
    cfg = SynthConfig(train=args.train, val=args.val, test=args.test, seed=args.seed, difficulty=args.difficulty,
                      p_fix=args.p_fix, grid=args.grid)
    scenes = synth_generate(args.out, cfg)
    print(f"wrote {len(scenes)} scenes to {args.out}")


def cmd_extract(args) -> None:
    paths = sorted(Path(args.images).glob("*.ppm"))
    if not paths:
        raise FileNotFoundError(f"no .ppm images under {args.images}")
    grid = (args.grid, args.grid)
    feats = pmap(lambda p: toy_extract(read_ppm(p), grid), paths)
    meta = {"extractor": "toy", "grid": list(grid), "images": str(args.images)}
    write_features(args.out, FeatureFile(grid, FEATURE_DIM, {p.stem: f for p, f in zip(paths, feats)}, meta))
    print(f"wrote features for {len(paths)} images to {args.out}")


RUN_FLAGS = {
    "variant": str, "embed_dim": int, "hidden_dim": int, "proj_dim": int, "lam": float, "lr": float,
    "batch_size": int, "max_epochs": int, "patience": int, "clip": float, "seed": int, "max_len": int,
    "gaze_sigma": float,
}


def cmd_train(args) -> None:
    overrides = {k: getattr(args, k) for k in RUN_FLAGS}
    if args.tie_gaze_weights:
        overrides["tie_gaze_weights"] = True
    try:
        cfg = RunConfig.load(args.config, overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ds = Dataset.load(args.data, args.features)
    result, _ = run_training(ds, cfg, args.out)
    best = result.log[result.best_epoch - 1]
    print(f"best epoch {result.best_epoch}: val BLEU-1 {best.val_bleu1:.4f}; wrote {Path(args.out) / 'model.gzc'}")


def cmd_caption(args) -> None:
    params, vocab, header = checkpoint.load(args.checkpoint)
    ds = Dataset.load(args.data, args.features)
    sigma = header.get("run", {}).get("gaze_sigma", 0.0)
    caps = caption_split(params, vocab, ds, args.split, args.max_len, args.beam, sigma)
    with open(args.out, "w") as fh:
        for c in caps:
            fh.write(json.dumps({"image_id": c.image_id, "caption": " ".join(c.words)}, sort_keys=True) + "\n")
    print(f"wrote {len(caps)} captions to {args.out}")


def _named_paths(specs: list[str]) -> list[tuple[str, str]]:
    out = []
    for s in specs:
        name, sep, path = s.partition("=")
        out.append((name, path) if sep else (Path(s).stem, s))
    return out


def _pairs(cands: dict[str, list[str]], refs: dict[str, list[str]]) -> list[EvalPair]:
    missing = sorted(set(cands) - set(refs))
    if missing:
        raise KeyError(f"no references for images {missing[:5]}")
    return [EvalPair(i, tokenize(cands[i][0]), [tokenize(r) for r in refs[i]]) for i in sorted(cands)]


def cmd_eval(args) -> None:
    refs = read_captions(args.references)
    rows = []
    for name, path in _named_paths(args.candidates):
        row = evaluate(_pairs(read_captions(path), refs), smooth=args.smooth)
        rows.append([name] + [row[c] for c in METRIC_COLUMNS])
    print(" ".join(f"{c:>8}" for c in ("model",) + METRIC_COLUMNS))
    for r in rows:
        print(f"{r[0]:>8} " + " ".join(f"{v:8.3f}" for v in r[1:]))
    if args.out:
        write_table(args.out, ("model",) + METRIC_COLUMNS, rows, {"references": args.references,
                                                                   "smooth": args.smooth})


def cmd_word_pr(args) -> None:
    refs = read_captions(args.references)

    def rows_for(path):
        gen = {i: c[0] for i, c in read_captions(path).items()}
        return word_pr(gen, {i: refs[i] for i in gen}, min_freq=args.min_freq)

    rows = rows_for(args.candidates)
    meta = {"references": args.references, "candidates": args.candidates, "min_freq": args.min_freq}
    write_table(args.out, ("word", "precision", "recall", "f_score", "support", "precision_defined"),
                [[r.word, r.precision, r.recall, r.f_score, r.support, int(r.precision_defined)] for r in rows], meta)
    if args.baseline:
        improved, degraded = word_pr_delta(rows_for(args.baseline), rows, args.threshold)
        print("improved: " + " ".join(improved))
        print("degraded: " + " ".join(degraded))
    print(f"wrote {len(rows)} rows to {args.out}")


def _importance_maps(ds: Dataset, ids: list[str], source: str, sigma: float) -> dict[str, np.ndarray]:
    imgs = {i: ds.image(i) for i in ids}
    if source == "fixations":
        return {i: fixation_density_map(ds.fixations[i], *imgs[i].shape[:2], sigma=sigma) for i in ids}
    if source == "saliency":
        return dict(zip(ids, pmap(lambda i: bms_saliency(imgs[i]), ids)))
    if source == "center":
        return {i: center_map(*imgs[i].shape[:2]) for i in ids}
    raise UsageError(f"unknown map source {source!r}")


def _label_subset(labels, ids, which: str) -> dict[str, list[int]]:
    out = {}
    for i in ids:
        rec = labels[i]
        vals = {"all": rec.labels, "mentioned": rec.mentioned, "ignored": rec.ignored}[which]
        if vals:
            out[i] = vals
    return out


def cmd_mask_analysis(args) -> None:
    ds = Dataset.load(args.data)
    labels = read_labels(Path(args.data) / "labels.jsonl")
    ids = ds.splits[args.split][: args.limit or None]
    lab = _label_subset(labels, ids, args.labels)
    ids = [i for i in ids if i in lab]
    images = {i: ds.image(i) for i in ids}
    maps = _importance_maps(ds, ids, args.maps, args.sigma)
    ratios = [float(r) for r in args.ratios.split(",")]
    curve = masked_accuracy_curve(images, maps, lab, make_classifier(args.classifier), ratios)
    meta = {"data": args.data, "split": args.split, "maps": args.maps, "labels": args.labels,
            "classifier": args.classifier, "sigma": args.sigma}
    write_table(args.out, ("ratio", "accuracy", "n_images"), [[p.ratio, p.accuracy, p.n_images] for p in curve],
                meta)
    for p in curve:
        print(f"{p.ratio:.2f} {p.accuracy:.4f}")


def cmd_occlusion(args) -> None:
    ds = Dataset.load(args.data)
    labels = read_labels(Path(args.data) / "labels.jsonl")
    ids = ds.splits[args.split][: args.limit or None]
    lab = _label_subset(labels, ids, args.labels)
    clf = make_classifier(args.classifier)
    images = [ds.image(i) for i in lab]
    fill = np.mean([im.reshape(-1, 3).mean(axis=0) for im in images], axis=0) if args.fill is None else args.fill
    maps = [occlusion_importance(img, k, clf, args.window, args.stride, fill)
            for img, i in zip(images, lab) for k in lab[i]]
    mean, render = mean_importance_overlay(maps)
    meta = {"data": args.data, "split": args.split, "labels": args.labels, "classifier": args.classifier,
            "window": args.window, "stride": args.stride, "n_maps": len(maps)}
    write_table(f"{args.out}.csv", [f"c{j}" for j in range(mean.shape[1])], mean.tolist(), meta)
    write_pgm(f"{args.out}.pgm", render, comments=meta)
    print(f"averaged {len(maps)} importance maps into {args.out}.csv/.pgm")


def cmd_bms(args) -> None:
    img = read_ppm(args.image)
    sal = bms_saliency(img, args.delta, args.sigma)
    meta = {"image": args.image, "delta": args.delta, "sigma": args.sigma if args.sigma is not None else "default"}
    write_pgm(args.out, sal, comments=meta)
    if args.csv:
        write_table(args.csv, [f"c{j}" for j in range(sal.shape[1])], sal.tolist(), meta)
    print(f"wrote {args.out}")


def cmd_attention_maps(args) -> None:
    params, vocab, header = checkpoint.load(args.checkpoint)
    ds = Dataset.load(args.data, args.features)
    split = next((s for s, ids in ds.splits.items() if args.image_id in ids), None)
    if split is None:
        raise KeyError(f"image {args.image_id!r} is not in any split")
    ds.splits = {"one": [args.image_id]}
    sigma = header.get("run", {}).get("gaze_sigma", 0.0)
    cap = caption_split(params, vocab, ds, "one", args.max_len, args.beam, sigma)[0]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    img = ds.image(args.image_id)
    h, w = img.shape[:2]
    gh, gw = params.config.grid
    rows_idx = np.arange(h) * gh // h
    cols_idx = np.arange(w) * gw // w
    grey = img.mean(axis=2) / 255.0
    words = cap.words + ["<eos>"] * (len(cap.trace.alphas) - len(cap.words))
    rows = []
    meta = {"checkpoint": args.checkpoint, "image_id": args.image_id, "variant": params.config.variant}
    for t, (alpha, word) in enumerate(zip(cap.trace.alphas, words)):
        a = np.asarray(alpha).reshape(gh, gw)
        up = a[rows_idx][:, cols_idx]
        heat = 0.3 * grey + 0.7 * up / up.max()
        write_pgm(out / f"step_{t:02d}.pgm", heat, comments=dict(meta, step=t, word=word))
        rows.append([t, word] + [float(v) for v in np.asarray(alpha).reshape(-1)])
    write_table(out / "alphas.csv", ["step", "word"] + [f"a{i}" for i in range(gh * gw)], rows, meta)
    print(" ".join(cap.words))


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gazecap", description="Gaze-assisted attention captioning toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic dataset")
    s.add_argument("--out", required=True)
    s.add_argument("--train", type=int, default=500)
    s.add_argument("--val", type=int, default=100)
    s.add_argument("--test", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--difficulty", type=int, default=1, choices=[0, 1, 2])
    s.add_argument("--p-fix", type=float, default=0.8)
    s.add_argument("--grid", type=int, default=4)
    s.set_defaults(fn=cmd_synth)

    s = sub.add_parser("extract", help="toy features for a directory of PPM images")
    s.add_argument("--images", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--grid", type=int, default=4)
    s.set_defaults(fn=cmd_extract)

    s = sub.add_parser("train", help="train a captioner")
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--config", help="key=value run config; flags override it")
    s.add_argument("--features", help="feature file (default: DATA/features.gfc)")
    for key, typ in RUN_FLAGS.items():
        s.add_argument("--" + key.replace("_", "-"), dest=key, type=typ, default=None)
    s.add_argument("--tie-gaze-weights", action="store_true")
    s.set_defaults(fn=cmd_train)

    s = sub.add_parser("caption", help="caption one split with a checkpoint")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--features")
    s.add_argument("--split", default="test")
    s.add_argument("--out", required=True)
    s.add_argument("--beam", type=int, default=1, help="beam width; 1 is greedy")
    s.add_argument("--max-len", type=int, default=20)
    s.set_defaults(fn=cmd_caption)

    s = sub.add_parser("eval", help="BLEU-1..4, ROUGE-L and CIDEr of candidate files")
    s.add_argument("--references", required=True)
    s.add_argument("--candidates", required=True, nargs="+", metavar="[NAME=]PATH")
    s.add_argument("--out")
    s.add_argument("--smooth", action="store_true", help="add-one smoothing for BLEU-2..4")
    s.set_defaults(fn=cmd_eval)

    s = sub.add_parser("word-pr", help="weighted per-word precision/recall")
    s.add_argument("--references", required=True)
    s.add_argument("--candidates", required=True)
    s.add_argument("--baseline", help="second candidate file; prints improved/degraded words")
    s.add_argument("--min-freq", type=int, default=10)
    s.add_argument("--threshold", type=float, default=0.05)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_word_pr)

    s = sub.add_parser("mask-analysis", help="top-k accuracy against visible-area ratio")
    s.add_argument("--data", required=True)
    s.add_argument("--split", default="test")
    s.add_argument("--maps", default="fixations", choices=["fixations", "saliency", "center"])
    s.add_argument("--labels", default="all", choices=["all", "mentioned", "ignored"])
    s.add_argument("--classifier", default="color-count", choices=["color-count", "constant"])
    s.add_argument("--ratios", default=",".join(f"{0.05 * i:.2f}" for i in range(1, 21)))
    s.add_argument("--sigma", type=float, default=3.0, help="fixation map blur in pixels")
    s.add_argument("--limit", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_mask_analysis)

    s = sub.add_parser("occlusion", help="mean occlusion importance over a split")
    s.add_argument("--data", required=True)
    s.add_argument("--split", default="test")
    s.add_argument("--labels", default="mentioned", choices=["all", "mentioned", "ignored"])
    s.add_argument("--classifier", default="color-count", choices=["color-count", "constant"])
    s.add_argument("--window", type=int, default=16)
    s.add_argument("--stride", type=int, default=8)
    s.add_argument("--fill", type=float, default=None, help="fill value (default: dataset mean colour)")
    s.add_argument("--limit", type=int, default=0)
    s.add_argument("--out", required=True, help="output prefix for .csv and .pgm")
    s.set_defaults(fn=cmd_occlusion)

    s = sub.add_parser("bms", help="boolean map saliency of one PPM image")
    s.add_argument("--image", required=True)
    s.add_argument("--out", required=True, help="16-bit PGM")
    s.add_argument("--csv")
    s.add_argument("--delta", type=int, default=8)
    s.add_argument("--sigma", type=float, default=None)
    s.set_defaults(fn=cmd_bms)

    s = sub.add_parser("attention-maps", help="per-step attention renders for one image")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--features")
    s.add_argument("--image-id", required=True)
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--beam", type=int, default=1)
    s.add_argument("--max-len", type=int, default=20)
    s.set_defaults(fn=cmd_attention_maps)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.fn(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"gazecap: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # report, do not dump a traceback at users
        log.debug("failure", exc_info=True)
        print(f"gazecap: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
