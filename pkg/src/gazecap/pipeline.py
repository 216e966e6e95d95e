"""End-to-end steps shared by the CLI and the acceptance suite."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .captioner import (
    CaptionerParams,
    ModelConfig,
    Trainer,
    TrainConfig,
    TrainResult,
    Vocabulary,
    greedy_batch,
    init_params,
)
from .captioner import checkpoint
from .captioner.decode import beam_decode
from .data import Dataset, RunConfig
from .metrics import EvalPair, evaluate
from .text import tokenize

log = logging.getLogger(__name__)


def gaze_source(variant: str) -> str | None:
    return {"machine": None, "gaze_only": "fixations", "split": "fixations", "saliency": "saliency"}[variant]


def model_config(cfg: RunConfig, vocab: Vocabulary, ds: Dataset) -> ModelConfig:
    return ModelConfig(vocab_size=len(vocab), embed_dim=cfg.embed_dim, feature_dim=ds.features.dim,
                       hidden_dim=cfg.hidden_dim, proj_dim=cfg.proj_dim or None, grid=ds.features.grid,
                       variant=cfg.variant, tie_gaze_weights=cfg.tie_gaze_weights)


def train_config(cfg: RunConfig) -> TrainConfig:
    return TrainConfig(lr=cfg.lr, batch_size=cfg.batch_size, max_epochs=cfg.max_epochs, lam=cfg.lam,
                       clip=cfg.clip, patience=cfg.patience, seed=cfg.seed, max_len=cfg.max_len)


def split_gaze(ds: Dataset, split: str, variant: str, sigma: float = 0.0):
    src = gaze_source(variant)
    return None if src is None else ds.gaze(ds.splits[split], src, sigma)


def run_training(ds: Dataset, cfg: RunConfig, out_dir=None) -> tuple[TrainResult, Vocabulary]:
    """Train on the train split, select on val; writes ``model.gzc`` and ``train_log.csv``."""
    vocab = Vocabulary.build(ds.training_captions())
    params = init_params(model_config(cfg, vocab, ds), cfg.seed)
    train = ds.examples("train", vocab, split_gaze(ds, "train", cfg.variant, cfg.gaze_sigma))
    val = ds.examples("val", vocab, split_gaze(ds, "val", cfg.variant, cfg.gaze_sigma), per_caption=False)
    header = {"run": cfg.as_dict()}
    log_path = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        log_path = out_dir / "train_log.csv"
    trainer = Trainer(params, train_config(cfg), vocab)
    result = trainer.fit(train, val, log_path=log_path, header={f"run.{k}": v for k, v in cfg.as_dict().items()})
    if out_dir is not None:
        checkpoint.save(out_dir / "model.gzc", result.params, vocab, best_epoch=result.best_epoch, **header)
    return result, vocab


@dataclass
class Caption:
    image_id: str
    words: list[str]
    trace: object


def caption_split(params: CaptionerParams, vocab: Vocabulary, ds: Dataset, split: str, max_len: int = 20,
                  beam: int = 1, sigma: float = 0.0, chunk: int = 64) -> list[Caption]:
    ids = ds.splits[split]
    gaze = split_gaze(ds, split, params.config.variant, sigma)
    out = []
    for start in range(0, len(ids), chunk):
        part = ids[start:start + chunk]
        feats = np.stack([ds.features.records[i] for i in part])
        g = None if gaze is None else np.stack([gaze[i] for i in part])
        if beam <= 1:
            caps = greedy_batch(params, feats, g, max_len, vocab.bos, vocab.eos)
        else:
            caps = [beam_decode(params, feats[j], None if g is None else g[j], beam, max_len, vocab.bos, vocab.eos)[0]
                    for j in range(len(part))]
        out += [Caption(i, vocab.decode(c.tokens), c.trace) for i, c in zip(part, caps)]
    return out


def evaluate_captions(ds: Dataset, captions: list[Caption]) -> dict[str, float]:
    pairs = [EvalPair(c.image_id, c.words, [tokenize(r) for r in ds.captions[c.image_id]]) for c in captions]
    return evaluate(pairs)
