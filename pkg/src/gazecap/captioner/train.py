from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .. import tensor as T
from ..metrics import EvalPair, bleu
from ..tables import write_table
from . import checkpoint
from .decode import greedy_batch
from .model import CaptionerParams, batch_loss
from .vocab import Vocabulary

log = logging.getLogger(__name__)

LOG_COLUMNS = ("epoch", "train_nll", "train_reg", "val_bleu1", "wall_seconds")


@dataclass
class TrainConfig:
    lr: float = 1e-3
    batch_size: int = 16
    max_epochs: int = 30
    lam: float = 1.0
    clip: float = 5.0
    patience: int = 3
    seed: int = 0
    max_len: int = 20

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("batch_size and max_epochs must be positive")


@dataclass
class Example:
    image_id: str
    feats: np.ndarray  # (L, D)
    gaze: np.ndarray | None  # (L,)
    tokens: list[int]  # training target, ends with the end token
    references: list[list[str]] = field(default_factory=list)  # tokenized, for validation


@dataclass
class EpochLog:
    epoch: int
    train_nll: float
    train_reg: float
    val_bleu1: float
    wall_seconds: float


@dataclass
class TrainResult:
    params: CaptionerParams  # best-validation checkpoint
    best_epoch: int
    log: list[EpochLog]
    step_losses: list[float]


class TrainingDiverged(FloatingPointError):
    def __init__(self, epoch: int, batch: int, value: float):
        self.epoch, self.batch = epoch, batch
        super().__init__(f"non-finite loss {value} at epoch {epoch}, batch {batch}")


def _stack(batch: Sequence[Example], uses_gaze: bool):
    feats = np.stack([ex.feats for ex in batch])
    gaze = np.stack([ex.gaze for ex in batch]) if uses_gaze else None
    return feats, gaze


def validation_bleu1(params: CaptionerParams, examples: Sequence[Example], vocab: Vocabulary,
                     max_len: int = 20, chunk: int = 64) -> float:
    if not examples:
        raise ValueError("empty validation set")
    pairs = []
    for start in range(0, len(examples), chunk):
        part = examples[start:start + chunk]
        feats, gaze = _stack(part, params.config.uses_gaze)
        for ex, cap in zip(part, greedy_batch(params, feats, gaze, max_len, vocab.bos, vocab.eos)):
            pairs.append(EvalPair(ex.image_id, vocab.decode(cap.tokens), ex.references))
    return bleu(pairs, max_n=1)[0]


class Trainer:
    """Adam minibatch training with validation BLEU-1 early stopping.

    Batch order comes from ``config.seed`` alone, so two model variants
    trained with the same seed see identical minibatches.
    """

    def __init__(self, params: CaptionerParams, config: TrainConfig, vocab: Vocabulary):
        self.params = params
        self.config = config
        self.vocab = vocab
        self.named = params.named()
        self.state = T.AdamState(lr=config.lr)
        self.rng = np.random.default_rng(config.seed)
        self.step_losses: list[float] = []

    def step(self, batch: Sequence[Example]) -> BatchLossStats:
        feats, gaze = _stack(batch, self.params.config.uses_gaze)
        with T.GradientTape():
            res = batch_loss(feats, gaze, [ex.tokens for ex in batch], self.params, self.config.lam,
                             bos=self.vocab.bos)
            value = res.loss.item()
            if not np.isfinite(value):
                return BatchLossStats(value, res.nll, res.reg, finite=False)
            T.backward(res.loss, self.named)
        grads = {k: t.grad for k, t in self.named.items()}
        T.clip_grad_norm(grads, self.config.clip)
        T.adam_step(self.named, grads, self.state)
        self.step_losses.append(value)
        return BatchLossStats(value, res.nll, res.reg)

    def epoch_batches(self, n: int) -> list[np.ndarray]:
        order = self.rng.permutation(n)
        bs = self.config.batch_size
        return [order[i:i + bs] for i in range(0, n, bs)]

    def fit(self, train: Sequence[Example], val: Sequence[Example], log_path=None,
            checkpoint_dir=None, header: dict | None = None) -> TrainResult:
        if not train or not val:
            raise ValueError("training and validation splits must be non-empty")
        cfg = self.config
        history: list[EpochLog] = []
        best = (-1.0, 0, None)
        since_best = 0
        t0 = time.perf_counter()
        for epoch in range(1, cfg.max_epochs + 1):
            nll = reg = 0.0
            for b, idx in enumerate(self.epoch_batches(len(train))):
                stats = self.step([train[i] for i in idx])
                if not stats.finite:
                    raise TrainingDiverged(epoch, b, stats.loss)
                nll += stats.nll
                reg += stats.reg
            score = validation_bleu1(self.params, val, self.vocab, cfg.max_len)
            entry = EpochLog(epoch, nll / len(train), reg / len(train), score, time.perf_counter() - t0)
            history.append(entry)
            log.info("epoch %d nll=%.4f reg=%.4f val_bleu1=%.4f", epoch, entry.train_nll, entry.train_reg, score)
            if checkpoint_dir is not None:
                self._save(Path(checkpoint_dir) / f"epoch_{epoch:03d}.gzc", epoch, header)
            if score > best[0]:
                best = (score, epoch, {k: t.data.copy() for k, t in self.named.items()})
                since_best = 0
            else:
                since_best += 1
                if since_best >= cfg.patience:
                    break
            if log_path is not None:
                write_log(log_path, history, header)

        if log_path is not None:
            write_log(log_path, history, header)
        for k, t in self.named.items():
            t.data[...] = best[2][k]
        return TrainResult(self.params, best[1], history, list(self.step_losses))

    def _save(self, path: Path, epoch: int, header: dict | None) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        checkpoint.save(path, self.params, self.vocab, train=asdict(self.config), epoch=epoch, **(header or {}))


@dataclass
class BatchLossStats:
    loss: float
    nll: float
    reg: float
    finite: bool = True


def write_log(path, history: Sequence[EpochLog], header: dict | None = None) -> None:
    rows = [[e.epoch, e.train_nll, e.train_reg, e.val_bleu1, f"{e.wall_seconds:.3f}"] for e in history]
    write_table(path, LOG_COLUMNS, rows, header)


def train(dataset: Sequence[Example], valset: Sequence[Example], params: CaptionerParams,
          config: TrainConfig, vocab: Vocabulary, **kw) -> TrainResult:
    return Trainer(params, config, vocab).fit(dataset, valset, **kw)
