"""Attention LSTM captioner with a deep output layer.

Every function works on a batch of images; single-image helpers wrap a batch
of one.  Shapes: features ``(B, L, D)``, gaze ``(B, L)``, hidden ``(B, H)``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .. import attention as att
from .. import tensor as T
from ..tensor import Tensor

MODEL_VARIANTS = ("machine", "gaze_only", "split", "saliency")


@dataclass
class ModelConfig:
    vocab_size: int
    embed_dim: int = 512
    feature_dim: int = 512
    hidden_dim: int = 1400
    proj_dim: int | None = None
    grid: tuple[int, int] = (14, 14)
    variant: str = "machine"
    tie_gaze_weights: bool = False

    def __post_init__(self):
        if self.variant not in MODEL_VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {MODEL_VARIANTS}")
        self.grid = tuple(self.grid)

    @property
    def attention_variant(self) -> str:
        return "split" if self.variant == "saliency" else self.variant

    @property
    def uses_gaze(self) -> bool:
        return self.attention_variant != "machine"

    @property
    def num_regions(self) -> int:
        return self.grid[0] * self.grid[1]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = list(self.grid)
        return d


@dataclass
class CaptionerParams:
    config: ModelConfig
    tensors: dict[str, Tensor]
    att: att.AttentionParams

    def named(self) -> dict[str, Tensor]:
        return {**self.tensors, **self.att.named()}

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def copy(self) -> "CaptionerParams":
        clone = init_params(self.config, seed=0)
        src = self.named()
        for name, t in clone.named().items():
            t.data[...] = src[name].data
        return clone


def init_params(config: ModelConfig, seed: int) -> CaptionerParams:
    """Glorot-uniform weights, zero biases; each tensor seeded by its name."""
    V, E, D, H = config.vocab_size, config.embed_dim, config.feature_dim, config.hidden_dim
    shapes = {
        "embed": (V, E),
        "init_h_W": (D, H), "init_h_b": (H,),
        "init_c_W": (D, H), "init_c_b": (H,),
        "lstm_Wx": (E + D, 4 * H), "lstm_Wh": (H, 4 * H), "lstm_b": (4 * H,),
        "out_WE": (E, E), "out_Wh": (H, E), "out_Wz": (D, E), "out_W": (E, V),
    }
    tensors = {}
    for name, shape in shapes.items():
        if name.endswith("_b"):
            data = np.zeros(shape)
        else:
            data = T.glorot_uniform(T.param_rng(seed, name), shape)
        tensors[name] = Tensor(data, requires_grad=True, name=name)
    attp = att.init_attention(config.attention_variant, D, H, config.proj_dim, seed,
                              tie_gaze_weights=config.tie_gaze_weights)
    return CaptionerParams(config, tensors, attp)


# --------------------------------------------------------------------------
# building blocks
# --------------------------------------------------------------------------


def init_state(feats: Tensor, params: CaptionerParams) -> tuple[Tensor, Tensor]:
    """``h0 = tanh(mean_i(a_i) W + b)``, likewise ``c0``."""
    mean = T.Tensor(feats.data.mean(axis=1))
    h0 = T.tanh(T.matmul(mean, params["init_h_W"]) + params["init_h_b"])
    c0 = T.tanh(T.matmul(mean, params["init_c_W"]) + params["init_c_b"])
    return h0, c0


def lstm_step(x: Tensor, h_prev: Tensor, c_prev: Tensor, params: CaptionerParams) -> tuple[Tensor, Tensor]:
    H = params.config.hidden_dim
    if x.shape[-1] != params["lstm_Wx"].shape[0]:
        raise T.ShapeError("lstm_step", x.shape, params["lstm_Wx"].shape)
    gates = T.matmul(x, params["lstm_Wx"]) + T.matmul(h_prev, params["lstm_Wh"]) + params["lstm_b"]
    ifo = T.sigmoid(T.take(gates, 0, 3 * H))
    cand = T.tanh(T.take(gates, 3 * H, 4 * H))
    i, f, o = T.take(ifo, 0, H), T.take(ifo, H, 2 * H), T.take(ifo, 2 * H, 3 * H)
    c = f * c_prev + i * cand
    h = o * T.tanh(c)
    return h, c


def output_logits(emb_prev: Tensor, h: Tensor, z: Tensor, params: CaptionerParams) -> Tensor:
    hidden = T.tanh(
        T.matmul(emb_prev, params["out_WE"]) + T.matmul(h, params["out_Wh"]) + T.matmul(z, params["out_Wz"])
    )
    return T.matmul(hidden, params["out_W"])


def embed(tokens, params: CaptionerParams) -> Tensor:
    tokens = np.asarray(tokens, dtype=np.int64)
    V = params.config.vocab_size
    if tokens.size and (tokens.min() < 0 or tokens.max() >= V):
        raise IndexError(f"token index out of range for vocabulary of size {V}")
    return T.row_lookup(params["embed"], tokens)


def word_distribution(y_prev, h: Tensor, z: Tensor, params: CaptionerParams) -> Tensor:
    """``p(y_t | ...)`` over the vocabulary for previous tokens ``y_prev`` (B,)."""
    return T.softmax(output_logits(embed(y_prev, params), h, z, params), axis=-1)


@dataclass
class StepOutput:
    h: Tensor
    c: Tensor
    alpha: Tensor
    z: Tensor
    logits: Tensor


def decoder_step(y_prev, h: Tensor, c: Tensor, feats: Tensor, a_proj: Tensor, gaze,
                 params: CaptionerParams) -> StepOutput:
    """One decode step: attend with ``h_{t-1}``, update the LSTM, score words."""
    p = att.project(feats, h, params.att, a_proj=a_proj)
    alpha = att.attend(att.energy(p, gaze, params.att))
    z = att.context(alpha, feats)
    emb = embed(y_prev, params)
    h, c = lstm_step(T.concat([emb, z], axis=1), h, c, params)
    return StepOutput(h, c, alpha, z, output_logits(emb, h, z, params))


def _check_inputs(feats, gaze, params: CaptionerParams):
    feats = np.asarray(feats, dtype=np.float64)
    cfg = params.config
    if feats.ndim != 3 or feats.shape[2] != cfg.feature_dim:
        raise T.ShapeError("features", feats.shape, (None, None, cfg.feature_dim))
    if cfg.uses_gaze:
        if gaze is None:
            raise ValueError(f"variant {cfg.variant!r} requires gaze input")
        gaze = att.check_gaze(gaze, feats.shape[:2])
    else:
        gaze = None
    return feats, gaze


# --------------------------------------------------------------------------
# teacher-forced loss
# --------------------------------------------------------------------------


@dataclass
class AttentionTrace:
    alphas: np.ndarray  # (C, L)
    contexts: np.ndarray  # (C, D)


@dataclass
class BatchLoss:
    loss: Tensor  # mean over the batch of (nll + reg)
    nll: float  # summed over the batch
    reg: float
    alphas: np.ndarray  # (B, C_max, L)
    contexts: np.ndarray  # (B, C_max, D)
    lengths: list[int] = field(default_factory=list)

    def trace(self, b: int) -> AttentionTrace:
        n = self.lengths[b]
        return AttentionTrace(self.alphas[b, :n], self.contexts[b, :n])


def batch_loss(feats, gaze, targets: Sequence[Sequence[int]], params: CaptionerParams,
               lam: float = 1.0, bos: int = 1) -> BatchLoss:
    """Mean over the batch of ``-sum_t log p(y_t) + lam * sum_i (1 - sum_t alpha_ti)^2``.

    ``targets`` are token-id lists ending with the end token; shorter
    sequences are masked so each example contributes exactly its own loss.
    """
    if lam < 0:
        raise ValueError("regularization weight must be >= 0")
    feats, gaze = _check_inputs(feats, gaze, params)
    B = feats.shape[0]
    if len(targets) != B:
        raise ValueError(f"{len(targets)} targets for {B} images")
    lengths = [len(t) for t in targets]
    if min(lengths) == 0:
        raise ValueError("empty reference caption")
    C = max(lengths)
    V = params.config.vocab_size

    tgt = np.zeros((B, C), dtype=np.int64)
    mask = np.zeros((B, C))
    for b, seq in enumerate(targets):
        tgt[b, : len(seq)] = seq
        mask[b, : len(seq)] = 1.0
    inp = np.concatenate([np.full((B, 1), bos, dtype=np.int64), tgt[:, :-1]], axis=1)
    pick = np.zeros((B, C, V))
    pick[np.arange(B)[:, None], np.arange(C)[None, :], tgt] = 1.0
    pick *= mask[:, :, None]

    a = Tensor(feats)
    a_proj = att.project_features(a, params.att)
    h, c = init_state(a, params)
    nll_terms = []
    mass = None
    alphas, contexts = [], []
    for t in range(C):
        out = decoder_step(inp[:, t], h, c, a, a_proj, gaze, params)
        h, c = out.h, out.c
        logp = T.log_softmax(out.logits, axis=-1)
        nll_terms.append(T.sum(logp * pick[:, t, :]))
        m = out.alpha * mask[:, t:t + 1]
        mass = m if mass is None else mass + m
        alphas.append(out.alpha.data)
        contexts.append(out.z.data)

    nll = -T.sum(T.concat([T.reshape(x, (1,)) for x in nll_terms], axis=0))
    resid = 1.0 - mass
    reg = T.sum(resid * resid) * lam
    loss = (nll + reg) * (1.0 / B)
    return BatchLoss(
        loss=loss,
        nll=nll.item(),
        reg=reg.item(),
        alphas=np.stack(alphas, axis=1),
        contexts=np.stack(contexts, axis=1),
        lengths=lengths,
    )


def sequence_loss(feats, gaze, tokens: Sequence[int], params: CaptionerParams,
                  lam: float = 1.0, eos: int = 2) -> tuple[Tensor, AttentionTrace]:
    """Loss and attention trace for one image ``(L, D)`` and its reference."""
    if len(tokens) == 0:
        raise ValueError("empty reference caption")
    if tokens[-1] != eos:
        raise ValueError("reference must end with the end-of-sequence token")
    g = None if gaze is None else np.asarray(gaze)[None]
    res = batch_loss(np.asarray(feats)[None], g, [list(tokens)], params, lam=lam)
    return res.loss, res.trace(0)
