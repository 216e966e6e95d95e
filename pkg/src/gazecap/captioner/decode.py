from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .. import attention as att
from .. import tensor as T
from .model import AttentionTrace, CaptionerParams, _check_inputs, decoder_step, init_state


@dataclass
class ScoredCaption:
    tokens: list[int]
    token_logprobs: list[float]
    trace: AttentionTrace
    complete: bool = True

    @property
    def logprob(self) -> float:
        return float(np.sum(self.token_logprobs))

    def __len__(self) -> int:
        return len(self.tokens)


def _log_softmax(x: np.ndarray) -> np.ndarray:
    s = x - x.max(axis=-1, keepdims=True)
    return s - np.log(np.exp(s).sum(axis=-1, keepdims=True))


class _Stepper:
    """Tape-free decoder over a fixed set of images (rows of ``feats``)."""

    def __init__(self, params: CaptionerParams, feats: np.ndarray, gaze):
        self.params = params
        self.a = T.Tensor(feats)
        self.gaze = gaze
        self.a_proj = att.project_features(self.a, params.att)

    def initial(self):
        h, c = init_state(self.a, self.params)
        return h.data, c.data

    def __call__(self, rows: np.ndarray, tokens: np.ndarray, h: np.ndarray, c: np.ndarray):
        a = T.Tensor(self.a.data[rows])
        a_proj = T.Tensor(self.a_proj.data[rows])
        g = None if self.gaze is None else self.gaze[rows]
        out = decoder_step(tokens, T.Tensor(h), T.Tensor(c), a, a_proj, g, self.params)
        return _log_softmax(out.logits.data), out.h.data, out.c.data, out.alpha.data, out.z.data


def greedy_batch(params: CaptionerParams, feats, gaze, max_len: int, bos: int = 1,
                 eos: int = 2) -> list[ScoredCaption]:
    """Argmax decoding of every image in the batch; ties go to the lower index."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    feats, gaze = _check_inputs(feats, gaze, params)
    B = feats.shape[0]
    step = _Stepper(params, feats, gaze)
    h, c = step.initial()
    tokens = np.full(B, bos, dtype=np.int64)
    alive = np.ones(B, dtype=bool)
    out_tok = [[] for _ in range(B)]
    out_lp = [[] for _ in range(B)]
    out_a = [[] for _ in range(B)]
    out_z = [[] for _ in range(B)]
    rows = np.arange(B)
    for _ in range(max_len):
        idx = rows[alive]
        if idx.size == 0:
            break
        logp, h_new, c_new, alpha, z = step(idx, tokens[idx], h[idx], c[idx])
        best = np.argmax(logp, axis=1)
        h[idx], c[idx] = h_new, c_new
        for j, b in enumerate(idx):
            w = int(best[j])
            out_tok[b].append(w)
            out_lp[b].append(float(logp[j, w]))
            out_a[b].append(alpha[j])
            out_z[b].append(z[j])
            tokens[b] = w
            if w == eos:
                alive[b] = False
    L, D = feats.shape[1], feats.shape[2]
    return [
        ScoredCaption(
            out_tok[b], out_lp[b],
            AttentionTrace(np.array(out_a[b]).reshape(-1, L), np.array(out_z[b]).reshape(-1, D)),
            complete=bool(out_tok[b]) and out_tok[b][-1] == eos,
        )
        for b in range(B)
    ]


@dataclass
class Hypothesis:
    tokens: list[int]
    logprobs: list[float]
    state: Any
    extras: list = field(default_factory=list)
    score: float = 0.0


StepFn = Callable[[np.ndarray, list], tuple[np.ndarray, list, list]]


def beam_search(step: StepFn, init_state: Any, k: int, max_len: int, bos: int, eos: int) -> list[Hypothesis]:
    """Generic beam search.

    ``step(last_tokens, states) -> (logp (n, V), new_states, extras)`` scores
    the next token for ``n`` live hypotheses.  At each step the ``k`` best
    extensions (ties: earlier hypothesis, then lower token id) survive;
    extensions ending in ``eos`` leave the beam as finished.  Returns finished
    hypotheses sorted by total log-probability, followed by any hypotheses
    truncated at ``max_len``.
    """
    if k < 1:
        raise ValueError("beam width must be >= 1")
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    alive = [Hypothesis([], [], init_state)]
    finished: list[Hypothesis] = []
    for _ in range(max_len):
        last = np.array([h.tokens[-1] if h.tokens else bos for h in alive], dtype=np.int64)
        logp, states, extras = step(last, [h.state for h in alive])
        n, V = logp.shape
        total = np.array([h.score for h in alive])[:, None] + logp
        flat = total.reshape(-1)
        # stable sort on -score keeps (hypothesis, token) order among ties
        order = np.argsort(-flat, kind="stable")[:k]
        nxt = []
        for o in order:
            i, w = divmod(int(o), V)
            src = alive[i]
            hyp = Hypothesis(
                src.tokens + [w], src.logprobs + [float(logp[i, w])], states[i],
                src.extras + [extras[i]], float(flat[o]),
            )
            (finished if w == eos else nxt).append(hyp)
        alive = nxt
        if not alive:
            break
    finished.sort(key=lambda h: -h.score)
    alive.sort(key=lambda h: -h.score)
    return (finished + alive)[:k] if finished else alive[:k]


def decode(params: CaptionerParams, feats, gaze=None, mode: str = "greedy", k: int = 3,
           max_len: int = 20, bos: int = 1, eos: int = 2) -> ScoredCaption:
    """Caption one image ``(L, D)``; ``mode`` is ``"greedy"`` or ``"beam"``."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    g = None if gaze is None else np.asarray(gaze)[None]
    if mode == "greedy":
        return greedy_batch(params, np.asarray(feats)[None], g, max_len, bos, eos)[0]
    if mode != "beam":
        raise ValueError(f"unknown decode mode {mode!r}")
    return beam_decode(params, feats, gaze, k, max_len, bos, eos)[0]


def beam_decode(params: CaptionerParams, feats, gaze, k: int, max_len: int, bos: int = 1,
                eos: int = 2) -> list[ScoredCaption]:
    feats1, g1 = _check_inputs(np.asarray(feats)[None], None if gaze is None else np.asarray(gaze)[None], params)
    stepper = _Stepper(params, feats1, g1)
    h0, c0 = stepper.initial()

    def step(last, states):
        rows = np.zeros(len(states), dtype=np.int64)
        h = np.stack([s[0] for s in states])
        c = np.stack([s[1] for s in states])
        logp, h, c, alpha, z = stepper(rows, last, h, c)
        return logp, [(h[i], c[i]) for i in range(len(states))], [(alpha[i], z[i]) for i in range(len(states))]

    hyps = beam_search(step, (h0[0], c0[0]), k, max_len, bos, eos)
    L, D = feats1.shape[1], feats1.shape[2]
    out = []
    for hyp in hyps:
        alphas = np.array([e[0] for e in hyp.extras]).reshape(-1, L)
        zs = np.array([e[1] for e in hyp.extras]).reshape(-1, D)
        out.append(ScoredCaption(hyp.tokens, hyp.logprobs, AttentionTrace(alphas, zs),
                                 complete=hyp.tokens[-1] == eos))
    return out
