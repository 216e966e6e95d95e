"""Soft attention over image regions, with optional gaze gating.

Three energy functions share one projection ``p = tanh(a U_a + h U_h + b)``:

* ``machine``   e_i = w_att . p_i + c
* ``gaze_only`` e_i = g_i (w_pos . p_i) + c
* ``split``     e_i = g_i (w_pos . p_i) + (1 - g_i) (w_neg . p_i) + c

All functions take a leading batch axis: features ``(B, L, D)``, hidden
state ``(B, H)``, gaze ``(B, L)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .tensor import Tensor

VARIANTS = ("machine", "gaze_only", "split")
GAZE_VARIANTS = ("gaze_only", "split")


@dataclass
class AttentionParams:
    variant: str
    U_a: Tensor  # (D, P)
    U_h: Tensor  # (H, P)
    b_p: Tensor  # (P,)
    c_att: Tensor  # ()
    w_att: Tensor | None = None  # (P,)
    w_pos: Tensor | None = None
    w_neg: Tensor | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown attention variant {self.variant!r}")
        need = {"machine": ("w_att",), "gaze_only": ("w_pos",), "split": ("w_pos", "w_neg")}[self.variant]
        for name in ("w_att", "w_pos", "w_neg"):
            present = getattr(self, name) is not None
            if present != (name in need):
                raise ValueError(f"{self.variant} attention {'needs' if name in need else 'must not have'} {name}")
        if self.U_a.shape[1] == 0:
            raise ValueError("projection width must be positive")

    @property
    def tied(self) -> bool:
        return self.variant == "split" and self.w_pos is self.w_neg

    def named(self) -> dict[str, Tensor]:
        out = {"att_Ua": self.U_a, "att_Uh": self.U_h, "att_b": self.b_p, "att_c": self.c_att}
        if self.w_att is not None:
            out["att_w"] = self.w_att
        if self.w_pos is not None:
            out["att_wpos"] = self.w_pos
        if self.w_neg is not None and not self.tied:
            out["att_wneg"] = self.w_neg
        return out


def check_gaze(g, shape=None) -> np.ndarray:
    g = np.asarray(g, dtype=np.float64)
    if shape is not None and g.shape != tuple(shape):
        raise T.ShapeError("gaze", g.shape, tuple(shape))
    if not np.all(np.isfinite(g)) or g.min(initial=0.0) < 0.0 or g.max(initial=0.0) > 1.0:
        raise ValueError("gaze histogram values must lie in [0, 1]")
    return g


def project_features(a: Tensor, params: AttentionParams) -> Tensor:
    """The h-independent half of the projection, ``a U_a``; reused every step."""
    if a.shape[-1] != params.U_a.shape[0]:
        raise T.ShapeError("project", a.shape, params.U_a.shape)
    return T.matmul(a, params.U_a)


def project(a: Tensor, h_prev: Tensor, params: AttentionParams, a_proj: Tensor | None = None) -> Tensor:
    if h_prev.shape[-1] != params.U_h.shape[0]:
        raise T.ShapeError("project", h_prev.shape, params.U_h.shape)
    if a_proj is None:
        a_proj = project_features(a, params)
    B, P = h_prev.shape[0], params.U_h.shape[1]
    hp = T.reshape(T.matmul(h_prev, params.U_h), (B, 1, P))
    return T.tanh(a_proj + hp + params.b_p)


def _score(p: Tensor, w: Tensor) -> Tensor:
    return T.sum(p * w, axis=-1)


def energy_machine(p: Tensor, params: AttentionParams, w: Tensor | None = None) -> Tensor:
    w = params.w_att if w is None else w
    return _score(p, w) + params.c_att


def energy_split(p: Tensor, g, params: AttentionParams) -> Tensor:
    g = check_gaze(g, p.shape[:-1])
    if params.variant == "gaze_only":
        return g * _score(p, params.w_pos) + params.c_att
    if params.variant != "split":
        raise ValueError(f"energy_split needs a gaze variant, got {params.variant!r}")
    return g * _score(p, params.w_pos) + (1.0 - g) * _score(p, params.w_neg) + params.c_att


def energy(p: Tensor, g, params: AttentionParams) -> Tensor:
    if params.variant == "machine":
        return energy_machine(p, params)
    if g is None:
        raise ValueError(f"{params.variant} attention requires a gaze histogram")
    return energy_split(p, g, params)


def attend(e: Tensor) -> Tensor:
    return T.softmax(e, axis=-1)


def context(alpha: Tensor, a: Tensor) -> Tensor:
    """Attention-weighted sum of region features: ``(B, L) x (B, L, D) -> (B, D)``."""
    if alpha.shape != a.shape[:-1]:
        raise T.ShapeError("context", alpha.shape, a.shape)
    B, L = alpha.shape
    return T.reshape(T.matmul(T.reshape(alpha, (B, 1, L)), a), (B, a.shape[-1]))


def init_attention(variant: str, feature_dim: int, hidden_dim: int, proj_dim: int | None, seed: int,
                   tie_gaze_weights: bool = False) -> AttentionParams:
    """Glorot-initialised attention weights.

    Gaze weights are drawn from the same stream as the machine ``w_att`` so a
    split model starts out exactly equivalent to its machine counterpart.
    """
    P = proj_dim or feature_dim

    def mk(name, shape, zero=False, stream=None):
        data = np.zeros(shape) if zero else T.glorot_uniform(T.param_rng(seed, stream or name), shape)
        return Tensor(data, requires_grad=True, name=name)

    kw = {}
    if variant == "machine":
        kw["w_att"] = mk("att_w", (P,))
    else:
        kw["w_pos"] = mk("att_wpos", (P,), stream="att_w")
        if variant == "split":
            kw["w_neg"] = kw["w_pos"] if tie_gaze_weights else mk("att_wneg", (P,), stream="att_w")
    return AttentionParams(
        variant=variant,
        U_a=mk("att_Ua", (feature_dim, P)),
        U_h=mk("att_Uh", (hidden_dim, P)),
        b_p=mk("att_b", (P,), zero=True),
        c_att=mk("att_c", (), zero=True),
        **kw,
    )
