"""Binary checkpoint format.

Layout (all integers little-endian uint32)::

    b"GZC1" | version | header_len | header (UTF-8 JSON, sorted keys)
    | n_records | per record: name_len, name, rank, extents..., float64 LE values

The header echoes the run configuration, the seed and the vocabulary.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .model import CaptionerParams, ModelConfig, init_params
from .vocab import Vocabulary

MAGIC = b"GZC1"
VERSION = 1


def _u32(n: int) -> bytes:
    return struct.pack("<I", n)


def dumps(arrays: dict[str, np.ndarray], header: dict) -> bytes:
    hdr = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [MAGIC, _u32(VERSION), _u32(len(hdr)), hdr, _u32(len(arrays))]
    for name in sorted(arrays):
        arr = np.asarray(arrays[name], dtype="<f8")
        nb = name.encode("utf-8")
        parts += [_u32(len(nb)), nb, _u32(arr.ndim)] + [_u32(n) for n in arr.shape]
        parts.append(np.ascontiguousarray(arr).tobytes())
    return b"".join(parts)


def loads(blob: bytes) -> tuple[dict[str, np.ndarray], dict]:
    if blob[:4] != MAGIC:
        raise ValueError("not a GZC1 checkpoint")
    pos = 4

    def u32():
        nonlocal pos
        (n,) = struct.unpack_from("<I", blob, pos)
        pos += 4
        return n

    version = u32()
    if version != VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    n = u32()
    header = json.loads(blob[pos:pos + n].decode("utf-8"))
    pos += n
    arrays = {}
    for _ in range(u32()):
        n = u32()
        name = blob[pos:pos + n].decode("utf-8")
        pos += n
        shape = tuple(u32() for _ in range(u32()))
        count = int(np.prod(shape, dtype=np.int64))
        arrays[name] = np.frombuffer(blob, dtype="<f8", count=count, offset=pos).reshape(shape).astype(np.float64)
        pos += 8 * count
    return arrays, header


def save(path, params: CaptionerParams, vocab: Vocabulary | None = None, **extra) -> None:
    header = {"model": params.config.to_dict(), **extra}
    if vocab is not None:
        header["vocab"] = vocab.itos[4:]
    arrays = {k: t.data for k, t in params.named().items()}
    Path(path).write_bytes(dumps(arrays, header))


def load(path) -> tuple[CaptionerParams, Vocabulary | None, dict]:
    arrays, header = loads(Path(path).read_bytes())
    cfg = header["model"]
    config = ModelConfig(**{**cfg, "grid": tuple(cfg["grid"])})
    params = init_params(config, seed=0)
    named = params.named()
    if set(named) != set(arrays):
        raise ValueError(f"checkpoint parameters {sorted(arrays)} do not match model {sorted(named)}")
    for k, t in named.items():
        if t.shape != arrays[k].shape:
            raise ValueError(f"shape mismatch for {k}: {arrays[k].shape} vs {t.shape}")
        t.data[...] = arrays[k]
    vocab = Vocabulary(header["vocab"]) if "vocab" in header else None
    return params, vocab, header
