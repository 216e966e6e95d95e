"""Toy per-cell image features and the GFC1 feature file.

GFC1 layout (little-endian uint32 unless noted)::

    b"GFC1" | version | count | grid_h | grid_w | D | meta_len | meta (UTF-8 JSON)
    | per record: id_len, id bytes, grid_h*grid_w*D float32 values

``meta`` carries the effective run configuration of whatever produced the file.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"GFC1"
VERSION = 1
HIST_BINS = 8
FEATURE_DIM = 3 * HIST_BINS + 2
EDGE_THRESHOLD = 24.0  # intensity gradient magnitude, grey levels per pixel


def _cell_bounds(n: int, cells: int) -> np.ndarray:
    return np.linspace(0, n, cells + 1).round().astype(int)


def toy_extract(img: np.ndarray, grid: tuple[int, int]) -> np.ndarray:
    """``(grid_h * grid_w, 26)`` unit-norm features, row-major over cells.

    Per cell: an 8-bin histogram of each colour channel (as pixel fractions),
    the fraction of edge pixels, and the mean intensity in [0, 1].
    """
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[:2]
    gh, gw = grid
    if h < gh or w < gw:
        raise ValueError("image smaller than feature grid")
    intensity = img.mean(axis=2)
    gy, gx = np.gradient(intensity)
    edges = np.hypot(gy, gx) > EDGE_THRESHOLD
    bins = np.minimum((img // (256 // HIST_BINS)).astype(int), HIST_BINS - 1)
    ys, xs = _cell_bounds(h, gh), _cell_bounds(w, gw)
    out = np.empty((gh * gw, FEATURE_DIM))
    for i in range(gh):
        for j in range(gw):
            cell = (slice(ys[i], ys[i + 1]), slice(xs[j], xs[j + 1]))
            b = bins[cell].reshape(-1, 3)
            n = len(b)
            hist = [np.bincount(b[:, c], minlength=HIST_BINS) / n for c in range(3)]
            v = np.concatenate(hist + [[edges[cell].mean(), intensity[cell].mean() / 255.0]])
            out[i * gw + j] = v / np.linalg.norm(v)
    return out


@dataclass
class FeatureFile:
    grid: tuple[int, int]
    dim: int
    records: dict[str, np.ndarray]  # id -> (L, D) float64
    meta: dict = field(default_factory=dict)


def write_features(path, ff: FeatureFile) -> None:
    gh, gw = ff.grid
    meta = json.dumps(ff.meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [MAGIC, struct.pack("<6I", VERSION, len(ff.records), gh, gw, ff.dim, len(meta)), meta]
    for iid, arr in ff.records.items():
        arr = np.asarray(arr)
        if arr.shape != (gh * gw, ff.dim):
            raise ValueError(f"{iid}: features have shape {arr.shape}, expected {(gh * gw, ff.dim)}")
        if not np.isfinite(arr).all():
            raise ValueError(f"{iid}: non-finite feature values")
        nb = iid.encode("utf-8")
        parts += [struct.pack("<I", len(nb)), nb, arr.astype("<f4").tobytes()]
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def read_features(path) -> FeatureFile:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise ValueError(f"{path}: not a GFC1 feature file")
    version, count, gh, gw, dim, meta_len = struct.unpack_from("<6I", blob, 4)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported feature file version {version}")
    pos = 28
    meta = json.loads(blob[pos:pos + meta_len].decode("utf-8"))
    pos += meta_len
    n_vals = gh * gw * dim
    records = {}
    for _ in range(count):
        (n,) = struct.unpack_from("<I", blob, pos)
        iid = blob[pos + 4:pos + 4 + n].decode("utf-8")
        pos += 4 + n
        vals = np.frombuffer(blob, dtype="<f4", count=n_vals, offset=pos)
        pos += 4 * n_vals
        records[iid] = vals.astype(np.float64).reshape(gh * gw, dim)
    return FeatureFile((gh, gw), dim, records, meta)
