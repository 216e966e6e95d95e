"""Binary netpbm I/O: PPM (P6) colour and PGM (P5) grey, 8- or 16-bit.

Header comments carry provenance (``# key=value``) and are ignored on read.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _header(magic: bytes, w: int, h: int, maxval: int, comments: dict | None) -> bytes:
    lines = [magic]
    for k, v in sorted((comments or {}).items()):
        lines.append(f"# {k}={v}".replace("\n", " ").encode("utf-8"))
    lines.append(f"{w} {h}".encode())
    lines.append(str(maxval).encode())
    return b"\n".join(lines) + b"\n"


def _parse(blob: bytes, magic: bytes):
    if blob[:2] != magic:
        raise ValueError(f"expected {magic.decode()} netpbm data")
    fields, pos = [], 2
    while len(fields) < 3:
        while blob[pos:pos + 1].isspace():
            pos += 1
        if blob[pos:pos + 1] == b"#":
            pos = blob.index(b"\n", pos) + 1
            continue
        end = pos
        while not blob[end:end + 1].isspace():
            end += 1
        fields.append(int(blob[pos:end]))
        pos = end
    return fields, pos + 1  # exactly one whitespace byte before the raster


def write_ppm(path, img: np.ndarray, comments: dict | None = None) -> None:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError("PPM needs an (h, w, 3) array")
    h, w, _ = img.shape
    data = np.clip(img, 0, 255).astype(np.uint8)
    Path(path).write_bytes(_header(b"P6", w, h, 255, comments) + data.tobytes())


def read_ppm(path) -> np.ndarray:
    blob = Path(path).read_bytes()
    (w, h, maxval), pos = _parse(blob, b"P6")
    if maxval > 255:
        raise ValueError("16-bit PPM not supported")
    return np.frombuffer(blob, dtype=np.uint8, count=w * h * 3, offset=pos).reshape(h, w, 3).copy()


def write_pgm(path, values: np.ndarray, bits: int = 16, comments: dict | None = None) -> None:
    """Write a [0, 1] float map as grey levels."""
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    h, w = v.shape
    maxval = (1 << bits) - 1
    q = np.round(v * maxval)
    data = q.astype(">u2") if bits == 16 else q.astype(np.uint8)
    Path(path).write_bytes(_header(b"P5", w, h, maxval, comments) + data.tobytes())


def read_pgm(path) -> np.ndarray:
    """Grey levels scaled back to [0, 1]."""
    blob = Path(path).read_bytes()
    (w, h, maxval), pos = _parse(blob, b"P5")
    dtype = ">u2" if maxval > 255 else np.uint8
    raw = np.frombuffer(blob, dtype=dtype, count=w * h, offset=pos).reshape(h, w)
    return raw.astype(np.float64) / maxval
