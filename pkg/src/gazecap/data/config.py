"""Flat ``key=value`` run configuration merged with command-line flags."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path


@dataclass
class RunConfig:
    variant: str = "machine"
    embed_dim: int = 32
    hidden_dim: int = 64
    proj_dim: int = 0  # 0 means "same as the feature dim"
    lam: float = 1.0
    lr: float = 5e-3
    batch_size: int = 16
    max_epochs: int = 30
    patience: int = 5
    clip: float = 5.0
    seed: int = 0
    max_len: int = 20
    gaze_sigma: float = 0.0
    tie_gaze_weights: bool = False

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def from_mapping(cls, values: dict) -> "RunConfig":
        types = {f.name: f.type for f in fields(cls)}
        unknown = sorted(set(values) - set(types))
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        kw = {k: _convert(k, v, types[k]) for k, v in values.items()}
        return cls(**kw)

    @classmethod
    def load(cls, path=None, overrides: dict | None = None) -> "RunConfig":
        """File values, then ``overrides`` (entries that are None are skipped)."""
        values = parse_config_file(path) if path else {}
        values.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return cls.from_mapping(values)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def _convert(key: str, value, typ: str):
    if not isinstance(value, str):
        return value
    try:
        if typ == "int":
            return int(value)
        if typ == "float":
            return float(value)
        if typ == "bool":
            low = value.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
    except ValueError:
        raise ValueError(f"config key {key!r}: cannot parse {value!r} as {typ}") from None
    return value.strip()


def parse_config_file(path) -> dict[str, str]:
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{n}: expected key=value")
        out[key.strip()] = value.strip()
    return out
