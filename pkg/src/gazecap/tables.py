"""CSV tables with ``# key=value`` provenance lines ahead of the header row."""

from __future__ import annotations

import csv
from typing import Iterable, Sequence


def _cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def write_table(path, columns: Sequence[str], rows: Iterable[Sequence], meta: dict | None = None) -> None:
    with open(path, "w", newline="") as fh:
        for k, v in sorted((meta or {}).items()):
            fh.write(f"# {k}={v}\n".replace("\n", " ").rstrip() + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def read_table(path) -> tuple[dict[str, str], list[str], list[list[str]]]:
    meta, body = {}, []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition("=")
                meta[k] = v
            else:
                body.append(line)
    rows = list(csv.reader(body))
    return meta, rows[0], rows[1:]
