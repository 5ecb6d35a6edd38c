"""CSV writing shared by all exporters (header row, 12 significant digits)."""

from __future__ import annotations

import csv
import os
from pathlib import Path
from typing import Iterable, Sequence


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool,)):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".12g")


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="") as fh:
        r = list(csv.reader(fh))
    return r[0], r[1:]


def thread_count() -> int:
    """Worker threads: CPU count, capped by NHPT_THREADS."""
    n = os.cpu_count() or 1
    try:
        return max(1, min(n, int(os.environ.get("NHPT_THREADS", n))))
    except ValueError:
        return 1
