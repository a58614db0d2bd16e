"""Run directories: echoed inputs, CSV tables, a JSON summary and SVG figures."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, is_dataclass
from pathlib import Path

import numpy as np


def _plain(obj):
    if is_dataclass(obj) and not isinstance(obj, type):
        return asdict(obj)
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not serialisable: {type(obj).__name__}")


def write_csv(path, columns, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _cell(row.get(k, "")) for k in columns})
    return path


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer, np.bool_)):
        return v.item()
    return v


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_plain) + "\n")
    return path


class RunDirectory:
    """Output directory of one CLI run."""

    def __init__(self, path, config: dict | None = None):
        self.path = Path(path)
        self.path.mkdir(parents=True, exist_ok=True)
        if config is not None:
            write_json(self.path / "config.json", config)

    def table(self, name: str, columns, rows) -> Path:
        return write_csv(self.path / f"{name}.csv", columns, rows)

    def results(self, columns, rows) -> Path:
        return self.table("results", columns, rows)

    def summary(self, obj) -> Path:
        return write_json(self.path / "report.json", obj)

    def figure(self, name: str, fig) -> Path:
        from .plotting import save_svg

        return save_svg(fig, self.path / f"{name}.svg")
