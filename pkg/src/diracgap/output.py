"""Result files: CSV with a '#' provenance header, sibling JSON summaries, gnuplot blocks."""
from __future__ import annotations

import json
import math
import os
from typing import Iterable, Sequence

from . import __version__
from .config import canonical_json, config_hash
from .kernels import BACKEND


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


def provenance(cfg: dict) -> dict:
    return {"config_hash": config_hash(cfg), "version": __version__, "backend": BACKEND,
            "seed": cfg.get("seed"), "config": cfg}


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence], cfg: dict) -> None:
    """Rows with full-precision floats after a provenance block of '#' lines."""
    lines = [f"# config_hash: {config_hash(cfg)}",
             f"# version: {__version__}",
             f"# seed: {cfg.get('seed')}",
             f"# config: {canonical_json(cfg)}",
             ",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    _write(path, "\n".join(lines) + "\n")


def write_json(path: str, payload: dict, cfg: dict) -> None:
    body = {"provenance": provenance(cfg), **payload}
    _write(path, json.dumps(_clean(body), indent=2, sort_keys=True) + "\n")


def write_plot_data(path: str, curves: Sequence[tuple[str, Sequence[tuple[float, float]]]], cfg: dict) -> None:
    """Whitespace columns, one block per curve, blocks separated by blank lines."""
    out = [f"# config_hash: {config_hash(cfg)}"]
    for name, pts in curves:
        out.append(f"# curve: {name}")
        out += [f"{_fmt(float(x))} {_fmt(float(y))}" for x, y in pts]
        out.append("")
    _write(path, "\n".join(out) + "\n")


def read_csv_rows(path: str) -> list[list[str]]:
    with open(path, encoding="utf-8") as fh:
        return [ln.rstrip("\n").split(",") for ln in fh if not ln.startswith("#")]


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _write(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
