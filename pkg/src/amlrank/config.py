"""Flat ``section.key = value`` configuration files."""

from __future__ import annotations

import hashlib
from pathlib import Path

DEFAULTS = {
    "ppr.alpha": "0.5",
    "ppr.epsilon": "0.5",
    "ppr.p_f": "1.0",
    "ppr.hop_cap": "none",
    "ppr.seed": "0",
    "ppr.dangling_rule": "absorb",
    "classifier.split": "0.8,0.1,0.1",
    "classifier.reg_grid": "0.01,0.1,1.0",
    "classifier.iter_cap": "1000",
    "classifier.tol": "1e-6",
    "classifier.seed": "0",
    "eval.mode": "full",
    "eval.fold": "crossfit",
    "eval.n_folds": "10",
    "eval.k": "auto",
    "run.threads": "1",
}


def parse_kv(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def read_kv(path) -> dict:
    return parse_kv(Path(path).read_text(encoding="utf-8"))


def format_kv(cfg: dict) -> str:
    return "".join(f"{k} = {cfg[k]}\n" for k in sorted(cfg))


def write_kv(cfg: dict, path):
    Path(path).write_text(format_kv(cfg), encoding="utf-8")


def resolve(path=None, overrides=None) -> dict:
    """Defaults, then the file, then explicit overrides (``None`` values skipped)."""
    cfg = dict(DEFAULTS)
    if path is not None:
        cfg.update(read_kv(path))
    for k, v in (overrides or {}).items():
        if v is not None:
            cfg[k] = str(v)
    return cfg


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(format_kv(cfg).encode()).hexdigest()


def floats(value) -> tuple:
    return tuple(float(x) for x in str(value).split(","))
