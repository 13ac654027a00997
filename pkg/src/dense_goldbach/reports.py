"""Structured report documents and CSV tables."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from . import __version__

SUMMARY_LIMIT = 10_000
SUMMARY_EDGE = 100


def summarize_indices(values: Iterable[int] | np.ndarray, full: bool = False) -> dict:
    """Full list when small (or ``full``); otherwise count plus the first and last 100."""
    arr = np.asarray(values, dtype=np.int64)
    if full or arr.size <= SUMMARY_LIMIT:
        return {"count": int(arr.size), "values": arr.tolist()}
    return {
        "count": int(arr.size),
        "truncated": True,
        "first": arr[:SUMMARY_EDGE].tolist(),
        "last": arr[-SUMMARY_EDGE:].tolist(),
    }


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else str(f)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def canonical_json(obj: Any) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def build_document(command: str, config: dict, result: dict, checks: list[dict] | None = None) -> dict:
    checks = checks or []
    return {
        "tool": "dense-goldbach",
        "version": __version__,
        "command": command,
        "config": config,
        "input_hash": config_hash({"command": command, "config": config}),
        "status": "pass" if all(c["passed"] for c in checks) else "fail",
        "checks": checks,
        "result": result,
    }


def check(name: str, passed: bool, **detail: Any) -> dict:
    return {"name": name, "passed": bool(passed), **detail}


def dumps_document(doc: dict) -> str:
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


def load_document(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())


def dumps_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(_jsonable(row))
    return buf.getvalue()


def write_sidecar(path: str | Path, values: Iterable[int]) -> Path:
    path = Path(path)
    path.write_text("".join(f"{int(v)}\n" for v in values))
    return path
