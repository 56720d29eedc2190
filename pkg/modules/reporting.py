# modules/reporting.py
"""
REPORT ENGINE
Machine-readable suite reports: JSON bodies with a stability digest, CSV
tables and the merged pass/fail matrix
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from .errors import UsageError

logger = logging.getLogger(__name__)

REQUIRED_KEYS = ("command", "config", "results", "summary")


def _plain(value):
    """JSON-safe copy: numpy scalars to Python, complex to [re, im], non-finite floats to strings."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (set, frozenset)):
        return sorted(_plain(v) for v in value)
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, complex):
        return [_plain(value.real), _plain(value.imag)]
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


def canonical_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=True)


@dataclass
class Report:
    command: str
    config: dict
    results: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    findings: dict = field(default_factory=dict)
    wall_time_s: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.summary.get("pass", False))

    def body(self) -> dict:
        return _plain({
            "command": self.command,
            "config": self.config,
            "results": self.results,
            "summary": self.summary,
            "findings": self.findings,
        })

    def digest(self) -> str:
        """SHA-256 of the canonical body; wall time is excluded."""
        return hashlib.sha256(canonical_json(self.body()).encode("ascii")).hexdigest()

    def to_json(self) -> str:
        doc = self.body()
        doc["digest"] = self.digest()
        doc["meta"] = {"wall_time_s": round(float(self.wall_time_s), 6)}
        return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=True) + "\n"

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(_plain(self.results))

    def to_csv(self) -> str:
        frame = self.to_frame()
        if frame.empty and not len(frame.columns):
            return ""
        return frame.to_csv(index=False, float_format="%.17g", lineterminator="\n")

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return self.to_json()
        if fmt == "csv":
            return self.to_csv()
        raise UsageError(f"unknown report format {fmt!r}; expected 'json' or 'csv'")


def summarize(checks: Sequence[dict], counts: dict | None = None) -> dict:
    """
    Summary block from per-check dicts carrying 'check', 'pass' and 'residual'.

    Checks with gated=False do not decide 'pass'; every one of them that
    fails is listed under 'waivers' with its residual and stated reason.
    """
    gated = [c for c in checks if c.get("gated", True)]
    residuals = [c["residual"] for c in gated if c.get("residual") is not None]
    waivers = [
        {"check": c["check"], "residual": c.get("residual"), "reason": c.get("waiver", "")}
        for c in checks if not c.get("gated", True) and not c["pass"]
    ]
    return {
        "pass": all(c["pass"] for c in gated),
        "worst_residual": max(residuals, default=0.0),
        "counts": dict(counts or {}),
        "checks": list(checks),
        "waivers": waivers,
    }


def load_report(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except OSError as exc:
        raise UsageError(f"{path}: cannot read report: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} (line {exc.lineno}, column {exc.colno}): {exc.msg}") from exc
    if not isinstance(doc, dict) or any(k not in doc for k in REQUIRED_KEYS):
        raise UsageError(f"{path}: not a report; expected keys {REQUIRED_KEYS}")
    if not isinstance(doc["summary"], dict) or "pass" not in doc["summary"]:
        raise UsageError(f"{path}: report summary lacks a 'pass' field")
    return doc


def merge_reports(paths: Iterable) -> Report:
    """Per-suite pass/fail matrix over several report files."""
    paths = list(paths)
    if not paths:
        raise UsageError("report merge needs at least one report path")
    docs = [(str(p), load_report(p)) for p in paths]

    matrix = pd.DataFrame([
        {
            "suite": doc["command"],
            "model": doc["config"].get("model") if isinstance(doc["config"], dict) else None,
            "source": path,
            "pass": bool(doc["summary"]["pass"]),
            "worst_residual": doc["summary"].get("worst_residual"),
            "records": len(doc["results"]),
            "waivers": len(doc["summary"].get("waivers", [])),
        }
        for path, doc in docs
    ]).sort_values(["suite", "model", "source"], kind="mergesort").reset_index(drop=True)

    failing = matrix.loc[~matrix["pass"], "suite"].tolist()
    worst = pd.to_numeric(matrix["worst_residual"], errors="coerce")
    summary = {
        "pass": not failing,
        "worst_residual": float(worst.max()) if worst.notna().any() else 0.0,
        "counts": {"reports": len(matrix), "failing": len(failing), "waivers": int(matrix["waivers"].sum())},
        "failing_suites": failing,
    }
    logger.info("merged %d reports, %d failing", len(matrix), len(failing))
    return Report(
        command="report merge",
        config={"inputs": sorted(p for p, _ in docs)},
        results=matrix.to_dict(orient="records"),
        summary=summary,
    )
