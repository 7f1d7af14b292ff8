"""Deterministic report emission: JSON (sorted keys, fixed float formatting), CSV tables, optional SVG plots.

Wall-clock timings live in a separate ``timings.json`` so that identical
configurations produce byte-identical ``report.json`` and CSV files.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .config import ExperimentConfig
from .experiments import Report

REPORT_SCHEMA = "spmelab.report/1"


def sanitize(obj: Any) -> Any:
    """JSON-safe copy: numpy scalars/arrays to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return sanitize(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    return obj


def report_document(report: Report, cfg: ExperimentConfig) -> dict[str, Any]:
    return {
        "schema": REPORT_SCHEMA,
        "kind": report.kind,
        "status": report.status,
        "config": cfg.canonical(),
        "config_hash": cfg.config_hash(),
        "seeds": list(cfg.signal.seeds),
        "result": report.body,
    }


def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_report(report: Report, cfg: ExperimentConfig, out_dir: str | Path, plots: bool = False) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    doc = json.dumps(sanitize(report_document(report, cfg)), sort_keys=True, indent=2) + "\n"
    (out / "report.json").write_text(doc)
    written["report"] = out / "report.json"
    (out / "report.sha256").write_text(hashlib.sha256(doc.encode()).hexdigest() + "\n")
    for name, table in sorted(report.tables.items()):
        path = out / f"{name}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(table.columns)
            for row in table.rows:
                w.writerow([_cell(v) for v in row])
        written[name] = path
    (out / "timings.json").write_text(json.dumps(sanitize(report.timings), sort_keys=True, indent=2) + "\n")
    if plots and report.curves:
        written.update(write_plots(report, out))
    return written


def write_plots(report: Report, out: Path) -> dict[str, Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "spmelab"
    paths = {}
    for name, curve in sorted(report.curves.items()):
        fig, ax = plt.subplots(figsize=(6, 4))
        for label, ys in curve["series"].items():
            ax.plot(curve["x"][: len(ys)], ys, label=label)
        ax.set_xlabel(curve.get("xlabel", ""))
        ax.set_ylabel(curve.get("ylabel", ""))
        ax.legend()
        path = out / f"{name}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        paths[f"plot_{name}"] = path
    return paths
