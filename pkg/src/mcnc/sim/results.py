"""Result persistence: per-run CSV rows and per-cell JSON aggregates.

The CSV is the determinism surface: identical (config, master seed) must
reproduce it byte for byte, so floats are written with repr (shortest exact
round-trip form) and rows are emitted in a fixed sort order.  The JSON
aggregate carries a generation timestamp and is therefore only identical
modulo that one field.
"""

from __future__ import annotations

import csv
import datetime
import json
import os
from typing import Dict, List, Optional, Sequence, Tuple

from .config import CONNECTIVITY_LABELS, ERROR_CONTROL_LABELS, PROFILES
from .metrics import MetricsReport
from .montecarlo import SUMMARY_METRICS, report_samples

CSV_HEADER = ("config", "profile", "connectivity", "run", "seed",
              "nalu_loss", "latency_ms_mean", "psnr_db")

SCHEMA_VERSION = 1

#: (error control, profile, connectivity) -> (summary, per-run reports)
GridResults = Dict[
    Tuple[str, str, str],
    Tuple[Dict[str, Dict[str, float]], List[MetricsReport]],
]


def results_rows(results: GridResults, seeds: Sequence[int]) -> List[tuple]:
    """Flatten grid results into CSV rows, sorted by cell key then run index."""
    rows = []
    for key in sorted(results):
        config, profile, connectivity = key
        _, reports = results[key]
        if len(reports) != len(seeds):
            raise ValueError(
                "cell %r has %d reports for %d seeds"
                % (key, len(reports), len(seeds))
            )
        for i, report in enumerate(reports):
            s = report_samples(report)
            rows.append((
                config, profile, connectivity, i, seeds[i],
                s["nalu_loss"], s["latency_ms_mean"], s["psnr_db"],
            ))
    return rows


def write_csv(path: str, rows: Sequence[tuple]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def build_aggregate(
    results: GridResults,
    master_seed: int,
    runs: int,
    generated_at: Optional[str] = None,
) -> dict:
    if generated_at is None:
        generated_at = (
            datetime.datetime.now(datetime.timezone.utc)
            .strftime("%Y-%m-%dT%H:%M:%SZ")
        )
    cells = []
    for key in sorted(results):
        config, profile, connectivity = key
        summary, reports = results[key]
        cells.append({
            "config": config,
            "profile": profile,
            "connectivity": connectivity,
            "runs": len(reports),
            "metrics": {
                name: {"mean": summary[name]["mean"], "ci95": summary[name]["ci95"]}
                for name in SUMMARY_METRICS
            },
        })
    return {
        "schema_version": SCHEMA_VERSION,
        "generated_at": generated_at,
        "master_seed": master_seed,
        "runs": runs,
        "cells": cells,
    }


def validate_aggregate(obj: dict) -> None:
    """Schema check for aggregate.json; raises ValueError on any violation."""
    if not isinstance(obj, dict):
        raise ValueError("aggregate must be an object")
    expected = {"schema_version", "generated_at", "master_seed", "runs", "cells"}
    if set(obj) != expected:
        raise ValueError("aggregate keys must be exactly %s" % sorted(expected))
    if obj["schema_version"] != SCHEMA_VERSION:
        raise ValueError("unsupported schema_version %r" % (obj["schema_version"],))
    if not isinstance(obj["generated_at"], str):
        raise ValueError("generated_at must be a string")
    if not isinstance(obj["master_seed"], int):
        raise ValueError("master_seed must be an integer")
    if not isinstance(obj["runs"], int) or obj["runs"] < 1:
        raise ValueError("runs must be a positive integer")
    if not isinstance(obj["cells"], list) or not obj["cells"]:
        raise ValueError("cells must be a non-empty list")
    cell_keys = {"config", "profile", "connectivity", "runs", "metrics"}
    for cell in obj["cells"]:
        if not isinstance(cell, dict) or set(cell) != cell_keys:
            raise ValueError("cell keys must be exactly %s" % sorted(cell_keys))
        if cell["config"] not in ERROR_CONTROL_LABELS:
            raise ValueError("unknown config label %r" % (cell["config"],))
        if cell["profile"] not in PROFILES:
            raise ValueError("unknown profile %r" % (cell["profile"],))
        if cell["connectivity"] not in CONNECTIVITY_LABELS:
            raise ValueError("unknown connectivity %r" % (cell["connectivity"],))
        if not isinstance(cell["runs"], int) or cell["runs"] < 1:
            raise ValueError("cell runs must be a positive integer")
        metrics = cell["metrics"]
        if not isinstance(metrics, dict) or set(metrics) != set(SUMMARY_METRICS):
            raise ValueError("metrics must be exactly %s" % sorted(SUMMARY_METRICS))
        for name, entry in metrics.items():
            if not isinstance(entry, dict) or set(entry) != {"mean", "ci95"}:
                raise ValueError("metric %s must carry mean and ci95" % name)
            for field in ("mean", "ci95"):
                value = entry[field]
                if not isinstance(value, (int, float)) or isinstance(value, bool):
                    raise ValueError("metric %s.%s must be numeric" % (name, field))
            if entry["ci95"] < 0:
                raise ValueError("metric %s ci95 must be non-negative" % name)


def emit_results(
    results: GridResults,
    seeds: Sequence[int],
    master_seed: int,
    out_dir: str,
) -> Tuple[str, str]:
    """Write results.csv and aggregate.json; returns their paths."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "results.csv")
    json_path = os.path.join(out_dir, "aggregate.json")
    write_csv(csv_path, results_rows(results, seeds))
    aggregate = build_aggregate(results, master_seed, len(seeds))
    validate_aggregate(aggregate)
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(aggregate, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path
