"""JSON run reports and TSV tables.

A report is self-contained: it echoes the program source, the device and
every run flag, so :func:`rerun` can reproduce it.  Only ``duration_seconds``
varies between identical runs.  Leaves and counts are sorted by path.
"""
from __future__ import annotations

import json
import time
from typing import Any

from . import __version__
from . import device as dev
from . import hilbert as hs
from .protocols.engine import BranchTree, SampleResult

__all__ = ["SCHEMA", "tree_to_json", "sample_to_json", "build_run_report", "dumps", "rerun", "DURATION_KEY"]

SCHEMA = 1
DURATION_KEY = "duration_seconds"


def _path(path) -> str:
    return "/".join(path) if path else "<root>"


def tree_to_json(tree: BranchTree) -> dict:
    leaves = []
    for leaf in tree.leaves:
        leaves.append({
            "path": _path(leaf.path),
            "probability": leaf.probability,
            "status": leaf.status,
            "state": None if leaf.state is None else hs.state_to_json(leaf.state, digits=15),
            "assertions": [
                {"reference": a.reference, "fidelity": a.fidelity, "tol": a.tol, "passed": a.passed}
                for a in leaf.assertions
            ],
        })
    return {
        "success_probability": tree.success_probability,
        "total_probability": tree.total_probability,
        "leaves": leaves,
    }


def sample_to_json(result: SampleResult) -> dict:
    counts = result.counts
    return {
        "shots": result.shots,
        "success_fraction": result.success_fraction,
        "counts": [
            {"path": _path(p), "status": result.statuses[p], "count": counts[p]} for p in result.paths
        ],
    }


def fidelity_lines(tree: BranchTree) -> list[dict]:
    """One entry per ``assert_state`` evaluation on an accepted leaf."""
    out = []
    for leaf in tree.accepted_leaves():
        for a in leaf.assertions:
            out.append({"leaf": _path(leaf.path), "reference": a.reference, "fidelity": a.fidelity, "passed": a.passed})
    return out


def build_run_report(
    *,
    source: str,
    program_path: str,
    device: dev.DeviceConfig,
    mode: str,
    model: str,
    seed: int,
    shots: int | None,
    result: Any,
    started: float,
) -> dict:
    report = {
        "schema": SCHEMA,
        "tool": "qselector",
        "version": __version__,
        "command": "run",
        "inputs": {
            "program_path": program_path,
            "program_source": source,
            "device": device.to_dict(),
            "mode": mode,
            "model": model,
            "seed": seed,
            "shots": shots,
        },
    }
    if mode == "enumerate":
        report["tree"] = tree_to_json(result.tree)
        report["fidelities"] = fidelity_lines(result.tree)
        report["success_probability"] = result.success_probability
    else:
        report["sample"] = sample_to_json(result)
        report["success_probability"] = result.success_fraction
    report[DURATION_KEY] = round(time.perf_counter() - started, 6)
    return report


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def rerun(report: dict, run) -> dict:
    """Re-execute a report's echoed inputs through ``run(source, device, **flags)``."""
    if report.get("schema") != SCHEMA:
        raise ValueError(f"unsupported report schema {report.get('schema')!r}")
    inp = report["inputs"]
    return run(
        source=inp["program_source"],
        program_path=inp["program_path"],
        device=dev.DeviceConfig.from_dict(inp["device"]),
        mode=inp["mode"],
        model=inp["model"],
        seed=inp["seed"],
        shots=inp["shots"],
    )
