"""Consolidated report over one or more run manifests."""

import csv
import json
from collections import defaultdict
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

from ..numerics.fields import log_slope
from ..storage.run_archive import MANIFEST_NAME, load_manifest
from ..utils.logger import get_logger

logger = get_logger(__name__)


def _read(paths: Sequence[Path]) -> Tuple[List[Dict[str, Any]], List[str]]:
    manifests, missing = [], []
    for path in paths:
        path = Path(path)
        target = path / MANIFEST_NAME if path.is_dir() else path
        if not target.exists():
            missing.append(str(path))
            continue
        try:
            manifests.append(load_manifest(target))
        except (OSError, json.JSONDecodeError) as e:
            logger.warning("manifest_unreadable", path=str(path), error=str(e))
            missing.append(str(path))
    return manifests, missing


def verdict_rows(manifests: Sequence[Dict[str, Any]]) -> List[Dict[str, Any]]:
    rows = []
    for manifest in manifests:
        for scenario, section in manifest.get("scenarios", {}).items():
            for check, passed in section.get("checks", {}).items():
                rows.append(
                    {
                        "run_id": manifest["run_id"],
                        "scenario": scenario,
                        "check": check,
                        "passed": bool(passed),
                    }
                )
            if "error" in section:
                rows.append(
                    {
                        "run_id": manifest["run_id"],
                        "scenario": scenario,
                        "check": "completed",
                        "passed": False,
                    }
                )
    return rows


def delta_table(manifests: Sequence[Dict[str, Any]]) -> Dict[str, Any]:
    """||grad^l psi_out|| against delta across residual sweeps that share nu and the time.

    Returns:
        Rows (one per run) and, per (nu, t) group with at least two deltas, the fitted
        exponents for l = 1, 2 with the predicted nu + l - 1/2
    """
    rows = []
    for manifest in manifests:
        values = manifest.get("scenarios", {}).get("residual-sweep", {}).get("values", {})
        norms = values.get("remote_gradient_norms")
        if not norms or "delta" not in values:
            continue
        nu = manifest.get("config", {}).get("params", {}).get("nu")
        rows.append(
            {
                "run_id": manifest["run_id"],
                "nu": nu,
                "t": values.get("reference_time"),
                "delta": values["delta"],
                "grad1": norms["1"],
                "grad2": norms["2"],
            }
        )
    groups: Dict[Tuple[Any, Any], List[Dict[str, Any]]] = defaultdict(list)
    for row in rows:
        groups[(row["nu"], row["t"])].append(row)
    fits = []
    for (nu, t), members in groups.items():
        deltas = sorted({m["delta"] for m in members})
        if len(deltas) < 2:
            continue
        members = sorted(members, key=lambda m: m["delta"])
        fit = {"nu": nu, "t": t, "deltas": deltas}
        for l in (1, 2):
            fit[f"fitted_{l}"] = log_slope(
                [m["delta"] for m in members], [m[f"grad{l}"] for m in members]
            )
            fit[f"expected_{l}"] = nu + l - 0.5
        fits.append(fit)
    return {"rows": rows, "fits": fits}


def _markdown(summary: Dict[str, Any]) -> str:
    lines = [f"# Run report ({summary['created']})", ""]
    if summary["missing"]:
        lines += ["Missing manifests:", ""] + [f"- {p}" for p in summary["missing"]] + [""]
    lines += ["| run | scenario | check | verdict |", "|---|---|---|---|"]
    for row in summary["verdicts"]:
        verdict = "pass" if row["passed"] else "FAIL"
        lines.append(f"| {row['run_id']} | {row['scenario']} | {row['check']} | {verdict} |")
    fits = summary["delta_scaling"]["fits"]
    if fits:
        lines += ["", "| nu | t | l | fitted | expected |", "|---|---|---|---|---|"]
        for fit in fits:
            for l in (1, 2):
                lines.append(
                    f"| {fit['nu']} | {fit['t']:.4g} | {l} | {fit[f'fitted_{l}']:.4f} "
                    f"| {fit[f'expected_{l}']:.4f} |"
                )
    lines += ["", f"All checks passed: {summary['passed']}", ""]
    return "\n".join(lines)


def _write_csv(path: Path, rows: Sequence[Dict[str, Any]]) -> None:
    if not rows:
        return
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0].keys()), extrasaction="ignore")
        writer.writeheader()
        writer.writerows(rows)


def report(paths: Sequence[Path], out: Path) -> Path:
    """Merge manifests into report.json and report.md with verdict and delta-scaling CSVs.

    Missing or unreadable manifests are listed in the report; an empty input set gives an
    empty report.

    Args:
        paths: Run directories or manifest files
        out: Directory receiving the report files

    Returns:
        Path of report.json
    """
    manifests, missing = _read(paths)
    if not manifests:
        logger.warning("report_without_manifests", missing=missing)
    if missing:
        logger.warning("manifests_missing", paths=missing)
    verdicts = verdict_rows(manifests)
    scaling = delta_table(manifests)
    summary = {
        "created": datetime.now(timezone.utc).isoformat(),
        "runs": [m["run_id"] for m in manifests],
        "missing": missing,
        "verdicts": verdicts,
        "delta_scaling": scaling,
        "passed": bool(verdicts) and all(row["passed"] for row in verdicts),
    }
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    target = out / "report.json"
    with open(target, "w") as f:
        json.dump(summary, f, indent=2)
    (out / "report.md").write_text(_markdown(summary))
    _write_csv(out / "verdicts.csv", verdicts)
    _write_csv(out / "delta_scaling.csv", scaling["rows"])
    logger.info(
        "report_written",
        path=str(target),
        runs=len(manifests),
        checks=len(verdicts),
        passed=summary["passed"],
    )
    return target
