"""Run archive: one directory per run with a JSON manifest indexing every artifact."""

import csv
import hashlib
import json
import platform
import threading
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional

import numpy as np
import pydantic
import scipy

from ..utils.errors import LabError
from ..utils.logger import get_logger

logger = get_logger(__name__)

MANIFEST_NAME = "manifest.json"


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def _plain(value: Any) -> Any:
    """JSON-safe copy of numpy scalars, arrays, paths and complex numbers."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(np.real(value)), "im": float(np.imag(value))}
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        value = float(value)
    if isinstance(value, float) and not np.isfinite(value):
        return str(value)
    if isinstance(value, Path):
        return str(value)
    return value


def versions() -> Dict[str, str]:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pydantic": pydantic.VERSION,
    }


class RunArchive:
    """Artifacts of one run under ``<root>/<run_id>/``.

    The manifest records the configuration echo, library versions, one section per scenario
    (files with checksums, fitted values, acceptance verdicts, errors) and the wall-clock time.
    """

    def __init__(self, root: Path, run_id: Optional[str] = None, config: Optional[Dict] = None):
        """Create or reopen a run directory.

        Args:
            root: Output directory holding all runs
            run_id: Run directory name; a UTC timestamp when omitted
            config: Configuration echo written on first creation
        """
        self.run_id = run_id or datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S%fZ")
        self.path = Path(root) / self.run_id
        self.path.mkdir(parents=True, exist_ok=True)
        self.manifest_path = self.path / MANIFEST_NAME
        self._started = time.perf_counter()
        self._lock = threading.RLock()
        self._ensure_manifest(config or {})
        logger.info("run_archive_initialized", path=str(self.path))

    def _ensure_manifest(self, config: Dict) -> None:
        if not self.manifest_path.exists():
            self._save(
                {
                    "run_id": self.run_id,
                    "created": datetime.now(timezone.utc).isoformat(),
                    "config": _plain(config),
                    "versions": versions(),
                    "scenarios": {},
                    "files": {},
                    "wall_clock": 0.0,
                }
            )

    def _load(self) -> Dict[str, Any]:
        with open(self.manifest_path, "r") as f:
            return json.load(f)

    def _save(self, manifest: Dict[str, Any]) -> None:
        tmp = self.manifest_path.with_suffix(".tmp")
        with open(tmp, "w") as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
        tmp.replace(self.manifest_path)

    @property
    def manifest(self) -> Dict[str, Any]:
        return self._load()

    def _register(self, path: Path, scenario: str) -> str:
        relative = str(path.relative_to(self.path))
        with self._lock:
            manifest = self._load()
            manifest["files"][relative] = {"sha256": _sha256(path), "scenario": scenario}
            section = manifest["scenarios"].setdefault(scenario, {})
            files = section.setdefault("files", [])
            if relative not in files:
                files.append(relative)
            self._save(manifest)
        logger.debug("artifact_written", file=relative, scenario=scenario)
        return relative

    def write_table(
        self, scenario: str, name: str, rows: Iterable[Mapping[str, Any]]
    ) -> Optional[str]:
        """Write rows with a shared header as ``<scenario>/<name>.csv``.

        Complex values are split into ``<key>_re`` and ``<key>_im`` columns. Empty tables are
        skipped.
        """
        flat: List[Dict[str, Any]] = []
        for row in rows:
            out: Dict[str, Any] = {}
            for key, value in row.items():
                if isinstance(value, (complex, np.complexfloating)):
                    out[f"{key}_re"] = float(np.real(value))
                    out[f"{key}_im"] = float(np.imag(value))
                else:
                    out[key] = _plain(value)
            flat.append(out)
        if not flat:
            logger.warning("empty_table_skipped", scenario=scenario, table=name)
            return None
        target = self.path / scenario / f"{name}.csv"
        target.parent.mkdir(parents=True, exist_ok=True)
        header = list(flat[0].keys())
        with open(target, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=header, extrasaction="ignore")
            writer.writeheader()
            writer.writerows(flat)
        return self._register(target, scenario)

    def write_array(self, scenario: str, name: str, array: np.ndarray) -> str:
        """Raw field snapshot as ``<scenario>/<name>.npy``."""
        target = self.path / scenario / f"{name}.npy"
        target.parent.mkdir(parents=True, exist_ok=True)
        np.save(target, np.asarray(array), allow_pickle=False)
        return self._register(target, scenario)

    def write_json(self, scenario: str, name: str, payload: Mapping[str, Any]) -> str:
        target = self.path / scenario / f"{name}.json"
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w") as f:
            json.dump(_plain(dict(payload)), f, indent=2, sort_keys=True)
        return self._register(target, scenario)

    def record(
        self,
        scenario: str,
        values: Optional[Mapping[str, Any]] = None,
        checks: Optional[Mapping[str, bool]] = None,
    ) -> None:
        """Merge fitted values and acceptance verdicts into the scenario section."""
        with self._lock:
            manifest = self._load()
            section = manifest["scenarios"].setdefault(scenario, {})
            section.setdefault("values", {}).update(_plain(dict(values or {})))
            verdicts = {k: bool(v) for k, v in (checks or {}).items()}
            section.setdefault("checks", {}).update(verdicts)
            self._save(manifest)

    def record_error(self, scenario: str, error: Exception) -> None:
        """Keep the partial outputs and note what failed."""
        entry = (
            error.to_dict()
            if isinstance(error, LabError)
            else {"type": type(error).__name__, "message": str(error), "details": {}}
        )
        with self._lock:
            manifest = self._load()
            manifest["scenarios"].setdefault(scenario, {})["error"] = _plain(entry)
            self._save(manifest)
        logger.error("scenario_error_recorded", scenario=scenario, error=str(error))

    def finish(self) -> Dict[str, Any]:
        """Stamp the wall-clock time and return the manifest."""
        manifest = self._load()
        manifest["wall_clock"] = manifest.get("wall_clock", 0.0) + (
            time.perf_counter() - self._started
        )
        self._save(manifest)
        return manifest

    def checks(self) -> Dict[str, bool]:
        """All verdicts keyed ``<scenario>.<check>``."""
        out: Dict[str, bool] = {}
        for scenario, section in self._load()["scenarios"].items():
            for name, verdict in section.get("checks", {}).items():
                out[f"{scenario}.{name}"] = bool(verdict)
        return out

    def verify(self) -> List[str]:
        """Recompute every checksum.

        Returns:
            Files that are missing or whose content changed; empty when the archive is intact
        """
        bad = []
        for relative, entry in self._load()["files"].items():
            path = self.path / relative
            if not path.exists() or _sha256(path) != entry["sha256"]:
                bad.append(relative)
        if bad:
            logger.warning("archive_checksum_mismatch", files=bad)
        return bad


def load_manifest(path: Path) -> Dict[str, Any]:
    """Read a manifest from a run directory or the manifest file itself."""
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    with open(path, "r") as f:
        return json.load(f)
