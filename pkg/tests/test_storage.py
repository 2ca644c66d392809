"""Run archive manifests, checksums and verdicts."""

import csv
import json

import numpy as np
import pytest

from src.storage import MANIFEST_NAME, RunArchive, load_manifest
from src.utils.errors import DomainError


@pytest.fixture
def archive(tmp_path):
    return RunArchive(tmp_path, "run-1", {"params": {"nu": 0.02}, "output_dir": tmp_path})


class TestRunArchive:
    def test_manifest_is_created_once(self, tmp_path, archive):
        manifest = archive.manifest
        assert manifest["run_id"] == "run-1"
        assert manifest["config"]["params"]["nu"] == 0.02
        assert manifest["config"]["output_dir"] == str(tmp_path)
        assert {"numpy", "scipy", "pydantic"} <= set(manifest["versions"])
        reopened = RunArchive(tmp_path, "run-1", {"params": {"nu": 0.5}})
        assert reopened.manifest["config"]["params"]["nu"] == 0.02

    def test_table_splits_complex_columns(self, archive):
        relative = archive.write_table("construct", "tails", [{"k": 1, "value": 1.5 - 2j}])
        assert relative == "construct/tails.csv"
        with open(archive.path / relative, newline="") as f:
            rows = list(csv.DictReader(f))
        assert rows == [{"k": "1", "value_re": "1.5", "value_im": "-2.0"}]
        assert archive.manifest["scenarios"]["construct"]["files"] == [relative]

    def test_empty_table_is_skipped(self, archive):
        assert archive.write_table("construct", "nothing", []) is None
        assert archive.manifest["files"] == {}

    def test_array_and_json(self, archive):
        archive.write_array("evolve", "psi", np.arange(4.0))
        archive.write_json("evolve", "fit", {"nu": np.float64(0.1), "pair": 1j, (1, 2): 3})
        assert np.array_equal(np.load(archive.path / "evolve" / "psi.npy"), np.arange(4.0))
        with open(archive.path / "evolve" / "fit.json") as f:
            payload = json.load(f)
        assert payload == {"nu": 0.1, "pair": {"re": 0.0, "im": 1.0}, "(1, 2)": 3}

    def test_verify_detects_tampering(self, archive):
        relative = archive.write_array("evolve", "psi", np.ones(3))
        assert archive.verify() == []
        np.save(archive.path / relative, np.zeros(3), allow_pickle=False)
        assert archive.verify() == [relative]
        (archive.path / relative).unlink()
        assert archive.verify() == [relative]

    def test_record_merges_values_and_checks(self, archive):
        archive.record("spectral", {"lambda0": np.float64(0.3), "bad": float("nan")})
        archive.record("spectral", {"radius": 40}, {"symmetry": np.bool_(True)})
        archive.record("picard", checks={"converged": False})
        section = archive.manifest["scenarios"]["spectral"]
        assert section["values"] == {"lambda0": 0.3, "bad": "nan", "radius": 40}
        assert archive.checks() == {"spectral.symmetry": True, "picard.converged": False}

    def test_record_error(self, archive):
        archive.record_error("construct", DomainError("t below threshold", {"t": 1.0}))
        archive.record_error("evolve", RuntimeError("boom"))
        scenarios = archive.manifest["scenarios"]
        assert scenarios["construct"]["error"] == {
            "type": "DomainError",
            "message": "t below threshold",
            "details": {"t": 1.0},
        }
        assert scenarios["evolve"]["error"]["type"] == "RuntimeError"

    def test_finish_and_load(self, archive):
        manifest = archive.finish()
        assert manifest["wall_clock"] >= 0.0
        assert load_manifest(archive.path) == manifest
        assert load_manifest(archive.path / MANIFEST_NAME) == manifest
