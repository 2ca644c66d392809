"""Scenario pipeline and the consolidated report."""

import csv
import json

import numpy as np
import pytest

from src.scenarios import PIPELINE, Scenario, ScenarioManager, ScenarioResult, expand, report
from src.storage import RunArchive
from src.utils.config import RunConfig
from src.utils.errors import ConfigurationError, DomainError


class FakeScenario(Scenario):
    def __init__(self, name, checks=None, error=None):
        self._name = name
        self._checks = checks or {}
        self._error = error
        self.calls = 0

    @property
    def name(self):
        return self._name

    @property
    def description(self):
        return f"fake {self._name}"

    def run(self, ctx):
        self.calls += 1
        if self._error is not None:
            raise self._error
        ctx.archive.write_table(self.name, "rows", [{"x": 1.0}])
        return ScenarioResult(self.name, values={"answer": 42}, checks=dict(self._checks))


@pytest.fixture
def manager(tmp_path):
    config = RunConfig(output_dir=tmp_path)
    return ScenarioManager(config, RunArchive(tmp_path, "run", config.model_dump(mode="json")))


class TestExpand:
    def test_pipeline_order(self):
        assert expand(["spectral", "construct"]) == ["construct", "spectral"]

    def test_full_report(self):
        assert expand(["full-report"]) == list(PIPELINE)

    def test_unknown(self):
        with pytest.raises(ConfigurationError):
            expand(["warp-drive"])


class TestManager:
    def test_results_are_recorded(self, manager):
        manager.register(FakeScenario("construct", {"identities": True}))
        manager.register(FakeScenario("spectral", {"symmetry": False}))
        results = manager.run(["construct", "spectral"])
        assert results["construct"].passed
        assert not results["spectral"].passed
        section = manager.archive.manifest["scenarios"]["construct"]
        assert section["values"]["answer"] == 42
        assert section["values"]["elapsed"] >= 0.0
        assert section["files"] == ["construct/rows.csv"]
        assert manager.archive.checks() == {
            "construct.identities": True,
            "spectral.symmetry": False,
        }

    def test_failed_construction_stops_the_pipeline(self, manager):
        later = FakeScenario("evolve")
        manager.register(FakeScenario("construct", error=DomainError("no room", {"t": 1.0})))
        manager.register(later)
        results = manager.run(["construct", "evolve"])
        assert list(results) == ["construct"]
        assert results["construct"].error["type"] == "DomainError"
        assert later.calls == 0
        assert manager.archive.manifest["scenarios"]["construct"]["error"]["message"] == "no room"

    def test_later_errors_do_not_stop_the_pipeline(self, manager):
        manager.register(FakeScenario("evolve", error=DomainError("blew up")))
        spectral = FakeScenario("spectral", {"symmetry": True})
        manager.register(spectral)
        results = manager.run(["evolve", "spectral"])
        assert results["evolve"].error is not None
        assert spectral.calls == 1

    def test_unexpected_errors_are_recorded(self, manager):
        manager.register(
            FakeScenario("evolve", error=np.linalg.LinAlgError("Singular matrix"))
        )
        spectral = FakeScenario("spectral", {"symmetry": True})
        manager.register(spectral)
        results = manager.run(["evolve", "spectral"])
        assert results["evolve"].error["type"] == "LinAlgError"
        assert not results["evolve"].passed
        assert spectral.calls == 1
        manifest = manager.archive.finish()
        assert manifest["scenarios"]["evolve"]["error"]["message"] == "Singular matrix"
        assert manifest["scenarios"]["evolve"]["values"]["elapsed"] >= 0.0
        assert manifest["wall_clock"] > 0.0

    def test_unexpected_construction_error_stops_the_pipeline(self, manager):
        later = FakeScenario("evolve")
        manager.register(FakeScenario("construct", error=ZeroDivisionError("division by zero")))
        manager.register(later)
        results = manager.run(["construct", "evolve"])
        assert list(results) == ["construct"]
        assert later.calls == 0

    def test_default_is_configured_scenario(self, manager):
        construct = FakeScenario("construct")
        manager.register(construct)
        assert list(manager.run()) == ["construct"]
        assert construct.calls == 1


def sweep_run(root, run_id, delta, passed=True):
    archive = RunArchive(root, run_id, {"params": {"nu": 0.02, "delta": delta}})
    archive.record(
        "residual-sweep",
        {
            "delta": delta,
            "reference_time": 1e4,
            "remote_gradient_norms": {1: 3.0 * delta**0.52, 2: 5.0 * delta**1.52},
        },
        {"bounds": passed},
    )
    archive.finish()
    return archive.path


class TestReport:
    def test_empty_input(self, tmp_path):
        target = report([], tmp_path / "out")
        summary = json.loads(target.read_text())
        assert summary["runs"] == []
        assert summary["passed"] is False
        assert (tmp_path / "out" / "report.md").exists()
        assert not (tmp_path / "out" / "verdicts.csv").exists()

    def test_missing_manifest_is_listed(self, tmp_path):
        missing = tmp_path / "nowhere"
        summary = json.loads(report([missing], tmp_path / "out").read_text())
        assert summary["missing"] == [str(missing)]

    def test_delta_scaling_fit(self, tmp_path):
        paths = [sweep_run(tmp_path, f"run-{d}", d) for d in (0.25, 0.5, 1.0)]
        target = report(paths, tmp_path / "out")
        summary = json.loads(target.read_text())
        assert summary["passed"] is True
        (fit,) = summary["delta_scaling"]["fits"]
        assert fit["deltas"] == [0.25, 0.5, 1.0]
        assert fit["fitted_1"] == pytest.approx(fit["expected_1"], abs=1e-10)
        assert fit["fitted_2"] == pytest.approx(fit["expected_2"], abs=1e-10)
        with open(tmp_path / "out" / "delta_scaling.csv", newline="") as f:
            assert len(list(csv.DictReader(f))) == 3
        assert "| 0.02 |" in (tmp_path / "out" / "report.md").read_text()

    def test_failed_check_and_error_fail_the_report(self, tmp_path):
        paths = [sweep_run(tmp_path, "good", 0.5), sweep_run(tmp_path, "bad", 0.25, False)]
        broken = RunArchive(tmp_path, "broken")
        broken.record_error("construct", DomainError("no room"))
        summary = json.loads(report(paths + [broken.path], tmp_path / "out").read_text())
        assert summary["passed"] is False
        failing = {(r["run_id"], r["check"]) for r in summary["verdicts"] if not r["passed"]}
        assert failing == {("bad", "bounds"), ("broken", "completed")}
