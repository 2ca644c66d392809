"""Command-line verbs, overrides and exit codes."""

import json

import pytest

from src import __main__ as cli
from src.storage import RunArchive
from src.utils.commands import CommandLoader
from src.utils.config import Config
from src.utils.errors import ConfigurationError


@pytest.fixture
def commands():
    return CommandLoader.load_commands()


@pytest.fixture(autouse=True)
def isolated_environment(monkeypatch, tmp_path):
    monkeypatch.setattr(Config, "LAB_CONFIG", None)
    monkeypatch.setattr(Config, "LAB_THREADS", 1)
    monkeypatch.setattr(Config, "DATA_DIRECTORY", tmp_path / "runs")


def parse(commands, *argv):
    return cli.build_parser(commands).parse_args(list(argv))


class TestCommandLoader:
    def test_verbs_map_to_scenarios(self, commands):
        verbs = {cmd["command"] for cmd in commands}
        assert verbs == {"construct", "sweep", "evolve", "picard", "spectral", "report"}
        assert CommandLoader.scenario_for(commands, "sweep") == "residual-sweep"
        assert CommandLoader.scenario_for(commands, "report") == "full-report"
        assert CommandLoader.scenario_for(commands, "other") == "other"

    def test_missing_file(self, tmp_path):
        assert CommandLoader.load_commands(tmp_path / "absent.json") == []

    def test_help_table(self, commands):
        text = CommandLoader.format_help_message(commands)
        assert text.startswith("commands:")
        assert "\n  sweep " in text
        assert CommandLoader.format_help_message([]) == ""


class TestResolveConfig:
    def test_sweep_overrides(self, commands, tmp_path):
        argv = ["--t-min", "300", "--t-max", "3000", "--samples", "3", "--out", str(tmp_path)]
        args = parse(commands, "sweep", *argv)
        config = cli.resolve_config(args)
        assert (config.sweep.t_min, config.sweep.t_max, config.sweep.samples) == (300, 3000, 3)
        assert config.output_dir == tmp_path

    def test_environment_threads(self, commands, monkeypatch):
        monkeypatch.setattr(Config, "LAB_THREADS", 4)
        assert cli.resolve_config(parse(commands, "sweep")).sweep.threads == 4
        args = parse(commands, "sweep", "--threads", "2")
        assert cli.resolve_config(args).sweep.threads == 2

    def test_inverted_time_range(self, commands):
        with pytest.raises(ConfigurationError):
            cli.resolve_config(parse(commands, "sweep", "--t-min", "500", "--t-max", "200"))

    def test_config_file(self, commands, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"params": {"nu": 0.01, "alpha0": 0.0}, "seed": 7}))
        config = cli.resolve_config(parse(commands, "construct", "--config", str(path)))
        assert config.params.nu == 0.01
        assert config.seed == 7


class TestExecute:
    def test_unknown_verb(self):
        with pytest.raises(ConfigurationError):
            cli.execute(["warp"])

    @pytest.mark.parametrize("passed, code", [(True, cli.EXIT_OK), (False, cli.EXIT_CHECKS_FAILED)])
    def test_report_exit_code(self, tmp_path, passed, code):
        archive = RunArchive(tmp_path / "runs", "run-1")
        archive.record("spectral", checks={"symmetry": passed})
        out = tmp_path / "report"
        assert cli.execute(["report", str(archive.path), "--out", str(out)]) == code
        assert (out / "report.json").exists()

    def test_main_maps_configuration_errors(self, monkeypatch):
        def broken(argv=None):
            raise ConfigurationError("bad")

        monkeypatch.setattr(cli, "execute", broken)
        with pytest.raises(SystemExit) as info:
            cli.main()
        assert info.value.code == cli.EXIT_FAILURE

    def test_main_passes_exit_code(self, monkeypatch):
        monkeypatch.setattr(cli, "execute", lambda argv=None: cli.EXIT_CHECKS_FAILED)
        with pytest.raises(SystemExit) as info:
            cli.main()
        assert info.value.code == cli.EXIT_CHECKS_FAILED
