"""Tests for CLI utility functions."""

from pathlib import Path

import pytest
import typer
from conftest import small_data, write_run_file

from regforge.cli.utils import default_output, exit_on_error, load_run
from regforge.errors import ExitCode, InvalidConfig, NotHurwitz


class TestExitOnError:
    @pytest.mark.parametrize(
        "exc, code",
        [(InvalidConfig("bad"), ExitCode.CONFIG), (NotHurwitz("unstable"), ExitCode.DESIGN)],
        ids=["config", "design"],
    )
    def test_maps_exit_code(self, exc, code):
        with pytest.raises(typer.Exit) as excinfo:
            with exit_on_error():
                raise exc
        assert excinfo.value.exit_code == code

    def test_other_errors_propagate(self):
        with pytest.raises(KeyError):
            with exit_on_error():
                raise KeyError("x")


class TestLoadRun:
    def test_flags_override_run_file(self, tmp_path):
        path = write_run_file(tmp_path / "run.json", small_data())
        run = load_run(path, dt=0.1, t_final=2.0)
        assert run.simulation.dt == 0.1 and run.simulation.t_final == 2.0

    def test_absent_flags_keep_run_file(self, tmp_path):
        path = write_run_file(tmp_path / "run.json", small_data())
        run = load_run(path)
        assert run.simulation.dt == 0.002 and run.simulation.t_final == 30.0


class TestDefaultOutput:
    def test_run_file_default(self, tmp_path):
        run = load_run(write_run_file(tmp_path / "run.json", small_data()))
        assert default_output(run, "report", None, Path("x")) == tmp_path / "heat_1d.report.json"

    def test_fallback(self, tmp_path):
        data = small_data()
        del data["outputs"]
        run = load_run(write_run_file(tmp_path / "run.json", data))
        assert default_output(run, "report", None, tmp_path / "fb.json") == tmp_path / "fb.json"
