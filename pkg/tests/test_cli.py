# ==== tests/test_cli.py ====
"""Tests for command-line interface."""

import pytest
from unittest.mock import patch
from typer.testing import CliRunner

from twrn_sim.cli import EXIT_CONFIG, EXIT_RUNTIME, EXIT_SELFTEST, app, resolve_threads
from twrn_sim.core.errors import ConfigError
from twrn_sim.core.harness import MetricRow
from twrn_sim.core.presets import CurveResult
from twrn_sim.core.selftest import CheckResult

runner = CliRunner()

ROWS = [MetricRow(x=5.0, metric=0.25, ci_halfwidth=0.01, n_trials=120, analytic=0.24)]

class TestRunCommand:
    """Test cases for the run command."""

    @patch('twrn_sim.cli.run_experiment')
    def test_console_output(self, mock_run, config_file):
        """Test CSV rows go to stdout without --out."""
        mock_run.return_value = ROWS
        result = runner.invoke(app, ["run", str(config_file)])
        assert result.exit_code == 0
        assert "x,metric,ci_halfwidth,n_trials,analytic" in result.output
        assert "5,0.25,0.01,120,0.24" in result.output

    def test_file_output(self, config_file, tmp_path):
        """Test a real run writes the CSV file."""
        out = tmp_path / "results" / "run.csv"
        result = runner.invoke(app, ["run", str(config_file), "--out", str(out)])
        assert result.exit_code == 0
        assert out.exists()
        lines = out.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "x,metric,ci_halfwidth,n_trials,analytic"
        assert len(lines) == 3

    @patch('twrn_sim.cli.run_experiment')
    def test_seed_override(self, mock_run, config_file):
        """Test --seed replaces the document's seed."""
        mock_run.return_value = ROWS
        result = runner.invoke(app, ["run", str(config_file), "--seed", "99"])
        assert result.exit_code == 0
        assert mock_run.call_args.args[0].seed == 99

    def test_invalid_config(self, bad_config_file):
        """Test a bad document exits with code 1 and names its line."""
        result = runner.invoke(app, ["run", str(bad_config_file)])
        assert result.exit_code == EXIT_CONFIG
        assert "line 3" in result.output

    def test_missing_config(self, tmp_path):
        """Test a missing document is a configuration error."""
        result = runner.invoke(app, ["run", str(tmp_path / "nope.cfg")])
        assert result.exit_code == EXIT_CONFIG

    @patch('twrn_sim.cli.run_experiment')
    def test_runtime_error(self, mock_run, config_file):
        """Test unexpected errors exit with code 2."""
        mock_run.side_effect = RuntimeError("solver exploded")
        result = runner.invoke(app, ["run", str(config_file)])
        assert result.exit_code == EXIT_RUNTIME
        assert "Error: solver exploded" in result.output

    @patch('twrn_sim.cli.run_experiment')
    def test_keyboard_interrupt(self, mock_run, config_file):
        """Test cancellation exits with code 2."""
        mock_run.side_effect = KeyboardInterrupt()
        result = runner.invoke(app, ["run", str(config_file)])
        assert result.exit_code == EXIT_RUNTIME
        assert "Operation cancelled." in result.output

    @patch('twrn_sim.cli.run_experiment')
    def test_threads_from_environment(self, mock_run, config_file):
        """Test TWRN_THREADS overrides --threads."""
        mock_run.return_value = ROWS
        result = runner.invoke(app, ["run", str(config_file), "--threads", "2"], env={"TWRN_THREADS": "5"})
        assert result.exit_code == 0
        assert mock_run.call_args.kwargs["threads"] == 5

    @patch('twrn_sim.cli.run_experiment')
    def test_bad_thread_environment(self, mock_run, config_file):
        """Test a malformed TWRN_THREADS is a configuration error."""
        result = runner.invoke(app, ["run", str(config_file)], env={"TWRN_THREADS": "many"})
        assert result.exit_code == EXIT_CONFIG
        mock_run.assert_not_called()

class TestValidateCommand:
    """Test cases for the validate command."""

    def test_prints_normalized_document(self, config_file):
        """Test every key is printed with its resolved value."""
        result = runner.invoke(app, ["validate", str(config_file)])
        assert result.exit_code == 0
        assert "scenario=mse_vs_snr" in result.output
        assert "sweep=5,15" in result.output
        assert "estimator=lmmse" in result.output
        assert "guard_len=auto" in result.output

    def test_invalid(self, bad_config_file):
        """Test a bad document exits with code 1."""
        result = runner.invoke(app, ["validate", str(bad_config_file)])
        assert result.exit_code == EXIT_CONFIG

class TestFiguresCommand:
    """Test cases for the figures command."""

    @patch('twrn_sim.cli.run_figure')
    def test_lists_outputs(self, mock_figure, tmp_path):
        """Test each curve's file is reported."""
        mock_figure.return_value = [CurveResult("ea", tmp_path / "ea.csv", ROWS, "mse_vs_snr")]
        result = runner.invoke(app, ["figures", "fig4", "--out-dir", str(tmp_path), "--trials", "100"])
        assert result.exit_code == 0
        assert "ea: " in result.output
        assert mock_figure.call_args.kwargs["trials"] == 100

    @patch('twrn_sim.cli.run_figure')
    def test_unknown_figure(self, mock_figure, tmp_path):
        """Test an unknown preset exits with code 1."""
        mock_figure.side_effect = ConfigError("unknown figure 'fig9'")
        result = runner.invoke(app, ["figures", "fig9", "--out-dir", str(tmp_path)])
        assert result.exit_code == EXIT_CONFIG

class TestSelftestCommand:
    """Test cases for the selftest command."""

    @patch('twrn_sim.cli.run_selftest')
    def test_all_pass(self, mock_selftest):
        """Test a clean run exits with code 0."""
        mock_selftest.return_value = [CheckResult("qfunc-symmetry", True, "ok")]
        result = runner.invoke(app, ["selftest"])
        assert result.exit_code == 0
        assert "All 1 checks passed." in result.output

    @patch('twrn_sim.cli.run_selftest')
    def test_failure(self, mock_selftest):
        """Test a failed check exits with code 3."""
        mock_selftest.return_value = [
            CheckResult("qfunc-symmetry", True, "ok"),
            CheckResult("detection-bound", False, "above bound"),
        ]
        result = runner.invoke(app, ["selftest"])
        assert result.exit_code == EXIT_SELFTEST
        assert "detection-bound" in result.output

    def test_selected_check(self):
        """Test --check runs a single real check."""
        result = runner.invoke(app, ["selftest", "--check", "qfunc-symmetry"])
        assert result.exit_code == 0
        assert "All 1 checks passed." in result.output

    def test_unknown_check(self):
        """Test an unknown check name exits with code 1."""
        result = runner.invoke(app, ["selftest", "--check", "nonsense"])
        assert result.exit_code == EXIT_CONFIG

class TestHelpers:
    """Test cases for CLI helpers."""

    def test_resolve_threads(self, monkeypatch):
        """Test option, environment override and validation."""
        monkeypatch.delenv("TWRN_THREADS", raising=False)
        assert resolve_threads(3) == 3
        monkeypatch.setenv("TWRN_THREADS", "7")
        assert resolve_threads(3) == 7
        monkeypatch.setenv("TWRN_THREADS", "0")
        with pytest.raises(ConfigError):
            resolve_threads(3)

    def test_help(self):
        """Test the help text lists every command."""
        result = runner.invoke(app, ["--help"])
        assert result.exit_code == 0
        for command in ("run", "validate", "figures", "selftest"):
            assert command in result.output
