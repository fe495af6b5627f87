# cli.py
"""Command-line interface for the two-way relay channel-estimation simulator."""

import dataclasses
import logging
import os
from pathlib import Path
from typing import List, NoReturn, Optional

import typer

from twrn_sim.config import CSV_FLOAT_FORMAT, DEFAULT_THREADS, THREADS_ENV_VAR
from twrn_sim.core.errors import ConfigError
from twrn_sim.core.harness import emit_csv, output_filename, rows_to_frame, run_experiment
from twrn_sim.core.parser import format_spec, parse_config_file
from twrn_sim.core.presets import DEFAULT_PRESET_SEED, preset_names, run_figure
from twrn_sim.core.selftest import check_names, run_selftest

EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_SELFTEST = 3

app = typer.Typer(help="Channel estimation for asynchronous two-way relay networks.", add_completion=False)


def setup_logging(debug: bool = False) -> logging.Logger:
    """Setup logging configuration."""
    level = logging.DEBUG if debug else logging.INFO
    logging.basicConfig(
        level=level,
        format='%(levelname)s:%(name)s:%(message)s'
    )
    return logging.getLogger(__name__)


def resolve_threads(option: int) -> int:
    """Worker thread count; the TWRN_THREADS environment variable wins over the option."""
    raw = os.environ.get(THREADS_ENV_VAR)
    value = option
    if raw is not None and raw.strip():
        try:
            value = int(raw)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV_VAR} must be an integer, got '{raw}'")
    if value < 1:
        raise ConfigError(f"thread count must be at least 1, got {value}")
    return value


def _fail(logger: logging.Logger, error: BaseException, debug: bool) -> NoReturn:
    """Report an error on standard error and exit with its mapped code."""
    if isinstance(error, KeyboardInterrupt):
        logger.info("Operation cancelled by user")
        typer.echo("Operation cancelled.", err=True)
        raise typer.Exit(EXIT_RUNTIME)
    if isinstance(error, ConfigError):
        typer.echo(f"Config error: {error}", err=True)
        raise typer.Exit(EXIT_CONFIG)
    logger.error(f"An error occurred: {error}")
    if debug:
        logger.exception("Full traceback:")
    typer.echo(f"Error: {error}", err=True)
    raise typer.Exit(EXIT_RUNTIME)


@app.command()
def run(
    config: Path = typer.Argument(..., help="Experiment document (key=value lines)"),
    out: Optional[Path] = typer.Option(None, "-o", "--out", help="Output CSV file (default: print to stdout)"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Override the document's seed"),
    threads: int = typer.Option(DEFAULT_THREADS, "--threads", help=f"Worker threads ({THREADS_ENV_VAR} overrides)"),
    debug: bool = typer.Option(False, "-d", "--debug", help="Enable debug mode"),
) -> None:
    """
    Run one experiment and write its metric rows as CSV.

    Args:
        config: Path of the experiment document
        out: Optional output CSV file
        seed: Optional seed replacing the document's
        threads: Worker threads per sweep point
        debug: Enable debug logging
    """
    logger = setup_logging(debug)
    try:
        spec = parse_config_file(config)
        if seed is not None:
            if not 0 <= seed < 2 ** 64:
                raise ConfigError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
            spec = dataclasses.replace(spec, seed=seed)
        rows = run_experiment(spec, threads=resolve_threads(threads))
        if out:
            path = emit_csv(rows, out)
            typer.echo(f"Results saved to {path}")
        else:
            frame = rows_to_frame(rows)
            typer.echo(frame.to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n"), nl=False)
            logger.debug(f"suggested file name: {output_filename(spec)}")
    except typer.Exit:
        raise
    except (Exception, KeyboardInterrupt) as e:
        _fail(logger, e, debug)


@app.command()
def validate(
    config: Path = typer.Argument(..., help="Experiment document (key=value lines)"),
    debug: bool = typer.Option(False, "-d", "--debug", help="Enable debug mode"),
) -> None:
    """Check an experiment document and print it with every default resolved."""
    logger = setup_logging(debug)
    try:
        spec = parse_config_file(config)
    except (Exception, KeyboardInterrupt) as e:
        _fail(logger, e, debug)
    typer.echo(format_spec(spec), nl=False)


@app.command()
def figures(
    figure: str = typer.Argument(..., help=f"Figure preset: {', '.join(preset_names())}"),
    out_dir: Path = typer.Option(Path("."), "--out-dir", help="Directory for the CSV files and plot script"),
    seed: int = typer.Option(DEFAULT_PRESET_SEED, "--seed", help="Base seed of every curve"),
    threads: int = typer.Option(DEFAULT_THREADS, "--threads", help=f"Worker threads ({THREADS_ENV_VAR} overrides)"),
    trials: Optional[int] = typer.Option(None, "--trials", help="Replace the preset trial counts"),
    debug: bool = typer.Option(False, "-d", "--debug", help="Enable debug mode"),
) -> None:
    """Reproduce a bundled figure preset: one CSV per curve plus a gnuplot script."""
    logger = setup_logging(debug)
    try:
        results = run_figure(figure, out_dir, seed=seed, threads=resolve_threads(threads), trials=trials)
    except (Exception, KeyboardInterrupt) as e:
        _fail(logger, e, debug)
    for result in results:
        typer.echo(f"{result.name}: {result.path}")


@app.command()
def selftest(
    check: Optional[List[str]] = typer.Option(None, "--check", help=f"Run only these checks: {', '.join(check_names())}"),
    debug: bool = typer.Option(False, "-d", "--debug", help="Enable debug mode"),
) -> None:
    """Run the closed-form and Monte Carlo oracle checks."""
    logger = setup_logging(debug)
    if check:
        unknown = [name for name in check if name not in check_names()]
        if unknown:
            typer.echo(f"Config error: unknown checks {', '.join(unknown)}", err=True)
            raise typer.Exit(EXIT_CONFIG)
    try:
        results = run_selftest(check or None)
    except (Exception, KeyboardInterrupt) as e:
        _fail(logger, e, debug)

    for result in results:
        status = "ok" if result.passed else "FAILED"
        typer.echo(f"{status:6} {result.name}: {result.detail}")
    failed = [r.name for r in results if not r.passed]
    if failed:
        typer.echo(f"{len(failed)} of {len(results)} checks failed: {', '.join(failed)}", err=True)
        raise typer.Exit(EXIT_SELFTEST)
    typer.echo(f"All {len(results)} checks passed.")


def cli_entry_point():
    """Entry point for the CLI script."""
    app()


if __name__ == "__main__":
    cli_entry_point()
