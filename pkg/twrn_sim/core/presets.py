# ==== twrn_sim/core/presets.py ====
"""Bundled desk-scale figure presets and their companion plot scripts."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from ..config import FIGURE_PRESETS
from .errors import ConfigError, IoError
from .harness import MetricRow, emit_csv, output_filename, run_experiment
from .parser import ExperimentSpec, parse_config

logger = logging.getLogger(__name__)

DEFAULT_PRESET_SEED = 1

AXIS_LABELS: Dict[str, Tuple[str, str]] = {
    "mse_vs_snr": ("SNR (dB)", "summed MSE"),
    "mse_vs_tau": ("offset (symbol periods)", "summed MSE"),
    "mse_vs_n": ("pilot length N", "summed MSE"),
    "ber_vs_snr": ("SNR (dB)", "BER"),
    "ptheta_vs_tau": ("offset (symbol periods)", "arriving-order error probability"),
    "ber_vs_ptheta": ("arriving-order error probability", "BER"),
}


@dataclass(frozen=True)
class Curve:
    name: str
    spec: ExperimentSpec


@dataclass(frozen=True)
class CurveResult:
    name: str
    path: Path
    rows: List[MetricRow]
    scenario: str


def preset_names() -> List[str]:
    return sorted(FIGURE_PRESETS)


def preset_document(overrides: Dict[str, str], seed: int, trials: Optional[int] = None) -> str:
    """Experiment document for one preset curve."""
    values = dict(overrides)
    values["seed"] = str(seed)
    if trials is not None:
        values["trials"] = str(trials)
    return "".join(f"{key}={value}\n" for key, value in values.items())


def figure_curves(figure: str, seed: int = DEFAULT_PRESET_SEED, trials: Optional[int] = None) -> List[Curve]:
    """
    Parsed experiments of every curve in a figure preset.

    Args:
        figure: Preset name (fig2 ... fig8)
        seed: Base seed shared by all curves
        trials: Optional trial count replacing the preset's

    Returns:
        Curves in preset order

    Raises:
        ConfigError: For an unknown preset
    """
    if figure not in FIGURE_PRESETS:
        raise ConfigError(f"unknown figure '{figure}', expected one of {', '.join(preset_names())}")
    return [
        Curve(name=name, spec=parse_config(preset_document(overrides, seed, trials)))
        for name, overrides in FIGURE_PRESETS[figure]
    ]


def _quoted(text: str) -> str:
    return "'" + text.replace("'", "''") + "'"


def plot_script(figure: str, results: Sequence[CurveResult]) -> str:
    """
    gnuplot script drawing every curve of a figure from its CSV files.

    Curves sharing a scenario go into one image, <figure>_<scenario>.png.
    """
    lines = [
        f"# {figure}",
        "set terminal pngcairo size 800,600",
        "set datafile separator ','",
        "set grid",
        "set key outside right",
        "set logscale y",
    ]
    scenarios: List[str] = []
    for result in results:
        if result.scenario not in scenarios:
            scenarios.append(result.scenario)

    for scenario in scenarios:
        x_label, y_label = AXIS_LABELS[scenario]
        plots = []
        for result in results:
            if result.scenario != scenario:
                continue
            source = _quoted(result.path.name)
            plots.append(f"{source} skip 1 using 1:2:3 with yerrorlines title {_quoted(result.name)}")
            if any(row.analytic is not None for row in result.rows):
                plots.append(
                    f"{source} skip 1 using 1:5 with lines dashtype 2 "
                    f"title {_quoted(result.name + ' (analytic)')}"
                )
        lines += [
            "",
            f"set output {_quoted(f'{figure}_{scenario}.png')}",
            f"set xlabel {_quoted(x_label)}",
            f"set ylabel {_quoted(y_label)}",
            "plot " + ", \\\n     ".join(plots),
        ]
    return "\n".join(lines) + "\n"


def run_figure(
    figure: str,
    out_dir: Path,
    seed: int = DEFAULT_PRESET_SEED,
    threads: int = 1,
    trials: Optional[int] = None,
) -> List[CurveResult]:
    """
    Run every curve of a preset, writing one CSV per curve and a plot script.

    Args:
        figure: Preset name
        out_dir: Directory for the CSV files and <figure>.gp
        seed: Base seed
        threads: Worker threads per sweep point
        trials: Optional trial count replacing the preset's

    Returns:
        One CurveResult per curve

    Raises:
        ConfigError: For an unknown preset
        IoError: If an output file cannot be written
    """
    out_dir = Path(out_dir)
    results = []
    for curve in figure_curves(figure, seed, trials):
        logger.info(f"{figure}: curve {curve.name}")
        rows = run_experiment(curve.spec, threads=threads)
        path = emit_csv(rows, out_dir / output_filename(curve.spec))
        results.append(CurveResult(name=curve.name, path=path, rows=rows, scenario=curve.spec.scenario))

    script_path = out_dir / f"{figure}.gp"
    try:
        script_path.write_text(plot_script(figure, results), encoding="utf-8")
    except OSError as e:
        raise IoError(f"cannot write {script_path}: {e}") from e
    logger.info(f"Plot script saved to {script_path}")
    return results
