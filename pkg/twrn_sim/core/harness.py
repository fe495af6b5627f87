# ==== twrn_sim/core/harness.py ====
"""Monte Carlo trial loop, metric aggregation and CSV output."""

import logging
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..config import CI_Z, CSV_COLUMNS, CSV_FLOAT_FORMAT, MIN_DETECTION_LENGTH
from .errors import IoError, TrialError
from .estimators import (
    ChannelEstimate,
    analytic_mse,
    analytic_mse_err,
    lmep_estimate,
    lmmse_estimate,
    slmep_estimate,
)
from .numerics import RngStream
from .parser import MSE_SCENARIOS, ExperimentSpec
from .relay_power import RelayScaling, scaling_for_scheme
from .sao_detect import build_hypotheses, glrt_detect, p_theta_bound
from .signal_model import (
    ChannelRealization,
    ReceivedPilot,
    SystemParams,
    TimingOffset,
    decompose_offset,
    lambda_gamma_diagonals,
    rx_data_symbols,
    rx_pilot_at_relay,
    rx_pilot_at_source,
)
from .training import TrainingPair, pair_from_label

logger = logging.getLogger(__name__)

# Source 1's pilot always reaches the relay first in simulation
TRUE_ORDER = 0
# Smallest detection error probability handed to SLMEP
MIN_P_THETA = 1e-12
TRIALS_PER_TASK = 256

_UNSAFE_NAME = re.compile(r"[^A-Za-z0-9._-]+")


@dataclass(frozen=True)
class MetricRow:
    """One sweep point: mean metric, 95% half-width and the closed-form overlay."""

    x: float
    metric: float
    ci_halfwidth: float
    n_trials: int
    analytic: Optional[float] = None
    failed: int = 0


@dataclass(frozen=True)
class TrialOutcome:
    metric: float
    analytic: Optional[float] = None


@dataclass(frozen=True)
class _TrialSetup:
    params: SystemParams
    off: TimingOffset
    pair: TrainingPair
    ch: ChannelRealization
    scaling: RelayScaling
    rx: ReceivedPilot


def _draw_offset(rng: RngStream, span: float, scheme: str) -> float:
    tau = rng.uniform(0.0, span)
    # random allocation needs a nonzero offset
    while scheme == "ra" and tau == 0.0:
        tau = rng.uniform(0.0, span)
    return tau


def _setup_trial(spec: ExperimentSpec, x: float, rng: RngStream) -> _TrialSetup:
    params = spec.params_at(x)
    tau = spec.tau_at(x)
    if tau is None:
        tau = _draw_offset(rng, params.n_pilot * params.symbol_period, spec.power_scheme)
    off = decompose_offset(tau, params)
    pair = pair_from_label(spec.training, params.n_pilot, rng)
    ch = ChannelRealization.draw(rng, params.channel_variance)
    scaling = scaling_for_scheme(spec.power_scheme, params, off, rng)
    lam, gamma = lambda_gamma_diagonals(off, scaling.gamma_i, scaling.gamma_s, params.n_pilot)
    rx = rx_pilot_at_source(ch, pair, off, gamma, lam, rng, params, hypothesis=TRUE_ORDER)
    return _TrialSetup(params=params, off=off, pair=pair, ch=ch, scaling=scaling, rx=rx)


def _forced_probability(spec: ExperimentSpec, x: float) -> float:
    return x if spec.scenario == "ber_vs_ptheta" else spec.forced_p_theta


def _detect_order(spec: ExperimentSpec, x: float, setup: _TrialSetup, rng: RngStream) -> int:
    mode = spec.sao_mode
    if mode == "genie":
        return TRUE_ORDER
    if mode == "glrt_relay":
        x_r = rx_pilot_at_relay(setup.ch, setup.pair, setup.off, TRUE_ORDER, rng, setup.params)
        model = build_hypotheses(setup.pair, setup.off, setup.params)
        return glrt_detect(x_r, model).theta_hat
    if mode == "glrt_source":
        model = build_hypotheses(setup.pair, setup.off, setup.params, setup.scaling)
        return glrt_detect(setup.rx, model).theta_hat
    # forced_error
    return 1 - TRUE_ORDER if rng.uniform() < _forced_probability(spec, x) else TRUE_ORDER


def _slmep_probability(spec: ExperimentSpec, x: float, setup: _TrialSetup) -> float:
    if spec.sao_mode == "forced_error":
        p_theta = _forced_probability(spec, x)
    elif setup.params.n_pilot >= MIN_DETECTION_LENGTH:
        # the relay's bound at the average channel energy
        p_theta = p_theta_bound(setup.params, setup.off, 2.0 * setup.params.channel_variance)
    else:
        p_theta = 0.5
    return min(max(p_theta, MIN_P_THETA), 0.5)


def _estimate(
    spec: ExperimentSpec, x: float, setup: _TrialSetup, theta_hat: int, rng: RngStream
) -> ChannelEstimate:
    args = (setup.rx, setup.pair, setup.off, setup.scaling, setup.params)
    if spec.estimator == "lmmse":
        return lmmse_estimate(*args, hypothesis=theta_hat)
    if spec.estimator == "lmep":
        return lmep_estimate(*args, hypothesis=theta_hat, init=spec.lmep_init, rng=rng)
    return slmep_estimate(*args, p_theta=_slmep_probability(spec, x, setup), theta_hat=theta_hat)


def bpsk_bit_error_rate(
    est: ChannelEstimate, ch: ChannelRealization, params: SystemParams, rng: RngStream
) -> float:
    """
    Fraction of source-2 BPSK symbols decided wrongly at source 1.

    The self-interference alpha sqrt(P_s) h_a_hat s1 is removed before the
    h_b_hat matched decision.
    """
    s1 = 1.0 - 2.0 * rng.bits(params.n_data)
    s2 = 1.0 - 2.0 * rng.bits(params.n_data)
    alpha = params.relay_gain
    y = rx_data_symbols(ch, s1, s2, alpha, rng, params)
    residual = y - alpha * math.sqrt(params.source_power) * est.h_a_hat * s1
    decided = np.where(np.real(np.conj(est.h_b_hat) * residual) >= 0.0, 1.0, -1.0)
    return float(np.mean(decided != s2))


def _mse_overlay(spec: ExperimentSpec, setup: _TrialSetup, theta_hat: int) -> Optional[float]:
    params = setup.params
    if spec.estimator != "lmmse" or not math.isclose(params.noise_relay, params.noise_source, rel_tol=1e-12):
        return None
    if theta_hat != TRUE_ORDER:
        return analytic_mse_err(params, setup.off, setup.scaling, setup.pair, truth=TRUE_ORDER)
    return analytic_mse(params, setup.off, setup.scaling, setup.pair)


def run_trial(spec: ExperimentSpec, x: float, point_index: int, trial_index: int) -> TrialOutcome:
    """
    One Monte Carlo trial at one sweep point.

    Args:
        spec: Validated experiment
        x: Sweep value
        point_index: Position of x in the sweep
        trial_index: Trial number within the point

    Returns:
        TrialOutcome with the trial's metric and its closed-form overlay

    Raises:
        TrialError: If the trial hit a degenerate configuration
    """
    rng = RngStream.for_trial(spec.seed, point_index, trial_index)
    setup = _setup_trial(spec, x, rng)
    theta_hat = _detect_order(spec, x, setup, rng)

    if spec.scenario == "ptheta_vs_tau":
        analytic = None
        if spec.sao_mode == "glrt_relay" and setup.params.n_pilot >= MIN_DETECTION_LENGTH:
            analytic = p_theta_bound(setup.params, setup.off, setup.ch.norm_sq)
        return TrialOutcome(metric=float(theta_hat != TRUE_ORDER), analytic=analytic)

    est = _estimate(spec, x, setup, theta_hat, rng)
    if spec.scenario in MSE_SCENARIOS:
        return TrialOutcome(metric=est.squared_error(setup.ch), analytic=_mse_overlay(spec, setup, theta_hat))
    return TrialOutcome(metric=bpsk_bit_error_rate(est, setup.ch, setup.params, rng))


def _run_chunk(
    spec: ExperimentSpec, x: float, point_index: int, trial_indices: range
) -> List[Optional[TrialOutcome]]:
    outcomes: List[Optional[TrialOutcome]] = []
    for trial_index in trial_indices:
        try:
            outcomes.append(run_trial(spec, x, point_index, trial_index))
        except TrialError as e:
            logger.debug(f"trial {trial_index} at x={x:g} excluded: {e}")
            outcomes.append(None)
    return outcomes


def aggregate(x: float, outcomes: Sequence[Optional[TrialOutcome]]) -> MetricRow:
    """
    Mean, normal-approximation 95% half-width and mean overlay of one sweep point.

    Failed trials (None) are counted and left out of every average.
    """
    completed = [o for o in outcomes if o is not None]
    failed = len(outcomes) - len(completed)
    n = len(completed)
    if n == 0:
        return MetricRow(x=x, metric=math.nan, ci_halfwidth=math.nan, n_trials=0, failed=failed)

    metrics = np.array([o.metric for o in completed])
    halfwidth = CI_Z * float(np.std(metrics, ddof=1)) / math.sqrt(n) if n > 1 else 0.0
    overlays = [o.analytic for o in completed]
    analytic = None if any(a is None for a in overlays) else float(np.mean(overlays))
    return MetricRow(
        x=x, metric=float(np.mean(metrics)), ci_halfwidth=halfwidth,
        n_trials=n, analytic=analytic, failed=failed,
    )


def _chunks(trials: int, size: int) -> List[range]:
    return [range(start, min(start + size, trials)) for start in range(0, trials, size)]


def run_point(spec: ExperimentSpec, point_index: int, threads: int = 1) -> MetricRow:
    """Run every trial of one sweep point; the result does not depend on threads."""
    x = spec.sweep[point_index]
    chunks = _chunks(spec.trials, TRIALS_PER_TASK)
    if threads <= 1:
        parts = [_run_chunk(spec, x, point_index, chunk) for chunk in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda chunk: _run_chunk(spec, x, point_index, chunk), chunks))
    outcomes = [outcome for part in parts for outcome in part]
    return aggregate(x, outcomes)


def run_experiment(spec: ExperimentSpec, threads: int = 1) -> List[MetricRow]:
    """
    Run the full sweep of an experiment.

    Args:
        spec: Validated experiment
        threads: Worker threads per sweep point

    Returns:
        One MetricRow per sweep value, in sweep order
    """
    logger.info(
        f"Running {spec.scenario} ({spec.estimator}, {spec.power_scheme}, {spec.training}, "
        f"{spec.sao_mode}) over {len(spec.sweep)} points x {spec.trials} trials"
    )
    rows = []
    for point_index, x in enumerate(spec.sweep):
        row = run_point(spec, point_index, threads)
        if row.failed:
            logger.warning(f"x={x:g}: {row.failed} of {spec.trials} trials excluded as degenerate")
        logger.info(f"x={x:g}: metric={row.metric:.6g} +/- {row.ci_halfwidth:.3g} ({row.n_trials} trials)")
        rows.append(row)
    completed, excluded = curve_summary(rows)
    logger.info(f"Finished {spec.scenario}: {completed} trials completed, {excluded} excluded")
    return rows


def rows_to_frame(rows: Sequence[MetricRow]) -> pd.DataFrame:
    frame = pd.DataFrame(
        [(r.x, r.metric, r.ci_halfwidth, r.n_trials, r.analytic) for r in rows],
        columns=CSV_COLUMNS,
    )
    for column in ("x", "metric", "ci_halfwidth", "analytic"):
        frame[column] = frame[column].astype(float)
    frame["n_trials"] = frame["n_trials"].astype(int)
    return frame


def emit_csv(rows: Sequence[MetricRow], path: Path) -> Path:
    """
    Write rows as CSV with a fixed header and 12 significant digits.

    Args:
        rows: Metric rows in sweep order
        path: Output file, parent directories are created

    Returns:
        The written path

    Raises:
        IoError: If the file cannot be written
    """
    output_path = Path(path)
    try:
        output_path.parent.mkdir(parents=True, exist_ok=True)
        rows_to_frame(rows).to_csv(
            output_path, index=False, float_format=CSV_FLOAT_FORMAT,
            lineterminator="\n", encoding="utf-8",
        )
    except OSError as e:
        raise IoError(f"cannot write {output_path}: {e}") from e
    logger.info(f"Results saved to {output_path}")
    return output_path


def read_csv(path: Path) -> pd.DataFrame:
    """Load a file written by emit_csv."""
    try:
        return pd.read_csv(path)
    except OSError as e:
        raise IoError(f"cannot read {path}: {e}") from e


def output_filename(spec: ExperimentSpec) -> str:
    """<scenario>_<estimator>_<power>_<training>[_<label>].csv"""
    parts = [spec.scenario, spec.estimator, spec.power_scheme, spec.training]
    if spec.label:
        parts.append(spec.label)
    return "_".join(_UNSAFE_NAME.sub("-", part) for part in parts) + ".csv"


def curve_summary(rows: Sequence[MetricRow]) -> Tuple[int, int]:
    """Totals of completed and excluded trials over a curve."""
    return sum(r.n_trials for r in rows), sum(r.failed for r in rows)
