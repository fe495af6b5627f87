# ==== twrn_sim/core/selftest.py ====
"""Oracle checks comparing closed forms, bounds and Monte Carlo runs."""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..config import SLMEP_TOL, SOLVE_RESIDUAL_TOL
from .estimators import analytic_mse, composite_moments, order_tradeoff, slmep_estimate
from .harness import run_experiment
from .numerics import RngStream, hermitian_solve, qfunc, solve_residual
from .parser import parse_config
from .relay_power import ea_scaling, soa_scaling
from .sao_detect import build_hypotheses, glrt_detect
from .signal_model import (
    ChannelRealization,
    SystemParams,
    decompose_offset,
    lambda_gamma_diagonals,
    rx_pilot_at_relay,
    rx_pilot_at_source,
)
from .training import correlated_pair, max_rho_on_grid, optimal_pair, type1_pair, type2_pair

logger = logging.getLogger(__name__)

SELFTEST_SEED = 20240607
MSE_REL_TOL = 0.05
# Share of trials whose SLMEP gap must be reachable
SLMEP_MIN_REACHABLE = 0.5

CheckFn = Callable[[], Tuple[bool, str]]


@dataclass(frozen=True)
class SelfCheck:
    name: str
    run: CheckFn


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


_CHECKS: List[SelfCheck] = []


def check(name: str) -> Callable[[CheckFn], CheckFn]:
    """Register an oracle check under a name."""
    def register(fn: CheckFn) -> CheckFn:
        _CHECKS.append(SelfCheck(name=name, run=fn))
        return fn
    return register


def check_names() -> List[str]:
    """Registered check names in registration order."""
    return [c.name for c in _CHECKS]


def _document(**values) -> str:
    return "".join(f"{key}={value}\n" for key, value in values.items())


@check("hermitian-solve")
def _hermitian_solve_residual() -> Tuple[bool, str]:
    rng = RngStream(SELFTEST_SEED).generator
    worst = 0.0
    for n in (2, 5, 10, 20, 40):
        m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        a = m @ m.conj().T + n * np.eye(n)
        b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        worst = max(worst, solve_residual(a, hermitian_solve(a, b), b))
    return worst <= SOLVE_RESIDUAL_TOL, f"worst relative residual {worst:.3e}"


@check("qfunc-symmetry")
def _qfunc_symmetry() -> Tuple[bool, str]:
    x = np.linspace(-8.0, 8.0, 161)
    worst = float(np.max(np.abs(qfunc(x) + qfunc(-x) - 1.0)))
    return worst <= 1e-12, f"max |Q(x) + Q(-x) - 1| = {worst:.3e}"


@check("optimal-training")
def _optimal_training() -> Tuple[bool, str]:
    details = []
    passed = True
    for n in (8, 16, 32):
        params = SystemParams(n_pilot=n, source_power=1.0)
        best = max_rho_on_grid(optimal_pair(n), params)
        others = [max_rho_on_grid(type1_pair(n), params), max_rho_on_grid(type2_pair(n), params)]
        passed &= best <= 1.0 / n + 1e-9 and all(r > 1.0 / n for r in others)
        details.append(f"N={n}: optimal {best:.4g}, type1 {others[0]:.4g}, type2 {others[1]:.4g}")
    return passed, "; ".join(details)


@check("correlated-floor")
def _correlated_floor() -> Tuple[bool, str]:
    params = SystemParams.from_snr_db(8, 40.0)
    off = decompose_offset(0.0, params)
    mse = analytic_mse(params, off, ea_scaling(params, off), correlated_pair(8))
    _, _, ups_s, ups_p = composite_moments(params)
    floor = 2.0 * ups_p / ups_s
    gap = abs(mse - floor) / floor
    return gap <= 0.02, f"MSE {mse:.6g} vs floor {floor:.6g} ({gap:.2%})"


@check("soa-vs-ea")
def _soa_matches_ea() -> Tuple[bool, str]:
    params = SystemParams.from_snr_db(8, 30.0)
    off = decompose_offset(2.5, params)
    pair = optimal_pair(8)
    mse_soa = analytic_mse(params, off, soa_scaling(params, off), pair)
    mse_ea = analytic_mse(params, off, ea_scaling(params, off), pair)
    gap = abs(mse_soa - mse_ea) / mse_ea
    return gap <= 0.01, f"SOA {mse_soa:.6g} vs EA {mse_ea:.6g} ({gap:.3%})"


@check("noiseless-detection")
def _noiseless_detection() -> Tuple[bool, str]:
    params = SystemParams.from_snr_db(16, 0.0)
    pair = optimal_pair(16)
    rng = RngStream(SELFTEST_SEED, 1)
    errors = 0
    for n_tau in (1, 2, 4):
        off = decompose_offset(float(n_tau), params)
        model = build_hypotheses(pair, off, params)
        for _ in range(1000):
            ch = ChannelRealization.draw(rng, params.channel_variance)
            x_r = rx_pilot_at_relay(ch, pair, off, 0, None, params)
            errors += glrt_detect(x_r, model).theta_hat != 0
    return errors == 0, f"{errors} errors in 3000 noiseless detections"


def _relative_gap(metric: float, analytic: Optional[float]) -> float:
    if analytic is None or not math.isfinite(metric):
        return math.inf
    return abs(metric - analytic) / analytic


@check("lmmse-mse-oracle")
def _lmmse_mse_oracle() -> Tuple[bool, str]:
    spec = parse_config(_document(
        scenario="mse_vs_snr", N=8, trials=10000, seed=SELFTEST_SEED, sweep="0,10,20",
    ))
    rows = run_experiment(spec)
    gaps = [_relative_gap(r.metric, r.analytic) for r in rows]
    details = ", ".join(f"{r.x:g} dB: {g:.2%}" for r, g in zip(rows, gaps))
    return all(g <= MSE_REL_TOL for g in gaps), details


@check("wrong-order-mse-oracle")
def _wrong_order_oracle() -> Tuple[bool, str]:
    spec = parse_config(_document(
        scenario="mse_vs_tau", N=16, trials=10000, seed=SELFTEST_SEED, sweep="2",
        snr_db=10, sao_mode="forced_error",
    ))
    row = run_experiment(spec)[0]
    gap = _relative_gap(row.metric, row.analytic)
    return gap <= MSE_REL_TOL, f"MSE {row.metric:.6g} vs closed form {row.analytic} ({gap:.2%})"


@check("detection-bound")
def _detection_bound() -> Tuple[bool, str]:
    spec = parse_config(_document(
        scenario="ptheta_vs_tau", N=16, trials=20000, seed=SELFTEST_SEED, sweep="1,2,4",
        snr_db=0, sao_mode="glrt_relay",
    ))
    rows = run_experiment(spec)
    passed = True
    for row in rows:
        allowance = 3.0 * math.sqrt(max(row.metric * (1.0 - row.metric), 1e-12) / row.n_trials)
        passed &= row.analytic is not None and row.metric <= row.analytic + allowance
    metrics = [row.metric for row in rows]
    passed &= all(b < a for a, b in zip(metrics, metrics[1:]))
    details = ", ".join(f"tau={r.x:g}: {r.metric:.4g} <= {r.analytic:.4g}" for r in rows)
    return passed, details


@check("thread-determinism")
def _thread_determinism() -> Tuple[bool, str]:
    spec = parse_config(_document(
        scenario="ber_vs_snr", N=8, trials=600, seed=SELFTEST_SEED, sweep="5,15", estimator="lmep",
    ))
    single = run_experiment(spec, threads=1)
    parallel = run_experiment(spec, threads=4)
    return single == parallel, "1 vs 4 threads " + ("identical" if single == parallel else "differ")


@check("slmep-constraint")
def _slmep_constraint() -> Tuple[bool, str]:
    params = SystemParams.from_snr_db(8, 15.0)
    off = decompose_offset(1.0, params)
    pair = optimal_pair(8)
    scaling = ea_scaling(params, off)
    lam, gamma = lambda_gamma_diagonals(off, scaling.gamma_i, scaling.gamma_s, params.n_pilot)
    trials = 50
    worst = 0.0
    constrained = reachable = above_lmep = 0
    for trial in range(trials):
        rng = RngStream.for_trial(SELFTEST_SEED, 0, trial)
        ch = ChannelRealization.draw(rng, params.channel_variance)
        rx = rx_pilot_at_source(ch, pair, off, gamma, lam, rng, params)
        est = slmep_estimate(rx, pair, off, scaling, params, p_theta=0.3)
        if est.fallback in ("infeasible", "degenerate"):
            continue
        reachable += 1
        if est.fallback is None:
            constrained += 1
            worst = max(worst, est.constraint_residual)
        tradeoff = order_tradeoff(rx, pair, off, scaling, params, 0.3)
        if tradeoff.objective(est.order_weight) > tradeoff.objective(1.0):
            above_lmep += 1
    passed = worst <= SLMEP_TOL and reachable >= SLMEP_MIN_REACHABLE * trials and above_lmep == 0
    return passed, (
        f"gap reachable in {reachable}/{trials}, worst residual {worst:.3e} over {constrained} "
        f"constrained trials, {above_lmep} above the LMEP bound"
    )


def run_selftest(names: Optional[Sequence[str]] = None) -> List[CheckResult]:
    """
    Run the registered checks.

    Args:
        names: Subset of check names, or None for all of them

    Returns:
        One CheckResult per check; a check that raises counts as failed
    """
    selected = [c for c in _CHECKS if names is None or c.name in names]
    results = []
    for item in selected:
        try:
            passed, detail = item.run()
        except Exception as e:
            passed, detail = False, f"raised {type(e).__name__}: {e}"
        if passed:
            logger.info(f"selftest {item.name}: ok ({detail})")
        else:
            logger.warning(f"selftest {item.name}: FAILED ({detail})")
        results.append(CheckResult(name=item.name, passed=bool(passed), detail=detail))
    return results
