# ==== twrn_sim/__init__.py ====
"""TWRN Sim - Channel estimation and arriving-order detection for asynchronous two-way relay networks."""

__version__ = "0.1.0"

from .core.estimators import analytic_mse, analytic_mse_err, lmep_estimate, lmmse_estimate, slmep_estimate
from .core.harness import emit_csv, run_experiment
from .core.parser import parse_config
from .core.relay_power import ea_scaling, ra_scaling, soa_scaling
from .core.sao_detect import build_hypotheses, glrt_detect, p_theta_bound
from .core.signal_model import SystemParams, decompose_offset
from .core.training import optimal_pair, rho

__all__ = [
    "SystemParams",
    "decompose_offset",
    "optimal_pair",
    "rho",
    "ea_scaling",
    "soa_scaling",
    "ra_scaling",
    "lmmse_estimate",
    "lmep_estimate",
    "slmep_estimate",
    "analytic_mse",
    "analytic_mse_err",
    "build_hypotheses",
    "glrt_detect",
    "p_theta_bound",
    "parse_config",
    "run_experiment",
    "emit_csv",
]
