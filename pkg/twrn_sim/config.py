"""Configuration settings for the two-way relay channel-estimation simulator."""

from typing import Dict, List, Tuple

# Model defaults (unit symbol period, unit channel and noise variances)
DEFAULT_SYMBOL_PERIOD = 1.0
DEFAULT_CHANNEL_VARIANCE = 1.0
DEFAULT_NOISE = 1.0
DEFAULT_N_DATA = 64
DEFAULT_SNR_DB = 10.0

# Experiment limits
MIN_TRIALS = 100
MIN_PILOT_LENGTH = 2
MIN_DETECTION_LENGTH = 8
RA_MAX_ATTEMPTS = 100

# Numerical tolerances
SOLVE_RESIDUAL_TOL = 1e-10
JITTER_SCALE = 1e-12
HERMITIAN_TOL = 1e-12
RANK_TOL = 1e-10
SLMEP_TOL = 1e-6
SLMEP_MAX_ITER = 200
# Weights scanned for sign changes of the SLMEP gap
SLMEP_GRID = 16
CI_Z = 1.959963984540054

# Runtime
THREADS_ENV_VAR = "TWRN_THREADS"
DEFAULT_THREADS = 1

# CSV output
CSV_COLUMNS: List[str] = ["x", "metric", "ci_halfwidth", "n_trials", "analytic"]
CSV_FLOAT_FORMAT = "%.12g"

SCENARIOS: List[str] = [
    "mse_vs_snr", "mse_vs_tau", "mse_vs_n",
    "ber_vs_snr", "ptheta_vs_tau", "ber_vs_ptheta",
]
ESTIMATORS: List[str] = ["lmmse", "lmep", "slmep"]
LMEP_INITS: List[str] = ["lmmse", "random"]
POWER_SCHEMES: List[str] = ["soa", "ea", "ra"]
TRAINING_LABELS: List[str] = ["optimal", "type1", "type2", "qpsk-random", "correlated"]
SAO_MODES: List[str] = ["genie", "glrt_relay", "glrt_source", "forced_error"]

# Figure presets: figure -> list of (curve name, config overrides)
_SNR_GRID = "0,5,10,15,20,25,30"
_TAU_GRID_8 = ",".join(str(0.5 * i) for i in range(0, 16))
_TAU_GRID_16 = ",".join(str(0.5 * i) for i in range(0, 32))
_PTHETA_TAU_GRID = "0.25,0.5,1,1.5,2,3,4"

FIGURE_PRESETS: Dict[str, List[Tuple[str, Dict[str, str]]]] = {
    "fig2": [
        ("lmmse", {"scenario": "ber_vs_snr", "N": "8", "trials": "10000",
                   "sweep": "0,5,10,15,20", "estimator": "lmmse"}),
        ("lmep", {"scenario": "ber_vs_snr", "N": "8", "trials": "10000",
                  "sweep": "0,5,10,15,20", "estimator": "lmep"}),
        ("lmep-random", {"scenario": "ber_vs_snr", "N": "8", "trials": "10000",
                         "sweep": "0,5,10,15,20", "estimator": "lmep",
                         "lmep_init": "random", "label": "random"}),
    ],
    "fig3": [
        ("optimal-n8", {"scenario": "mse_vs_tau", "N": "8", "trials": "10000",
                        "sweep": _TAU_GRID_8, "training": "optimal"}),
        ("type1-n8", {"scenario": "mse_vs_tau", "N": "8", "trials": "10000",
                      "sweep": _TAU_GRID_8, "training": "type1"}),
        ("type2-n8", {"scenario": "mse_vs_tau", "N": "8", "trials": "10000",
                      "sweep": _TAU_GRID_8, "training": "type2"}),
        ("optimal-n16", {"scenario": "mse_vs_tau", "N": "16", "trials": "10000",
                         "sweep": _TAU_GRID_16, "training": "optimal", "label": "n16"}),
        ("type1-n16", {"scenario": "mse_vs_tau", "N": "16", "trials": "10000",
                       "sweep": _TAU_GRID_16, "training": "type1", "label": "n16"}),
        ("type2-n16", {"scenario": "mse_vs_tau", "N": "16", "trials": "10000",
                       "sweep": _TAU_GRID_16, "training": "type2", "label": "n16"}),
        ("optimal-snr", {"scenario": "mse_vs_snr", "N": "8", "trials": "10000",
                         "sweep": _SNR_GRID, "training": "optimal"}),
        ("type1-snr", {"scenario": "mse_vs_snr", "N": "8", "trials": "10000",
                       "sweep": _SNR_GRID, "training": "type1"}),
        ("type2-snr", {"scenario": "mse_vs_snr", "N": "8", "trials": "10000",
                       "sweep": _SNR_GRID, "training": "type2"}),
        ("qpsk-snr", {"scenario": "mse_vs_snr", "N": "8", "trials": "10000",
                      "sweep": _SNR_GRID, "training": "qpsk-random"}),
    ],
    "fig4": [
        (scheme, {"scenario": "mse_vs_snr", "N": "8", "trials": "10000",
                  "sweep": _SNR_GRID, "power_scheme": scheme})
        for scheme in ("soa", "ea", "ra")
    ],
    "fig5": [
        (scheme, {"scenario": "ber_vs_snr", "N": "8", "trials": "10000",
                  "sweep": _SNR_GRID, "power_scheme": scheme, "estimator": "lmep"})
        for scheme in ("soa", "ea", "ra")
    ],
    "fig6": [
        ("optimal", {"scenario": "mse_vs_n", "N": "8", "trials": "10000",
                     "sweep": "8,16,24,32,40,48,56,64", "snr_db": "0", "tau": "0.5",
                     "training": "optimal"}),
        ("correlated", {"scenario": "mse_vs_n", "N": "8", "trials": "10000",
                        "sweep": "8,16,24,32,40,48,56,64", "snr_db": "0", "tau": "0.5",
                        "training": "correlated"}),
    ],
    "fig7": [
        ("relay-0db", {"scenario": "ptheta_vs_tau", "N": "16", "trials": "100000",
                       "sweep": _PTHETA_TAU_GRID, "snr_db": "0", "sao_mode": "glrt_relay",
                       "label": "relay-0db"}),
        ("source-0db", {"scenario": "ptheta_vs_tau", "N": "16", "trials": "100000",
                        "sweep": _PTHETA_TAU_GRID, "snr_db": "0", "sao_mode": "glrt_source",
                        "label": "source-0db"}),
        ("relay-10db", {"scenario": "ptheta_vs_tau", "N": "16", "trials": "100000",
                        "sweep": _PTHETA_TAU_GRID, "snr_db": "10", "sao_mode": "glrt_relay",
                        "label": "relay-10db"}),
    ],
    "fig8": [
        ("lmep", {"scenario": "ber_vs_ptheta", "N": "8", "trials": "20000",
                  "sweep": "0.05,0.1,0.2,0.3,0.4", "tau": "1", "snr_db": "15",
                  "estimator": "lmep", "sao_mode": "forced_error"}),
        ("slmep", {"scenario": "ber_vs_ptheta", "N": "8", "trials": "20000",
                   "sweep": "0.05,0.1,0.2,0.3,0.4", "tau": "1", "snr_db": "15",
                   "estimator": "slmep", "sao_mode": "forced_error"}),
    ],
}
