# ==== twrn_sim/core/parser.py ====
"""Parser for line-oriented key=value experiment documents."""

import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from ..config import (
    DEFAULT_CHANNEL_VARIANCE,
    DEFAULT_N_DATA,
    DEFAULT_NOISE,
    DEFAULT_SNR_DB,
    DEFAULT_SYMBOL_PERIOD,
    ESTIMATORS,
    LMEP_INITS,
    MIN_PILOT_LENGTH,
    MIN_TRIALS,
    POWER_SCHEMES,
    SAO_MODES,
    SCENARIOS,
    TRAINING_LABELS,
)
from .errors import ConfigError, DomainError
from .signal_model import SystemParams
from .training import pair_from_label

logger = logging.getLogger(__name__)

REQUIRED_KEYS: List[str] = ["scenario", "N", "trials", "seed", "sweep"]
AUTO = "auto"
UNIFORM = "uniform"

SNR_SCENARIOS = ("mse_vs_snr", "ber_vs_snr")
TAU_SCENARIOS = ("mse_vs_tau", "ptheta_vs_tau")
MSE_SCENARIOS = ("mse_vs_snr", "mse_vs_tau", "mse_vs_n")
BER_SCENARIOS = ("ber_vs_snr", "ber_vs_ptheta")

_KEY_LINE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)$")
_DFT_LABEL = re.compile(r"^dft:\d+,\d+$")
_LABEL_TEXT = re.compile(r"^[A-Za-z0-9._-]+$")


@dataclass(frozen=True)
class ExperimentSpec:
    """
    A validated experiment: scenario, model constants and Monte Carlo settings.

    tau is in symbol periods, None meaning a fresh uniform draw on [0, N T_s)
    per trial. relay_pilot_energy, relay_data_power and guard_len left as None
    resolve to their model defaults at each sweep point.
    """

    scenario: str
    n_pilot: int
    trials: int
    seed: int
    sweep: Tuple[float, ...]
    snr_db: float = DEFAULT_SNR_DB
    tau: Optional[float] = None
    estimator: str = "lmmse"
    lmep_init: str = "lmmse"
    power_scheme: str = "ea"
    training: str = "optimal"
    sao_mode: str = "genie"
    forced_p_theta: float = 1.0
    n_data: int = DEFAULT_N_DATA
    symbol_period: float = DEFAULT_SYMBOL_PERIOD
    channel_variance: float = DEFAULT_CHANNEL_VARIANCE
    noise_relay: float = DEFAULT_NOISE
    noise_source: float = DEFAULT_NOISE
    relay_pilot_energy: Optional[float] = None
    relay_data_power: Optional[float] = None
    guard_len: Optional[int] = None
    label: Optional[str] = None
    lines: Dict[str, int] = field(default_factory=dict, compare=False, repr=False)

    def pilot_length_at(self, x: float) -> int:
        return int(round(x)) if self.scenario == "mse_vs_n" else self.n_pilot

    def params_at(self, x: float) -> SystemParams:
        """Model constants at one sweep point."""
        snr_db = x if self.scenario in SNR_SCENARIOS else self.snr_db
        return SystemParams.from_snr_db(
            self.pilot_length_at(x),
            snr_db,
            symbol_period=self.symbol_period,
            channel_variance=self.channel_variance,
            noise_relay=self.noise_relay,
            noise_source=self.noise_source,
            relay_pilot_energy=self.relay_pilot_energy,
            relay_data_power=self.relay_data_power,
            guard_len=self.guard_len,
            n_data=self.n_data,
        )

    def tau_at(self, x: float) -> Optional[float]:
        """Offset in seconds at one sweep point, None for a per-trial draw."""
        if self.scenario in TAU_SCENARIOS:
            return x * self.symbol_period
        if self.tau is None:
            return None
        return self.tau * self.symbol_period


def _parse_int(value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ValueError(f"expected an integer, got '{value}'")


def _parse_float(value: str) -> float:
    try:
        result = float(value)
    except ValueError:
        raise ValueError(f"expected a number, got '{value}'")
    if not math.isfinite(result):
        raise ValueError(f"expected a finite number, got '{value}'")
    return result


def _positive_float(value: str) -> float:
    result = _parse_float(value)
    if result <= 0:
        raise ValueError(f"must be positive, got {value}")
    return result


def _optional_positive(value: str) -> Optional[float]:
    return None if value == AUTO else _positive_float(value)


def _choice(options: List[str]) -> Callable[[str], str]:
    def parse(value: str) -> str:
        if value not in options:
            raise ValueError(f"'{value}' is not one of {', '.join(options)}")
        return value
    return parse


def _pilot_length(value: str) -> int:
    result = _parse_int(value)
    if result < MIN_PILOT_LENGTH:
        raise ValueError(f"must be at least {MIN_PILOT_LENGTH}, got {result}")
    return result


def _trials(value: str) -> int:
    result = _parse_int(value)
    if result < MIN_TRIALS:
        raise ValueError(f"must be at least {MIN_TRIALS}, got {result}")
    return result


def _seed(value: str) -> int:
    result = _parse_int(value)
    if not 0 <= result < 2 ** 64:
        raise ValueError(f"must fit in an unsigned 64-bit integer, got {result}")
    return result


def _sweep(value: str) -> Tuple[float, ...]:
    points = tuple(_parse_float(item.strip()) for item in value.split(",") if item.strip())
    if not points:
        raise ValueError("sweep must list at least one value")
    if any(b <= a for a, b in zip(points, points[1:])):
        raise ValueError("sweep values must be strictly increasing")
    return points


def _tau(value: str) -> Optional[float]:
    if value == UNIFORM:
        return None
    result = _parse_float(value)
    if result < 0:
        raise ValueError(f"must be nonnegative, got {value}")
    return result


def _training(value: str) -> str:
    if value in TRAINING_LABELS or _DFT_LABEL.match(value):
        return value
    raise ValueError(f"'{value}' is not one of {', '.join(TRAINING_LABELS)} or dft:k1,k2")


def _probability(value: str) -> float:
    result = _parse_float(value)
    if not 0.0 <= result <= 1.0:
        raise ValueError(f"must lie in [0, 1], got {value}")
    return result


def _n_data(value: str) -> int:
    result = _parse_int(value)
    if result < 1:
        raise ValueError(f"must be positive, got {result}")
    return result


def _guard_len(value: str) -> Optional[int]:
    if value == AUTO:
        return None
    result = _parse_int(value)
    if result < 0:
        raise ValueError(f"must be nonnegative, got {result}")
    return result


def _label(value: str) -> Optional[str]:
    if not value:
        return None
    if not _LABEL_TEXT.match(value):
        raise ValueError(f"label may only contain letters, digits, '.', '_' and '-', got '{value}'")
    return value


# document key -> (dataclass field, converter)
KEY_TABLE: Dict[str, Tuple[str, Callable[[str], Any]]] = {
    "scenario": ("scenario", _choice(SCENARIOS)),
    "N": ("n_pilot", _pilot_length),
    "trials": ("trials", _trials),
    "seed": ("seed", _seed),
    "sweep": ("sweep", _sweep),
    "snr_db": ("snr_db", _parse_float),
    "tau": ("tau", _tau),
    "estimator": ("estimator", _choice(ESTIMATORS)),
    "lmep_init": ("lmep_init", _choice(LMEP_INITS)),
    "power_scheme": ("power_scheme", _choice(POWER_SCHEMES)),
    "training": ("training", _training),
    "sao_mode": ("sao_mode", _choice(SAO_MODES)),
    "forced_p_theta": ("forced_p_theta", _probability),
    "n_data": ("n_data", _n_data),
    "symbol_period": ("symbol_period", _positive_float),
    "channel_variance": ("channel_variance", _positive_float),
    "noise_relay": ("noise_relay", _positive_float),
    "noise_source": ("noise_source", _positive_float),
    "relay_pilot_energy": ("relay_pilot_energy", _optional_positive),
    "relay_data_power": ("relay_data_power", _optional_positive),
    "guard_len": ("guard_len", _guard_len),
    "label": ("label", _label),
}


def _strip_comment(raw: str) -> str:
    return raw.split("#", 1)[0].strip()


def parse_config(text: str) -> ExperimentSpec:
    """
    Parse an experiment document.

    Args:
        text: Document with one key=value per line; '#' starts a comment

    Returns:
        Validated ExperimentSpec with defaults filled in

    Raises:
        ConfigError: For unknown, duplicate, missing or malformed keys and for
            settings that cannot be simulated, with the offending line number
    """
    values: Dict[str, Any] = {}
    lines: Dict[str, int] = {}

    for number, raw in enumerate(text.splitlines(), start=1):
        content = _strip_comment(raw)
        if not content:
            continue
        match = _KEY_LINE.match(content)
        if not match:
            raise ConfigError(f"expected key=value, got '{content}'", line=number)
        key, value = match.group(1), match.group(2).strip()
        if key not in KEY_TABLE:
            raise ConfigError(f"unknown key '{key}'", line=number)
        if key in lines:
            raise ConfigError(f"duplicate key '{key}' (first set on line {lines[key]})", line=number)
        name, convert = KEY_TABLE[key]
        try:
            values[name] = convert(value)
        except ValueError as e:
            raise ConfigError(f"{key}: {e}", line=number)
        lines[key] = number

    missing = [key for key in REQUIRED_KEYS if key not in lines]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")

    spec = ExperimentSpec(lines=lines, **values)
    _check_consistency(spec)
    logger.debug(f"parsed {spec.scenario} experiment with {len(spec.sweep)} sweep points")
    return spec


def parse_config_file(path: Path) -> ExperimentSpec:
    """Read and parse an experiment document from disk."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(f"cannot read {path}: {e}")
    return parse_config(text)


def _fail(spec: ExperimentSpec, key: str, message: str) -> None:
    raise ConfigError(f"{key}: {message}", line=spec.lines.get(key))


def _check_consistency(spec: ExperimentSpec) -> None:
    """Cross-key checks that need the whole document."""
    if spec.scenario == "mse_vs_n":
        for x in spec.sweep:
            if x != round(x) or x < MIN_PILOT_LENGTH:
                _fail(spec, "sweep", f"pilot lengths must be integers >= {MIN_PILOT_LENGTH}, got {x}")
    if spec.scenario in TAU_SCENARIOS:
        for x in spec.sweep:
            if not 0.0 <= x < spec.n_pilot:
                _fail(spec, "sweep", f"offsets must lie in [0, {spec.n_pilot}) symbol periods, got {x}")
    if spec.scenario == "ber_vs_ptheta":
        for x in spec.sweep:
            if not 0.0 < x <= 0.5:
                _fail(spec, "sweep", f"detection error probabilities must lie in (0, 0.5], got {x}")
        if spec.sao_mode != "forced_error":
            _fail(spec, "sao_mode", "ber_vs_ptheta needs sao_mode=forced_error")
    if spec.scenario == "ptheta_vs_tau" and spec.sao_mode not in ("glrt_relay", "glrt_source"):
        _fail(spec, "sao_mode", "ptheta_vs_tau needs sao_mode=glrt_relay or glrt_source")

    if spec.tau is not None and spec.scenario not in TAU_SCENARIOS:
        for x in spec.sweep:
            n = spec.pilot_length_at(x)
            if spec.tau >= n:
                _fail(spec, "tau", f"offset {spec.tau} must be below the pilot length {n}")

    if spec.power_scheme == "ra":
        zero_offset = (
            any(x == 0.0 for x in spec.sweep) if spec.scenario in TAU_SCENARIOS
            else spec.tau == 0.0
        )
        if zero_offset:
            _fail(spec, "power_scheme", "random allocation needs a positive offset")

    for x in spec.sweep:
        try:
            params = spec.params_at(x)
            tau = spec.tau_at(x)
            if tau is not None and tau > params.guard_len * params.symbol_period:
                _fail(spec, "guard_len", f"offset {tau} exceeds the guard interval")
            if spec.training != "qpsk-random":
                pair_from_label(spec.training, params.n_pilot)
        except DomainError as e:
            _fail(spec, "sweep", f"invalid model at sweep point {x:g}: {e}")


def _format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, tuple):
        return ",".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def format_spec(spec: ExperimentSpec) -> str:
    """
    Render the normalized document: every key with its resolved value.

    The output parses back into an equal ExperimentSpec.
    """
    out = []
    for key, (name, _) in KEY_TABLE.items():
        value = getattr(spec, name)
        if value is None and name == "tau":
            text = UNIFORM
        elif value is None and name in ("relay_pilot_energy", "relay_data_power", "guard_len"):
            text = AUTO
        else:
            text = _format_value(value)
        out.append(f"{key}={text}")
    return "\n".join(out) + "\n"
