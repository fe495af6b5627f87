# ==== twrn_sim/core/signal_model.py ====
"""Sampled pilot model of the asynchronous two-way relay and the data-phase samples."""

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Tuple

import numpy as np

from ..config import (
    DEFAULT_CHANNEL_VARIANCE,
    DEFAULT_N_DATA,
    DEFAULT_NOISE,
    DEFAULT_SYMBOL_PERIOD,
    MIN_PILOT_LENGTH,
)
from .errors import DomainError, ShapeError
from .numerics import ComplexMat, ComplexVec, RngStream, sample_cgauss

if TYPE_CHECKING:
    from .training import TrainingPair

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SystemParams:
    """
    Scalar constants of the relay model.

    relay_pilot_energy defaults to N * P_s * T_s, relay_data_power to P_s and
    guard_len to N.
    """

    n_pilot: int
    source_power: float
    symbol_period: float = DEFAULT_SYMBOL_PERIOD
    channel_variance: float = DEFAULT_CHANNEL_VARIANCE
    noise_relay: float = DEFAULT_NOISE
    noise_source: float = DEFAULT_NOISE
    relay_pilot_energy: Optional[float] = None
    relay_data_power: Optional[float] = None
    guard_len: Optional[int] = None
    n_data: int = DEFAULT_N_DATA

    def __post_init__(self):
        if self.relay_pilot_energy is None:
            object.__setattr__(
                self, "relay_pilot_energy", self.n_pilot * self.source_power * self.symbol_period
            )
        if self.relay_data_power is None:
            object.__setattr__(self, "relay_data_power", self.source_power)
        if self.guard_len is None:
            object.__setattr__(self, "guard_len", self.n_pilot)

        if self.n_pilot < MIN_PILOT_LENGTH:
            raise DomainError(f"n_pilot must be at least {MIN_PILOT_LENGTH}, got {self.n_pilot}")
        if self.n_data < 1:
            raise DomainError(f"n_data must be positive, got {self.n_data}")
        if not 0 <= self.guard_len <= self.n_pilot:
            raise DomainError(f"guard_len must lie in [0, {self.n_pilot}], got {self.guard_len}")
        for name in (
            "source_power", "symbol_period", "channel_variance", "noise_relay",
            "noise_source", "relay_pilot_energy", "relay_data_power",
        ):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive and finite, got {value}")

    @classmethod
    def from_snr_db(cls, n_pilot: int, snr_db: float, **kwargs) -> "SystemParams":
        """Build parameters for an average SNR P_s * T_s / N_R0 given in dB."""
        symbol_period = kwargs.get("symbol_period", DEFAULT_SYMBOL_PERIOD)
        noise = kwargs.get("noise_relay", DEFAULT_NOISE)
        source_power = 10.0 ** (snr_db / 10.0) * noise / symbol_period
        return cls(n_pilot=n_pilot, source_power=source_power, **kwargs)

    @property
    def snr(self) -> float:
        return self.source_power * self.symbol_period / self.noise_relay

    @property
    def symbol_energy(self) -> float:
        return self.source_power * self.symbol_period

    @property
    def energy_single(self) -> float:
        """Relay input energy per symbol while one source is active."""
        return self.channel_variance * self.symbol_energy + self.noise_relay

    @property
    def energy_dual(self) -> float:
        """Relay input energy per symbol while both sources overlap."""
        return 2.0 * self.channel_variance * self.symbol_energy + self.noise_relay

    @property
    def relay_noise_var(self) -> float:
        """Per-sample relay noise variance after normalizing by sqrt(P_s)."""
        return self.noise_relay / self.symbol_energy

    @property
    def source_noise_var(self) -> float:
        return self.noise_source / self.symbol_energy

    @property
    def relay_gain(self) -> float:
        """Data-phase amplification alpha that keeps the relay at power P_r."""
        return math.sqrt(
            self.relay_data_power
            / (2.0 * self.channel_variance * self.source_power + self.noise_relay)
        )


@dataclass(frozen=True)
class TimingOffset:
    tau: float
    n_tau: int
    lam: float
    symbol_period: float = DEFAULT_SYMBOL_PERIOD

    @property
    def tau_symbols(self) -> float:
        return self.tau / self.symbol_period

    @property
    def lam_fraction(self) -> float:
        return self.lam / self.symbol_period


@dataclass(frozen=True)
class ChannelRealization:
    """Reciprocal gains h1 (source 1 to relay) and h2 (source 2 to relay)."""

    h1: complex
    h2: complex

    @property
    def h_a(self) -> complex:
        return self.h1 * self.h1

    @property
    def h_b(self) -> complex:
        return self.h1 * self.h2

    @property
    def norm_sq(self) -> float:
        return abs(self.h1) ** 2 + abs(self.h2) ** 2

    @property
    def vector(self) -> ComplexVec:
        return np.array([self.h1, self.h2], dtype=np.complex128)

    @classmethod
    def draw(cls, rng: RngStream, variance: float) -> "ChannelRealization":
        h1, h2 = sample_cgauss(rng, variance, 2)
        return cls(complex(h1), complex(h2))


@dataclass(frozen=True, eq=False)
class ReceivedPilot:
    """Pilot observation of length 2N+1 with the diagonals of Gamma and Lambda."""

    samples: ComplexVec
    gamma_diag: np.ndarray
    lambda_diag: np.ndarray
    hypothesis: int = 0

    def __post_init__(self):
        n = self.samples.shape[0]
        if self.samples.ndim != 1 or n % 2 == 0:
            raise ShapeError(f"pilot observation must have odd length 2N+1, got {self.samples.shape}")
        if self.gamma_diag.shape != (n,) or self.lambda_diag.shape != (n,):
            raise ShapeError("Gamma and Lambda diagonals must match the observation length")

    @property
    def gamma_matrix(self) -> ComplexMat:
        return np.diag(self.gamma_diag).astype(np.complex128)

    @property
    def lambda_matrix(self) -> ComplexMat:
        return np.diag(self.lambda_diag).astype(np.complex128)


def decompose_offset(tau: float, params: SystemParams) -> TimingOffset:
    """
    Split an offset into whole symbol periods and a fractional remainder.

    Args:
        tau: Offset in seconds
        params: System parameters (symbol period and guard length)

    Returns:
        TimingOffset with tau = n_tau * T_s + lam and 0 <= lam < T_s

    Raises:
        DomainError: If tau lies outside [0, L * T_s]
    """
    t_s = params.symbol_period
    if not (math.isfinite(tau) and 0.0 <= tau <= params.guard_len * t_s):
        raise DomainError(f"offset {tau} outside [0, {params.guard_len * t_s}]")
    n_tau = int(math.floor(tau / t_s))
    lam = tau - n_tau * t_s
    if lam < 0.0:
        n_tau -= 1
        lam = tau - n_tau * t_s
    elif lam >= t_s:
        n_tau += 1
        lam = tau - n_tau * t_s
    return TimingOffset(tau=tau, n_tau=n_tau, lam=lam, symbol_period=t_s)


def _leading_layout(t: np.ndarray, n_tau: int) -> ComplexVec:
    # [t(1:n), t(n+1:N) repeated twice, 0, 0_n]
    return np.concatenate([t[:n_tau], np.repeat(t[n_tau:], 2), np.zeros(n_tau + 1)])


def _lagging_layout(t: np.ndarray, n_tau: int) -> ComplexVec:
    # [0_n, 0, t(1:N-n) repeated twice, t(N-n+1:N)]
    n = t.shape[0]
    return np.concatenate([np.zeros(n_tau + 1), np.repeat(t[: n - n_tau], 2), t[n - n_tau:]])


def build_equivalent_sequences(
    pair: "TrainingPair", off: TimingOffset, hypothesis: int = 0
) -> Tuple[ComplexVec, ComplexVec]:
    """
    Stretch both pilots onto the 2N+1 relay sampling grid.

    Hypothesis 0 means source 1's pilot arrives first; hypothesis 1 swaps the
    leading and lagging roles.

    Args:
        pair: Training pair of length-N pilots
        off: Decomposed offset
        hypothesis: Arriving order, 0 or 1

    Returns:
        Tuple (r_a, r_b) multiplying h_a and h_b respectively
    """
    if hypothesis not in (0, 1):
        raise DomainError(f"hypothesis must be 0 or 1, got {hypothesis}")
    t1 = np.asarray(pair.t1, dtype=np.complex128)
    t2 = np.asarray(pair.t2, dtype=np.complex128)
    if off.n_tau > t1.shape[0]:
        raise DomainError(f"offset of {off.n_tau} symbols exceeds pilot length {t1.shape[0]}")
    if hypothesis == 0:
        return _leading_layout(t1, off.n_tau), _lagging_layout(t2, off.n_tau)
    return _lagging_layout(t1, off.n_tau), _leading_layout(t2, off.n_tau)


def lambda_gamma_diagonals(
    off: TimingOffset, gamma_i: float, gamma_s: float, n_pilot: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Diagonals of Lambda and Gamma for a given offset and relay scaling."""
    n_tau = off.n_tau
    first = math.sqrt(off.lam_fraction)
    second = math.sqrt(1.0 - off.lam_fraction)
    overlap_pairs = n_pilot - n_tau
    lam = np.concatenate([
        np.ones(n_tau),
        np.tile([first, second], overlap_pairs),
        [first],
        np.ones(n_tau),
    ])
    gamma = np.concatenate([
        np.full(n_tau, gamma_i),
        np.full(2 * overlap_pairs + 1, gamma_s),
        np.full(n_tau, gamma_i),
    ])
    return lam, gamma


def build_lambda_gamma(
    off: TimingOffset, gamma_i: float, gamma_s: float, params: SystemParams
) -> Tuple[ComplexMat, ComplexMat]:
    """
    Build the (2N+1)x(2N+1) diagonal matrices Lambda and Gamma.

    Args:
        off: Decomposed offset
        gamma_i: Relay amplification while a single pilot is received
        gamma_s: Relay amplification while both pilots overlap
        params: System parameters

    Returns:
        Tuple (Lambda, Gamma)

    Raises:
        DomainError: If either amplification is negative
    """
    if gamma_i < 0 or gamma_s < 0:
        raise DomainError(f"relay amplifications must be nonnegative, got {gamma_i}, {gamma_s}")
    lam, gamma = lambda_gamma_diagonals(off, gamma_i, gamma_s, params.n_pilot)
    return np.diag(lam).astype(np.complex128), np.diag(gamma).astype(np.complex128)


def _diagonal(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m)
    return np.real(np.diag(m)) if m.ndim == 2 else np.real(m)


def rx_pilot_at_source(
    ch: ChannelRealization,
    pair: "TrainingPair",
    off: TimingOffset,
    gamma: np.ndarray,
    lam: np.ndarray,
    rng: Optional[RngStream],
    params: SystemParams,
    hypothesis: int = 0,
) -> ReceivedPilot:
    """
    Pilot samples at source 1 after the relay broadcast.

    x = Gamma Lambda [r_a, r_b] (h_a, h_b)^T + h1 Gamma w_R + w_S1, with the
    noise terms left out when rng is None.

    Args:
        ch: True channel realization
        pair: Training pair
        off: Decomposed offset
        gamma: Gamma as a diagonal matrix or its diagonal
        lam: Lambda as a diagonal matrix or its diagonal
        rng: Noise stream, or None for a noiseless observation
        params: System parameters
        hypothesis: True arriving order

    Returns:
        ReceivedPilot of length 2N+1
    """
    gamma_d = _diagonal(gamma)
    lam_d = _diagonal(lam)
    r_a, r_b = build_equivalent_sequences(pair, off, hypothesis)
    if gamma_d.shape != r_a.shape or lam_d.shape != r_a.shape:
        raise ShapeError("Gamma/Lambda size does not match the equivalent sequences")

    samples = gamma_d * lam_d * (r_a * ch.h_a + r_b * ch.h_b)
    if rng is not None:
        n = samples.shape[0]
        w_relay = sample_cgauss(rng, params.relay_noise_var, n)
        w_source = sample_cgauss(rng, params.source_noise_var, n)
        samples = samples + ch.h1 * gamma_d * w_relay + w_source
    return ReceivedPilot(samples=samples, gamma_diag=gamma_d, lambda_diag=lam_d, hypothesis=hypothesis)


def rx_pilot_at_relay(
    ch: ChannelRealization,
    pair: "TrainingPair",
    off: TimingOffset,
    hypothesis: int,
    rng: Optional[RngStream],
    params: SystemParams,
) -> ReceivedPilot:
    """Superimposed pilots at the relay, x_R = Lambda [r_a, r_b] (h1, h2)^T + w_R."""
    lam_d, _ = lambda_gamma_diagonals(off, 1.0, 1.0, params.n_pilot)
    r_a, r_b = build_equivalent_sequences(pair, off, hypothesis)
    samples = lam_d * (r_a * ch.h1 + r_b * ch.h2)
    if rng is not None:
        samples = samples + sample_cgauss(rng, params.relay_noise_var, samples.shape[0])
    return ReceivedPilot(
        samples=samples, gamma_diag=np.ones_like(lam_d), lambda_diag=lam_d, hypothesis=hypothesis
    )


def rx_data_symbols(
    ch: ChannelRealization,
    s1: np.ndarray,
    s2: np.ndarray,
    alpha: float,
    rng: Optional[RngStream],
    params: SystemParams,
) -> ComplexVec:
    """
    Matched-filter data samples at source 1, one per symbol.

    Args:
        ch: True channel realization
        s1: Symbols sent by source 1 (known at source 1)
        s2: Symbols sent by source 2
        alpha: Relay data-phase amplification
        rng: Noise stream, or None for noiseless samples
        params: System parameters

    Returns:
        Vector y of the same length as the symbol blocks

    Raises:
        ShapeError: If the symbol blocks differ in length
    """
    s1 = np.asarray(s1, dtype=np.complex128)
    s2 = np.asarray(s2, dtype=np.complex128)
    if s1.shape != s2.shape or s1.ndim != 1:
        raise ShapeError(f"symbol blocks must be equal-length vectors, got {s1.shape} and {s2.shape}")
    amplitude = alpha * math.sqrt(params.source_power)
    y = amplitude * (ch.h_a * s1 + ch.h_b * s2)
    if rng is not None:
        m = y.shape[0]
        n_relay = sample_cgauss(rng, params.noise_relay / params.symbol_period, m)
        n_source = sample_cgauss(rng, params.noise_source / params.symbol_period, m)
        y = y + alpha * ch.h1 * n_relay + n_source
    return y
