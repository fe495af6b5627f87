# ==== twrn_sim/core/relay_power.py ====
"""Relay pilot amplification under the block energy constraint."""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

from ..config import RA_MAX_ATTEMPTS
from .errors import AllocationError, DomainError
from .numerics import RngStream
from .signal_model import SystemParams, TimingOffset, lambda_gamma_diagonals
from .training import TrainingPair, rho

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RelayScaling:
    """
    Relay amplitudes for the single-pilot tails (gamma_i) and the overlap (gamma_s).

    clamped is set when the closed-form allocation went negative and equal
    allocation was used instead.
    """

    gamma_i: float
    gamma_s: float
    scheme: str
    clamped: bool = False

    @property
    def gamma_i_sq(self) -> float:
        return self.gamma_i ** 2

    @property
    def gamma_s_sq(self) -> float:
        return self.gamma_s ** 2


def pilot_energy(params: SystemParams, off: TimingOffset, gamma_i_sq: float, gamma_s_sq: float) -> float:
    """Relay energy spent forwarding the pilot block for the given squared amplitudes."""
    tau_s = off.tau_symbols
    return (
        2.0 * gamma_i_sq * tau_s * params.energy_single
        + gamma_s_sq * (params.n_pilot - tau_s) * params.energy_dual
    )


def ea_scaling(params: SystemParams, off: TimingOffset) -> RelayScaling:
    """
    Equal amplification over the whole block, solved from the energy constraint.

    Raises:
        DomainError: If tau exceeds N T_s
    """
    if off.tau > params.n_pilot * params.symbol_period:
        raise DomainError(f"offset {off.tau} exceeds the pilot block")
    gamma_sq = params.relay_pilot_energy / pilot_energy(params, off, 1.0, 1.0)
    gamma = math.sqrt(gamma_sq)
    return RelayScaling(gamma_i=gamma, gamma_s=gamma, scheme="ea")


def soa_scaling(params: SystemParams, off: TimingOffset) -> RelayScaling:
    """
    Closed-form sub-optimal allocation maximizing B1 under the energy constraint.

    Args:
        params: System parameters
        off: Decomposed offset with tau < N T_s

    Returns:
        RelayScaling; falls back to equal allocation (clamped=True) when the
        closed form yields a negative squared amplitude

    Raises:
        DomainError: If tau >= N T_s
    """
    t_s = params.symbol_period
    span = params.n_pilot * t_s
    tau = off.tau
    if tau >= span:
        raise DomainError(f"offset {tau} must be below the pilot block length {span}")

    e_a = params.energy_single
    e_b = params.energy_dual
    ups = params.channel_variance
    e_r = params.relay_pilot_energy
    root = math.sqrt(2.0 * e_a * e_b)
    rest = span - tau

    gamma_s_sq = (2.0 * tau * e_a + ups * e_r * t_s - root * tau) / (ups * (root * tau + rest * e_b))
    if tau == 0.0:
        gamma_i_sq = gamma_s_sq
    else:
        gamma_i_sq = (rest * e_b + ups * t_s * e_r - root * rest) / (ups * (root * rest + 2.0 * tau * e_a))

    if gamma_i_sq < 0.0 or gamma_s_sq < 0.0:
        logger.debug(
            f"SOA closed form negative (gamma_i^2={gamma_i_sq:.3e}, gamma_s^2={gamma_s_sq:.3e}), "
            "using equal allocation"
        )
        fallback = ea_scaling(params, off)
        return RelayScaling(gamma_i=fallback.gamma_i, gamma_s=fallback.gamma_s, scheme="soa", clamped=True)
    return RelayScaling(gamma_i=math.sqrt(gamma_i_sq), gamma_s=math.sqrt(gamma_s_sq), scheme="soa")


def ra_scaling(params: SystemParams, off: TimingOffset, rng: RngStream) -> RelayScaling:
    """
    Random allocation: gamma_i^2 uniform on (0, upper], gamma_s^2 takes the remaining energy.

    Args:
        params: System parameters
        off: Decomposed offset with tau > 0
        rng: Stream for the draw

    Returns:
        RelayScaling satisfying the energy constraint

    Raises:
        DomainError: If tau is zero
        AllocationError: If no feasible draw is found within the attempt limit
    """
    if off.tau <= 0.0:
        raise DomainError("random allocation needs a positive offset")
    t_s = params.symbol_period
    span = params.n_pilot * t_s
    e_r = params.relay_pilot_energy
    tail_cost = 2.0 * off.tau_symbols * params.energy_single
    overlap_cost = (params.n_pilot - off.tau_symbols) * params.energy_dual

    if off.tau < span:
        upper = e_r * t_s / ((span - off.tau) * params.energy_dual)
    else:
        upper = e_r / tail_cost

    for attempt in range(1, RA_MAX_ATTEMPTS + 1):
        gamma_i_sq = upper * (1.0 - rng.uniform())
        remaining = e_r - tail_cost * gamma_i_sq
        if remaining < 0.0:
            continue
        if overlap_cost > 0.0:
            gamma_s_sq = remaining / overlap_cost
        else:
            gamma_i_sq = e_r / tail_cost
            gamma_s_sq = 0.0
        if attempt > 1:
            logger.debug(f"RA draw feasible after {attempt} attempts")
        return RelayScaling(gamma_i=math.sqrt(gamma_i_sq), gamma_s=math.sqrt(gamma_s_sq), scheme="ra")

    raise AllocationError(f"no feasible random allocation in {RA_MAX_ATTEMPTS} attempts")


def scaling_for_scheme(
    scheme: str, params: SystemParams, off: TimingOffset, rng: RngStream
) -> RelayScaling:
    """Dispatch on the configured power scheme."""
    if scheme == "ea":
        return ea_scaling(params, off)
    if scheme == "soa":
        return soa_scaling(params, off)
    if scheme == "ra":
        return ra_scaling(params, off, rng)
    raise DomainError(f"unknown power scheme '{scheme}'")


def overlap_gain(params: SystemParams, gamma_sq: float) -> float:
    """Per-symbol information P_s T_s gamma^2 / (N0 (1 + upsilon gamma^2))."""
    return params.symbol_energy * gamma_sq / (params.noise_relay * (1.0 + params.channel_variance * gamma_sq))


def _require_equal_noise(params: SystemParams) -> None:
    if not math.isclose(params.noise_relay, params.noise_source, rel_tol=1e-12):
        raise DomainError("closed-form MSE expressions need equal relay and source noise levels")


def b1_b2(params: SystemParams, off: TimingOffset, scaling: RelayScaling, pair: TrainingPair) -> Tuple[float, float]:
    """
    Information terms B1 and |B2| of the MSE closed form.

    Args:
        params: System parameters with N_R0 = N_S0
        off: Decomposed offset
        scaling: Relay amplification
        pair: Training pair

    Returns:
        Tuple (B1, |B2|)

    Raises:
        DomainError: If the relay and source noise levels differ
    """
    _require_equal_noise(params)
    tau_s = off.tau_symbols
    b1 = (
        (params.n_pilot - tau_s) * overlap_gain(params, scaling.gamma_s_sq)
        + tau_s * overlap_gain(params, scaling.gamma_i_sq)
    )
    lam, _ = lambda_gamma_diagonals(off, 1.0, 1.0, params.n_pilot)
    b2 = abs(rho(pair, off, lam)) * params.n_pilot * overlap_gain(params, scaling.gamma_s_sq)
    return b1, b2
