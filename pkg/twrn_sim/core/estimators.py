# ==== twrn_sim/core/estimators.py ====
"""
Composite-channel estimators at the source and their closed-form performance.

LMMSE gives the initial estimates. LMEP re-designs both combiners to maximize
the effective SNR after self-interference cancellation. SLMEP trades the
effective SNR of the detected arriving order against the one of the other
order, weighted by the probability that the detection was wrong.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy import optimize

from ..config import SLMEP_GRID, SLMEP_MAX_ITER, SLMEP_TOL
from .errors import DegenerateError, DomainError
from .numerics import ComplexVec, RngStream, hermitian_solve, qfunc, sample_cgauss
from .relay_power import RelayScaling, b1_b2, overlap_gain
from .signal_model import (
    ChannelRealization,
    ReceivedPilot,
    SystemParams,
    TimingOffset,
    build_equivalent_sequences,
    lambda_gamma_diagonals,
)
from .training import TrainingPair

logger = logging.getLogger(__name__)

Moments = Tuple[float, float, float, float]


@dataclass(frozen=True)
class ChannelEstimate:
    """Estimated composite channels with provenance."""

    h_a_hat: complex
    h_b_hat: complex
    method: str
    hypothesis_used: int
    effective_snr: float = 0.0
    fallback: Optional[str] = None
    constraint_residual: Optional[float] = None
    order_weight: Optional[float] = None

    def squared_error(self, ch: ChannelRealization) -> float:
        """Summed squared error |h_a_hat - h_a|^2 + |h_b_hat - h_b|^2."""
        return abs(self.h_a_hat - ch.h_a) ** 2 + abs(self.h_b_hat - ch.h_b) ** 2


@dataclass(frozen=True, eq=False)
class CombinerPair:
    """Receive combiners: h_a_hat = u_a^H x and h_b_hat = u_b^H x."""

    u_a: ComplexVec
    u_b: ComplexVec
    r_e: Optional[ComplexVec] = None
    a_scale: Optional[float] = None

    def apply(self, x: np.ndarray) -> Tuple[complex, complex]:
        return complex(np.vdot(self.u_a, x)), complex(np.vdot(self.u_b, x))


@dataclass(frozen=True, eq=False)
class PilotContext:
    """Equivalent sequences and relay weighting for one (offset, scaling, order)."""

    r_a: ComplexVec
    r_b: ComplexVec
    gamma: np.ndarray
    lam: np.ndarray
    params: SystemParams
    hypothesis: int

    @property
    def g_a(self) -> ComplexVec:
        return self.gamma * self.lam * self.r_a

    @property
    def g_b(self) -> ComplexVec:
        return self.gamma * self.lam * self.r_b

    def signal(self, h_a: complex, h_b: complex) -> ComplexVec:
        return self.g_a * h_a + self.g_b * h_b

    def noise_diag(self, h1_sq: float) -> np.ndarray:
        """Per-sample noise variance of x_S1 given |h1|^2."""
        return h1_sq * self.params.relay_noise_var * self.gamma ** 2 + self.params.source_noise_var

    def noise_eff(self, h1_sq: float) -> float:
        """Data-phase noise after normalizing by alpha sqrt(P_s)."""
        alpha = self.params.relay_gain
        return h1_sq * self.params.relay_noise_var + self.params.source_noise_var / alpha ** 2


@dataclass(frozen=True, eq=False)
class SnrContext:
    """Channel values and noise statistics under which an effective SNR is evaluated."""

    signal: ComplexVec
    noise_diag: np.ndarray
    h_a: complex
    h_b: complex
    noise_eff: float


def pilot_context(
    pair: TrainingPair, off: TimingOffset, scaling: RelayScaling, params: SystemParams, hypothesis: int
) -> PilotContext:
    r_a, r_b = build_equivalent_sequences(pair, off, hypothesis)
    lam, gamma = lambda_gamma_diagonals(off, scaling.gamma_i, scaling.gamma_s, params.n_pilot)
    return PilotContext(r_a=r_a, r_b=r_b, gamma=gamma, lam=lam, params=params, hypothesis=hypothesis)


def channel_context(pilot: PilotContext, ch: ChannelRealization) -> SnrContext:
    """Evaluation context built from the true channels."""
    h1_sq = abs(ch.h1) ** 2
    return SnrContext(
        signal=pilot.signal(ch.h_a, ch.h_b), noise_diag=pilot.noise_diag(h1_sq),
        h_a=ch.h_a, h_b=ch.h_b, noise_eff=pilot.noise_eff(h1_sq),
    )


def estimate_context(pilot: PilotContext, h_a: complex, h_b: complex) -> SnrContext:
    """Evaluation context built from estimates, with |h_a_hat| standing in for |h1|^2."""
    h1_sq = abs(h_a)
    return SnrContext(
        signal=pilot.signal(h_a, h_b), noise_diag=pilot.noise_diag(h1_sq),
        h_a=h_a, h_b=h_b, noise_eff=pilot.noise_eff(h1_sq),
    )


def composite_moments(source: Union[SystemParams, float]) -> Moments:
    """
    Second moments of the composite channels for Rayleigh links of variance upsilon.

    Args:
        source: SystemParams or the channel variance itself

    Returns:
        Tuple (upsilon_a, upsilon_b, upsilon_s, upsilon_p) with upsilon_a = 2 upsilon^2,
        upsilon_b = upsilon^2, their sum and their product
    """
    ups = source.channel_variance if isinstance(source, SystemParams) else float(source)
    if ups < 0:
        raise DomainError(f"channel variance must be nonnegative, got {ups}")
    ups_a = 2.0 * ups ** 2
    ups_b = ups ** 2
    return ups_a, ups_b, ups_a + ups_b, ups_a * ups_b


def _output_moments(u: ComplexVec, ctx: SnrContext, target: complex) -> Tuple[float, float]:
    # (E|u^H x|^2, E|u^H x - target|^2) over the noise only
    mean = np.vdot(u, ctx.signal)
    power = abs(mean) ** 2 + float(np.sum(ctx.noise_diag * np.abs(u) ** 2))
    error = power - 2.0 * float(np.real(np.conj(target) * mean)) + abs(target) ** 2
    return power, max(error, 0.0)


def snr_from_terms(signal_power: float, err_a: float, err_b: float, noise_eff: float) -> float:
    """Effective SNR from its expectation terms."""
    denom = err_a + err_b + noise_eff
    if not (math.isfinite(denom) and denom > 0.0):
        raise DomainError(f"effective SNR denominator must be positive, got {denom}")
    return signal_power / denom


def effective_snr(combiners: CombinerPair, ctx: SnrContext, mode: str = "correct") -> float:
    """
    Post-cancellation effective SNR of a combiner pair.

    Args:
        combiners: Receive combiners u_a, u_b
        ctx: Channel values and noise statistics to evaluate under
        mode: "correct" for a matching arriving order, "erroneous" when the
            self-interference estimate is built for the wrong order

    Returns:
        Nonnegative effective SNR

    Raises:
        DomainError: For an unknown mode or a vanishing denominator
    """
    p_a, err_a = _output_moments(combiners.u_a, ctx, ctx.h_a)
    p_b, err_b = _output_moments(combiners.u_b, ctx, ctx.h_b)
    if mode == "correct":
        return snr_from_terms(p_b, err_a, err_b, ctx.noise_eff)
    if mode == "erroneous":
        return snr_from_terms(p_b, p_a + abs(ctx.h_a) ** 2, err_b, ctx.noise_eff)
    raise DomainError(f"unknown effective SNR mode '{mode}'")


def _lmmse_combiners(pilot: PilotContext) -> CombinerPair:
    ups_a, ups_b, _, _ = composite_moments(pilot.params)
    g_a = pilot.g_a
    g_b = pilot.g_b
    cov = (
        ups_a * np.outer(g_a, g_a.conj())
        + ups_b * np.outer(g_b, g_b.conj())
        + np.diag(pilot.noise_diag(pilot.params.channel_variance))
    )
    solved = hermitian_solve(cov, np.column_stack([g_a, g_b]))
    return CombinerPair(u_a=ups_a * solved[:, 0], u_b=ups_b * solved[:, 1])


def lmmse_combiners(
    pair: TrainingPair, off: TimingOffset, scaling: RelayScaling, params: SystemParams, hypothesis: int = 0
) -> CombinerPair:
    """LMMSE combiners ups_a R^-1 g_a and ups_b R^-1 g_b for one arriving order."""
    return _lmmse_combiners(pilot_context(pair, off, scaling, params, hypothesis))


def _lmmse_from_pilot(pilot: PilotContext, x: np.ndarray) -> ChannelEstimate:
    combiners = _lmmse_combiners(pilot)
    h_a, h_b = combiners.apply(x)
    snr = effective_snr(combiners, estimate_context(pilot, h_a, h_b))
    return ChannelEstimate(h_a, h_b, method="lmmse", hypothesis_used=pilot.hypothesis, effective_snr=snr)


def lmmse_estimate(
    rx: ReceivedPilot,
    pair: TrainingPair,
    off: TimingOffset,
    scaling: RelayScaling,
    params: SystemParams,
    hypothesis: int = 0,
) -> ChannelEstimate:
    """
    Bayesian linear MMSE estimate of (h_a, h_b) from the source pilot observation.

    Args:
        rx: Pilot observation x_S1
        pair: Training pair
        off: Decomposed offset
        scaling: Relay amplification
        params: System parameters
        hypothesis: Arriving order assumed by the estimator

    Returns:
        ChannelEstimate with method "lmmse"

    Raises:
        DecompositionError: If the observation covariance is not positive-definite
    """
    pilot = pilot_context(pair, off, scaling, params, hypothesis)
    return _lmmse_from_pilot(pilot, rx.samples)


def _signal_cov(ctx: SnrContext) -> np.ndarray:
    return np.outer(ctx.signal, ctx.signal.conj()) + np.diag(ctx.noise_diag)


def _scaled_cross(r_e: ComplexVec, cov_inv_r: ComplexVec, a_scale: float) -> ComplexVec:
    # u_b = A R^-1 r_E / (r_E^H R^-1 r_E), the maximizer of u^H R u / (u^H R u - 2 Re(r_E^H u) + A)
    quad = float(np.real(np.vdot(r_e, cov_inv_r)))
    if not quad > 0.0:
        raise DegenerateError("cross-correlation vector r_E vanished")
    return (a_scale / quad) * cov_inv_r


def _lmep_combiners(pilot: PilotContext, h_a: complex, h_b: complex) -> CombinerPair:
    ctx = estimate_context(pilot, h_a, h_b)
    cov_inv_s = hermitian_solve(_signal_cov(ctx), ctx.signal)

    u_a = np.conj(h_a) * cov_inv_s
    _, eps_a = _output_moments(u_a, ctx, h_a)

    r_e = ctx.signal * np.conj(h_b)
    a_scale = eps_a + abs(h_b) ** 2 + ctx.noise_eff
    u_b = _scaled_cross(r_e, np.conj(h_b) * cov_inv_s, a_scale)
    return CombinerPair(u_a=u_a, u_b=u_b, r_e=r_e, a_scale=a_scale)


def lmep_combiners(
    est_init: ChannelEstimate,
    pair: TrainingPair,
    off: TimingOffset,
    scaling: RelayScaling,
    params: SystemParams,
) -> CombinerPair:
    """
    Combiners maximizing the effective SNR around an initial estimate.

    u_a = R_S^-1 Gamma Lambda (|h_a|^2 r_a + h_a^* h_b r_b) minimizes the
    self-interference error. With that u_a fixed the effective SNR is
    u^H R_S u / (u^H R_S u - 2 Re(r_E^H u) + A) in u_b, which peaks at
    u_b = A R_S^-1 r_E / (r_E^H R_S^-1 r_E). |h_a_hat| stands in for |h1|^2.

    Args:
        est_init: Initial estimate (its hypothesis selects the sequences)
        pair: Training pair
        off: Decomposed offset
        scaling: Relay amplification
        params: System parameters

    Returns:
        CombinerPair carrying r_E and the scale A

    Raises:
        DegenerateError: If r_E vanishes (h_b_hat = 0)
    """
    pilot = pilot_context(pair, off, scaling, params, est_init.hypothesis_used)
    return _lmep_combiners(pilot, est_init.h_a_hat, est_init.h_b_hat)


def _random_initial(pilot: PilotContext, rng: RngStream) -> ChannelEstimate:
    ups_a, ups_b, _, _ = composite_moments(pilot.params)
    h_a = complex(sample_cgauss(rng, ups_a, 1)[0])
    h_b = complex(sample_cgauss(rng, ups_b, 1)[0])
    return ChannelEstimate(h_a, h_b, method="random", hypothesis_used=pilot.hypothesis)


def _lmep_from_pilot(
    pilot: PilotContext, x: np.ndarray, init: str = "lmmse", rng: Optional[RngStream] = None
) -> Tuple[ChannelEstimate, Optional[CombinerPair], ChannelEstimate]:
    lmmse = _lmmse_from_pilot(pilot, x)
    if init == "lmmse":
        initial = lmmse
    elif init == "random":
        if rng is None:
            raise DomainError("random LMEP initialization needs a random stream")
        initial = _random_initial(pilot, rng)
    else:
        raise DomainError(f"unknown LMEP initialization '{init}'")

    try:
        combiners = _lmep_combiners(pilot, initial.h_a_hat, initial.h_b_hat)
    except DegenerateError as e:
        logger.debug(f"LMEP falling back to LMMSE: {e}")
        return replace(lmmse, fallback="degenerate"), None, initial

    h_a, h_b = combiners.apply(x)
    snr = effective_snr(combiners, estimate_context(pilot, initial.h_a_hat, initial.h_b_hat))
    estimate = ChannelEstimate(h_a, h_b, method="lmep", hypothesis_used=pilot.hypothesis, effective_snr=snr)
    return estimate, combiners, initial


def lmep_estimate(
    rx: ReceivedPilot,
    pair: TrainingPair,
    off: TimingOffset,
    scaling: RelayScaling,
    params: SystemParams,
    hypothesis: int = 0,
    init: str = "lmmse",
    rng: Optional[RngStream] = None,
) -> ChannelEstimate:
    """
    Two-step estimate: LMMSE (or random) initialization, then LMEP combiners.

    Args:
        rx: Pilot observation x_S1
        pair: Training pair
        off: Decomposed offset
        scaling: Relay amplification
        params: System parameters
        hypothesis: Arriving order assumed by the estimator
        init: "lmmse" or "random"
        rng: Stream for the random initialization

    Returns:
        ChannelEstimate with method "lmep", or the LMMSE estimate flagged
        fallback="degenerate" when r_E vanishes
    """
    pilot = pilot_context(pair, off, scaling, params, hypothesis)
    estimate, _, _ = _lmep_from_pilot(pilot, rx.samples, init, rng)
    return estimate


def slmep_gap(p_theta: float) -> float:
    """Required SNR gap 2 log((1 - P) / P) between the two arriving orders."""
    if not 0.0 < p_theta <= 0.5:
        raise DomainError(f"detection error probability must lie in (0, 1/2], got {p_theta}")
    return 2.0 * math.log((1.0 - p_theta) / p_theta)


@dataclass(frozen=True, eq=False)
class OrderTradeoff:
    """
    Combiner family trading the detected arriving order against the other one.

    ``combiners(w)`` minimizes w times the estimation error under the detected
    order plus (1 - w) times the error under the other order. Under the other
    order the self-interference target is zero, since cancellation built for
    the wrong order removes nothing. Both combiners solve one Hermitian system
    in the weighted covariance w R_S + (1 - w) R_S', and u_b keeps the
    effective-SNR scaling of LMEP with the weighted scale A. Weight 1 gives
    the LMEP combiners of the detected order, weight 0 the combiners
    maximizing the wrong-order SNR.
    """

    detected: SnrContext
    other: SnrContext
    p_theta: float

    def combiners(self, weight: float) -> CombinerPair:
        d, o = self.detected, self.other
        cov = weight * _signal_cov(d) + (1.0 - weight) * _signal_cov(o)
        r_e = weight * np.conj(d.h_b) * d.signal + (1.0 - weight) * np.conj(o.h_b) * o.signal
        solved = hermitian_solve(cov, np.column_stack([d.signal, r_e]))

        u_a = weight * np.conj(d.h_a) * solved[:, 0]
        _, err_a = _output_moments(u_a, d, d.h_a)
        leak_a, _ = _output_moments(u_a, o, o.h_a)
        a_detected = err_a + abs(d.h_b) ** 2 + d.noise_eff
        a_other = leak_a + abs(o.h_a) ** 2 + abs(o.h_b) ** 2 + o.noise_eff
        a_scale = weight * a_detected + (1.0 - weight) * a_other
        return CombinerPair(u_a=u_a, u_b=_scaled_cross(r_e, solved[:, 1], a_scale), r_e=r_e, a_scale=a_scale)

    def snrs(self, weight: float) -> Tuple[float, float]:
        """(effective SNR under the detected order, wrong-order SNR under the other)."""
        u = self.combiners(weight)
        return effective_snr(u, self.detected), effective_snr(u, self.other, "erroneous")

    def gap(self, weight: float) -> float:
        snr, snr_err = self.snrs(weight)
        return snr - snr_err

    def objective(self, weight: float) -> float:
        """Chernoff bound of the order-averaged error probability."""
        snr, snr_err = self.snrs(weight)
        return average_bep_chernoff(snr, snr_err, self.p_theta)


def order_tradeoff(
    rx: ReceivedPilot,
    pair: TrainingPair,
    off: TimingOffset,
    scaling: RelayScaling,
    params: SystemParams,
    p_theta: float,
    theta_hat: int = 0,
) -> OrderTradeoff:
    """Tradeoff family around the LMMSE estimates of both arriving orders."""
    if not 0.0 < p_theta <= 0.5:
        raise DomainError(f"detection error probability must lie in (0, 1/2], got {p_theta}")
    contexts = []
    for hypothesis in (theta_hat, 1 - theta_hat):
        pilot = pilot_context(pair, off, scaling, params, hypothesis)
        init = _lmmse_from_pilot(pilot, rx.samples)
        contexts.append(estimate_context(pilot, init.h_a_hat, init.h_b_hat))
    return OrderTradeoff(detected=contexts[0], other=contexts[1], p_theta=p_theta)


def _gap_roots(tradeoff: OrderTradeoff, target: float) -> List[float]:
    def residual(weight: float) -> float:
        return tradeoff.gap(weight) - target

    grid = np.linspace(0.0, 1.0, SLMEP_GRID + 1)
    values = [residual(w) for w in grid]
    roots = [float(w) for w, v in zip(grid, values) if v == 0.0]
    for lo, hi, v_lo, v_hi in zip(grid, grid[1:], values, values[1:]):
        if v_lo * v_hi < 0.0:
            try:
                roots.append(optimize.bisect(residual, lo, hi, xtol=1e-15, maxiter=SLMEP_MAX_ITER))
            except RuntimeError as e:
                logger.debug(f"SLMEP bisection on [{lo:.4g}, {hi:.4g}] did not converge: {e}")
    return roots


def slmep_estimate(
    rx: ReceivedPilot,
    pair: TrainingPair,
    off: TimingOffset,
    scaling: RelayScaling,
    params: SystemParams,
    p_theta: float,
    theta_hat: int = 0,
) -> ChannelEstimate:
    """
    Scaled LMEP estimate hedging against a wrong arriving-order decision.

    The weight of the OrderTradeoff family plays the multiplier of the
    constrained problem: every weight where the SNR gap equals
    2 log((1 - P) / P) is found by bisection, and among those and the two
    ends of the family the one with the lowest averaged error bound wins.

    Args:
        rx: Pilot observation x_S1
        pair: Training pair
        off: Decomposed offset
        scaling: Relay amplification
        params: System parameters
        p_theta: Probability that theta_hat is wrong, in (0, 1/2]
        theta_hat: Detected arriving order

    Returns:
        ChannelEstimate with method "slmep", its weight and constraint
        residual. fallback is "boundary" when an end of the family beats every
        constrained solution and "infeasible" when the gap is never reached;
        an infeasible gap at weight 1 returns the LMEP estimate itself.
    """
    target = slmep_gap(p_theta)
    detected = pilot_context(pair, off, scaling, params, theta_hat)
    lmep, combiners, _ = _lmep_from_pilot(detected, rx.samples)
    if combiners is None:
        return lmep

    tradeoff = order_tradeoff(rx, pair, off, scaling, params, p_theta, theta_hat)
    try:
        roots = _gap_roots(tradeoff, target)
        candidates = [(1.0, False)] + [(w, True) for w in roots] + [(0.0, False)]
        weight, on_constraint = min(candidates, key=lambda c: tradeoff.objective(c[0]))
        combiners = tradeoff.combiners(weight)
    except DegenerateError as e:
        logger.debug(f"SLMEP keeping LMEP: {e}")
        return replace(lmep, fallback="degenerate")

    residual = abs(tradeoff.gap(weight) - target)
    fallback = None
    if not roots:
        fallback = "infeasible"
        logger.debug(f"SLMEP gap {target:.4g} unreachable, weight {weight:g}")
    elif not on_constraint:
        fallback = "boundary"
    elif residual > SLMEP_TOL:
        logger.debug(f"SLMEP constraint residual {residual:.3e} above tolerance")
    if fallback == "infeasible" and weight == 1.0:
        return replace(lmep, fallback=fallback, constraint_residual=residual, order_weight=weight)

    h_a, h_b = combiners.apply(rx.samples)
    return ChannelEstimate(
        h_a, h_b, method="slmep", hypothesis_used=theta_hat,
        effective_snr=effective_snr(combiners, tradeoff.detected), fallback=fallback,
        constraint_residual=residual, order_weight=weight,
    )


def mse_from_information(b1: float, b2_mag: float, moments: Moments) -> float:
    """Summed MSE (ups_s + 2 ups_p B1) / (1 + ups_s B1 + ups_p B1^2 - ups_p |B2|^2)."""
    _, _, ups_s, ups_p = moments
    return (ups_s + 2.0 * ups_p * b1) / (1.0 + ups_s * b1 + ups_p * b1 ** 2 - ups_p * b2_mag ** 2)


def analytic_mse(params: SystemParams, off: TimingOffset, scaling: RelayScaling, pair: TrainingPair) -> float:
    """Closed-form summed LMMSE error for a correct arriving order."""
    b1, b2_mag = b1_b2(params, off, scaling, pair)
    return mse_from_information(b1, b2_mag, composite_moments(params))


@dataclass(frozen=True)
class ErroneousMseTerms:
    q0: float
    q1: float
    q2: float
    l1: complex
    l2: complex
    b1: float


def erroneous_mse_terms(
    params: SystemParams,
    off: TimingOffset,
    scaling: RelayScaling,
    pair: TrainingPair,
    truth: int = 0,
) -> ErroneousMseTerms:
    """
    Terms of the LMMSE error when the estimator assumes the wrong arriving order.

    The information matrix F comes from the assumed order, the cross matrix L
    pairs the assumed sequences with the true ones and K is the adjugate of the
    posterior precision, so that the error is ups_s - Q1/Q0 + Q2/Q0^2.
    """
    ups_a, ups_b, ups_s, ups_p = composite_moments(params)
    assumed = 1 - truth
    b1, _ = b1_b2(params, off, scaling, pair)
    lam, gamma = lambda_gamma_diagonals(off, scaling.gamma_i, scaling.gamma_s, params.n_pilot)
    weights = overlap_gain(params, gamma ** 2) * lam ** 2

    ra_assumed, rb_assumed = build_equivalent_sequences(pair, off, assumed)
    ra_true, rb_true = build_equivalent_sequences(pair, off, truth)
    b2 = np.vdot(ra_assumed, weights * rb_assumed)

    f = np.array([[b1, b2], [np.conj(b2), b1]], dtype=np.complex128)
    cross = np.array([
        [np.vdot(ra_assumed, weights * ra_true), np.vdot(ra_assumed, weights * rb_true)],
        [np.vdot(rb_assumed, weights * ra_true), np.vdot(rb_assumed, weights * rb_true)],
    ])
    prior = np.diag([ups_a, ups_b]).astype(np.complex128)
    adj = np.array([
        [ups_a * (1.0 + ups_b * b1), -ups_p * b2],
        [-ups_p * np.conj(b2), ups_b * (1.0 + ups_a * b1)],
    ])

    q0 = 1.0 + ups_s * b1 + ups_p * b1 ** 2 - ups_p * abs(b2) ** 2
    q1 = 2.0 * float(np.real(np.trace(adj @ cross @ prior)))
    bias = adj @ cross @ prior @ cross.conj().T @ adj.conj().T
    noise = adj @ f @ adj.conj().T
    q2 = float(np.real(np.trace(bias) + np.trace(noise)))
    return ErroneousMseTerms(q0=q0, q1=q1, q2=q2, l1=complex(cross[0, 0]), l2=complex(cross[1, 1]), b1=b1)


def analytic_mse_err(
    params: SystemParams,
    off: TimingOffset,
    scaling: RelayScaling,
    pair: TrainingPair,
    truth: int = 0,
) -> float:
    """Closed-form summed LMMSE error under a wrong arriving-order decision."""
    terms = erroneous_mse_terms(params, off, scaling, pair, truth)
    _, _, ups_s, _ = composite_moments(params)
    return ups_s - terms.q1 / terms.q0 + terms.q2 / terms.q0 ** 2


def mse_err_high_snr_limit(
    params: SystemParams,
    off: TimingOffset,
    scaling: RelayScaling,
    pair: TrainingPair,
    truth: int = 0,
) -> float:
    """High-SNR value |1 - l1/B1|^2 ups_a + |1 - l2/B1|^2 ups_b of the wrong-order error."""
    terms = erroneous_mse_terms(params, off, scaling, pair, truth)
    ups_a, ups_b, _, _ = composite_moments(params)
    return abs(1.0 - terms.l1 / terms.b1) ** 2 * ups_a + abs(1.0 - terms.l2 / terms.b1) ** 2 * ups_b


def mse_err_floor_bound(params: SystemParams, off: TimingOffset) -> float:
    """Irreducible wrong-order error floor (tau / (N T_s))^2 ups_s."""
    _, _, ups_s, _ = composite_moments(params)
    return (off.tau / (params.n_pilot * params.symbol_period)) ** 2 * ups_s


def mse_floor_correlated(params: SystemParams, off: TimingOffset, scaling: RelayScaling) -> float:
    """Large-N MSE floor of fully correlated pilots."""
    _, _, ups_s, ups_p = composite_moments(params)
    gain = overlap_gain(params, scaling.gamma_s_sq)
    return 2.0 * ups_p / (ups_s + 2.0 * ups_p * off.tau_symbols * gain)


def bit_error_probability(snr: Union[float, np.ndarray], beta: float = 1.0) -> Union[float, np.ndarray]:
    """Coherent-detection error probability Q(sqrt(beta * snr))."""
    return qfunc(np.sqrt(beta * np.asarray(snr, dtype=float)))


def average_bep(snr: float, snr_err: float, p_theta: float) -> float:
    """Error probability averaged over a correct and a wrong arriving-order decision."""
    return (1.0 - p_theta) * float(qfunc(math.sqrt(snr))) + p_theta * float(qfunc(math.sqrt(snr_err)))


def average_bep_chernoff(snr: float, snr_err: float, p_theta: float) -> float:
    """Chernoff upper bound of average_bep."""
    return 0.5 * (1.0 - p_theta) * math.exp(-snr / 2.0) + 0.5 * p_theta * math.exp(-snr_err / 2.0)
