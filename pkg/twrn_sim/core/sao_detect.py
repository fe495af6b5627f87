# ==== twrn_sim/core/sao_detect.py ====
"""GLRT detection of which pilot reaches the relay first, with its distance and error bounds."""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from ..config import MIN_DETECTION_LENGTH, RANK_TOL
from .errors import DomainError, ShapeError
from .numerics import ComplexMat, ComplexVec, hermitian_solve, qfunc
from .relay_power import RelayScaling
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

# The EED statistic has variance 2 d N_R0 / (P_s T_s) at first order in the noise
EED_VARIANCE_FACTOR = 2.0


@dataclass(frozen=True)
class _Projection:
    basis: ComplexMat
    projector: ComplexMat
    pseudo_inverse: ComplexMat
    rank_deficient: bool


def _min_eigenvalue_2x2(gram: np.ndarray) -> float:
    a = float(np.real(gram[0, 0]))
    d = float(np.real(gram[1, 1]))
    b = abs(gram[0, 1])
    return 0.5 * (a + d) - math.sqrt(0.25 * (a - d) ** 2 + b ** 2)


def _project(basis: ComplexMat, n_pilot: int) -> _Projection:
    gram = basis.conj().T @ basis
    if _min_eigenvalue_2x2(gram) < RANK_TOL * n_pilot:
        pinv = np.linalg.pinv(basis)
        return _Projection(basis, basis @ pinv, pinv, True)
    pinv = hermitian_solve(gram, basis.conj().T)
    return _Projection(basis, basis @ pinv, pinv, False)


@dataclass(frozen=True, eq=False)
class HypothesisModel:
    """Signal matrices and orthogonal projections of both arriving orders."""

    t_h0: ComplexMat
    t_h1: ComplexMat
    z_h0: ComplexMat
    z_h1: ComplexMat
    ls_h0: ComplexMat
    ls_h1: ComplexMat
    rank_deficient: bool = False
    undetermined: bool = False

    def basis(self, theta: int) -> ComplexMat:
        return self.t_h0 if theta == 0 else self.t_h1

    def projector(self, theta: int) -> ComplexMat:
        return self.z_h0 if theta == 0 else self.z_h1

    def swapped(self) -> "HypothesisModel":
        """The same model with the two arriving orders exchanged."""
        return HypothesisModel(
            t_h0=self.t_h1, t_h1=self.t_h0, z_h0=self.z_h1, z_h1=self.z_h0,
            ls_h0=self.ls_h1, ls_h1=self.ls_h0,
            rank_deficient=self.rank_deficient, undetermined=self.undetermined,
        )


@dataclass(frozen=True)
class SaoDecision:
    theta_hat: int
    statistic: float
    ls_h0: Tuple[complex, complex]
    ls_h1: Tuple[complex, complex]
    undetermined: bool = False


def build_hypotheses(
    pair: TrainingPair,
    off: TimingOffset,
    params: SystemParams,
    scaling: Optional[RelayScaling] = None,
) -> HypothesisModel:
    """
    Build T = Lambda [r_a, r_b] for both arriving orders and their projections.

    With a relay scaling the matrices become Gamma Lambda [r_a, r_b], which
    models detection from the source's own pilot observation.

    Args:
        pair: Training pair
        off: Decomposed offset
        params: System parameters
        scaling: Relay amplification for source-side detection, None at the relay

    Returns:
        HypothesisModel; rank_deficient is set when a pseudo-inverse was needed
        and undetermined when the offset is zero
    """
    if scaling is None:
        lam, gamma = lambda_gamma_diagonals(off, 1.0, 1.0, params.n_pilot)
    else:
        lam, gamma = lambda_gamma_diagonals(off, scaling.gamma_i, scaling.gamma_s, params.n_pilot)
    weight = (gamma * lam)[:, None]

    projections = []
    for theta in (0, 1):
        r_a, r_b = build_equivalent_sequences(pair, off, theta)
        projections.append(_project(weight * np.column_stack([r_a, r_b]), params.n_pilot))
    p0, p1 = projections

    rank_deficient = p0.rank_deficient or p1.rank_deficient
    if rank_deficient:
        logger.debug("hypothesis matrices rank deficient, using pseudo-inverse projections")
    return HypothesisModel(
        t_h0=p0.basis, t_h1=p1.basis, z_h0=p0.projector, z_h1=p1.projector,
        ls_h0=p0.pseudo_inverse, ls_h1=p1.pseudo_inverse,
        rank_deficient=rank_deficient, undetermined=off.tau == 0.0,
    )


def _energy(projector: ComplexMat, x: ComplexVec) -> float:
    return float(np.linalg.norm(projector @ x) ** 2)


def glrt_detect(x_r: Union[ReceivedPilot, np.ndarray], model: HypothesisModel) -> SaoDecision:
    """
    Decide the arriving order by comparing the projected energies.

    Args:
        x_r: Observation (ReceivedPilot or raw samples)
        model: Hypothesis model for the observation's offset

    Returns:
        SaoDecision with theta_hat = 0 when ||Z0 x||^2 >= ||Z1 x||^2

    Raises:
        ShapeError: If the observation length does not match the model
    """
    x = x_r.samples if isinstance(x_r, ReceivedPilot) else np.asarray(x_r, dtype=np.complex128)
    if x.shape != (model.t_h0.shape[0],):
        raise ShapeError(f"observation of shape {x.shape} does not match model rows {model.t_h0.shape[0]}")
    statistic = _energy(model.z_h0, x) - _energy(model.z_h1, x)
    ls0 = model.ls_h0 @ x
    ls1 = model.ls_h1 @ x
    return SaoDecision(
        theta_hat=0 if statistic >= 0.0 else 1,
        statistic=statistic,
        ls_h0=(complex(ls0[0]), complex(ls0[1])),
        ls_h1=(complex(ls1[0]), complex(ls1[1])),
        undetermined=model.undetermined,
    )


def eed(model: HypothesisModel, ch: ChannelRealization, truth: int = 0) -> float:
    """
    Noiseless gap between the statistics of the true and the other order.

    Raises:
        DomainError: If both channel gains are zero
    """
    h = ch.vector
    if not np.any(h):
        raise DomainError("distance is undefined for a zero channel")
    v = model.basis(truth) @ h
    return _energy(model.projector(truth), v) - _energy(model.projector(1 - truth), v)


def eed_lower_bound(params: SystemParams, off: TimingOffset, h_norm_sq: float) -> float:
    """Large-N lower bound ||h||^2 N (1 - (N - tau/T_s)^2 / (N^2 - (lam/T_s)^2))."""
    n = params.n_pilot
    return h_norm_sq * n * (1.0 - (n - off.tau_symbols) ** 2 / (n ** 2 - off.lam_fraction ** 2))


def chi_factor(params: SystemParams, off: TimingOffset) -> float:
    n = params.n_pilot
    tau_s = off.tau_symbols
    return n ** 3 * tau_s * (2 * n - tau_s) / (n ** 2 - off.lam_fraction ** 2) ** 2


def equivalent_noise_variance_bound(params: SystemParams, off: TimingOffset, ch: ChannelRealization) -> float:
    """Upper bound on the variance of the noise term of the detection statistic."""
    tau_s = off.tau_symbols
    n = params.n_pilot
    return 2.0 * (2.0 - tau_s / n) * tau_s * ch.norm_sq * params.relay_noise_var


def p_theta_bound(
    params: SystemParams, off: TimingOffset, h_norm_sq: float, printed: bool = False
) -> float:
    """
    Gaussian-tail approximation of the arriving-order detection error.

    The default is Q(||h|| sqrt(chi P_s T_s / (2 N_R0))). The tail argument
    d / sqrt(v_E) with d = ||h||^2 chi and v_E = 2 ||h||^2 chi N_R0 / (P_s T_s)
    carries the factor 2 from the noise variance of the statistic. Without it
    (printed=True) the bound is tighter than the simulated GLRT error at
    moderate SNR, so it is no longer a bound.

    Args:
        params: System parameters, N >= 8
        off: Decomposed offset
        h_norm_sq: ||h||^2 = |h1|^2 + |h2|^2
        printed: Drop the variance factor 2 (the tighter, optimistic form)

    Returns:
        Probability in [0, 1/2]; exactly 1/2 for a zero offset

    Raises:
        DomainError: If N < 8
    """
    if params.n_pilot < MIN_DETECTION_LENGTH:
        raise DomainError(f"detection bound needs N >= {MIN_DETECTION_LENGTH}, got {params.n_pilot}")
    if off.tau == 0.0:
        return 0.5
    factor = 1.0 if printed else EED_VARIANCE_FACTOR
    argument = math.sqrt(h_norm_sq * chi_factor(params, off) / (factor * params.relay_noise_var))
    return float(qfunc(argument))
