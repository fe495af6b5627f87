# ==== twrn_sim/core/training.py ====
"""DFT-column training pairs and their cross-correlation under an offset."""

import logging
import re
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateError, DomainError, ShapeError
from .numerics import ComplexVec, RngStream, as_complex_vector
from .signal_model import (
    SystemParams,
    TimingOffset,
    build_equivalent_sequences,
    decompose_offset,
    lambda_gamma_diagonals,
)

logger = logging.getLogger(__name__)

UNIT_MODULUS_TOL = 1e-12
GRID_POINTS_PER_SYMBOL = 16

_DFT_LABEL = re.compile(r"^dft:(\d+),(\d+)$")


@dataclass(frozen=True, eq=False)
class TrainingPair:
    """Unit-modulus pilots of the two sources, optionally indexed by DFT column."""

    t1: ComplexVec
    t2: ComplexVec
    k1: Optional[int] = None
    k2: Optional[int] = None
    label: str = ""

    def __post_init__(self):
        t1 = as_complex_vector(self.t1)
        t2 = as_complex_vector(self.t2)
        if t1.shape != t2.shape:
            raise ShapeError(f"pilots differ in length: {t1.shape[0]} vs {t2.shape[0]}")
        for name, t in (("t1", t1), ("t2", t2)):
            if np.max(np.abs(np.abs(t) - 1.0)) > UNIT_MODULUS_TOL:
                raise DomainError(f"{name} is not unit-modulus")
        object.__setattr__(self, "t1", t1)
        object.__setattr__(self, "t2", t2)

    @property
    def length(self) -> int:
        return self.t1.shape[0]


def dft_column(n: int, k: int) -> ComplexVec:
    """
    Column k (1-based) of the N-point DFT matrix.

    Args:
        n: Sequence length N
        k: Column index in [1, N]

    Returns:
        Vector with entries exp(-j (i-1) 2 pi (k-1) / N), i = 1..N

    Raises:
        DomainError: If k is out of range
    """
    if not 1 <= k <= n:
        raise DomainError(f"DFT column {k} outside [1, {n}]")
    idx = np.arange(n)
    return np.exp(-1j * idx * 2.0 * np.pi * (k - 1) / n)


def dft_pair(n: int, k1: int, k2: int, label: Optional[str] = None) -> TrainingPair:
    return TrainingPair(
        t1=dft_column(n, k1), t2=dft_column(n, k2), k1=k1, k2=k2,
        label=label or f"dft:{k1},{k2}",
    )


def optimal_pair(n: int) -> TrainingPair:
    """
    Min-max optimal DFT pair: columns 1 and N/2+1 (even N) or 1 and (N+1)/2+1 (odd N).

    Raises:
        DomainError: If N < 2
    """
    if n < 2:
        raise DomainError(f"optimal pair needs N >= 2, got {n}")
    spacing = n // 2 if n % 2 == 0 else (n + 1) // 2
    return dft_pair(n, 1, 1 + spacing, label="optimal")


def type1_pair(n: int) -> TrainingPair:
    """All-ones pilot against the pilot whose second half is negated."""
    half = (n + 1) // 2
    t2 = np.concatenate([np.ones(half), -np.ones(n - half)])
    return TrainingPair(t1=np.ones(n), t2=t2, label="type1")


def type2_pair(n: int) -> TrainingPair:
    """Third and fourth DFT columns."""
    if n < 4:
        raise DomainError(f"type2 pair needs N >= 4, got {n}")
    return dft_pair(n, 3, 4, label="type2")


def correlated_pair(n: int) -> TrainingPair:
    """Identical all-ones pilots, the fully correlated worst case."""
    return TrainingPair(t1=np.ones(n), t2=np.ones(n), label="correlated")


def qpsk_random_pair(n: int, rng: RngStream) -> TrainingPair:
    symbols = rng.generator.integers(0, 4, size=2 * n)
    points = np.exp(1j * (np.pi / 4 + np.pi / 2 * symbols))
    return TrainingPair(t1=points[:n], t2=points[n:], label="qpsk-random")


def pair_from_label(label: str, n: int, rng: Optional[RngStream] = None) -> TrainingPair:
    """
    Resolve a configuration label into a training pair.

    Args:
        label: One of optimal, type1, type2, correlated, qpsk-random or dft:k1,k2
        n: Sequence length
        rng: Stream for the qpsk-random draw

    Returns:
        The matching TrainingPair

    Raises:
        DomainError: For unknown labels or a missing stream
    """
    if label == "optimal":
        return optimal_pair(n)
    if label == "type1":
        return type1_pair(n)
    if label == "type2":
        return type2_pair(n)
    if label == "correlated":
        return correlated_pair(n)
    if label == "qpsk-random":
        if rng is None:
            raise DomainError("qpsk-random training needs a random stream")
        return qpsk_random_pair(n, rng)
    match = _DFT_LABEL.match(label)
    if match:
        return dft_pair(n, int(match.group(1)), int(match.group(2)))
    raise DomainError(f"unknown training label '{label}'")


def rho(pair: TrainingPair, off: TimingOffset, lam: np.ndarray) -> complex:
    """
    Normalized cross-correlation of the stretched pilots seen through Lambda.

    Args:
        pair: Training pair
        off: Decomposed offset
        lam: Lambda matrix (or its diagonal) built from the same offset

    Returns:
        r1^H Lambda^2 r2 / (||Lambda r1|| ||Lambda r2||)

    Raises:
        DegenerateError: If either weighted sequence has zero norm
    """
    lam_d = np.real(np.diag(lam)) if np.ndim(lam) == 2 else np.real(np.asarray(lam))
    r1, r2 = build_equivalent_sequences(pair, off, 0)
    w1 = lam_d * r1
    w2 = lam_d * r2
    denom = np.linalg.norm(w1) * np.linalg.norm(w2)
    if denom == 0.0:
        raise DegenerateError("weighted training sequence has zero norm")
    return complex(np.vdot(w1, w2) / denom)


def rho_worstcase_bound(off: TimingOffset, n: int) -> float:
    """Upper bound ((N T_s - tau) / (N T_s))^2 on |rho| for an arbitrary pair."""
    span = n * off.symbol_period
    return ((span - off.tau) / span) ** 2


def max_rho_on_grid(
    pair: TrainingPair, params: SystemParams, points_per_symbol: int = GRID_POINTS_PER_SYMBOL
) -> float:
    """Largest |rho| over an offset grid spanning [0, N T_s]."""
    n = pair.length
    grid_params = params if params.guard_len == n else SystemParams(
        n_pilot=n, source_power=params.source_power, symbol_period=params.symbol_period
    )
    taus = np.linspace(0.0, n * params.symbol_period, points_per_symbol * n + 1)
    worst = 0.0
    for tau in taus:
        off = decompose_offset(float(tau), grid_params)
        lam, _ = lambda_gamma_diagonals(off, 1.0, 1.0, n)
        worst = max(worst, abs(rho(pair, off, lam)))
    logger.debug(f"max |rho| of {pair.label} over {taus.size} offsets: {worst:.6g}")
    return worst
