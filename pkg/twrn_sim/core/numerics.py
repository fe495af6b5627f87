# ==== twrn_sim/core/numerics.py ====
"""Complex linear algebra, Gaussian tail and reproducible random streams."""

import logging
from typing import Union

import numpy as np
import numpy.typing as npt
from scipy import linalg
from scipy.special import erfc

from ..config import HERMITIAN_TOL, JITTER_SCALE, SOLVE_RESIDUAL_TOL
from .errors import DecompositionError, DomainError, ShapeError

logger = logging.getLogger(__name__)

ComplexVec = npt.NDArray[np.complex128]
ComplexMat = npt.NDArray[np.complex128]

_U64 = 1 << 64


def as_complex_vector(values: npt.ArrayLike) -> ComplexVec:
    """
    Validate and convert values into a one-dimensional complex vector.

    Args:
        values: Anything numpy can turn into a 1-D array

    Returns:
        A complex128 copy of the values

    Raises:
        ShapeError: If the input is not one-dimensional or is empty
        DomainError: If any entry is NaN or infinite
    """
    vec = np.array(values, dtype=np.complex128)
    if vec.ndim != 1 or vec.size < 1:
        raise ShapeError(f"expected a non-empty vector, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise DomainError("vector has non-finite entries")
    return vec


def as_complex_matrix(values: npt.ArrayLike, hermitian: bool = False) -> ComplexMat:
    """
    Validate and convert values into a two-dimensional complex matrix.

    Args:
        values: Anything numpy can turn into a 2-D array
        hermitian: Require M = M^H within the Hermitian tolerance

    Returns:
        A complex128 copy of the values

    Raises:
        ShapeError: If the input is not a non-empty matrix (or not square when hermitian)
        DomainError: If entries are non-finite or the Hermitian check fails
    """
    mat = np.array(values, dtype=np.complex128)
    if mat.ndim != 2 or mat.size < 1:
        raise ShapeError(f"expected a non-empty matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise DomainError("matrix has non-finite entries")
    if hermitian:
        if mat.shape[0] != mat.shape[1]:
            raise ShapeError(f"Hermitian matrix must be square, got {mat.shape}")
        if not is_hermitian(mat):
            raise DomainError("matrix is not Hermitian")
    return mat


def is_hermitian(mat: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    """Element-wise check of M = M^H."""
    return mat.shape[0] == mat.shape[1] and bool(np.all(np.abs(mat - mat.conj().T) <= tol))


def hermitian_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Solve A x = b for Hermitian positive-definite A.

    The Cholesky factorization is retried once with a diagonal jitter of
    1e-12 * trace(A) / n before giving up.

    Args:
        a: Square Hermitian positive-definite matrix
        b: Right-hand side vector, or matrix of stacked right-hand sides

    Returns:
        Solution with the same shape as b

    Raises:
        ShapeError: If A is not square or does not match b
        DecompositionError: If A is not positive-definite
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"system matrix must be square, got {a.shape}")
    if b.ndim not in (1, 2) or b.shape[0] != a.shape[0]:
        raise ShapeError(f"right-hand side {b.shape} does not match matrix {a.shape}")

    try:
        factor = linalg.cho_factor(a, lower=True, check_finite=False)
    except linalg.LinAlgError:
        n = a.shape[0]
        jitter = JITTER_SCALE * float(np.real(np.trace(a))) / n
        logger.debug(f"Cholesky failed, retrying with diagonal jitter {jitter:.3e}")
        try:
            factor = linalg.cho_factor(a + jitter * np.eye(n), lower=True, check_finite=False)
        except linalg.LinAlgError as e:
            raise DecompositionError(f"matrix is not positive-definite: {e}") from e

    x = linalg.cho_solve(factor, b, check_finite=False)
    if not np.all(np.isfinite(x)):
        raise DecompositionError("solve produced non-finite values")
    return x


def solve_residual(a: np.ndarray, x: np.ndarray, b: np.ndarray) -> float:
    """Relative residual ||A x - b|| / ||b||."""
    norm_b = np.linalg.norm(b)
    if norm_b == 0.0:
        return float(np.linalg.norm(a @ x))
    return float(np.linalg.norm(a @ x - b) / norm_b)


def solve_is_accurate(a: np.ndarray, x: np.ndarray, b: np.ndarray) -> bool:
    return solve_residual(a, x, b) <= SOLVE_RESIDUAL_TOL


def qfunc(x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """
    Gaussian tail probability Q(x) = P(Z > x) for a standard normal Z.

    Args:
        x: Finite real scalar or array

    Returns:
        Tail probability with the shape of the input
    """
    result = 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))
    if np.ndim(result) == 0:
        return float(result)
    return result


class RngStream:
    """
    Reproducible random stream keyed by (seed, stream id).

    Backed by the counter-based Philox generator, so any (seed, stream id)
    pair can be opened independently of every other one.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if not 0 <= seed < _U64:
            raise DomainError(f"seed must fit in 64 bits, got {seed}")
        if not 0 <= stream_id < _U64:
            raise DomainError(f"stream id must fit in 64 bits, got {stream_id}")
        self.seed = seed
        self.stream_id = stream_id
        self.generator = np.random.Generator(np.random.Philox(key=seed + (stream_id << 64)))

    @classmethod
    def for_trial(cls, seed: int, point_index: int, trial_index: int) -> "RngStream":
        """Stream owned by one trial of one sweep point."""
        return cls(seed, (point_index << 32) | trial_index)

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        return float(self.generator.uniform(low, high))

    def normal(self, size: int) -> np.ndarray:
        return self.generator.standard_normal(size)

    def bits(self, size: int) -> np.ndarray:
        return self.generator.integers(0, 2, size=size)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def sample_cgauss(rng: RngStream, variance: float, count: int) -> ComplexVec:
    """
    Draw circularly symmetric complex Gaussian samples.

    Args:
        rng: Stream to draw from
        variance: Total variance E|x|^2, split equally over real and imaginary parts
        count: Number of samples

    Returns:
        Vector of count i.i.d. samples

    Raises:
        DomainError: If variance is negative or count is not positive
    """
    if variance < 0:
        raise DomainError(f"variance must be nonnegative, got {variance}")
    if count < 1:
        raise DomainError(f"count must be positive, got {count}")
    scale = np.sqrt(variance / 2.0)
    draws = rng.normal(2 * count)
    return scale * (draws[:count] + 1j * draws[count:])
