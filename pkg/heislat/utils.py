"""
Utility functions and exception types for heislat
"""

import math
import numbers
from typing import Sequence, Tuple, Union

import numpy as np

Matrix2 = Tuple[Tuple[float, float], Tuple[float, float]]
Vector2 = Tuple[float, float]

DET_TOLERANCE = 1e-9
MAX_SEED = 2 ** 64


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation"""


class PreconditionError(ValueError):
    """A documented precondition of an operation does not hold"""


class ConfigError(ValueError):
    """Invalid experiment or command-line configuration"""


class EnumerationBudgetError(RuntimeError):
    """Lattice point enumeration would exceed its candidate budget"""


class InvariantViolation(ArithmeticError):
    """An internal invariant failed (numerical drift or logic error)"""


def as_matrix2(M: Union[Sequence, np.ndarray]) -> Matrix2:
    """
    Convert a 2x2 array-like into a tuple-of-tuples of floats

    Parameters:
    -----------
    M : array-like
        Matrix with shape (2, 2)

    Returns:
    --------
    Matrix2
        ((a, b), (c, d))
    """
    arr = np.asarray(M, dtype=float)
    if arr.shape != (2, 2):
        raise ValueError(f"Expected a 2x2 matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("Matrix entries must be finite")
    return ((float(arr[0, 0]), float(arr[0, 1])), (float(arr[1, 0]), float(arr[1, 1])))


def as_vector2(v: Union[Sequence, np.ndarray]) -> Vector2:
    """Convert a length-2 array-like into a tuple of floats"""
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.shape != (2,):
        raise ValueError(f"Expected a 2-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("Vector entries must be finite")
    return (float(arr[0]), float(arr[1]))


def as_int_vector2(v: Union[Sequence, np.ndarray]) -> Tuple[int, int]:
    """Convert a length-2 array-like of integers into a tuple of Python ints"""
    if isinstance(v, str):
        v = [part.strip() for part in v.split(",")]
    items = list(v)
    if len(items) != 2:
        raise ValueError(f"Expected an integer 2-vector, got {v!r}")
    out = []
    for item in items:
        if isinstance(item, str):
            item = int(item)
        if isinstance(item, numbers.Integral):
            out.append(int(item))
        elif isinstance(item, numbers.Real) and float(item).is_integer():
            out.append(int(item))
        else:
            raise ValueError(f"Non-integer entry {item!r} in {v!r}")
    return (out[0], out[1])


def det2(M: Matrix2) -> float:
    """Determinant of a 2x2 tuple matrix"""
    return M[0][0] * M[1][1] - M[0][1] * M[1][0]


def check_unimodular(M: Matrix2, what: str = "matrix") -> None:
    """
    Validate |det(M) - 1| <= DET_TOLERANCE

    Raises:
    -------
    DomainError
        If the determinant is not 1 within tolerance
    """
    d = det2(M)
    if not abs(d - 1.0) <= DET_TOLERANCE:
        raise DomainError(f"{what} must have determinant 1 (got {d!r})")


def validate_seed(seed: int) -> int:
    """
    Validate a master seed (64-bit unsigned)

    Parameters:
    -----------
    seed : int
        Master seed

    Returns:
    --------
    int
        The seed as a Python int
    """
    if isinstance(seed, bool) or not isinstance(seed, numbers.Integral):
        raise ConfigError(f"Seed must be an integer, got {seed!r}")
    seed = int(seed)
    if not 0 <= seed < MAX_SEED:
        raise ConfigError(f"Seed must lie in [0, 2**64), got {seed}")
    return seed


def validate_eps(eps: float) -> float:
    """Validate a plate thickness 0 < eps < 1"""
    eps = float(eps)
    if not (math.isfinite(eps) and 0.0 < eps < 1.0):
        raise ValueError(f"eps must satisfy 0 < eps < 1, got {eps}")
    return eps


def frac(x):
    """Fractional part x - floor(x), elementwise (np.mod semantics)"""
    return np.mod(x, 1.0)


def parse_int_list(text: str) -> Tuple[int, ...]:
    """Parse '1,0' or '4,8,16' into a tuple of ints"""
    return tuple(int(part) for part in text.split(",") if part.strip())


def parse_float_list(text: str) -> Tuple[float, ...]:
    """Parse '2,4,8' into a tuple of floats"""
    return tuple(float(part) for part in text.split(",") if part.strip())
