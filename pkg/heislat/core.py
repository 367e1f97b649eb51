"""
Core Heisenberg Group Arithmetic

This module contains the group law of the 3-dimensional Heisenberg group H(R),
the volume-preserving automorphism group SL(2,R) x| R^2 and its action on points,
and the primitivity test for integer points.

Group law:  (r,s,t) + (r',s',t') = (r+r', s+s', t+t'+rs'-sr')
Action:     (g, v) . (r,s,t) = (g*(r,s), t - v^T g*(r,s)),  g* = (g^{-1})^T

Integer points are exact Python ints; the vectorised helpers work in int64 and
are exact while |coords| < 2**30.
"""

import math
import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

from .utils import (
    Matrix2, Vector2, DET_TOLERANCE, InvariantViolation,
    as_matrix2, as_vector2, check_unimodular, det2,
)

logger = logging.getLogger(__name__)

INT_SAFE_BOUND = 2 ** 30


@dataclass(frozen=True)
class HPoint:
    """A point (r, s, t) of H(R)"""
    r: float
    s: float
    t: float

    def __post_init__(self):
        for name in ("r", "s", "t"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"HPoint.{name} must be finite, got {value!r}")

    def __add__(self, other: "HPoint") -> "HPoint":
        return h_add(self, other)

    def __neg__(self) -> "HPoint":
        return h_neg(self)

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.s, self.t], dtype=float)


@dataclass(frozen=True)
class HIntPoint:
    """A point (m1, m2, k) of H(Z)"""
    m1: int
    m2: int
    k: int

    def __add__(self, other: "HIntPoint") -> "HIntPoint":
        return HIntPoint(
            self.m1 + other.m1,
            self.m2 + other.m2,
            self.k + other.k + self.m1 * other.m2 - self.m2 * other.m1,
        )

    def __neg__(self) -> "HIntPoint":
        return HIntPoint(-self.m1, -self.m2, -self.k)

    def as_hpoint(self) -> HPoint:
        return HPoint(float(self.m1), float(self.m2), float(self.k))


@dataclass(frozen=True)
class AutElement:
    """
    A volume-preserving automorphism (g, v) of H(R)

    g is stored as ((a, b), (c, d)) with det(g) = 1, v as (x, y).
    """
    g: Matrix2
    v: Vector2

    def __post_init__(self):
        object.__setattr__(self, "g", as_matrix2(self.g))
        object.__setattr__(self, "v", as_vector2(self.v))
        check_unimodular(self.g, "AutElement.g")

    @property
    def g_matrix(self) -> np.ndarray:
        return np.array(self.g, dtype=float)

    @property
    def v_vector(self) -> np.ndarray:
        return np.array(self.v, dtype=float)

    @classmethod
    def identity(cls) -> "AutElement":
        return cls(((1.0, 0.0), (0.0, 1.0)), (0.0, 0.0))


def h_add(p: HPoint, q: HPoint) -> HPoint:
    """
    Heisenberg group law

    Parameters:
    -----------
    p, q : HPoint
        Summands

    Returns:
    --------
    HPoint
        (p.r+q.r, p.s+q.s, p.t+q.t+p.r*q.s-p.s*q.r)
    """
    return HPoint(p.r + q.r, p.s + q.s, p.t + q.t + p.r * q.s - p.s * q.r)


def h_neg(p: HPoint) -> HPoint:
    """Group inverse; the symplectic term vanishes on (p, -p)"""
    return HPoint(-p.r, -p.s, -p.t)


def h_add_array(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """
    Row-wise group law on (n, 3) arrays

    Integer dtypes stay exact while all coordinates are below INT_SAFE_BOUND.
    """
    P = np.asarray(P)
    Q = np.asarray(Q)
    out = P + Q
    out[..., 2] = P[..., 2] + Q[..., 2] + P[..., 0] * Q[..., 1] - P[..., 1] * Q[..., 0]
    return out


def g_star(g: Union[Matrix2, np.ndarray]) -> np.ndarray:
    """
    Inverse transpose of a determinant-one 2x2 matrix

    Parameters:
    -----------
    g : array-like
        2x2 matrix [[a, b], [c, d]] with det 1

    Returns:
    --------
    np.ndarray
        [[d, -c], [-b, a]]
    """
    M = as_matrix2(g)
    check_unimodular(M, "g")
    (a, b), (c, d) = M
    det = det2(M)
    if abs(det) < DET_TOLERANCE:
        raise InvariantViolation(f"g_star of a near-singular matrix (det={det!r})")
    # closed form is exact for det 1; dividing keeps it exact for tiny det drift
    return np.array([[d, -c], [-b, a]], dtype=float) / det


def aut_act(a: AutElement, p: HPoint) -> HPoint:
    """
    Action of an automorphism on a point of H(R)

    Parameters:
    -----------
    a : AutElement
        Automorphism (g, v)
    p : HPoint
        Point (r, s, t)

    Returns:
    --------
    HPoint
        (g*(r,s), t - v^T g*(r,s))
    """
    G = g_star(a.g)
    x, y = a.v
    fr = G[0, 0] * p.r + G[0, 1] * p.s
    fs = G[1, 0] * p.r + G[1, 1] * p.s
    return HPoint(fr, fs, p.t - (x * fr + y * fs))


def aut_act_array(a: AutElement, P: np.ndarray) -> np.ndarray:
    """Vectorised aut_act on an (n, 3) array of points"""
    P = np.asarray(P, dtype=float)
    flat = P[..., :2] @ g_star(a.g).T
    out = np.empty_like(P)
    out[..., :2] = flat
    out[..., 2] = P[..., 2] - flat @ a.v_vector
    return out


def aut_compose(a: AutElement, b: AutElement) -> AutElement:
    """
    Composition a o b, so aut_act(aut_compose(a, b), p) = aut_act(a, aut_act(b, p))

    Returns:
    --------
    AutElement
        (g_a g_b, g_a v_b + v_a)
    """
    ga = a.g_matrix
    return AutElement(ga @ b.g_matrix, ga @ b.v_vector + a.v_vector)


def aut_inverse(a: AutElement) -> AutElement:
    """Inverse automorphism (g^{-1}, -g^{-1} v)"""
    g_inv = g_star(a.g).T
    return AutElement(g_inv, -(g_inv @ a.v_vector))


def aut_matrix3(a: AutElement) -> np.ndarray:
    """
    3x3 matrix form of the (linear) automorphism

    [[g*, 0], [-v^T g*, 1]]; its determinant is det(g*) = 1.
    """
    G = g_star(a.g)
    M = np.zeros((3, 3), dtype=float)
    M[:2, :2] = G
    M[2, :2] = -(a.v_vector @ G)
    M[2, 2] = 1.0
    return M


def is_primitive(p: HIntPoint) -> bool:
    """True iff gcd(|m1|, |m2|) = 1; gcd(0, 0) = 0 so central points are never primitive"""
    return math.gcd(int(p.m1), int(p.m2)) == 1


def is_primitive_array(M: np.ndarray) -> np.ndarray:
    """Row-wise primitivity of an (n, 2) integer array"""
    M = np.asarray(M, dtype=np.int64)
    return np.gcd(M[..., 0], M[..., 1]) == 1
