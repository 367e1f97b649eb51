"""
Spaces of Unimodular and Heisenberg Lattices

This module represents unimodular planar lattices (Lattice2) and Heisenberg
lattices (HeisLattice: a base lattice plus a torus-fiber offset), and samples
both spaces from their normalized Haar measures.

A Lattice2 with basis g indexes the flat lattice points g* m, m in Z^2.
A HeisLattice (g, v) is the image of H(Z) under the automorphism (g, v):
the point indexed by (m1, m2, k) is (g* m, k - v^T g* m).
"""

import math
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .core import AutElement, HIntPoint, HPoint, g_star
from .utils import (
    Matrix2, Vector2, DomainError,
    as_matrix2, as_vector2, check_unimodular, validate_seed,
)

logger = logging.getLogger(__name__)

SQRT3_HALF = math.sqrt(3.0) / 2.0
# pi/3 (fundamental domain) over 2/sqrt(3) (strip y >= sqrt(3)/2)
ACCEPTANCE_RATE = math.pi * math.sqrt(3.0) / 6.0


@dataclass(frozen=True)
class Lattice2:
    """Unimodular planar lattice; columns of `basis` are the basis vectors"""
    basis: Matrix2

    def __post_init__(self):
        object.__setattr__(self, "basis", as_matrix2(self.basis))
        check_unimodular(self.basis, "Lattice2.basis")

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.basis, dtype=float)

    @property
    def dual(self) -> np.ndarray:
        """g*, the matrix sending Z^2 onto the flat lattice points"""
        return g_star(self.basis)

    def points(self, M: np.ndarray) -> np.ndarray:
        """Flat points g* m for an (n, 2) integer array"""
        return np.asarray(M, dtype=float) @ self.dual.T

    def right_multiply(self, gamma) -> "Lattice2":
        """The same lattice with basis g . gamma (gamma in SL(2,Z))"""
        return Lattice2(self.matrix @ np.asarray(gamma, dtype=float))

    def rotated(self, theta: float) -> "Lattice2":
        c, s = math.cos(theta), math.sin(theta)
        return Lattice2(np.array([[c, -s], [s, c]]) @ self.matrix)


@dataclass(frozen=True)
class HeisLattice:
    """
    Heisenberg lattice: base lattice plus fiber offset v

    The offset is stored reduced: v = basis . (u1, u2) with u1, u2 in [0, 1).
    Use `from_offset` to build one from an arbitrary offset.
    """
    base: Lattice2
    offset: Vector2

    def __post_init__(self):
        object.__setattr__(self, "offset", as_vector2(self.offset))
        u = self.fiber_coordinates
        if not (np.all(u >= -1e-9) and np.all(u < 1.0 + 1e-9)):
            raise DomainError(
                f"HeisLattice offset must be reduced (fiber coordinates {u.tolist()}); "
                "use HeisLattice.from_offset"
            )

    @classmethod
    def from_offset(cls, base: Lattice2, offset) -> "HeisLattice":
        g = base.matrix
        u = _reduce_unit(np.linalg.solve(g, np.asarray(offset, dtype=float)))
        return cls(base, g @ u)

    @classmethod
    def from_fiber(cls, base: Lattice2, u) -> "HeisLattice":
        return cls(base, base.matrix @ _reduce_unit(np.asarray(u, dtype=float)))

    @property
    def offset_vector(self) -> np.ndarray:
        return np.array(self.offset, dtype=float)

    @property
    def fiber_coordinates(self) -> np.ndarray:
        return np.linalg.solve(self.base.matrix, self.offset_vector)

    def automorphism(self) -> AutElement:
        return AutElement(self.base.basis, self.offset)

    def heights(self, flat_points: np.ndarray) -> np.ndarray:
        """w = v^T p for flat points p; the lattice points above p sit at heights k - w"""
        return np.asarray(flat_points, dtype=float) @ self.offset_vector


def _reduce_unit(u: np.ndarray) -> np.ndarray:
    u = u - np.floor(u)
    # rounding can push a tiny negative up to (almost) 1.0
    u[u >= 1.0 - 1e-12] = 0.0
    return u


def lattice_from_coords(x: float, y: float, theta: float) -> Lattice2:
    """
    Lattice from upper-half-plane coordinates and a rotation

    Parameters:
    -----------
    x, y : float
        Shape parameter z = x + iy, y > 0
    theta : float
        Rotation angle

    Returns:
    --------
    Lattice2
        basis = R(theta) . [[1/sqrt(y), x/sqrt(y)], [0, sqrt(y)]]
    """
    if not (math.isfinite(y) and y > 0):
        raise DomainError(f"y must be positive, got {y!r}")
    ry = math.sqrt(y)
    shape = np.array([[1.0 / ry, x / ry], [0.0, ry]])
    c, s = math.cos(theta), math.sin(theta)
    return Lattice2(np.array([[c, -s], [s, c]]) @ shape)


class HaarSampler:
    """
    Seeded sampler for the Haar probability measures on X and X_H

    Each sampler owns a Philox generator seeded from
    SeedSequence(master_seed, spawn_key=(stream,)), so trial i of an experiment
    uses stream i and the draws do not depend on how trials are distributed
    over workers.
    """

    def __init__(self, master_seed: int, stream: int = 0):
        self.master_seed = validate_seed(master_seed)
        self.stream = int(stream)
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream,))
        self.rng = np.random.Generator(np.random.Philox(seq))
        self.proposals = 0
        self.accepted = 0

    @classmethod
    def for_trial(cls, master_seed: int, trial: int) -> "HaarSampler":
        return cls(master_seed, trial)

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposals if self.proposals else float("nan")

    def sample_shape(self) -> Tuple[float, float, float]:
        """
        One draw of (x, y, theta): dx dy / y^2 on the modular fundamental
        domain by rejection from the strip |x| <= 1/2, y >= sqrt(3)/2;
        theta uniform on [0, pi) since -I acts trivially
        """
        rng = self.rng
        while True:
            self.proposals += 1
            x = rng.random() - 0.5
            # inverse CDF of y0/y^2 on [y0, inf); 1 - U avoids division by zero
            y = SQRT3_HALF / (1.0 - rng.random())
            if x * x + y * y >= 1.0:
                self.accepted += 1
                break
        theta = math.pi * rng.random()
        return x, y, theta

    def propose_shapes(self, n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Vectorised batch of n strip proposals

        Returns:
        --------
        Tuple[np.ndarray, np.ndarray, np.ndarray]
            x, y and the boolean acceptance mask
        """
        x = self.rng.random(n) - 0.5
        y = SQRT3_HALF / (1.0 - self.rng.random(n))
        accept = x * x + y * y >= 1.0
        self.proposals += int(n)
        self.accepted += int(np.count_nonzero(accept))
        return x, y, accept

    def sample_euclidean(self) -> Lattice2:
        x, y, theta = self.sample_shape()
        return lattice_from_coords(x, y, theta)

    def sample_heisenberg(self) -> HeisLattice:
        base = self.sample_euclidean()
        u = self.rng.random(2)
        return HeisLattice(base, base.matrix @ u)


def sample_euclidean(s: HaarSampler) -> Lattice2:
    """Draw a lattice from the normalized Haar measure on X"""
    return s.sample_euclidean()


def sample_heisenberg(s: HaarSampler) -> HeisLattice:
    """Draw from mu_H = mu_E x (uniform fiber measure)"""
    return s.sample_heisenberg()


def reduce_offset(L: HeisLattice) -> HeisLattice:
    """Canonical fiber representative: fiber coordinates in [0, 1)^2 (idempotent)"""
    return HeisLattice.from_offset(L.base, L.offset_vector)


def lattice_points_3d(L: HeisLattice, p: HIntPoint) -> HPoint:
    """
    Point of L indexed by p = (m1, m2, k)

    Returns:
    --------
    HPoint
        (g* m, k - v^T g* m) with g = base.basis, v = offset
    """
    flat = L.base.dual @ np.array([p.m1, p.m2], dtype=float)
    return HPoint(float(flat[0]), float(flat[1]), float(p.k - flat @ L.offset_vector))


def lattice_points_array(L: HeisLattice, P: np.ndarray) -> np.ndarray:
    """Vectorised lattice_points_3d for an (n, 3) integer array"""
    P = np.asarray(P)
    flat = L.base.points(P[..., :2])
    out = np.empty(P.shape, dtype=float)
    out[..., :2] = flat
    out[..., 2] = P[..., 2] - flat @ L.offset_vector
    return out

