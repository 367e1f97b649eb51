"""
Correlations of Pullback Sets on the Torus

Cor_{m,n}(eps, z) is the Haar measure of the set of u in R^2/Z^2 with
frac(z + u.m) < eps and frac(z + u.n) < eps. It depends only on the SL(2,Z)
orbit of (m, n):

    D != 0          eps^2  (u -> (u.m, u.n) pushes Haar to Haar)
    D = 0, n = m    eps
    D = 0, n = -m   overlap of two arcs of length eps (cor_antipodal)

cor_exact keeps the closed form used by the variance identity, which takes
the opposite-sign class to be 0; cor_direct uses the measured arc overlap.
They coincide at z = 0 for eps <= 1/2.
"""

import math
import logging
from typing import Tuple

import numpy as np
from scipy.stats import qmc

from .orbits import PrimPair, canonicalize
from .utils import PreconditionError, validate_eps, validate_seed

logger = logging.getLogger(__name__)

MIN_SAMPLES = 10 ** 4
DEFAULT_REPLICATES = 32


def cor_exact(m, n, eps: float, z: float) -> float:
    """
    Closed-form correlation keyed on the orbit class

    Parameters:
    -----------
    m, n : integer 2-vectors
        Primitive vectors
    eps : float
        Plate thickness, 0 < eps < 1
    z : float
        Level (unused by the closed form)

    Returns:
    --------
    float
        eps^2 if det(m, n) != 0; eps if n = m; 0 if n = -m
    """
    eps = validate_eps(eps)
    c = canonicalize(PrimPair(m, n))
    if c.D != 0:
        return eps * eps
    return eps if c.sign_tag == 1 else 0.0


def cor_antipodal(eps: float, z: float) -> float:
    """
    Torus measure of {frac(z + s) < eps} intersected with {frac(z - s) < eps}

    The two arcs [-z, -z + eps) and (z - eps, z] have length eps and their
    starting points differ by d = (2z - eps) mod 1.
    """
    eps = validate_eps(eps)
    d = (2.0 * float(z) - eps) % 1.0
    return max(0.0, eps - d) + max(0.0, d + eps - 1.0)


def cor_direct(m, n, eps: float, z: float) -> float:
    """Exact correlation with the antipodal class measured by cor_antipodal"""
    eps = validate_eps(eps)
    c = canonicalize(PrimPair(m, n))
    if c.D != 0:
        return eps * eps
    if c.sign_tag == 1:
        return eps
    return cor_antipodal(eps, z)


def cor_numeric(m, n, eps: float, z: float, samples: int = 10 ** 6,
                seed: int = 0, replicates: int = DEFAULT_REPLICATES) -> Tuple[float, float]:
    """
    Randomised quasi-Monte Carlo estimate of Cor_{m,n}(eps, z)

    Independent Owen-scrambled Sobol point sets are drawn on [0, 1)^2; the
    estimate is the mean over replicates and the standard error is the
    replicate standard deviation over sqrt(replicates).

    Parameters:
    -----------
    m, n : integer 2-vectors
        Primitive vectors (validated)
    eps : float
        Plate thickness
    z : float
        Level
    samples : int
        Total number of points, at least 10^4
    seed : int
        Master seed for the scrambles
    replicates : int
        Number of independent scrambles

    Returns:
    --------
    Tuple[float, float]
        (estimate, standard error)
    """
    eps = validate_eps(eps)
    seed = validate_seed(seed)
    pair = PrimPair(m, n)
    if int(samples) < MIN_SAMPLES:
        raise PreconditionError(f"cor_numeric needs at least {MIN_SAMPLES} samples, got {samples}")
    if int(replicates) < 2:
        raise PreconditionError("cor_numeric needs at least 2 replicates")

    per_replicate = max(1, int(samples) // int(replicates))
    log2_points = int(math.ceil(math.log2(per_replicate)))
    m_vec = np.array(pair.m, dtype=float)
    n_vec = np.array(pair.n, dtype=float)

    means = np.empty(int(replicates))
    for r in range(int(replicates)):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(r,)))
        engine = qmc.Sobol(d=2, scramble=True, seed=rng)
        U = engine.random_base2(log2_points)
        hit = (np.mod(z + U @ m_vec, 1.0) < eps) & (np.mod(z + U @ n_vec, 1.0) < eps)
        means[r] = hit.mean()

    estimate = float(math.fsum(means) / len(means))
    se = float(np.std(means, ddof=1) / math.sqrt(len(means)))
    return estimate, se
