"""
SL(2,Z) Orbits of Primitive Vector Pairs

Pairs (m, n) of primitive integer vectors with det(m, n) = D are classified
under the diagonal action gamma.(m, n) = (gamma m, gamma n). Every orbit has a
unique representative of the form ((1, 0), (k, D)):

    |D| > 1   k in [0, |D|) with gcd(k, D) = 1
    |D| = 1   k = 0
    D = 0     n = +m or n = -m, rep ((1, 0), (+-1, 0))

All arithmetic is exact on Python ints.
"""

import math
import logging
from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Optional, Set, Tuple

import numpy as np

from .utils import DomainError, EnumerationBudgetError, InvariantViolation, PreconditionError, as_int_vector2

logger = logging.getLogger(__name__)

IntMatrix2 = Tuple[Tuple[int, int], Tuple[int, int]]

S_GEN: IntMatrix2 = ((0, -1), (1, 0))
T_GEN: IntMatrix2 = ((1, 1), (0, 1))
S_INV: IntMatrix2 = ((0, 1), (-1, 0))
T_INV: IntMatrix2 = ((1, -1), (0, 1))
GENERATORS = (S_GEN, T_GEN, S_INV, T_INV)

MAX_BRUTEFORCE_DET = 12
MIN_BRUTEFORCE_HEIGHT = 50
PAIR_BUDGET = 10 ** 8
CLOSURE_BOUND = 16
CLOSURE_MAX_NODES = 2000


@dataclass(frozen=True)
class PrimPair:
    """A pair of primitive integer vectors"""
    m: Tuple[int, int]
    n: Tuple[int, int]

    def __post_init__(self):
        m = as_int_vector2(self.m)
        n = as_int_vector2(self.n)
        for name, vec in (("m", m), ("n", n)):
            if math.gcd(*vec) != 1:
                raise DomainError(f"PrimPair.{name} = {vec} is not primitive")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n", n)

    def as_tuple(self) -> Tuple[Tuple[int, int], Tuple[int, int]]:
        return (self.m, self.n)


@dataclass(frozen=True)
class OrbitClass:
    """Orbit of a PrimPair: determinant, canonical representative, and the D = 0 sign"""
    D: int
    rep: PrimPair
    sign_tag: Optional[int] = None

    @property
    def residue(self) -> int:
        return self.rep.n[0] if self.D != 0 else 0

    def label(self) -> str:
        if self.D == 0:
            return "0+" if self.sign_tag == 1 else "0-"
        return f"D={self.D},k={self.residue}"


def egcd(a: int, b: int) -> Tuple[int, int, int]:
    """
    Extended gcd

    Returns:
    --------
    Tuple[int, int, int]
        (g, x, y) with a x + b y = g = gcd(a, b) >= 0
    """
    old_r, r = int(a), int(b)
    old_x, x = 1, 0
    old_y, y = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_x, x = x, old_x - q * x
        old_y, y = y, old_y - q * y
    if old_r < 0:
        old_r, old_x, old_y = -old_r, -old_x, -old_y
    return old_r, old_x, old_y


def det_pair(p: PrimPair) -> int:
    """m1 n2 - m2 n1"""
    (m1, m2), (n1, n2) = p.m, p.n
    return m1 * n2 - m2 * n1


def reducing_matrix(m: Tuple[int, int]) -> IntMatrix2:
    """gamma in SL(2,Z) with gamma m = (1, 0), for primitive m"""
    a, b = m
    g, x, y = egcd(a, b)
    if g != 1:
        raise DomainError(f"{m} is not primitive")
    return ((x, y), (-b, a))


def mat_vec(gamma: IntMatrix2, v: Tuple[int, int]) -> Tuple[int, int]:
    (a, b), (c, d) = gamma
    return (a * v[0] + b * v[1], c * v[0] + d * v[1])


def mat_mul(A: IntMatrix2, B: IntMatrix2) -> IntMatrix2:
    (a, b), (c, d) = A
    (e, f), (g, h) = B
    return ((a * e + b * g, a * f + b * h), (c * e + d * g, c * f + d * h))


def apply(gamma: IntMatrix2, p: PrimPair) -> PrimPair:
    """Diagonal action gamma.(m, n) = (gamma m, gamma n)"""
    return PrimPair(mat_vec(gamma, p.m), mat_vec(gamma, p.n))


def canonicalize(p: PrimPair) -> OrbitClass:
    """
    Canonical form of the SL(2,Z) orbit of p

    Parameters:
    -----------
    p : PrimPair
        Pair of primitive vectors

    Returns:
    --------
    OrbitClass
        D = det(p); rep = ((1, 0), (k, D)) with k reduced modulo |D| by the
        unipotent stabilizer of (1, 0)
    """
    if not isinstance(p, PrimPair):
        p = PrimPair(*p)
    D = det_pair(p)
    gamma = reducing_matrix(p.m)
    k, d = mat_vec(gamma, p.n)
    if d != D:
        raise InvariantViolation(f"Reduction changed the determinant of {p} ({d} != {D})")

    if D == 0:
        # (k, 0) primitive forces k = +-1
        if k not in (1, -1):
            raise InvariantViolation(f"Degenerate pair {p} reduced to ({k}, 0)")
        return OrbitClass(0, PrimPair((1, 0), (k, 0)), sign_tag=k)
    k = k % abs(D)
    if math.gcd(k, D) != 1:
        raise InvariantViolation(f"Residue {k} of {p} is not coprime to D={D}")
    return OrbitClass(D, PrimPair((1, 0), (k, D)))


def same_orbit(p: PrimPair, q: PrimPair) -> bool:
    """True iff p and q lie in the same SL(2,Z) orbit"""
    return canonicalize(p) == canonicalize(q)


def word_to_matrix(word: List[IntMatrix2]) -> IntMatrix2:
    out: IntMatrix2 = ((1, 0), (0, 1))
    for letter in word:
        out = mat_mul(out, letter)
    return out


def random_sl2z(rng: np.random.Generator, max_length: int = 12) -> IntMatrix2:
    """Random word of length <= max_length in S, T and their inverses"""
    length = int(rng.integers(0, max_length + 1))
    letters = rng.integers(0, len(GENERATORS), size=length)
    return word_to_matrix([GENERATORS[i] for i in letters])


def random_prim_pair(rng: np.random.Generator, bound: int = 50) -> PrimPair:
    """Uniform-ish random PrimPair with entries in [-bound, bound]"""
    def primitive() -> Tuple[int, int]:
        while True:
            v = (int(rng.integers(-bound, bound + 1)), int(rng.integers(-bound, bound + 1)))
            if math.gcd(*v) == 1:
                return v
    return PrimPair(primitive(), primitive())


def totient(n: int) -> int:
    """Euler's phi of |n| (phi(0) is reported as 0)"""
    n = abs(int(n))
    if n == 0:
        return 0
    return sum(1 for k in range(1, n + 1) if math.gcd(k, n) == 1)


def orbit_census(D: int, height: int, budget: int = PAIR_BUDGET) -> Dict:
    """
    All orbit classes met by PrimPairs with entries in [-height, height] and det D

    For each primitive m the solutions of det(m, n) = D are n0 + t m, which
    are enumerated as a vector over t.

    Returns:
    --------
    Dict
        'classes' (set of OrbitClass), 'residues' (sorted observed k or signs),
        'pairs' (number of pairs examined)
    """
    D, height = int(D), int(height)
    H = height
    classes: Set[OrbitClass] = set()
    examined = 0

    for a in range(-H, H + 1):
        for b in range(-H, H + 1):
            if math.gcd(a, b) != 1:
                continue
            _, x, y = egcd(a, b)
            # a x + b y = 1, so det((a, b), D (-y, x)) = D
            n0 = np.array([-D * y, D * x], dtype=np.int64)
            step = np.array([a, b], dtype=np.int64)
            t_lo, t_hi = -np.inf, np.inf
            for axis in range(2):
                if step[axis] == 0:
                    if abs(n0[axis]) > H:
                        t_lo, t_hi = 1.0, 0.0
                    continue
                e1 = (-H - n0[axis]) / step[axis]
                e2 = (H - n0[axis]) / step[axis]
                t_lo = max(t_lo, min(e1, e2))
                t_hi = min(t_hi, max(e1, e2))
            if not (np.isfinite(t_lo) and np.isfinite(t_hi)) or t_hi < t_lo:
                continue
            t = np.arange(math.ceil(t_lo), math.floor(t_hi) + 1, dtype=np.int64)
            if len(t) == 0:
                continue
            N = n0[None, :] + t[:, None] * step[None, :]
            N = N[(np.abs(N) <= H).all(axis=1) & (np.gcd(N[:, 0], N[:, 1]) == 1)]
            examined += len(N)
            if examined > budget:
                raise EnumerationBudgetError(f"Orbit census exceeds the pair budget of {budget}")
            if len(N) == 0:
                continue
            # first coordinate of gamma n with gamma = ((x, y), (-b, a))
            K = N[:, 0] * x + N[:, 1] * y
            if D == 0:
                for sign in np.unique(K):
                    classes.add(OrbitClass(0, PrimPair((1, 0), (int(sign), 0)), sign_tag=int(sign)))
            else:
                for k in np.unique(np.mod(K, abs(D))):
                    classes.add(OrbitClass(D, PrimPair((1, 0), (int(k), D))))
    if D == 0:
        residues = sorted(c.sign_tag for c in classes)
    else:
        residues = sorted(c.residue for c in classes)
    return {"classes": classes, "residues": residues, "pairs": examined}


def orbit_closure(p: PrimPair, bound: int = CLOSURE_BOUND,
                  max_nodes: int = CLOSURE_MAX_NODES) -> Set[Tuple]:
    """
    Pairs reachable from p by S, T and their inverses, staying inside the
    box [-bound, bound]^4 (breadth-first, truncated at max_nodes)
    """
    start = p.as_tuple()
    seen = {start}
    queue = deque([p])
    while queue and len(seen) < max_nodes:
        q = queue.popleft()
        for gen in GENERATORS:
            r = apply(gen, q)
            key = r.as_tuple()
            if key in seen or max(abs(c) for v in key for c in v) > bound:
                continue
            seen.add(key)
            queue.append(r)
    return seen


def verify_classes_by_closure(classes, bound: int = CLOSURE_BOUND,
                              max_nodes: int = CLOSURE_MAX_NODES) -> None:
    """
    Independent check of a census: closing each representative under the
    generators never reaches another representative, and every pair reached
    canonicalizes back to its own class

    Raises:
    -------
    InvariantViolation
        If two classes merge
    """
    reps = {c.rep.as_tuple(): c for c in classes}
    for key, c in reps.items():
        bound_c = max(bound, max(abs(v) for vec in key for v in vec))
        closure = orbit_closure(c.rep, bound_c, max_nodes)
        for other in reps:
            if other != key and other in closure:
                raise InvariantViolation(f"Classes {c.label()} and {reps[other].label()} merge")
        for pair in closure:
            if canonicalize(PrimPair(*pair)) != c:
                raise InvariantViolation(f"{pair} is reachable from {c.label()} but canonicalizes elsewhere")


def orbit_count_bruteforce(D: int, height: int, verify: bool = True) -> int:
    """Number of SL(2,Z) orbits met by PrimPairs of determinant D in a height box"""
    return len(checked_census(D, height, verify)["classes"])


def checked_census(D: int, height: int, verify: bool = True) -> Dict:
    """
    orbit_census under the brute-force bounds, optionally verified by closure

    Parameters:
    -----------
    D : int
        Determinant, |D| <= 12
    height : int
        Entry bound, >= 50
    verify : bool
        Also run the closure check under the generators

    Returns:
    --------
    Dict
        As orbit_census
    """
    if abs(int(D)) > MAX_BRUTEFORCE_DET:
        raise PreconditionError(f"|D| must be at most {MAX_BRUTEFORCE_DET}, got {D}")
    if int(height) < MIN_BRUTEFORCE_HEIGHT:
        raise PreconditionError(f"height must be at least {MIN_BRUTEFORCE_HEIGHT}, got {height}")
    census = orbit_census(D, height)
    if verify:
        verify_classes_by_closure(census["classes"])
    logger.info("D=%d: %d classes, residues %s (%d pairs)",
                D, len(census["classes"]), census["residues"], census["pairs"])
    return census
