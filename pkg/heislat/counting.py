"""
Theta Transforms: Primitive Lattice Point Counts

This module counts primitive lattice points of a planar lattice in a region
(theta_euclidean) and of a Heisenberg lattice in a plate or a cylinder stack
(nil_theta, theta_count_stack). nil_theta_direct is an independent oracle
that enumerates (m1, m2, k) in Z^3 and tests the 3-dimensional points.

Height convention: the point over the flat point p = g* m sits at heights
k - w with w = v^T p. It lies in A x [lo, hi) iff k is in [lo + w, hi + w),
so a plate A x [z, z + eps) holds it iff frac(-(z + w)) < eps.
"""

import math
import logging
from typing import Optional, Tuple, Union

import numpy as np

from .core import is_primitive_array
from .lattice_space import HeisLattice, Lattice2, lattice_points_array
from .regions import CylinderStack, Plate, Region2, bounding_box
from .utils import EnumerationBudgetError, PreconditionError, frac

logger = logging.getLogger(__name__)

ENUMERATION_BUDGET = 10 ** 9
# slab height used when a cylinder is split into plates
SLAB_HEIGHT = 0.5
_CLIP_SLACK = 1e-9


def _m_box(G: np.ndarray, A: Region2) -> Tuple[int, int, int, int]:
    """Integer box containing every m with G m in bounding_box(A)"""
    box = bounding_box(A)
    corners = np.array([
        [box.xmin, box.ymin], [box.xmin, box.ymax],
        [box.xmax, box.ymin], [box.xmax, box.ymax],
    ])
    # G^{-1} is the basis transpose for det-one lattices
    M = corners @ np.linalg.inv(G).T
    lo = np.floor(M.min(axis=0)).astype(np.int64)
    hi = np.ceil(M.max(axis=0)).astype(np.int64)
    return int(lo[0]), int(hi[0]), int(lo[1]), int(hi[1])


def _row_bounds(G: np.ndarray, box, rows: np.ndarray, col_range: Tuple[int, int]):
    """
    For each row value m2 the integer interval of m1 with G (m1, m2) in the box

    The strip constraints xmin <= G00 m1 + G01 m2 <= xmax (and the same for y)
    are solved for m1 in floating point with a small slack; the exact filter
    happens afterwards.
    """
    lo = np.full(rows.shape, float(col_range[0]))
    hi = np.full(rows.shape, float(col_range[1]))
    for axis, (bmin, bmax) in enumerate(((box.xmin, box.xmax), (box.ymin, box.ymax))):
        a, b = G[axis, 0], G[axis, 1]
        shift = b * rows
        if abs(a) < 1e-15:
            inside = (shift >= bmin - _CLIP_SLACK) & (shift <= bmax + _CLIP_SLACK)
            hi = np.where(inside, hi, lo - 1.0)
            continue
        e1 = (bmin - shift) / a
        e2 = (bmax - shift) / a
        lo = np.maximum(lo, np.minimum(e1, e2) - _CLIP_SLACK)
        hi = np.minimum(hi, np.maximum(e1, e2) + _CLIP_SLACK)
    return np.ceil(lo).astype(np.int64), np.floor(hi).astype(np.int64)


def _candidates(G: np.ndarray, A: Region2, budget: int) -> np.ndarray:
    """Row-clipped integer candidates m (shape (n, 2)) for the region A"""
    m1_lo, m1_hi, m2_lo, m2_hi = _m_box(G, A)
    swap = (m2_hi - m2_lo) > (m1_hi - m1_lo)
    if swap:
        # iterate over the shorter side
        G = G[:, ::-1]
        m1_lo, m1_hi, m2_lo, m2_hi = m2_lo, m2_hi, m1_lo, m1_hi

    n_rows = m2_hi - m2_lo + 1
    if n_rows > budget:
        raise EnumerationBudgetError(
            f"Enumeration needs more than {n_rows} rows, over the budget of {budget} candidates"
        )
    rows = np.arange(m2_lo, m2_hi + 1, dtype=np.int64)
    lo, hi = _row_bounds(G, bounding_box(A), rows, (m1_lo, m1_hi))
    lengths = np.maximum(hi - lo + 1, 0)
    total = int(lengths.sum())
    if total > budget:
        raise EnumerationBudgetError(
            f"Enumeration needs {total} candidate points, over the budget of {budget}"
        )

    starts = np.cumsum(lengths) - lengths
    second = np.repeat(rows, lengths)
    first = np.repeat(lo, lengths) + (np.arange(total, dtype=np.int64) - np.repeat(starts, lengths))
    M = np.column_stack([first, second])
    return M[:, ::-1] if swap else M


def enumerate_primitive_in_region(g: Lattice2, A: Region2,
                                  budget: int = ENUMERATION_BUDGET) -> np.ndarray:
    """
    Primitive m in Z^2 with g* m in A

    Parameters:
    -----------
    g : Lattice2
        Base lattice
    A : Region2
        Bounded planar region
    budget : int
        Maximum number of candidate points examined

    Returns:
    --------
    np.ndarray
        int64 array of shape (n, 2), one row per primitive vector

    Raises:
    -------
    EnumerationBudgetError
        If more than `budget` candidates would be examined
    """
    G = g.dual
    M = _candidates(G, A, budget)
    if len(M) == 0:
        return M.reshape(0, 2)
    keep = A.contains(M @ G.T) & is_primitive_array(M)
    return M[keep]


def theta_euclidean(g: Lattice2, A: Region2) -> int:
    """Number of primitive points of the lattice g inside A"""
    return int(len(enumerate_primitive_in_region(g, A)))


def count_antipodal(g: Lattice2, A: Region2) -> int:
    """#{primitive m : g* m in A and -g* m in A}"""
    M = enumerate_primitive_in_region(g, A)
    if len(M) == 0:
        return 0
    return int(np.count_nonzero(A.contains(-g.points(M))))


def plate_indicator(w: np.ndarray, z: float, eps: float) -> np.ndarray:
    """Boolean mask of the flat points whose fiber meets [z, z + eps)"""
    return frac(-(z + np.asarray(w, dtype=float))) < eps


def nil_theta(L: HeisLattice, P: Plate) -> int:
    """
    Primitive points of the Heisenberg lattice L inside the plate P

    Parameters:
    -----------
    L : HeisLattice
        Heisenberg lattice (g, v)
    P : Plate
        Plate base x [z, z + eps)

    Returns:
    --------
    int
        Number of primitive m with g* m in base and frac(-(z + v^T g* m)) < eps
    """
    M = enumerate_primitive_in_region(L.base, P.base)
    if len(M) == 0:
        return 0
    w = L.heights(L.base.points(M))
    return int(np.count_nonzero(plate_indicator(w, P.z, P.eps)))


def _as_stack(S: Union[Plate, CylinderStack]) -> CylinderStack:
    return S.as_stack() if isinstance(S, Plate) else S


def required_k_range(L: HeisLattice, S: Union[Plate, CylinderStack]) -> Tuple[int, int]:
    """
    Inclusive range of central coordinates k that can meet S

    Heights k - w lie in [lo, hi) only if k lies in [lo + w, hi + w), and |w|
    is bounded by |v| times the largest norm of the flat bounding box.
    """
    stack = _as_stack(S)
    if len(stack) == 0:
        return (0, -1)
    box = bounding_box(stack.flat_projection())
    radius = max(math.hypot(x, y) for x in (box.xmin, box.xmax) for y in (box.ymin, box.ymax))
    w_max = float(np.linalg.norm(L.offset_vector)) * radius
    lo, hi = stack.height_range()
    return (int(math.floor(lo - w_max)) - 1, int(math.ceil(hi + w_max)) + 1)


def nil_theta_direct(L: HeisLattice, S: Union[Plate, CylinderStack],
                     k_range: Optional[Tuple[int, int]] = None,
                     budget: int = ENUMERATION_BUDGET) -> int:
    """
    Brute-force count of primitive p in Z^3 with lattice_points_3d(L, p) in S

    The integer box of candidate (m1, m2) is enumerated without any row
    clipping; every candidate is lifted for each k in k_range and tested
    against the union of cylinders.

    Parameters:
    -----------
    L : HeisLattice
        Heisenberg lattice
    S : Plate or CylinderStack
        Counting set
    k_range : Tuple[int, int], optional
        Inclusive range of central coordinates; defaults to required_k_range

    Returns:
    --------
    int
        Direct count

    Raises:
    -------
    PreconditionError
        If k_range does not cover required_k_range(L, S)
    """
    stack = _as_stack(S)
    if len(stack) == 0:
        return 0
    needed = required_k_range(L, stack)
    if k_range is None:
        k_range = needed
    k_lo, k_hi = int(k_range[0]), int(k_range[1])
    if k_lo > needed[0] or k_hi < needed[1]:
        raise PreconditionError(
            f"k_range {k_range} does not cover the heights the set can meet {needed}"
        )

    m1_lo, m1_hi, m2_lo, m2_hi = _m_box(L.base.dual, stack.flat_projection())
    n_flat = (m1_hi - m1_lo + 1) * (m2_hi - m2_lo + 1)
    if n_flat * (k_hi - k_lo + 1) > budget:
        raise EnumerationBudgetError(
            f"Direct enumeration needs {n_flat * (k_hi - k_lo + 1)} candidates, "
            f"over the budget of {budget}"
        )
    m1, m2 = np.meshgrid(np.arange(m1_lo, m1_hi + 1), np.arange(m2_lo, m2_hi + 1), indexing="ij")
    M = np.column_stack([m1.ravel(), m2.ravel()]).astype(np.int64)
    M = M[is_primitive_array(M)]
    if len(M) == 0:
        return 0

    total = 0
    P = np.empty((len(M), 3), dtype=np.int64)
    P[:, :2] = M
    for k in range(k_lo, k_hi + 1):
        P[:, 2] = k
        X = lattice_points_array(L, P)
        inside = np.zeros(len(X), dtype=bool)
        for piece, (lo, hi) in stack.cylinders:
            inside |= piece.contains(X[:, :2]) & (X[:, 2] >= lo) & (X[:, 2] < hi)
        total += int(np.count_nonzero(inside))
    return total


def stack_slabs(S: CylinderStack, slab_height: float = SLAB_HEIGHT):
    """
    Split every cylinder of S into plates of height at most slab_height

    Returns:
    --------
    List[Plate]
        Plates whose disjoint union is S
    """
    if not 0 < slab_height < 1:
        raise ValueError(f"slab_height must lie in (0, 1), got {slab_height}")
    plates = []
    for piece, (lo, hi) in S.cylinders:
        n = max(1, int(math.ceil((hi - lo) / slab_height)))
        h = (hi - lo) / n
        for j in range(n):
            plates.append(Plate(piece, lo + j * h, h))
    return plates


def theta_count_stack(L: HeisLattice, S: CylinderStack, method: str = "telescoped") -> int:
    """
    Primitive points of L inside a cylinder stack

    Parameters:
    -----------
    L : HeisLattice
        Heisenberg lattice
    S : CylinderStack
        Stack of cylinders piece_i x [lo_i, hi_i)
    method : str
        'telescoped' counts ceil(hi + w) - ceil(lo + w) central lifts per flat
        point; 'slabs' sums nil_theta over the plates of stack_slabs(S)

    Returns:
    --------
    int
        Count, equal to nil_theta_direct(L, S)
    """
    if len(S) == 0:
        return 0
    if method == "slabs":
        return int(sum(nil_theta(L, plate) for plate in stack_slabs(S)))
    if method != "telescoped":
        raise ValueError(f"Unknown counting method {method!r}")

    # one enumeration over the union of pieces, then a mask per cylinder
    M = enumerate_primitive_in_region(L.base, S.flat_projection())
    if len(M) == 0:
        return 0
    flat = L.base.points(M)
    w = L.heights(flat)
    total = 0
    for piece, (lo, hi) in S.cylinders:
        mask = piece.contains(flat)
        if not np.any(mask):
            continue
        wm = w[mask]
        total += int(np.sum(np.ceil(hi + wm) - np.ceil(lo + wm)))
    return total


def heis_count(L: HeisLattice, S: Union[Plate, CylinderStack]) -> int:
    """nil_theta for plates, theta_count_stack for stacks"""
    if isinstance(S, Plate):
        return nil_theta(L, S)
    return theta_count_stack(L, S)
