"""
Planar Regions, Plates and Cylinder Stacks

Region2 is one of Rectangle, Disk, Annulus or DisjointUnion. Boundary
conventions are half-open everywhere:

    Rectangle  [xmin, xmax) x [ymin, ymax)
    Disk       |p - c| <= radius
    Annulus    r_inner < |p - c| <= r_outer

Plates A x [z, z + eps) and cylinder stacks (sum of A_i x [lo_i, hi_i)) are
the 3-dimensional sets lattice points are counted in.
"""

import json
import math
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np

from .utils import DomainError, Vector2, as_vector2, validate_eps

logger = logging.getLogger(__name__)

DISJOINTNESS_SAMPLES = 1000


@dataclass(frozen=True)
class Rectangle:
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        for name in ("xmin", "xmax", "ymin", "ymax"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise DomainError(f"Degenerate rectangle {self}")

    def measure(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)

    def contains(self, P: np.ndarray) -> np.ndarray:
        x, y = P[..., 0], P[..., 1]
        return (x >= self.xmin) & (x < self.xmax) & (y >= self.ymin) & (y < self.ymax)

    def bounding_box(self) -> "Rectangle":
        return self


@dataclass(frozen=True)
class Disk:
    center: Vector2
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector2(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise DomainError(f"Disk radius must be positive, got {self.radius}")

    def measure(self) -> float:
        return math.pi * self.radius ** 2

    def contains(self, P: np.ndarray) -> np.ndarray:
        d2 = (P[..., 0] - self.center[0]) ** 2 + (P[..., 1] - self.center[1]) ** 2
        return d2 <= self.radius ** 2

    def bounding_box(self) -> Rectangle:
        cx, cy = self.center
        r = self.radius
        return Rectangle(cx - r, cx + r, cy - r, cy + r)


@dataclass(frozen=True)
class Annulus:
    center: Vector2
    r_inner: float
    r_outer: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector2(self.center))
        object.__setattr__(self, "r_inner", float(self.r_inner))
        object.__setattr__(self, "r_outer", float(self.r_outer))
        if not 0 <= self.r_inner < self.r_outer:
            raise DomainError(f"Annulus needs 0 <= r_inner < r_outer, got {self}")

    def measure(self) -> float:
        return math.pi * (self.r_outer ** 2 - self.r_inner ** 2)

    def contains(self, P: np.ndarray) -> np.ndarray:
        d2 = (P[..., 0] - self.center[0]) ** 2 + (P[..., 1] - self.center[1]) ** 2
        return (d2 > self.r_inner ** 2) & (d2 <= self.r_outer ** 2)

    def bounding_box(self) -> Rectangle:
        cx, cy = self.center
        r = self.r_outer
        return Rectangle(cx - r, cx + r, cy - r, cy + r)


@dataclass(frozen=True)
class DisjointUnion:
    """Union of pairwise disjoint regions (caller-asserted, see check_disjoint)"""
    parts: Tuple["Region2", ...]

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise DomainError("DisjointUnion needs at least one part")
        object.__setattr__(self, "parts", parts)

    def measure(self) -> float:
        return math.fsum(part.measure() for part in self.parts)

    def contains(self, P: np.ndarray) -> np.ndarray:
        hit = np.zeros(P.shape[:-1], dtype=bool)
        for part in self.parts:
            hit |= part.contains(P)
        return hit

    def bounding_box(self) -> Rectangle:
        boxes = [part.bounding_box() for part in self.parts]
        return Rectangle(
            min(b.xmin for b in boxes), max(b.xmax for b in boxes),
            min(b.ymin for b in boxes), max(b.ymax for b in boxes),
        )

    def leaves(self) -> List["Region2"]:
        """Non-union parts, flattened"""
        out: List[Region2] = []
        for part in self.parts:
            if isinstance(part, DisjointUnion):
                out.extend(part.leaves())
            else:
                out.append(part)
        return out


Region2 = Union[Rectangle, Disk, Annulus, DisjointUnion]


@dataclass(frozen=True)
class Plate:
    """The eps-plate A x [z, z + eps), z stored reduced to [0, 1)"""
    base: Region2
    z: float
    eps: float

    def __post_init__(self):
        object.__setattr__(self, "eps", validate_eps(self.eps))
        z = float(self.z)
        if not math.isfinite(z):
            raise DomainError(f"Plate level must be finite, got {z}")
        z = z - math.floor(z)
        object.__setattr__(self, "z", 0.0 if z >= 1.0 else z)

    @property
    def interval(self) -> Tuple[float, float]:
        return (self.z, self.z + self.eps)

    def as_stack(self) -> "CylinderStack":
        return CylinderStack(((self.base, self.interval),))


@dataclass(frozen=True)
class CylinderStack:
    """Finite union of cylinders piece_i x [lo_i, hi_i)"""
    cylinders: Tuple[Tuple[Region2, Tuple[float, float]], ...]

    def __post_init__(self):
        cylinders = []
        for piece, (lo, hi) in self.cylinders:
            lo, hi = float(lo), float(hi)
            if not lo < hi:
                raise DomainError(f"Empty cylinder interval [{lo}, {hi})")
            cylinders.append((piece, (lo, hi)))
        object.__setattr__(self, "cylinders", tuple(cylinders))

    def __len__(self) -> int:
        return len(self.cylinders)

    @property
    def pieces(self) -> List[Region2]:
        return [piece for piece, _ in self.cylinders]

    @property
    def intervals(self) -> List[Tuple[float, float]]:
        return [interval for _, interval in self.cylinders]

    def flat_projection(self) -> Region2:
        """pi_flat of the stack; assumes the builder's disjoint pieces"""
        pieces = self.pieces
        if not pieces:
            raise DomainError("Empty stack has no flat projection")
        return pieces[0] if len(pieces) == 1 else DisjointUnion(tuple(pieces))

    def height_range(self) -> Tuple[float, float]:
        return (min(lo for lo, _ in self.intervals), max(hi for _, hi in self.intervals))


def measure2(A: Region2) -> float:
    """Exact Lebesgue measure of a planar region"""
    return A.measure()


def measure3(S: Union[Plate, CylinderStack]) -> float:
    """Volume of a plate (m(A) eps) or a cylinder stack (sum m(A_i)|I_i|)"""
    if isinstance(S, Plate):
        return measure2(S.base) * S.eps
    return math.fsum(measure2(piece) * (hi - lo) for piece, (lo, hi) in S.cylinders)


def contains2(A: Region2, p) -> Union[bool, np.ndarray]:
    """
    Membership test with the half-open conventions

    Parameters:
    -----------
    A : Region2
        Region
    p : array-like
        A single point (shape (2,)) or an array of points (shape (n, 2))

    Returns:
    --------
    bool or np.ndarray
        Membership for each point
    """
    P = np.asarray(p, dtype=float)
    hit = A.contains(P)
    return bool(hit) if P.ndim == 1 else hit


def bounding_box(A: Region2) -> Rectangle:
    """Minimal axis-aligned box containing A"""
    return A.bounding_box()


def check_disjoint(A: DisjointUnion, samples: int = DISJOINTNESS_SAMPLES, seed: int = 0) -> None:
    """
    Randomised spot check that the parts of a union do not overlap

    Raises:
    -------
    DomainError
        If a sampled point lies in two parts
    """
    box = A.bounding_box()
    rng = np.random.default_rng(seed)
    P = np.column_stack([
        rng.uniform(box.xmin, box.xmax, samples),
        rng.uniform(box.ymin, box.ymax, samples),
    ])
    multiplicity = np.zeros(samples, dtype=int)
    for part in A.parts:
        multiplicity += part.contains(P).astype(int)
    if np.any(multiplicity > 1):
        bad = P[np.argmax(multiplicity > 1)]
        raise DomainError(f"Union parts overlap near {bad.tolist()}")


def slice_by_fraction(A: Region2, f_lo: float, f_hi: float) -> Region2:
    """
    Sub-region holding the measure fraction [f_lo, f_hi) of A

    Disks and annuli are sliced radially, rectangles along x, unions part by
    part in order. Consecutive slices are disjoint and cover A.

    Parameters:
    -----------
    A : Region2
        Region to slice
    f_lo, f_hi : float
        Fractions with 0 <= f_lo < f_hi <= 1

    Returns:
    --------
    Region2
        The slice, with measure (f_hi - f_lo) * m(A)
    """
    if not 0.0 <= f_lo < f_hi <= 1.0:
        raise DomainError(f"Need 0 <= f_lo < f_hi <= 1, got [{f_lo}, {f_hi})")

    if isinstance(A, Rectangle):
        width = A.xmax - A.xmin
        x_lo = A.xmin if f_lo == 0.0 else A.xmin + f_lo * width
        x_hi = A.xmax if f_hi == 1.0 else A.xmin + f_hi * width
        return Rectangle(x_lo, x_hi, A.ymin, A.ymax)

    if isinstance(A, (Disk, Annulus)):
        r_in = 0.0 if isinstance(A, Disk) else A.r_inner
        r_out = A.radius if isinstance(A, Disk) else A.r_outer
        area = r_out ** 2 - r_in ** 2

        def radius_at(f: float) -> float:
            if f == 0.0:
                return r_in
            if f == 1.0:
                return r_out
            return math.sqrt(r_in ** 2 + f * area)

        lo, hi = radius_at(f_lo), radius_at(f_hi)
        if lo == 0.0:
            return Disk(A.center, hi)
        return Annulus(A.center, lo, hi)

    if isinstance(A, DisjointUnion):
        total = A.measure()
        out: List[Region2] = []
        start = 0.0
        for idx, part in enumerate(A.parts):
            m = part.measure()
            end = 1.0 if idx == len(A.parts) - 1 else start + m / total
            lo = max(f_lo, start)
            hi = min(f_hi, end)
            if hi > lo and m > 0:
                local_lo = _clip01((lo - start) / (end - start))
                local_hi = _clip01((hi - start) / (end - start))
                # rounding dust at a part boundary
                if local_hi - local_lo > 1e-12:
                    out.append(slice_by_fraction(part, local_lo, local_hi))
            start = end
        if not out:
            raise DomainError(f"Empty slice [{f_lo}, {f_hi}) of {A}")
        return out[0] if len(out) == 1 else DisjointUnion(tuple(out))

    raise TypeError(f"Unsupported region type {type(A).__name__}")


def _clip01(f: float) -> float:
    if f <= 1e-15:
        return 0.0
    if f >= 1.0 - 1e-15:
        return 1.0
    return f


def punctured_tube(delta: float, N: float) -> CylinderStack:
    """T(delta, N) = (D(0, delta) minus the origin) x [-N, N)"""
    if not (delta > 0 and N > 0):
        raise DomainError(f"Tube needs delta > 0 and N > 0, got {delta}, {N}")
    return CylinderStack(((Annulus((0.0, 0.0), 0.0, delta), (-float(N), float(N))),))


def region_from_spec(spec: Union[Dict, str]) -> Region2:
    """
    Build a Region2 from its JSON description

    Examples:
    ---------
    {"type": "disk", "center": [0, 0], "radius": 2.5}
    {"type": "annulus", "center": [0, 0], "r_inner": 1, "r_outer": 2}
    {"type": "rectangle", "xmin": 0, "xmax": 4, "ymin": 0, "ymax": 3}
    {"type": "union", "parts": [...]}
    """
    if isinstance(spec, str):
        spec = json.loads(spec)
    if not isinstance(spec, dict) or "type" not in spec:
        raise DomainError(f"Region spec must be an object with a 'type' field, got {spec!r}")
    kind = str(spec["type"]).lower()
    try:
        if kind in ("rectangle", "rect", "box"):
            return Rectangle(spec["xmin"], spec["xmax"], spec["ymin"], spec["ymax"])
        if kind == "disk":
            return Disk(spec.get("center", (0.0, 0.0)), spec["radius"])
        if kind == "annulus":
            return Annulus(spec.get("center", (0.0, 0.0)), spec["r_inner"], spec["r_outer"])
        if kind in ("union", "disjoint_union"):
            union = DisjointUnion(tuple(region_from_spec(part) for part in spec["parts"]))
            check_disjoint(union)
            return union
    except KeyError as e:
        raise DomainError(f"Region spec of type {kind!r} is missing field {e}") from e
    raise DomainError(f"Unknown region type {spec['type']!r}")


def region_to_spec(A: Region2) -> Dict:
    """Inverse of region_from_spec"""
    if isinstance(A, Rectangle):
        return {"type": "rectangle", "xmin": A.xmin, "xmax": A.xmax, "ymin": A.ymin, "ymax": A.ymax}
    if isinstance(A, Disk):
        return {"type": "disk", "center": list(A.center), "radius": A.radius}
    if isinstance(A, Annulus):
        return {"type": "annulus", "center": list(A.center), "r_inner": A.r_inner, "r_outer": A.r_outer}
    if isinstance(A, DisjointUnion):
        return {"type": "union", "parts": [region_to_spec(part) for part in A.parts]}
    raise TypeError(f"Unsupported region type {type(A).__name__}")


def plate_from_spec(spec: Union[Dict, str], z: float = None, eps: float = None) -> Plate:
    """Plate from a region spec carrying extra 'z' and 'eps' fields (arguments override)"""
    if isinstance(spec, str):
        spec = json.loads(spec)
    z = spec.get("z", 0.0) if z is None else z
    eps = spec.get("eps") if eps is None else eps
    if eps is None:
        raise DomainError("Plate spec needs an 'eps' field")
    region_spec = {key: value for key, value in spec.items() if key not in ("z", "eps")}
    return Plate(region_from_spec(region_spec), z, eps)


def disk_of_area(area: float, center: Sequence[float] = (0.0, 0.0)) -> Disk:
    """Disk with the given measure"""
    return Disk(center, math.sqrt(area / math.pi))


def stack_from_pieces(pieces: Iterable[Region2], intervals: Iterable[Tuple[float, float]]) -> CylinderStack:
    return CylinderStack(tuple(zip(tuple(pieces), tuple(intervals))))
