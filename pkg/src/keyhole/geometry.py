"""Keyhole-domain geometry in 2D and 3D.

Conventions: the hole wall is the hyperplane axial = 0 and the opposite
parallel wall is axial = h; the axial coordinate is always the *last*
component of a point.  A point is (x, axial) in 2D and (x, y, axial) in
3D.  The external node sits at the wedge apex, i.e. the hole centre on
the wall, and its line of sight is the wedge (2D) or cone (3D) around the
inward wall normal.

Reflections are modelled off the two parallel walls only, via billiard
unfolding: the c-th image of a point with axial coordinate t sits at
axial 2*ceil(c/2)*h + (-1)^c * t with unchanged transverse coordinates,
so successive images tile the bands [c*h, (c+1)*h] of the unfolded strip.
A point belongs to region D_c when its c-th image lies inside the LOS
wedge/cone and c is minimal with that property.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class KeyholeSpec:
    """One wall hole: width w (2D) or opening diameter/side (3D), depth d.

    ``wall_position`` is the hole-centre coordinate along the wall: a
    float in 2D, an (x, y) pair in 3D.  ``shape`` selects the 3D
    cross-section ('circular' or 'square'); it is ignored in 2D.
    """

    width: float
    depth: float
    wall_position: float | tuple[float, float] = 0.0
    shape: str = "circular"

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("width must be > 0")
        if self.depth <= 0:
            raise ValueError("depth must be > 0")
        if self.shape not in ("circular", "square"):
            raise ValueError(f"unknown hole shape {self.shape!r}")
        if not (self.width < self.depth < 1.0):
            warnings.warn(
                "hole outside the regime width << depth << 1; "
                "the small-angle approximations may be poor",
                stacklevel=2,
            )

    @property
    def half_angle(self) -> float:
        """arctan(w / 2d): phi/2 in 2D, the polar angle psi in 3D."""
        return math.atan(self.width / (2.0 * self.depth))

    @property
    def solid_angle(self) -> float:
        """Solid angle of the 3D LOS cone/pyramid."""
        t = math.tan(self.half_angle)
        if self.shape == "circular":
            return 2.0 * math.pi * (1.0 - math.cos(self.half_angle))
        # square aperture of half-side s at distance d: 4 asin(s^2/(s^2+d^2))
        return 4.0 * math.asin(t * t / (1.0 + t * t))

    def apex(self) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.wall_position, dtype=float))

    @classmethod
    def from_half_angle(cls, half_angle, depth=0.1, wall_position=0.0, shape="circular"):
        """Build a hole whose LOS half-angle equals ``half_angle``."""
        if not 0.0 < half_angle < math.pi / 2:
            raise ValueError("half_angle must be in (0, pi/2)")
        return cls(
            width=2.0 * depth * math.tan(half_angle),
            depth=depth,
            wall_position=wall_position,
            shape=shape,
        )

    @classmethod
    def from_solid_angle(cls, phi_sol, depth=0.1, wall_position=(0.0, 0.0), shape="circular"):
        """Build a 3D hole whose LOS solid angle equals ``phi_sol``."""
        if not 0.0 < phi_sol < 2.0 * math.pi:
            raise ValueError("phi_sol must be in (0, 2*pi)")
        if shape == "circular":
            half_angle = math.acos(1.0 - phi_sol / (2.0 * math.pi))
        else:
            u = math.sin(phi_sol / 4.0)
            half_angle = math.atan(math.sqrt(u / (1.0 - u)))
        return cls.from_half_angle(half_angle, depth, wall_position, shape)


@dataclass(frozen=True)
class KeyholeDomain:
    """Rectangle (2D) or cuboid (3D) with holes on the axial = 0 wall.

    ``height`` is the distance between the hole wall and the opposite
    parallel wall; ``length`` spans the first transverse axis and
    ``width_y`` (3D only) the second.
    """

    height: float
    length: float
    holes: tuple[KeyholeSpec, ...]
    width_y: float | None = None

    def __post_init__(self):
        if self.height <= 0 or self.length <= 0:
            raise ValueError("height and length must be > 0")
        if self.width_y is not None and self.width_y <= 0:
            raise ValueError("width_y must be > 0")
        object.__setattr__(self, "holes", tuple(self.holes))
        if not self.holes:
            raise ValueError("at least one hole is required")
        if self.wedge_overlaps():
            warnings.warn(
                "hole LOS wedges overlap inside the domain; the multi-hole "
                "independence assumption does not hold",
                stacklevel=2,
            )

    @property
    def dimension(self) -> int:
        return 2 if self.width_y is None else 3

    @property
    def volume(self) -> float:
        v = self.height * self.length
        return v if self.width_y is None else v * self.width_y

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        ok = (pts[:, -1] >= 0) & (pts[:, -1] <= self.height)
        ok &= (pts[:, 0] >= 0) & (pts[:, 0] <= self.length)
        if self.dimension == 3:
            ok &= (pts[:, 1] >= 0) & (pts[:, 1] <= self.width_y)
        return ok

    def wedge_overlaps(self) -> bool:
        """True when any two holes' LOS wedges intersect inside the domain.

        The widest in-domain cross-section of a LOS wedge is at the far
        wall, with half-extent h * tan(half_angle) around the hole centre.
        """
        h = self.height
        n = len(self.holes)
        for i in range(n):
            for j in range(i + 1, n):
                a, b = self.holes[i], self.holes[j]
                sep = np.linalg.norm(a.apex() - b.apex())
                reach = h * (math.tan(a.half_angle) + math.tan(b.half_angle))
                if sep < reach:
                    return True
        return False


@dataclass(frozen=True)
class PathClass:
    """Minimal reflection order c and unfolded distance r of one point.

    ``reflections`` is None when no path with at most the requested number
    of reflections exists.
    """

    reflections: int | None
    distance: float | None


def los_angle(hole: KeyholeSpec, dimension: int):
    """LOS opening: full angle phi in 2D; (psi, solid angle) in 3D."""
    if dimension == 2:
        return 2.0 * hole.half_angle
    if dimension == 3:
        return hole.half_angle, hole.solid_angle
    raise ValueError("dimension must be 2 or 3")


def _apex_frame(points: np.ndarray, hole: KeyholeSpec) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float)).copy()
    pts[:, :-1] -= hole.apex()
    return pts


def unfold_images(point, domain: KeyholeDomain, hole: KeyholeSpec, C: int):
    """Images of ``point`` across the parallel walls, apex-centred.

    Returns [(c, image)] for c = 0..C where image has unchanged transverse
    coordinates and axial coordinate 2*ceil(c/2)*h + (-1)^c * axial.
    """
    if C < 0:
        raise ValueError("C must be >= 0")
    pts = np.atleast_2d(np.asarray(point, dtype=float))
    if not domain.contains(pts).all():
        raise ValueError("point outside domain")
    local = _apex_frame(pts, hole)[0]
    h = domain.height
    images = []
    for c in range(C + 1):
        img = local.copy()
        img[-1] = 2.0 * math.ceil(c / 2.0) * h + (-1) ** c * local[-1]
        images.append((c, img))
    return images


def classify_points(points, domain: KeyholeDomain, hole: KeyholeSpec, C: int):
    """Vectorised minimal-reflection classification.

    Returns (c, r): per-point reflection order (-1 when no image with at
    most C reflections is inside the LOS wedge/cone) and the apex-to-image
    Euclidean distance for classified points (nan otherwise).
    """
    if C < 0:
        raise ValueError("C must be >= 0")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if not domain.contains(pts).all():
        raise ValueError("point outside domain")
    local = _apex_frame(pts, hole)
    h = domain.height
    t = math.tan(hole.half_angle)
    axial = local[:, -1]
    trans = local[:, :-1]
    c_out = np.full(len(pts), -1, dtype=int)
    r_out = np.full(len(pts), np.nan)
    for c in range(C + 1):
        y_c = 2.0 * math.ceil(c / 2.0) * h + (-1) ** c * axial
        if domain.dimension == 2 or hole.shape == "circular":
            radial = np.abs(trans[:, 0]) if trans.shape[1] == 1 else np.linalg.norm(trans, axis=1)
            inside = radial <= y_c * t
        else:  # square pyramid: per-axis bound
            inside = np.abs(trans).max(axis=1) <= y_c * t
        new = inside & (c_out < 0)
        c_out[new] = c
        r_out[new] = np.sqrt((trans[new] ** 2).sum(axis=1) + y_c[new] ** 2)
    return c_out, r_out


def classify_path(point, domain: KeyholeDomain, hole: KeyholeSpec, C: int) -> PathClass:
    """Minimal-c classification of a single point (see classify_points)."""
    c, r = classify_points(np.atleast_2d(point), domain, hole, C)
    if c[0] < 0:
        return PathClass(reflections=None, distance=None)
    return PathClass(reflections=int(c[0]), distance=float(r[0]))


def sample_points(domain: KeyholeDomain, n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. uniform points inside the domain."""
    if domain.dimension == 2:
        high = [domain.length, domain.height]
    else:
        high = [domain.length, domain.width_y, domain.height]
    return rng.uniform(low=0.0, high=high, size=(n, len(high)))


def region_measure(
    c: int,
    domain: KeyholeDomain,
    hole: KeyholeSpec,
    method: str = "analytic-approx",
    n_samples: int = 1_000_000,
    rng: np.random.Generator | None = None,
):
    """Area/volume of the reflection region D_c.

    ``analytic-approx`` returns the small-angle estimates (2D: phi h^2/2
    for c = 0 and twice that for c >= 1; 3D: phi_sol h^3/3 and 6c times
    that).  ``montecarlo`` returns (estimate, std_error) from uniform
    hit counting with classify_points.
    """
    if c < 0:
        raise ValueError("c must be >= 0")
    h = domain.height
    if method == "analytic-approx":
        if domain.dimension == 2:
            d0 = 2.0 * hole.half_angle * h * h / 2.0
            return d0 if c == 0 else 2.0 * d0
        d0 = hole.solid_angle * h ** 3 / 3.0
        return d0 if c == 0 else 6.0 * c * d0
    if method != "montecarlo":
        raise ValueError(f"unknown method {method!r}")
    if rng is None:
        rng = np.random.default_rng()
    pts = sample_points(domain, n_samples, rng)
    cls, _ = classify_points(pts, domain, hole, c)
    p = np.count_nonzero(cls == c) / n_samples
    v = domain.volume
    return v * p, v * math.sqrt(p * (1.0 - p) / n_samples)
