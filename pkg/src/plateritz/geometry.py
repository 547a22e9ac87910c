"""Plate domains, random sampling, and Monte-Carlo integration.

Four domain shapes are supported: rectangle, annulus, square with a
centered square cutout, and skew (parallelogram) plates. Interior points
are i.i.d. uniform (rejection sampling where needed); boundary points are
uniform in arc length with unit outward normals attached. Integrals are
estimated as (measure / n) * sum(values).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .autodiff import asum

BOUNDARY_KINDS = ("clamped", "simply_supported", "free")


@dataclass(frozen=True)
class BoundarySegment:
    """One piece of the boundary with its support condition.

    ``curve(t)`` maps t in [0, 1] to points, uniform in arc length;
    ``normal(t)`` gives the matching unit outward normals. Prescribed
    deflection/rotation apply to essential conditions, ``line_load`` and
    ``edge_moment`` feed the external-work boundary terms.
    """

    name: str
    kind: str
    curve: object
    normal: object
    length: float
    prescribed_w: float = 0.0
    prescribed_rotation: float = 0.0
    line_load: float = 0.0
    edge_moment: float = 0.0

    def __post_init__(self):
        if self.kind not in BOUNDARY_KINDS:
            raise ValueError(f"unknown boundary kind {self.kind!r}")


def _line_segment(name, kind, p0, p1, outward, **kw):
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    d = p1 - p0
    length = float(np.hypot(*d))
    n = np.asarray(outward, dtype=float)
    n = n / np.hypot(*n)

    def curve(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return p0 + np.outer(t, d)

    def normal(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.tile(n, (t.size, 1))

    return BoundarySegment(name, kind, curve, normal, length, **kw)


def _circle_segment(name, kind, center, radius, inward=False, **kw):
    cx, cy = center
    sign = -1.0 if inward else 1.0

    def curve(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        ang = 2.0 * math.pi * t
        return np.column_stack([cx + radius * np.cos(ang), cy + radius * np.sin(ang)])

    def normal(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        ang = 2.0 * math.pi * t
        return sign * np.column_stack([np.cos(ang), np.sin(ang)])

    return BoundarySegment(name, kind, curve, normal, 2.0 * math.pi * radius, **kw)


class Rectangle:
    """Axis-aligned plate [0, a] x [0, b]."""

    edge_names = ("bottom", "right", "top", "left")

    def __init__(self, a, b):
        if a <= 0 or b <= 0:
            raise ValueError("rectangle sides must be positive")
        self.a, self.b = float(a), float(b)

    def area(self):
        return self.a * self.b

    def bbox(self):
        return (0.0, 0.0), (self.a, self.b)

    def contains(self, pts, tol=0.0):
        pts = np.atleast_2d(pts)
        return ((pts[:, 0] >= -tol) & (pts[:, 0] <= self.a + tol)
                & (pts[:, 1] >= -tol) & (pts[:, 1] <= self.b + tol))

    def segments(self, kinds):
        a, b = self.a, self.b
        corners = {"bottom": ((0, 0), (a, 0), (0, -1)),
                   "right": ((a, 0), (a, b), (1, 0)),
                   "top": ((a, b), (0, b), (0, 1)),
                   "left": ((0, b), (0, 0), (-1, 0))}
        return [_line_segment(nm, kinds[nm], *corners[nm]) for nm in self.edge_names]


class Annulus:
    """Ring b <= r <= a centered at the origin."""

    edge_names = ("outer", "inner")

    def __init__(self, a, b):
        if not 0 < b < a:
            raise ValueError("annulus needs 0 < inner < outer radius")
        self.a, self.b = float(a), float(b)

    def area(self):
        return math.pi * (self.a ** 2 - self.b ** 2)

    def bbox(self):
        return (-self.a, -self.a), (self.a, self.a)

    def contains(self, pts, tol=0.0):
        pts = np.atleast_2d(pts)
        r = np.hypot(pts[:, 0], pts[:, 1])
        return (r >= self.b - tol) & (r <= self.a + tol)

    def segments(self, kinds):
        return [
            _circle_segment("outer", kinds["outer"], (0.0, 0.0), self.a),
            _circle_segment("inner", kinds["inner"], (0.0, 0.0), self.b, inward=True),
        ]


class SquareWithCutout:
    """Square [0, L]^2 with a centered square hole of side ratio xi."""

    def __init__(self, L, xi):
        if L <= 0 or not 0.0 <= xi < 1.0:
            raise ValueError("need L > 0 and 0 <= cutout ratio < 1")
        self.L, self.xi = float(L), float(xi)
        half = self.xi * self.L / 2.0
        mid = self.L / 2.0
        self.c0, self.c1 = mid - half, mid + half

    @property
    def edge_names(self):
        outer = ("bottom", "right", "top", "left")
        if self.xi == 0.0:
            return outer
        return outer + ("hole_left", "hole_bottom", "hole_right", "hole_top")

    def area(self):
        return self.L ** 2 * (1.0 - self.xi ** 2)

    def bbox(self):
        return (0.0, 0.0), (self.L, self.L)

    def contains(self, pts, tol=0.0):
        pts = np.atleast_2d(pts)
        L = self.L
        inside_outer = ((pts[:, 0] >= -tol) & (pts[:, 0] <= L + tol)
                        & (pts[:, 1] >= -tol) & (pts[:, 1] <= L + tol))
        if self.xi == 0.0:
            return inside_outer
        in_hole = ((pts[:, 0] > self.c0 + tol) & (pts[:, 0] < self.c1 - tol)
                   & (pts[:, 1] > self.c0 + tol) & (pts[:, 1] < self.c1 - tol))
        return inside_outer & ~in_hole

    def segments(self, kinds):
        L, c0, c1 = self.L, self.c0, self.c1
        segs = [
            _line_segment("bottom", kinds["bottom"], (0, 0), (L, 0), (0, -1)),
            _line_segment("right", kinds["right"], (L, 0), (L, L), (1, 0)),
            _line_segment("top", kinds["top"], (L, L), (0, L), (0, 1)),
            _line_segment("left", kinds["left"], (0, L), (0, 0), (-1, 0)),
        ]
        if self.xi > 0.0:
            # outward normals of the domain point into the hole
            segs += [
                _line_segment("hole_left", kinds["hole_left"], (c0, c0), (c0, c1), (1, 0)),
                _line_segment("hole_bottom", kinds["hole_bottom"], (c0, c0), (c1, c0), (0, 1)),
                _line_segment("hole_right", kinds["hole_right"], (c1, c0), (c1, c1), (-1, 0)),
                _line_segment("hole_top", kinds["hole_top"], (c0, c1), (c1, c1), (0, -1)),
            ]
        return segs


class SkewPlate:
    """Parallelogram with base a along x and side b inclined by the skew angle.

    The skew angle is measured from the y-axis, so vertices sit at (0, 0),
    (a, 0), (a + b sin t, b cos t), (b sin t, b cos t) and the area is
    a * b * cos(t).
    """

    edge_names = ("bottom", "right", "top", "left")

    def __init__(self, a, b, angle_deg):
        if a <= 0 or b <= 0:
            raise ValueError("skew plate sides must be positive")
        if not 0.0 <= angle_deg < 90.0:
            raise ValueError("skew angle must lie in [0, 90) degrees")
        self.a, self.b = float(a), float(b)
        self.angle_deg = float(angle_deg)
        t = math.radians(angle_deg)
        self.sx = self.b * math.sin(t)   # horizontal offset of the top edge
        self.cy = self.b * math.cos(t)   # height

    def area(self):
        return self.a * self.cy

    def bbox(self):
        return (0.0, 0.0), (self.a + self.sx, self.cy)

    def to_physical(self, uv):
        """Affine image of unit-square coordinates (u, v)."""
        uv = np.atleast_2d(uv)
        return np.column_stack([self.a * uv[:, 0] + self.sx * uv[:, 1],
                                self.cy * uv[:, 1]])

    def contains(self, pts, tol=0.0):
        pts = np.atleast_2d(pts)
        v = pts[:, 1] / self.cy
        u = (pts[:, 0] - self.sx * v) / self.a
        return (u >= -tol) & (u <= 1 + tol) & (v >= -tol) & (v <= 1 + tol)

    def segments(self, kinds):
        a, sx, cy = self.a, self.sx, self.cy
        t = math.radians(self.angle_deg)
        n_right = (math.cos(t), -math.sin(t))
        n_left = (-math.cos(t), math.sin(t))
        corners = {"bottom": ((0, 0), (a, 0), (0, -1)),
                   "right": ((a, 0), (a + sx, cy), n_right),
                   "top": ((a + sx, cy), (sx, cy), (0, 1)),
                   "left": ((sx, cy), (0, 0), n_left)}
        return [_line_segment(nm, kinds[nm], *corners[nm]) for nm in self.edge_names]


DOMAIN_KINDS = {
    "rectangle": Rectangle,
    "annulus": Annulus,
    "square_with_cutout": SquareWithCutout,
    "skew": SkewPlate,
}


@dataclass
class BoundarySample:
    segment: BoundarySegment
    points: np.ndarray
    normals: np.ndarray


@dataclass
class SampleSet:
    """Frozen quadrature points for one training run."""

    domain: object
    interior: np.ndarray
    area: float
    boundary: list = field(default_factory=list)
    seed: int = 0

    def segments_of_kind(self, *kinds):
        return [bs for bs in self.boundary if bs.segment.kind in kinds]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "y", "tag"])
            for x, y in self.interior:
                writer.writerow([repr(float(x)), repr(float(y)), "interior"])
            for bs in self.boundary:
                for x, y in bs.points:
                    writer.writerow([repr(float(x)), repr(float(y)), bs.segment.name])


def sample_interior(domain, n, seed):
    """n i.i.d. uniform points in the domain (and its exact area)."""
    if n < 1:
        raise ValueError("need at least one interior sample")
    rng = np.random.default_rng(seed)
    if isinstance(domain, Rectangle):
        pts = rng.uniform(size=(n, 2)) * [domain.a, domain.b]
    elif isinstance(domain, SkewPlate):
        pts = domain.to_physical(rng.uniform(size=(n, 2)))
    else:
        # rejection from the bounding box
        (x0, y0), (x1, y1) = domain.bbox()
        chunks = []
        got = 0
        while got < n:
            cand = rng.uniform((x0, y0), (x1, y1), size=(max(2 * (n - got), 128), 2))
            keep = cand[domain.contains(cand)]
            chunks.append(keep)
            got += len(keep)
        pts = np.concatenate(chunks)[:n]
    return pts, domain.area()


def sample_boundary(segment, n, seed):
    """n points uniform in arc length with unit outward normals."""
    if n < 1:
        raise ValueError("need at least one boundary sample")
    rng = np.random.default_rng(seed)
    t = rng.uniform(size=n)
    return segment.curve(t), segment.normal(t)


def build_sample_set(domain, kinds, n_interior=4096, n_boundary=256, seed=0):
    """Sample the interior and every boundary segment with one seed stream.

    Per-segment seeds are derived deterministically from ``seed`` so the
    set is bit-reproducible.
    """
    interior, area = sample_interior(domain, n_interior, seed)
    boundary = []
    for k, seg in enumerate(domain.segments(kinds)):
        pts, normals = sample_boundary(seg, n_boundary, seed * 7919 + 31 * (k + 1))
        boundary.append(BoundarySample(seg, pts, normals))
    return SampleSet(domain, interior, area, boundary, seed)


def mc_integrate(values, measure, n=None):
    """Monte-Carlo estimate (measure / n) * sum(values)."""
    size = np.size(values.value if hasattr(values, "value") else values)
    if size == 0:
        raise ValueError("cannot integrate an empty sample")
    if n is None:
        n = size
    elif n != size:
        raise ValueError(f"sample count mismatch: {n} declared, {size} values")
    return (measure / n) * asum(values)


def evaluation_grid(domain, nx=101, ny=None):
    """Tensor grid over the bounding box plus an in-domain mask."""
    ny = nx if ny is None else ny
    (x0, y0), (x1, y1) = domain.bbox()
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    mask = domain.contains(pts, tol=1e-12)
    return pts, mask, (nx, ny)
