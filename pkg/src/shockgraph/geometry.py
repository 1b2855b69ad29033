"""Small planar geometry helpers shared by every layer.

Points are plain (x, y) float tuples or length-2 numpy arrays; all distances
are in pixels.
"""
from __future__ import annotations

import math

import numpy as np

# Coincidence tolerance for input geometry (pixels).
EPS_GEOM = 1e-9
# Equidistance tolerance for bisector checks (pixels).
EPS_EQ = 1e-9
# Node merge tolerance in the propagation engine (pixels).
EPS_MERGE = 1e-6
# Supporting lines closer than this angle (radians) are treated as parallel.
PARALLEL_EPS = 1e-7


def norm(v) -> float:
    return math.hypot(v[0], v[1])


def dist(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def unit(v):
    n = math.hypot(v[0], v[1])
    if n < EPS_GEOM:
        raise ZeroDivisionError("cannot normalize near-zero vector")
    return np.array([v[0] / n, v[1] / n])


def perp(v):
    """Rotate v by +90 degrees."""
    return np.array([-v[1], v[0]])


def cross(a, b) -> float:
    return a[0] * b[1] - a[1] * b[0]


def dot(a, b) -> float:
    return a[0] * b[0] + a[1] * b[1]


def angle_of(v) -> float:
    return math.atan2(v[1], v[0])


def point_segment_distance(q, a, b) -> float:
    """Distance from q to the closed segment ab."""
    ax, ay = a[0], a[1]
    dx, dy = b[0] - ax, b[1] - ay
    L2 = dx * dx + dy * dy
    if L2 <= EPS_GEOM * EPS_GEOM:
        return math.hypot(q[0] - ax, q[1] - ay)
    t = ((q[0] - ax) * dx + (q[1] - ay) * dy) / L2
    t = min(1.0, max(0.0, t))
    return math.hypot(q[0] - (ax + t * dx), q[1] - (ay + t * dy))


def point_open_segment_distance(q, a, b) -> float:
    """Distance from q to the open segment ab.

    Returns +inf when the perpendicular foot falls outside the open interval;
    the segment's endpoint elements own those regions.
    """
    ax, ay = a[0], a[1]
    dx, dy = b[0] - ax, b[1] - ay
    L2 = dx * dx + dy * dy
    if L2 <= EPS_GEOM * EPS_GEOM:
        return math.inf
    t = ((q[0] - ax) * dx + (q[1] - ay) * dy) / L2
    if t <= 0.0 or t >= 1.0:
        return math.inf
    return math.hypot(q[0] - (ax + t * dx), q[1] - (ay + t * dy))


def segments_interiors_intersect(a1, b1, a2, b2, eps: float = EPS_GEOM) -> bool:
    """True when the open interiors of segments a1b1 and a2b2 cross."""
    d1 = (b1[0] - a1[0], b1[1] - a1[1])
    d2 = (b2[0] - a2[0], b2[1] - a2[1])
    denom = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(denom) < eps:
        return False  # parallel; touching overlaps are handled upstream
    rx, ry = a2[0] - a1[0], a2[1] - a1[1]
    t = (rx * d2[1] - ry * d2[0]) / denom
    u = (rx * d1[1] - ry * d1[0]) / denom
    return eps < t < 1.0 - eps and eps < u < 1.0 - eps


def polygon_area(pts) -> float:
    """Signed shoelace area of a closed polygon given as an (n,2) array."""
    p = np.asarray(pts, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


class Rect:
    """Axis-aligned rectangle used for clipping shock propagation."""

    __slots__ = ("xmin", "ymin", "xmax", "ymax")

    def __init__(self, xmin, ymin, xmax, ymax):
        if not (xmax > xmin and ymax > ymin):
            raise ValueError("empty rectangle")
        self.xmin, self.ymin = float(xmin), float(ymin)
        self.xmax, self.ymax = float(xmax), float(ymax)

    def contains(self, q, slack: float = 0.0) -> bool:
        return (self.xmin - slack <= q[0] <= self.xmax + slack
                and self.ymin - slack <= q[1] <= self.ymax + slack)

    def inset_distance(self, q) -> float:
        """Signed distance to the boundary: positive inside, negative outside."""
        return min(q[0] - self.xmin, self.xmax - q[0],
                   q[1] - self.ymin, self.ymax - q[1])

    def corners(self):
        return [(self.xmin, self.ymin), (self.xmax, self.ymin),
                (self.xmax, self.ymax), (self.xmin, self.ymax)]

    def inflated(self, margin: float) -> "Rect":
        return Rect(self.xmin - margin, self.ymin - margin,
                    self.xmax + margin, self.ymax + margin)

    def __repr__(self):
        return f"Rect({self.xmin}, {self.ymin}, {self.xmax}, {self.ymax})"
