"""Deterministic scene builders.

Golden shapes with known medial axes (rectangle, square, regular polygon,
point triples) plus a documented pseudo-random fragment generator used by the
benchmark and oracle-comparison suites.  The random generator is fully
specified here so results are reproducible across platforms:

* randomness comes from a 64-bit linear congruential generator
  x <- 6364136223846793005 * x + 1442695040888963407  (mod 2^64),
  drawing uniforms as the top 53 bits / 2^53;
* fragments live in disjoint discs of a fixed, N-independent size placed by
  rejection sampling (a disc is redrawn until it clears all earlier discs,
  shrinking by 15% every 80 failed tries), so fragments never touch or cross
  while scene density grows naturally with the fragment count;
* each fragment is either a small triangle (closed) or an open polyline whose
  vertices advance monotonically along a random heading (hence simple).
"""
from __future__ import annotations

import math

import numpy as np

from .contours import POINT, BoundaryElement, ContourFragment
from .geometry import Rect

_LCG_MUL = 6364136223846793005
_LCG_ADD = 1442695040888963407
_MASK64 = (1 << 64) - 1


class LCG:
    """Minimal deterministic generator (see module docstring)."""

    def __init__(self, seed: int):
        self.state = (int(seed) ^ 0x9E3779B97F4A7C15) & _MASK64
        for _ in range(4):  # warm up so small seeds decorrelate
            self._step()

    def _step(self) -> int:
        self.state = (_LCG_MUL * self.state + _LCG_ADD) & _MASK64
        return self.state

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        return lo + (hi - lo) * ((self._step() >> 11) / float(1 << 53))

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] inclusive."""
        return lo + int(self.uniform(0.0, float(hi - lo + 1) - 1e-12))


# ---------------------------------------------------------------------------
# Golden shapes
# ---------------------------------------------------------------------------

def rectangle_fragment(hw: float = 2.0, hh: float = 1.0,
                       frag_id: int = 0) -> ContourFragment:
    """Closed axis-aligned rectangle with corners (+-hw, +-hh)."""
    v = [(-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)]
    return ContourFragment(frag_id, np.asarray(v, dtype=float), closed=True)


def square_fragment(side: float = 2.0, frag_id: int = 0) -> ContourFragment:
    h = 0.5 * side
    return rectangle_fragment(h, h, frag_id)


def regular_polygon_fragment(k: int = 64, radius: float = 1.0,
                             frag_id: int = 0) -> ContourFragment:
    th = 2.0 * math.pi * np.arange(k) / k
    v = radius * np.column_stack([np.cos(th), np.sin(th)])
    return ContourFragment(frag_id, v, closed=True)


def equilateral_point_elements(side: float = 2.0) -> list[BoundaryElement]:
    """Three isolated point sources at the corners of an equilateral
    triangle (circumradius side/sqrt(3)), centered on the origin."""
    rc = side / math.sqrt(3.0)
    elems = []
    for i in range(3):
        th = math.pi / 2 + 2.0 * math.pi * i / 3
        elems.append(BoundaryElement(i, POINT,
                                     (rc * math.cos(th), rc * math.sin(th)), i))
    return elems


def smooth_curve_fragment(frag_id: int = 0, samples: int = 4096) -> ContourFragment:
    """Elongated smooth closed curve (perturbed ellipse), densely sampled.

    Intended to be passed through simplify_polyline at several tolerances to
    exercise polyline-invariance of the regularized graph.
    """
    t = 2.0 * math.pi * np.arange(samples) / samples
    x = 8.0 * np.cos(t) + 0.9 * np.cos(2 * t)
    y = 3.0 * np.sin(t) + 0.5 * np.sin(2 * t)
    return ContourFragment(frag_id, np.column_stack([x, y]), closed=True)


# ---------------------------------------------------------------------------
# Random scenes
# ---------------------------------------------------------------------------

def _open_polyline(rng: LCG, cx: float, cy: float, rad: float, k: int):
    """k-vertex simple open polyline inside the disc (cx, cy, rad):
    vertices advance monotonically along a random heading."""
    phi = rng.uniform(0.0, 2.0 * math.pi)
    ux, uy = math.cos(phi), math.sin(phi)
    along = np.sort([rng.uniform(-rad, rad) for _ in range(k)])
    while np.min(np.diff(along)) < 0.15 * rad:  # keep edges non-degenerate
        along = np.sort([rng.uniform(-rad, rad) for _ in range(k)])
    lateral = [rng.uniform(-0.4 * rad, 0.4 * rad) for _ in range(k)]
    v = [(cx + a * ux - l * uy, cy + a * uy + l * ux)
         for a, l in zip(along, lateral)]
    return np.asarray(v, dtype=float)


def _triangle(rng: LCG, cx: float, cy: float, rad: float):
    """Well-conditioned triangle inscribed in the disc (cx, cy, rad)."""
    base = rng.uniform(0.0, 2.0 * math.pi)
    ths = [base + 2.0 * math.pi * i / 3 + rng.uniform(-0.5, 0.5)
           for i in range(3)]
    v = [(cx + rad * math.cos(t), cy + rad * math.sin(t)) for t in ths]
    return np.asarray(v, dtype=float)


def random_scene(n_fragments: int, seed: int,
                 width: float = 100.0, height: float = 100.0,
                 open_fraction: float = 0.65):
    """Deterministic scene of n_fragments disjoint fragments (see module
    docstring for the exact procedure).  Returns (fragments, image_rect)."""
    rng = LCG(seed)
    placed: list[tuple[float, float, float]] = []
    frags = []
    for i in range(n_fragments):
        rad = 2.2 * rng.uniform(0.75, 1.25)
        for attempt in range(480):
            cx = rng.uniform(rad + 0.5, width - rad - 0.5)
            cy = rng.uniform(rad + 0.5, height - rad - 0.5)
            if all((cx - x) ** 2 + (cy - y) ** 2 > (rad + r + 0.6) ** 2
                   for x, y, r in placed):
                break
            if attempt % 80 == 79:
                rad *= 0.85  # crowded image: try a smaller fragment
        else:
            raise ValueError(
                f"could not place fragment {i}; image too crowded")
        placed.append((cx, cy, rad))
        if rng.uniform() < open_fraction:
            k = rng.randint(2, 3)
            frags.append(ContourFragment(i, _open_polyline(rng, cx, cy, rad, k)))
        else:
            frags.append(ContourFragment(i, _triangle(rng, cx, cy, rad),
                                         closed=True))
    return frags, Rect(0.0, 0.0, width, height)


def random_element_scene(n_elements: int, seed: int, **kw):
    """Random scene sized so decomposition yields roughly n_elements
    boundary elements (open k-polyline -> 2k-1 elements, triangle -> 6)."""
    n_frag = max(1, int(round(n_elements / 5.4)))
    return random_scene(n_frag, seed, **kw)
