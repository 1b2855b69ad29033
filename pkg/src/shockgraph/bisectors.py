"""Analytic bisectors of point/segment source pairs with shock dynamics.

Every bisector is parametrized by arc length s (unit speed). The radius
function r(s) is the common distance to the two generators; contacts(s)
returns the tangency points on each generator, ordered (left-of-+s,
right-of-+s).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .contours import POINT, SEGMENT, BoundaryElement
from .errors import DegenerateInputError, InvalidInputError
from .geometry import EPS_GEOM, PARALLEL_EPS, Rect, cross, dot, perp, unit

KIND_LINE = "Line"
KIND_PARABOLA = "Parabola"
KIND_PERPENDICULAR = "PerpendicularAtEndpoint"
KIND_MIDLINE = "Midline"

_UNBOUNDED = 1e18


def _lex_positive(v):
    """Flip v so its first nonzero coordinate is positive (determinism)."""
    if v[0] < 0 or (v[0] == 0 and v[1] < 0):
        return -v
    return v


class Bisector:
    """Base class; subclasses provide the analytic parametrization."""

    kind: str
    gen_plus: int   # element id whose contact lies left of the +s tangent
    gen_minus: int  # element id whose contact lies right of the +s tangent
    branch: int = 0
    s_lo: float = -_UNBOUNDED
    s_hi: float = _UNBOUNDED

    def point(self, s):
        raise NotImplementedError

    def tangent(self, s):
        raise NotImplementedError

    def radius(self, s):
        raise NotImplementedError

    def dradius(self, s):
        raise NotImplementedError

    def curvature(self, s):
        raise NotImplementedError

    def contacts(self, s):
        """(bp_plus, bp_minus) tangency points at parameter s."""
        raise NotImplementedError

    def contacts_array(self, ss):
        """contacts() over a parameter vector: two (n, 2) arrays.  Constant
        contact loci (point generators) are broadcast."""
        ss = np.asarray(ss, dtype=float)
        cp, cm = self.contacts(ss)
        shape = ss.shape + (2,)
        return (np.broadcast_to(np.asarray(cp, dtype=float), shape),
                np.broadcast_to(np.asarray(cm, dtype=float), shape))

    def argmin_radius(self):
        """Parameter of the radius minimum over [s_lo, s_hi]."""
        raise NotImplementedError

    @property
    def pair(self):
        a, b = self.gen_plus, self.gen_minus
        return (a, b) if a < b else (b, a)

    @property
    def branch_key(self):
        return (*self.pair, self.branch)

    def with_domain(self, s_lo, s_hi):
        import copy
        b = copy.copy(self)
        b.s_lo, b.s_hi = float(s_lo), float(s_hi)
        return b

    def __repr__(self):
        return (f"{type(self).__name__}(gen+={self.gen_plus}, gen-={self.gen_minus}, "
                f"dom=[{self.s_lo:.6g}, {self.s_hi:.6g}])")


class _LineLike(Bisector):
    """Straight bisector: p(s) = origin + s * direction."""

    def __init__(self, origin, direction):
        self.origin = np.asarray(origin, dtype=float)
        self.direction = np.asarray(direction, dtype=float)

    def point(self, s):
        if isinstance(s, (float, int)):
            o, d = self.origin, self.direction
            return np.array([o[0] + s * d[0], o[1] + s * d[1]])
        s = np.asarray(s, dtype=float)
        return self.origin + np.multiply.outer(s, self.direction)

    def tangent(self, s):
        s = np.asarray(s, dtype=float)
        return np.broadcast_to(self.direction, s.shape + (2,)).copy() \
            if s.ndim else self.direction

    def curvature(self, s):
        return np.zeros_like(np.asarray(s, dtype=float)) if np.ndim(s) else 0.0

    def clip_to_rect(self, rect: Rect):
        """Liang-Barsky: s-interval of the line inside rect (None if empty)."""
        o, d = self.origin, self.direction
        lo, hi = -_UNBOUNDED, _UNBOUNDED
        for oc, dc, mn, mx in ((o[0], d[0], rect.xmin, rect.xmax),
                               (o[1], d[1], rect.ymin, rect.ymax)):
            if abs(dc) < 1e-300:
                if not (mn <= oc <= mx):
                    return None
                continue
            t0, t1 = (mn - oc) / dc, (mx - oc) / dc
            if t0 > t1:
                t0, t1 = t1, t0
            lo, hi = max(lo, t0), min(hi, t1)
        return (lo, hi) if lo < hi else None


class PointPointBisector(_LineLike):
    """Perpendicular bisector line of two points; r(s) = hypot(half, s)."""

    kind = KIND_LINE

    def __init__(self, a, b, id_a=-1, id_b=-2):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        d = b - a
        L = math.hypot(d[0], d[1])
        if L <= EPS_GEOM:
            raise DegenerateInputError("coincident point pair")
        super().__init__((a + b) / 2.0, perp(d) / L)
        self.half = L / 2.0
        self.a, self.b = a, b
        # a lies left of the +s tangent (perp rotates +90deg)
        self.gen_plus, self.gen_minus = id_a, id_b

    def radius(self, s):
        return np.hypot(self.half, s)

    def dradius(self, s):
        return np.asarray(s) / np.hypot(self.half, s)

    def contacts(self, s):
        return tuple(self.a), tuple(self.b)

    def argmin_radius(self):
        return min(max(0.0, self.s_lo), self.s_hi)


class LinearRadiusLine(_LineLike):
    """Line bisector with r(s) = slope * |s - s_apex| (segment pairs and
    endpoint perpendiculars)."""

    def __init__(self, origin, direction, slope, contact_fns, gen_plus, gen_minus):
        super().__init__(origin, direction)
        self.slope = float(slope)
        self._contact_fns = contact_fns  # (plus_fn, minus_fn) of s
        self.gen_plus, self.gen_minus = gen_plus, gen_minus

    def radius(self, s):
        return self.slope * np.abs(np.asarray(s, dtype=float))

    def dradius(self, s):
        return self.slope * np.sign(np.asarray(s, dtype=float))

    def contacts(self, s):
        return self._contact_fns[0](s), self._contact_fns[1](s)

    def argmin_radius(self):
        return min(max(0.0, self.s_lo), self.s_hi)


class PerpendicularBisector(LinearRadiusLine):
    kind = KIND_PERPENDICULAR


class SegmentPairBisector(LinearRadiusLine):
    kind = KIND_LINE


class MidlineBisector(_LineLike):
    """Parallel-segment bisector: constant radius."""

    kind = KIND_MIDLINE

    def __init__(self, origin, direction, r0, contact_fns, gen_plus, gen_minus):
        super().__init__(origin, direction)
        self.r0 = float(r0)
        self._contact_fns = contact_fns
        self.gen_plus, self.gen_minus = gen_plus, gen_minus

    def radius(self, s):
        return np.full_like(np.asarray(s, dtype=float), self.r0) \
            if np.ndim(s) else self.r0

    def dradius(self, s):
        return np.zeros_like(np.asarray(s, dtype=float)) if np.ndim(s) else 0.0

    def contacts(self, s):
        return self._contact_fns[0](s), self._contact_fns[1](s)

    def argmin_radius(self):
        return 0.5 * (self.s_lo + self.s_hi)


class ParabolaBisector(Bisector):
    """Bisector of a point (focus) and a segment's supporting line (directrix),
    arc-length parametrized with s = 0 at the vertex."""

    kind = KIND_PARABOLA

    def __init__(self, focus, seg_a, seg_d, seg_len, id_point, id_seg):
        focus = np.asarray(focus, dtype=float)
        a = np.asarray(seg_a, dtype=float)
        d = np.asarray(seg_d, dtype=float)
        tF = dot(focus - a, d)
        foot = a + tF * d
        offs = focus - foot
        h = math.hypot(offs[0], offs[1])
        if h <= EPS_GEOM:
            raise InvalidInputError("focus lies on the supporting line")
        self.focus = focus
        self.F = foot          # directrix foot of the focus
        self.e1 = d            # along the directrix
        self.n = offs / h      # toward the focus
        self.h = h
        self.tF = tF           # segment parameter of F
        self.seg_len = float(seg_len)
        self.gen_plus, self.gen_minus = id_point, id_seg  # focus is left of +s

    # -- arc length <-> directrix coordinate -------------------------------
    def _s_of_z(self, z):
        return 0.5 * self.h * (z * np.sqrt(1.0 + z * z) + np.arcsinh(z))

    def s_of_xi(self, xi):
        return self._s_of_z(np.asarray(xi, dtype=float) / self.h)

    def xi_of_s(self, s):
        if np.ndim(s) == 0:
            # scalar Newton on z = xi/h; point()/radius() evaluate the same s
            # back to back, so remember the last inversion
            sv = float(s)
            cached = getattr(self, "_xi_last", None)
            if cached is not None and cached[0] == sv:
                return cached[1]
            h = self.h
            z = sv / h if abs(sv) < h else \
                math.copysign(math.sqrt(2.0 * abs(sv) / h), sv)
            for _ in range(40):
                f = 0.5 * h * (z * math.sqrt(1.0 + z * z) + math.asinh(z)) - sv
                step = f / (h * math.sqrt(1.0 + z * z))
                z -= step
                if abs(step) < 1e-15 * (1.0 + abs(z)):
                    break
            self._xi_last = (sv, z * h)
            return z * h
        s_arr = np.asarray(s, dtype=float)
        scalar = False
        s_arr = np.atleast_1d(s_arr)
        # initial guess: linear for small |s|, sqrt growth for large
        h = self.h
        z = np.where(np.abs(s_arr) < h,
                     s_arr / h,
                     np.sign(s_arr) * np.sqrt(np.maximum(2.0 * np.abs(s_arr) / h, 0.0)))
        for _ in range(60):
            f = self._s_of_z(z) - s_arr
            df = h * np.sqrt(1.0 + z * z)
            step = f / df
            z = z - step
            done = ~np.isfinite(step) | (np.abs(step) < 1e-15 * (1.0 + np.abs(z)))
            if done.all():
                break
        xi = z * h
        return float(xi[0]) if scalar else xi

    # -- geometry ----------------------------------------------------------
    def _eta(self, xi):
        return (xi * xi + self.h * self.h) / (2.0 * self.h)

    def point(self, s):
        xi = self.xi_of_s(s)
        if isinstance(xi, float):
            eta = (xi * xi + self.h * self.h) / (2.0 * self.h)
            F, e1, nv = self.F, self.e1, self.n
            return np.array([F[0] + xi * e1[0] + eta * nv[0],
                             F[1] + xi * e1[1] + eta * nv[1]])
        eta = self._eta(np.asarray(xi, dtype=float))
        return (self.F
                + np.multiply.outer(np.asarray(xi, dtype=float), self.e1)
                + np.multiply.outer(eta, self.n))

    def tangent(self, s):
        z = np.asarray(self.xi_of_s(s), dtype=float) / self.h
        w = np.sqrt(1.0 + z * z)
        return (np.multiply.outer(1.0 / w, self.e1)
                + np.multiply.outer(z / w, self.n))

    def radius(self, s):
        return self._eta(np.asarray(self.xi_of_s(s), dtype=float))

    def dradius(self, s):
        z = np.asarray(self.xi_of_s(s), dtype=float) / self.h
        return z / np.sqrt(1.0 + z * z)

    def curvature(self, s):
        z = np.asarray(self.xi_of_s(s), dtype=float) / self.h
        return 1.0 / (self.h * np.power(1.0 + z * z, 1.5))

    def contacts(self, s):
        xi = self.xi_of_s(s)
        if isinstance(xi, float):
            foot = self.F + xi * self.e1
            return tuple(self.focus), (float(foot[0]), float(foot[1]))
        foot = self.F + np.multiply.outer(np.asarray(xi, dtype=float),
                                          self.e1)
        return tuple(self.focus), foot

    def argmin_radius(self):
        return min(max(0.0, self.s_lo), self.s_hi)

    def rect_intervals_xi(self, rect: Rect):
        """xi-intervals of the parabola inside rect."""
        lo, hi = -_UNBOUNDED, _UNBOUNDED
        crossings = []
        h = self.h
        for axis, mn, mx in ((0, rect.xmin, rect.xmax), (1, rect.ymin, rect.ymax)):
            A = self.n[axis] / (2.0 * h)
            B = self.e1[axis]
            C0 = self.F[axis] + self.n[axis] * h / 2.0
            for bound in (mn, mx):
                C = C0 - bound
                if abs(A) < 1e-14:
                    if abs(B) > 1e-14:
                        crossings.append(-C / B)
                    continue
                disc = B * B - 4.0 * A * C
                if disc >= 0.0:
                    rt = math.sqrt(disc)
                    crossings.append((-B - rt) / (2.0 * A))
                    crossings.append((-B + rt) / (2.0 * A))
        knots = sorted(set(crossings))
        edges = [lo] + [k for k in knots] + [hi]
        inside = []
        for i in range(len(edges) - 1):
            a, b = edges[i], edges[i + 1]
            if b - a <= 0:
                continue
            mid = a + 0.5 * (b - a) if abs(a) < _UNBOUNDED / 2 or abs(b) < _UNBOUNDED / 2 \
                else 0.0
            if abs(a) >= _UNBOUNDED / 2 and abs(b) < _UNBOUNDED / 2:
                mid = b - 1.0
            elif abs(b) >= _UNBOUNDED / 2 and abs(a) < _UNBOUNDED / 2:
                mid = a + 1.0
            q = self.F + mid * self.e1 + self._eta(mid) * self.n
            if rect.contains(q, slack=1e-9):
                inside.append((a, b))
        return inside


@dataclass
class ShockDynamics:
    """Callable view of shock dynamics along a bisector."""
    bisector: Bisector

    def radius(self, s):
        return self.bisector.radius(s)

    def flow(self, s):
        return self.bisector.dradius(s)

    def contact_points(self, s):
        return self.bisector.contacts(s)

    def half_angle(self, s):
        dr = np.clip(np.abs(self.bisector.dradius(s)), 0.0, 1.0)
        return np.arccos(dr)


# ---------------------------------------------------------------------------
# Constructors for each pair kind
# ---------------------------------------------------------------------------

def _seg_frame(seg: BoundaryElement):
    (ax, ay), (bx, by) = seg.geometry
    a = np.array([ax, ay])
    d = np.array([bx - ax, by - ay])
    L = math.hypot(d[0], d[1])
    return a, d / L, L


def bisector_point_point(a, b, id_a=-1, id_b=-2):
    bis = PointPointBisector(a, b, id_a, id_b)
    return bis, ShockDynamics(bis)


def _seg_contact_fn(a, d):
    def fn(s_to_point):
        def contact(s, _a=a, _d=d, _p=s_to_point):
            q = np.asarray(_p(s), dtype=float)
            t = (q[..., 0] - _a[0]) * _d[0] + (q[..., 1] - _a[1]) * _d[1]
            if q.ndim == 1:
                return (float(_a[0] + t * _d[0]), float(_a[1] + t * _d[1]))
            return np.stack([_a[0] + t * _d[0], _a[1] + t * _d[1]], axis=-1)
        return contact
    return fn


def _segment_pair_branches(u: BoundaryElement, v: BoundaryElement):
    """Both angle-bisector branches (or the midline), feet-clipped.

    Returns a list of bisectors whose domains are restricted to parameters
    where both perpendicular feet are strictly interior.
    """
    a1, d1, L1 = _seg_frame(u)
    a2, d2, L2 = _seg_frame(v)
    sin_ang = abs(cross(d1, d2))
    out = []
    if sin_ang < PARALLEL_EPS:
        # parallel supporting lines -> midline (empty when collinear)
        off = a2 - a1
        gap = cross(d1, off)  # signed distance of line2 from line1
        if abs(gap) <= EPS_GEOM:
            return []
        origin = a1 + 0.5 * gap * perp(d1)
        direction = _lex_positive(d1.copy())
        # overlap of the two segments projected on the midline
        t1a = dot(a1 - origin, direction)
        t1b = t1a + L1 * dot(d1, direction)
        t2a = dot(a2 - origin, direction)
        t2b = t2a + L2 * dot(d2, direction)
        lo = max(min(t1a, t1b), min(t2a, t2b))
        hi = min(max(t1a, t1b), max(t2a, t2b))
        if hi - lo <= EPS_GEOM:
            return []
        side1 = cross(direction, a1 + dot(origin - a1, d1) * d1 - origin)
        gp, gm = (u.id, v.id) if side1 > 0 else (v.id, u.id)
        bis = MidlineBisector(origin, direction, abs(gap) / 2.0, (None, None), gp, gm)
        plus_seg = (a1, d1) if gp == u.id else (a2, d2)
        minus_seg = (a2, d2) if gp == u.id else (a1, d1)
        bis._contact_fns = (_seg_contact_fn(*plus_seg)(bis.point),
                            _seg_contact_fn(*minus_seg)(bis.point))
        bis.s_lo, bis.s_hi = lo, hi
        out.append(bis)
        return out

    # supporting lines intersect at O
    denom = cross(d1, d2)
    t = cross(a2 - a1, d2) / denom
    O = a1 + t * d1
    d2c = d2 if dot(d1, d2) >= 0 else -d2
    for branch, w_raw in enumerate((d1 + d2c, d1 - d2c)):
        nw = math.hypot(w_raw[0], w_raw[1])
        if nw < EPS_GEOM:
            continue
        w = _lex_positive(w_raw / nw)
        slope = abs(cross(w, d1))  # = |sin(angle between branch and lines)|
        if slope < 1e-12:
            continue
        # feet-interior windows: t_i(s) = t0_i + s * g_i in (0, L_i)
        dom_lo, dom_hi = -_UNBOUNDED, _UNBOUNDED
        empty = False
        for (ai, di, Li) in ((a1, d1, L1), (a2, d2, L2)):
            t0 = dot(O - ai, di)
            g = dot(w, di)
            if abs(g) < 1e-14:
                if not (0.0 < t0 < Li):
                    empty = True
                    break
                continue
            s0, s1 = (0.0 - t0) / g, (Li - t0) / g
            if s0 > s1:
                s0, s1 = s1, s0
            dom_lo, dom_hi = max(dom_lo, s0), min(dom_hi, s1)
        if empty or dom_hi - dom_lo <= EPS_GEOM:
            continue
        ref = dom_lo + 0.5 * (dom_hi - dom_lo)
        pref = O + ref * w
        foot1 = a1 + dot(pref - a1, d1) * d1
        side1 = cross(w, foot1 - pref)
        gp, gm = (u.id, v.id) if side1 > 0 else (v.id, u.id)
        bis = SegmentPairBisector(O, w, slope, (None, None), gp, gm)
        plus_seg = (a1, d1) if gp == u.id else (a2, d2)
        minus_seg = (a2, d2) if gp == u.id else (a1, d1)
        bis._contact_fns = (_seg_contact_fn(*plus_seg)(bis.point),
                            _seg_contact_fn(*minus_seg)(bis.point))
        bis.branch = branch
        bis.s_lo, bis.s_hi = dom_lo, dom_hi
        out.append(bis)
    return out


def bisector_segment_segment(u: BoundaryElement, v: BoundaryElement):
    a1, b1 = u.geometry
    a2, b2 = v.geometry
    from .geometry import segments_interiors_intersect
    if segments_interiors_intersect(a1, b1, a2, b2):
        raise InvalidInputError("segment interiors intersect")
    branches = _segment_pair_branches(u, v)
    if not branches:
        raise InvalidInputError("segment pair admits no interior-foot bisector")
    bis = branches[0]
    return bis, ShockDynamics(bis)


def bisector_point_segment(p: BoundaryElement, seg: BoundaryElement):
    px, py = p.geometry
    a, d, L = _seg_frame(seg)
    tq = dot(np.array([px, py]) - a, d)
    offs = np.array([px, py]) - (a + tq * d)
    h = math.hypot(offs[0], offs[1])
    if h <= EPS_GEOM:
        if EPS_GEOM < tq < L - EPS_GEOM:
            raise InvalidInputError("point lies on the segment interior (contour self-contact)")
        raise InvalidInputError("point collinear with the supporting line")
    bis = ParabolaBisector((px, py), a, d, L, p.id, seg.id)
    xi_lo, xi_hi = -bis.tF, L - bis.tF
    bis.s_lo = float(bis.s_of_xi(xi_lo))
    bis.s_hi = float(bis.s_of_xi(xi_hi))
    return bis, ShockDynamics(bis)


def bisector_endpoint_own_segment(p: BoundaryElement, seg: BoundaryElement):
    px, py = p.geometry
    a, d, L = _seg_frame(seg)
    t = dot(np.array([px, py]) - a, d)
    on_start = abs(t) <= 1e-6 and math.hypot(px - a[0], py - a[1]) <= 1e-6
    on_end = abs(t - L) <= 1e-6
    if not (on_start or on_end):
        raise InvalidInputError("point is not an endpoint of the segment")
    origin = np.array([px, py])
    direction = _lex_positive(perp(d).copy())
    # side of the segment body relative to the +s tangent
    mid = a + 0.5 * L * d
    side = cross(direction, mid - origin)
    gp, gm = (seg.id, p.id) if side > 0 else (p.id, seg.id)
    pt = (float(px), float(py))
    if gp == seg.id:
        fns = (lambda s: pt, lambda s: pt)
    else:
        fns = (lambda s: pt, lambda s: pt)
    bis = PerpendicularBisector(origin, direction, 1.0, fns, gp, gm)
    return bis, ShockDynamics(bis)


# ---------------------------------------------------------------------------
# Factory used by the propagation engine
# ---------------------------------------------------------------------------

def make_bisectors(e1: BoundaryElement, e2: BoundaryElement, clip: Rect | None = None):
    """All bisector records for an element pair, feet- and box-clipped.

    Returns a (possibly empty) list; multiple records appear for the two
    angle-bisector branches or when the box cuts a parabola into pieces.
    Pairs whose geometry is inadmissible (collinear point/segment contact,
    crossing segments) yield an empty list here; ingestion rejects true
    contour crossings separately.
    """
    if e1.id > e2.id:
        e1, e2 = e2, e1
    records: list[Bisector] = []
    if e1.kind == POINT and e2.kind == POINT:
        bis = PointPointBisector(e1.geometry, e2.geometry, e1.id, e2.id)
        records.append(bis)
    elif e1.kind == SEGMENT and e2.kind == SEGMENT:
        records.extend(_segment_pair_branches(e1, e2))
    else:
        p, seg = (e1, e2) if e1.kind == POINT else (e2, e1)
        if seg.id in p.adjacency and _is_endpoint(p, seg):
            bis, _ = bisector_endpoint_own_segment(p, seg)
            records.append(bis)
        else:
            try:
                bis, _ = bisector_point_segment(p, seg)
            except InvalidInputError:
                return []
            records.append(bis)

    if clip is None:
        return records

    clipped: list[Bisector] = []
    for bis in records:
        if isinstance(bis, ParabolaBisector):
            xi_feet = (bis.xi_of_s(bis.s_lo), bis.xi_of_s(bis.s_hi))
            for (lo, hi) in bis.rect_intervals_xi(clip):
                a = max(lo, xi_feet[0])
                b = min(hi, xi_feet[1])
                if b - a > EPS_GEOM:
                    clipped.append(bis.with_domain(bis.s_of_xi(a), bis.s_of_xi(b)))
        else:
            iv = bis.clip_to_rect(clip)
            if iv is None:
                continue
            a, b = max(iv[0], bis.s_lo), min(iv[1], bis.s_hi)
            if b - a > EPS_GEOM:
                clipped.append(bis.with_domain(a, b))
    return clipped


def _is_endpoint(p: BoundaryElement, seg: BoundaryElement):
    (ax, ay), (bx, by) = seg.geometry
    px, py = p.geometry
    return (math.hypot(px - ax, py - ay) <= 1e-6
            or math.hypot(px - bx, py - by) <= 1e-6)
