"""Event-driven shock propagation over two time-ordered lists.

Candidate shock sources (one per admissible element pair) are enumerated up
front, validity-filtered against the static element set, and visited in time
order; active shocks always take priority over candidates. Each active shock
is advanced to its first termination: the earliest parameter where a third
element's wavefront arrives simultaneously (a junction), the bisector domain
end, or the clipping box.

Termination search exploits that f(s) = dist(p(s), e) - r(s) is 2-Lipschitz
along any unit-speed bisector, so marching with step f/2 can never skip a
crossing; a secant/bisection phase refines the root to ~1e-12.
"""
from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .bisectors import Bisector, make_bisectors, _segment_pair_branches
from .contours import POINT, SEGMENT, BoundaryElement, check_no_crossings
from .errors import InvalidInputError, NonterminationError
from .geometry import EPS_MERGE, Rect

_INF = math.inf


# ---------------------------------------------------------------------------
# Vectorized distances over the element set
# ---------------------------------------------------------------------------

class ElementSet:
    """Array view of the boundary elements with open-segment distances.

    Open-segment distance is +inf when the perpendicular foot is not strictly
    interior; the segment's endpoint PointSources own those regions, so the
    minimum over all elements still equals the true distance to the boundary.

    Proximity queries go through a kd-tree over sample points spaced at most
    SAMPLE_STEP apart, so any point of an element lies within SAMPLE_STEP/2 of
    a sample; full scans remain as the fallback.
    """

    SAMPLE_STEP = 0.5

    def __init__(self, elements: list[BoundaryElement]):
        self.elements = elements
        self.n = len(elements)
        pt_ids, pts = [], []
        sg_ids, sa, sd, sl = [], [], [], []
        for e in elements:
            if e.kind == POINT:
                pt_ids.append(e.id)
                pts.append(e.geometry)
            else:
                (ax, ay), (bx, by) = e.geometry
                L = math.hypot(bx - ax, by - ay)
                sg_ids.append(e.id)
                sa.append((ax, ay))
                sd.append(((bx - ax) / L, (by - ay) / L))
                sl.append(L)
        self.pt_ids = np.array(pt_ids, dtype=int)
        self.pt_xy = np.array(pts, dtype=float).reshape(-1, 2)
        self.sg_ids = np.array(sg_ids, dtype=int)
        self.sg_a = np.array(sa, dtype=float).reshape(-1, 2)
        self.sg_d = np.array(sd, dtype=float).reshape(-1, 2)
        self.sg_L = np.array(sl, dtype=float)
        # id-indexed scalar views for single-element distance evaluation
        self._kind = np.zeros(self.n, dtype=np.int8)
        self._ax = np.zeros(self.n)
        self._ay = np.zeros(self.n)
        self._dx = np.zeros(self.n)
        self._dy = np.zeros(self.n)
        self._L = np.zeros(self.n)
        if len(pt_ids):
            self._ax[self.pt_ids] = self.pt_xy[:, 0]
            self._ay[self.pt_ids] = self.pt_xy[:, 1]
        if len(sg_ids):
            self._kind[self.sg_ids] = 1
            self._ax[self.sg_ids] = self.sg_a[:, 0]
            self._ay[self.sg_ids] = self.sg_a[:, 1]
            self._dx[self.sg_ids] = self.sg_d[:, 0]
            self._dy[self.sg_ids] = self.sg_d[:, 1]
            self._L[self.sg_ids] = self.sg_L
        self._pt_row = np.full(self.n, -1)
        self._sg_row = np.full(self.n, -1)
        if len(pt_ids):
            self._pt_row[self.pt_ids] = np.arange(len(pt_ids))
        if len(sg_ids):
            self._sg_row[self.sg_ids] = np.arange(len(sg_ids))
        self._tree = None
        self._sample_eid = None

    def _kd(self):
        if self._tree is None:
            xs, eids = [], []
            if self.pt_xy.shape[0]:
                xs.append(self.pt_xy)
                eids.append(self.pt_ids)
            step = self.SAMPLE_STEP
            for k in range(self.sg_a.shape[0]):
                m = max(2, int(math.ceil(self.sg_L[k] / step)) + 1)
                t = np.linspace(0.0, self.sg_L[k], m)
                xs.append(self.sg_a[k] + t[:, None] * self.sg_d[k])
                eids.append(np.full(m, self.sg_ids[k], dtype=int))
            self._sample_xy = np.vstack(xs)
            self._sample_eid = np.concatenate(eids)
            self._tree = cKDTree(self._sample_xy)
        return self._tree

    def open_dist_one(self, eid: int, q) -> float:
        """Exact open distance from q to element eid."""
        if self._kind[eid] == 0:
            return math.hypot(q[0] - self._ax[eid], q[1] - self._ay[eid])
        rx, ry = q[0] - self._ax[eid], q[1] - self._ay[eid]
        t = rx * self._dx[eid] + ry * self._dy[eid]
        if t <= 0.0 or t >= self._L[eid]:
            return _INF
        return abs(rx * self._dy[eid] - ry * self._dx[eid])

    def open_distances_many(self, q):
        """(K, n_elements) matrix of open distances from points q (K, 2)."""
        q = np.atleast_2d(np.asarray(q, dtype=float))
        K = q.shape[0]
        out = np.full((K, self.n), _INF)
        if self.pt_xy.shape[0]:
            diff = q[:, None, :] - self.pt_xy[None, :, :]
            out[:, self.pt_ids] = np.hypot(diff[:, :, 0], diff[:, :, 1])
        if self.sg_a.shape[0]:
            rel = q[:, None, :] - self.sg_a[None, :, :]
            t = rel[:, :, 0] * self.sg_d[None, :, 0] + rel[:, :, 1] * self.sg_d[None, :, 1]
            dperp = np.abs(rel[:, :, 0] * self.sg_d[None, :, 1]
                           - rel[:, :, 1] * self.sg_d[None, :, 0])
            interior = (t > 0.0) & (t < self.sg_L[None, :])
            out[:, self.sg_ids] = np.where(interior, dperp, _INF)
        return out

    def min_third(self, q, exclude_ids) -> float:
        """Minimum open distance from q over elements not in exclude_ids."""
        if self.n > 48:
            tree = self._kd()
            nsamp = len(self._sample_eid)
            k = 16
            while True:
                ds, idx = tree.query(q, k=min(k, nsamp))
                eids = np.unique(self._sample_eid[idx])
                for eid in exclude_ids:
                    eids = eids[eids != eid]
                best = float(self.subset_distances([q], eids).min()) \
                    if len(eids) else _INF
                # any element unseen here is at least this far away
                bound = float(ds[-1]) - 0.5 * self.SAMPLE_STEP
                if best <= bound or k >= nsamp:
                    return best
                k *= 4
        d = self.open_distances_many([q])[0]
        for eid in exclude_ids:
            d[eid] = _INF
        return float(d.min())

    def any_closer(self, q, thresh, exclude_ids) -> bool:
        """True iff some element outside exclude_ids has open distance < thresh."""
        if self.n > 48:
            sids = self._kd().query_ball_point(
                np.asarray(q, dtype=float),
                thresh + 0.5 * self.SAMPLE_STEP + 1e-9)
            eid_of = self._sample_eid
            seen = set(exclude_ids)
            for s in sids:
                eid = int(eid_of[s])
                if eid in seen:
                    continue
                seen.add(eid)
                if self.open_dist_one(eid, q) < thresh:
                    return True
            return False
        return self.min_third(q, exclude_ids) < thresh

    def min_third_many(self, pts, exclude_ids):
        d = self.open_distances_many(pts)
        for eid in exclude_ids:
            d[:, eid] = _INF
        return d.min(axis=1)

    def subset_distances(self, pts, elem_ids):
        """(K, m) open distances from pts to the given element ids."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        ids = np.asarray(elem_ids, dtype=int)
        rx = pts[:, None, 0] - self._ax[ids][None, :]
        ry = pts[:, None, 1] - self._ay[ids][None, :]
        seg = self._kind[ids][None, :] == 1
        t = rx * self._dx[ids][None, :] + ry * self._dy[ids][None, :]
        dperp = np.abs(rx * self._dy[ids][None, :] - ry * self._dx[ids][None, :])
        dpt = np.hypot(rx, ry)
        inner = (t > 0.0) & (t < self._L[ids][None, :])
        return np.where(seg, np.where(inner, dperp, _INF), dpt)

    def closed_near(self, q, radius, exclude_ids):
        """Element ids whose CLOSED distance (segments clamped to their
        endpoints) from q is <= radius."""
        if self.n > 48:
            sids = self._kd().query_ball_point(
                np.asarray(q, dtype=float),
                radius + 0.5 * self.SAMPLE_STEP + 1e-9)
            eid_of = self._sample_eid
            out, seen = [], set(exclude_ids)
            for s in sids:
                eid = int(eid_of[s])
                if eid in seen:
                    continue
                seen.add(eid)
                rx, ry = q[0] - self._ax[eid], q[1] - self._ay[eid]
                if self._kind[eid] == 1:
                    t = min(max(rx * self._dx[eid] + ry * self._dy[eid], 0.0),
                            self._L[eid])
                    rx, ry = rx - t * self._dx[eid], ry - t * self._dy[eid]
                if math.hypot(rx, ry) <= radius:
                    out.append(eid)
            out.sort()
            return out
        out = []
        for eid in range(self.n):
            if eid in exclude_ids:
                continue
            rx, ry = q[0] - self._ax[eid], q[1] - self._ay[eid]
            if self._kind[eid] == 1:
                t = min(max(rx * self._dx[eid] + ry * self._dy[eid], 0.0),
                        self._L[eid])
                rx, ry = rx - t * self._dx[eid], ry - t * self._dy[eid]
            if math.hypot(rx, ry) <= radius:
                out.append(eid)
        return out

    def near_elements(self, q, radius, exclude_ids):
        """Element ids whose open distance from q is <= radius."""
        if self.n > 48:
            tree = self._kd()
            sids = tree.query_ball_point(q, radius + 0.5 * self.SAMPLE_STEP + 1e-9)
            eid_of = self._sample_eid
            out, seen = [], set(exclude_ids)
            for s in sids:
                eid = int(eid_of[s])
                if eid in seen:
                    continue
                seen.add(eid)
                if self.open_dist_one(eid, q) <= radius:
                    out.append(eid)
            out.sort()
            return out
        d = self.open_distances_many([q])[0]
        for eid in exclude_ids:
            d[eid] = _INF
        return [int(i) for i in np.nonzero(d <= radius)[0]]


# ---------------------------------------------------------------------------
# Candidates
# ---------------------------------------------------------------------------

@dataclass(order=True)
class ShockCandidate:
    time: float
    gen_lo: int
    gen_hi: int
    branch: int
    location: tuple = field(compare=False)
    record_index: int = field(default=-1, compare=False)

    @property
    def generators(self):
        return (self.gen_lo, self.gen_hi)


def _candidate_arrays(elements: list[BoundaryElement]):
    """Vectorized candidate enumeration over all admissible element pairs.

    Returns flat arrays (time, x, y, gen_lo, gen_hi, branch); branch -1 marks
    candidates whose bisector branch is resolved when they are visited.
    """
    points = [e for e in elements if e.kind == POINT]
    segs = [e for e in elements if e.kind == SEGMENT]
    ts, xs, ys, g1s, g2s, brs = [], [], [], [], [], []

    def emit(t, x, y, a, b, br):
        ts.append(np.asarray(t, dtype=float).ravel())
        xs.append(np.asarray(x, dtype=float).ravel())
        ys.append(np.asarray(y, dtype=float).ravel())
        lo = np.minimum(a, b).ravel()
        hi = np.maximum(a, b).ravel()
        g1s.append(lo.astype(int))
        g2s.append(hi.astype(int))
        brs.append(np.broadcast_to(np.asarray(br, dtype=int), lo.shape).ravel())

    # point-point: perpendicular-bisector midpoint
    if len(points) >= 2:
        P = np.array([p.geometry for p in points])
        ids = np.array([p.id for p in points])
        iu, ju = np.triu_indices(len(points), k=1)
        mids = 0.5 * (P[iu] + P[ju])
        emit(0.5 * np.hypot(*(P[iu] - P[ju]).T), mids[:, 0], mids[:, 1],
             ids[iu], ids[ju], -1)

    # point-segment: endpoint perpendiculars (time 0) and parabola minima
    if points and segs:
        P = np.array([p.geometry for p in points])
        pids = np.array([p.id for p in points])
        A = np.array([s.geometry[0] for s in segs])
        B = np.array([s.geometry[1] for s in segs])
        sids = np.array([s.id for s in segs])
        D = B - A
        L = np.hypot(D[:, 0], D[:, 1])
        Du = D / L[:, None]
        rel = P[:, None, :] - A[None, :, :]
        tq = rel[:, :, 0] * Du[None, :, 0] + rel[:, :, 1] * Du[None, :, 1]
        h = np.abs(rel[:, :, 0] * Du[None, :, 1] - rel[:, :, 1] * Du[None, :, 0])
        adj = np.zeros(tq.shape, dtype=bool)
        pid_to_row = {int(pid): r for r, pid in enumerate(pids)}
        for c, s in enumerate(segs):
            for eid in s.adjacency:
                if eid in pid_to_row:
                    adj[pid_to_row[eid], c] = True
        pr, sc = np.nonzero(adj)
        if len(pr):
            emit(np.zeros(len(pr)), P[pr, 0], P[pr, 1], pids[pr], sids[sc], 0)
        free = (~adj) & (h > 1e-9)  # collinear pairs are mediated by endpoints
        pr, sc = np.nonzero(free)
        if len(pr):
            xi_lo, xi_hi = -tq[pr, sc], L[sc] - tq[pr, sc]
            xi = np.where((xi_lo < 0.0) & (xi_hi > 0.0), 0.0,
                          np.where(xi_lo >= 0.0, xi_lo, xi_hi))
            hh = h[pr, sc]
            rr = (xi * xi + hh * hh) / (2.0 * hh)
            foot0 = A[sc] + tq[pr, sc][:, None] * Du[sc]
            nvec = (P[pr] - foot0) / hh[:, None]
            loc = foot0 + xi[:, None] * Du[sc] + rr[:, None] * nvec
            emit(rr, loc[:, 0], loc[:, 1], pids[pr], sids[sc], 0)

    # segment-segment: both angle-bisector branches, feet-windowed
    if len(segs) >= 2:
        A = np.array([s.geometry[0] for s in segs])
        B = np.array([s.geometry[1] for s in segs])
        sids = np.array([s.id for s in segs])
        D = B - A
        L = np.hypot(D[:, 0], D[:, 1])
        Du = D / L[:, None]
        iu, ju = np.triu_indices(len(segs), k=1)
        a1, d1, l1 = A[iu], Du[iu], L[iu]
        a2, d2, l2 = A[ju], Du[ju], L[ju]
        denom = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        par = np.abs(denom) < 1e-7
        # parallel pairs are few; their midline candidates go through the
        # object constructor
        for i, j in zip(iu[par], ju[par]):
            for rec in _segment_pair_branches(segs[i], segs[j]):
                s_star = rec.argmin_radius()
                loc = rec.point(s_star)
                emit(float(rec.radius(s_star)), loc[0], loc[1],
                     np.array([rec.pair[0]]), np.array([rec.pair[1]]), rec.branch)
        np_mask = ~par
        if np_mask.any():
            a1, d1, l1 = a1[np_mask], d1[np_mask], l1[np_mask]
            a2, d2, l2 = a2[np_mask], d2[np_mask], l2[np_mask]
            den = denom[np_mask]
            i1, i2 = sids[iu[np_mask]], sids[ju[np_mask]]
            r12 = a2 - a1
            tt = (r12[:, 0] * d2[:, 1] - r12[:, 1] * d2[:, 0]) / den
            O = a1 + tt[:, None] * d1
            flip = (d1[:, 0] * d2[:, 0] + d1[:, 1] * d2[:, 1]) < 0
            d2c = np.where(flip[:, None], -d2, d2)
            for br, w_raw in ((0, d1 + d2c), (1, d1 - d2c)):
                nw = np.hypot(w_raw[:, 0], w_raw[:, 1])
                okw = nw > EPS_GEOM_ARR
                w = np.where(okw[:, None], w_raw / np.where(okw, nw, 1.0)[:, None], 0.0)
                neg = (w[:, 0] < 0) | ((w[:, 0] == 0) & (w[:, 1] < 0))
                w = np.where(neg[:, None], -w, w)
                slope = np.abs(w[:, 0] * d1[:, 1] - w[:, 1] * d1[:, 0])
                okw &= slope > 1e-12
                dom_lo = np.full(len(w), -_INF)
                dom_hi = np.full(len(w), _INF)
                for (ai, di, li) in ((a1, d1, l1), (a2, d2, l2)):
                    t0 = (O[:, 0] - ai[:, 0]) * di[:, 0] + (O[:, 1] - ai[:, 1]) * di[:, 1]
                    gg = w[:, 0] * di[:, 0] + w[:, 1] * di[:, 1]
                    tiny = np.abs(gg) < 1e-14
                    ggs = np.where(tiny, 1.0, gg)
                    b1 = (0.0 - t0) / ggs
                    b2 = (li - t0) / ggs
                    blo = np.minimum(b1, b2)
                    bhi = np.maximum(b1, b2)
                    inside = (t0 > 0.0) & (t0 < li)
                    blo = np.where(tiny, np.where(inside, -_INF, _INF), blo)
                    bhi = np.where(tiny, np.where(inside, _INF, -_INF), bhi)
                    dom_lo = np.maximum(dom_lo, blo)
                    dom_hi = np.minimum(dom_hi, bhi)
                okw &= dom_hi - dom_lo > EPS_GEOM_ARR
                if not okw.any():
                    continue
                s_star = np.clip(0.0, dom_lo[okw], dom_hi[okw])
                loc = O[okw] + s_star[:, None] * w[okw]
                emit(slope[okw] * np.abs(s_star), loc[:, 0], loc[:, 1],
                     i1[okw], i2[okw], br)

    if not ts:
        z = np.empty(0)
        return z, z, z, z.astype(int), z.astype(int), z.astype(int)
    return (np.concatenate(ts), np.concatenate(xs), np.concatenate(ys),
            np.concatenate(g1s), np.concatenate(g2s), np.concatenate(brs))


EPS_GEOM_ARR = 1e-9


def enumerate_candidates(elements: list[BoundaryElement]) -> list[ShockCandidate]:
    """All candidate shock sources (pair bisector radius minima), sorted by
    (time, generator ids). Branch -1 means "resolve branches at visit time"."""
    t, x, y, g1, g2, br = _candidate_arrays(elements)
    cands = [ShockCandidate(float(t[k]), int(g1[k]), int(g2[k]), int(br[k]),
                            (float(x[k]), float(y[k])))
             for k in range(len(t))]
    cands.sort()
    return cands


def validate_candidate(c: ShockCandidate, elements, eset: ElementSet | None = None) -> bool:
    """A candidate is valid when no non-generator wave reaches its location
    before its formation time."""
    if eset is None:
        eset = ElementSet(elements)
    return eset.min_third(c.location, c.generators) >= c.time - 1e-9


def _validate_bulk(cands, eset: ElementSet, block=2048):
    """Boolean validity mask over a candidate list (exact, vectorized)."""
    ok = np.zeros(len(cands), dtype=bool)
    for lo in range(0, len(cands), block):
        chunk = cands[lo:lo + block]
        locs = np.array([c.location for c in chunk])
        d = eset.open_distances_many(locs)
        rows = np.arange(len(chunk))
        d[rows, [c.gen_lo for c in chunk]] = _INF
        d[rows, [c.gen_hi for c in chunk]] = _INF
        times = np.array([c.time for c in chunk])
        ok[lo:lo + len(chunk)] = d.min(axis=1) >= times - 1e-9
    return ok


# ---------------------------------------------------------------------------
# Raw graph produced by the engine
# ---------------------------------------------------------------------------

@dataclass
class RawNode:
    id: int
    location: tuple
    radius: float
    gen_ids: set
    discovered: set = field(default_factory=set)  # gens already searched for outflows


@dataclass
class RawLink:
    id: int
    bisector: Bisector
    s_from: float    # traversal start parameter (early time)
    s_to: float      # traversal end parameter (late time)
    node_from: int
    node_to: int
    end_kind: str    # "junction" | "boxexit" | "domain"

    @property
    def direction(self):
        return 1.0 if self.s_to >= self.s_from else -1.0

    @property
    def length(self):
        return abs(self.s_to - self.s_from)

    def sample_params(self, k):
        return np.linspace(self.s_from, self.s_to, k)

    def sample_points(self, k):
        return self.bisector.point(self.sample_params(k))


@dataclass
class RawGraph:
    nodes: list
    links: list
    stats: dict


@dataclass
class ActiveShock:
    bisector: Bisector
    start_param: float
    direction: float
    parent_node: int
    start_time: float
    end_param: float = math.inf


# ---------------------------------------------------------------------------
# Analytic first-crossing of third-element wavefronts
#
# Along every bisector kind, the squared deficit dist(p, e)^2 - r^2 is a
# quadratic in the bisector's natural parameter (arc length s for lines, the
# directrix coordinate xi for parabolas), so the first simultaneous arrival of
# a third wave is a closed-form root.
# ---------------------------------------------------------------------------

def _quad_roots(A, B, C):
    """Real roots of A t^2 + B t + C = 0, vectorized; NaN where absent.

    Returns an (m, 2) array. Linear rows (A ~ 0) put their root in column 0.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = B * B - 4.0 * A * C
        rt = np.sqrt(np.where(disc >= 0.0, disc, np.nan))
        # numerically stable split: bq carries the large root's numerator
        bq = -0.5 * (B + np.copysign(rt, B))
        lin = np.abs(A) < 1e-14
        r1 = np.where(lin, -C / B, bq / A)
        r2 = np.where(lin, np.nan, C / bq)
        # non-finite roots (0/0, x/0) are "absent"; callers filter on isfinite
        out = np.empty(r1.shape + (2,))
        out[..., 0] = np.where(np.isfinite(r1), r1, np.nan)
        out[..., 1] = np.where(np.isfinite(r2), r2, np.nan)
    return out


_SWEEP_FRAC = np.linspace(0.0, 1.0, 34)[1:-1]


class _ElementView:
    """Row-subset view of an ElementSet's point/segment arrays."""

    def __init__(self, es: ElementSet, pt_idx=None, sg_idx=None):
        if pt_idx is None:
            self.pt_xy, self.pt_ids = es.pt_xy, es.pt_ids
        else:
            self.pt_xy, self.pt_ids = es.pt_xy[pt_idx], es.pt_ids[pt_idx]
        if sg_idx is None:
            self.sg_a, self.sg_d = es.sg_a, es.sg_d
            self.sg_L, self.sg_ids = es.sg_L, es.sg_ids
        else:
            self.sg_a, self.sg_d = es.sg_a[sg_idx], es.sg_d[sg_idx]
            self.sg_L, self.sg_ids = es.sg_L[sg_idx], es.sg_ids[sg_idx]


# ---------------------------------------------------------------------------
# The engine
# ---------------------------------------------------------------------------

class Engine:
    def __init__(self, elements: list[BoundaryElement], box: Rect,
                 event_budget: int | None = None, check_crossings: bool = True):
        if not elements:
            raise InvalidInputError("no boundary elements")
        if check_crossings:
            check_no_crossings(elements)
        self.elements = elements
        self.eset = ElementSet(elements)
        self.box = box
        n = len(elements)
        self.event_budget = event_budget if event_budget else max(10 * n * n, 10000)
        self.events = 0
        self.nodes: list[RawNode] = []
        self.links: list[RawLink] = []
        self._node_cells: dict[tuple, int] = {}
        self._bisector_cache: dict[tuple, list] = {}
        self._root_cache: dict[tuple, tuple] = {}
        self._claimed: dict[tuple, list] = {}
        self._spawned: set = set()
        self._active: list = []
        self._seq = itertools.count()
        self.stats = {"elements": n, "candidates": 0, "discarded": 0,
                      "realized": 0, "events": 0}

    # -- nodes -------------------------------------------------------------
    def _node_at(self, loc, radius, gen_ids):
        cx = round(loc[0] / EPS_MERGE)
        cy = round(loc[1] / EPS_MERGE)
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                nid = self._node_cells.get((cx + dx, cy + dy))
                if nid is not None:
                    node = self.nodes[nid]
                    if math.hypot(node.location[0] - loc[0],
                                  node.location[1] - loc[1]) <= EPS_MERGE:
                        node.gen_ids.update(gen_ids)
                        return nid
        nid = len(self.nodes)
        self.nodes.append(RawNode(nid, (float(loc[0]), float(loc[1])),
                                  float(radius), set(gen_ids)))
        self._node_cells[(cx, cy)] = nid
        return nid

    # -- claimed intervals -------------------------------------------------
    def _claim(self, key, lo, hi):
        ivs = self._claimed.setdefault(key, [])
        ivs.append((min(lo, hi), max(lo, hi)))
        ivs.sort()

    def _claimed_at(self, key, s, tol=1e-9):
        for lo, hi in self._claimed.get(key, ()):
            if lo - tol <= s <= hi + tol:
                return True
        return False

    def _next_claim_boundary(self, key, s, direction):
        """Start of the nearest claimed interval strictly ahead of s."""
        best = math.inf * direction
        found = None
        for lo, hi in self._claimed.get(key, ()):
            edge = lo if direction > 0 else hi
            if (edge - s) * direction > 1e-9:
                if found is None or (edge - best) * direction < 0:
                    best = edge
                    found = edge
        return found

    def _bisectors(self, lo: int, hi: int) -> list:
        """Cached make_bisectors for an element pair (records are shared:
        claims are keyed globally by branch, so reuse across nodes is safe)."""
        recs = self._bisector_cache.get((lo, hi))
        if recs is None:
            recs = make_bisectors(self.elements[lo], self.elements[hi], self.box)
            self._bisector_cache[(lo, hi)] = recs
        return recs

    # -- shock spawning ----------------------------------------------------
    def _spawn(self, rec: Bisector, s0, direction, node_id, t0):
        key = (node_id, rec.branch_key, direction, round(s0, 9))
        if key in self._spawned:
            return
        self._spawned.add(key)
        s_end_dom = rec.s_hi if direction > 0 else rec.s_lo
        if (s_end_dom - s0) * direction <= 1e-9:
            return
        # strict test: a spawn exactly at the edge of a claimed interval,
        # pointing out of it, is a legitimate continuation
        if self._claimed_at(rec.branch_key, s0 + direction * 1e-9, tol=0.0):
            return
        heapq.heappush(self._active,
                       (t0, next(self._seq),
                        ActiveShock(rec, s0, direction, node_id, t0)))

    def _discover_outflows(self, node_id):
        node = self.nodes[node_id]
        gens = sorted(node.gen_ids)
        scale = 1.0 + node.radius
        fresh = node.gen_ids - node.discovered
        pairs = [(a, b) for a, b in itertools.combinations(gens, 2)
                 if a in fresh or b in fresh]
        node.discovered.update(node.gen_ids)
        for a, b in pairs:
            for rec in self._bisectors(a, b):
                s_n = _param_near(rec, node.location)
                if s_n is None:
                    continue
                s_n = min(max(s_n, rec.s_lo), rec.s_hi)
                p = rec.point(s_n)
                if math.hypot(p[0] - node.location[0], p[1] - node.location[1]) \
                        > 1e-6 * scale:
                    continue
                for direction in (1.0, -1.0):
                    probe = s_n + direction * 1e-7 * scale
                    if not (rec.s_lo - 1e-12 <= probe <= rec.s_hi + 1e-12):
                        continue
                    if rec.radius(probe) < node.radius - 1e-9 * scale:
                        continue  # time must not decrease along an outflow
                    if float(rec.dradius(probe)) * direction < -1e-12:
                        # near-flat channels: the finite-radius check above
                        # cannot see a shallow downhill slope at probe
                        # distance, but the analytic slope can; downhill
                        # territory belongs to the source at the local
                        # radius minimum, not to this junction
                        continue
                    self._spawn(rec, s_n, direction, node_id, node.radius)

    # -- analytic crossings --------------------------------------------------
    def _crossing_params(self, rec: Bisector, pt_idx=None, sg_idx=None):
        """All (natural-parameter, element-id) wavefront crossings of rec.

        Returns (params, ids) arrays in the bisector's natural parameter
        (arc length for line-likes, directrix coordinate xi for parabolas),
        with open-segment foot windows already enforced. pt_idx/sg_idx
        optionally restrict the scan to row subsets of the element arrays.
        """
        from .bisectors import ParabolaBisector, PointPointBisector, \
            MidlineBisector, _LineLike
        es = _ElementView(self.eset, pt_idx, sg_idx)
        params, ids = [], []
        if isinstance(rec, _LineLike):
            o, w = rec.origin, rec.direction
            if isinstance(rec, PointPointBisector):
                alpha, gamma = 1.0, rec.half * rec.half
            elif isinstance(rec, MidlineBisector):
                alpha, gamma = 0.0, rec.r0 * rec.r0
            else:
                alpha, gamma = rec.slope * rec.slope, 0.0
            if es.pt_xy.shape[0]:
                rel = es.pt_xy - o
                B = -2.0 * (rel[:, 0] * w[0] + rel[:, 1] * w[1])
                C = rel[:, 0] ** 2 + rel[:, 1] ** 2 - gamma
                roots = _quad_roots(np.full(len(B), 1.0 - alpha), B, C)
                for col in (0, 1):
                    params.append(roots[:, col])
                    ids.append(es.pt_ids)
            if es.sg_a.shape[0]:
                d = es.sg_d
                c0 = d[:, 0] * (o[1] - es.sg_a[:, 1]) - d[:, 1] * (o[0] - es.sg_a[:, 0])
                c1 = d[:, 0] * w[1] - d[:, 1] * w[0]
                roots = _quad_roots(c1 * c1 - alpha, 2.0 * c0 * c1, c0 * c0 - gamma)
                t0 = (o[0] - es.sg_a[:, 0]) * d[:, 0] + (o[1] - es.sg_a[:, 1]) * d[:, 1]
                tg = w[0] * d[:, 0] + w[1] * d[:, 1]
                for col in (0, 1):
                    rr = roots[:, col]
                    foot = t0 + rr * tg
                    rr = np.where((foot > 1e-12) & (foot < es.sg_L - 1e-12), rr, np.nan)
                    params.append(rr)
                    ids.append(es.sg_ids)
                # foot-window entry/exit: the open distance jumps there, so it
                # counts as a crossing whenever the perpendicular distance is
                # already within the front radius
                tgs = np.where(np.abs(tg) < 1e-14, np.nan, tg)
                for edge in (0.0, None):
                    lim = es.sg_L if edge is None else 0.0
                    rr = (lim - t0) / tgs
                    dperp = np.abs(c0 + c1 * rr)
                    rad2 = alpha * rr * rr + gamma
                    rad = np.sqrt(np.maximum(rad2, 0.0))
                    rr = np.where(dperp <= rad + 1e-9, rr, np.nan)
                    params.append(rr)
                    ids.append(es.sg_ids)
        elif isinstance(rec, ParabolaBisector):
            F, e1, nv, h = rec.F, rec.e1, rec.n, rec.h
            if es.pt_xy.shape[0]:
                rel = es.pt_xy - F
                u1 = rel[:, 0] * e1[0] + rel[:, 1] * e1[1]
                u2 = rel[:, 0] * nv[0] + rel[:, 1] * nv[1]
                roots = _quad_roots(1.0 - u2 / h, -2.0 * u1, u1 * u1 + u2 * u2 - u2 * h)
                for col in (0, 1):
                    params.append(roots[:, col])
                    ids.append(es.pt_ids)
            if es.sg_a.shape[0]:
                d = es.sg_d
                relF = F - es.sg_a
                cr0 = d[:, 0] * relF[:, 1] - d[:, 1] * relF[:, 0]
                cre = d[:, 0] * e1[1] - d[:, 1] * e1[0]
                crn = d[:, 0] * nv[1] - d[:, 1] * nv[0]
                t0 = relF[:, 0] * d[:, 0] + relF[:, 1] * d[:, 1]
                te = e1[0] * d[:, 0] + e1[1] * d[:, 1]
                tn = nv[0] * d[:, 0] + nv[1] * d[:, 1]
                # both signed-distance branches stacked into one solve
                sig = np.concatenate([crn - 1.0, crn + 1.0])
                t0_2 = np.concatenate([t0, t0])
                te_2, tn_2 = np.concatenate([te, te]), np.concatenate([tn, tn])
                L2 = np.concatenate([es.sg_L, es.sg_L])
                ids2 = np.concatenate([es.sg_ids, es.sg_ids])
                roots = _quad_roots(sig / (2.0 * h),
                                    np.concatenate([cre, cre]),
                                    np.concatenate([cr0, cr0]) + sig * h / 2.0)
                for col in (0, 1):
                    xi = roots[:, col]
                    eta = (xi * xi + h * h) / (2.0 * h)
                    foot = t0_2 + xi * te_2 + eta * tn_2
                    xi = np.where((foot > 1e-12) & (foot < L2 - 1e-12),
                                  xi, np.nan)
                    params.append(xi)
                    ids.append(ids2)
                # foot-window entry/exit crossings (see the line-like case),
                # both window edges stacked into one solve
                roots = _quad_roots(tn_2 / (2.0 * h), te_2,
                                    t0_2 + tn_2 * h / 2.0
                                    - np.concatenate([np.zeros_like(es.sg_L),
                                                      es.sg_L]))
                cr0_2 = np.concatenate([cr0, cr0])
                cre_2 = np.concatenate([cre, cre])
                crn_2 = np.concatenate([crn, crn])
                for col in (0, 1):
                    xi = roots[:, col]
                    eta = (xi * xi + h * h) / (2.0 * h)
                    dperp = np.abs(cr0_2 + cre_2 * xi + crn_2 * eta)
                    xi = np.where(dperp <= eta + 1e-9, xi, np.nan)
                    params.append(xi)
                    ids.append(ids2)
        if not params:
            return np.empty(0), np.empty(0, dtype=int)
        return np.concatenate(params), np.concatenate(ids)

    # -- propagation -------------------------------------------------------
    def propagate(self, shock: ActiveShock):
        """Advance one active shock to its termination; returns the end event
        kind ("junction" | "boxexit" | "domain" | None for a dead shock)."""
        from .bisectors import ParabolaBisector
        rec = shock.bisector
        s0 = shock.start_param
        direction = shock.direction
        r0 = float(rec.radius(s0))
        scale = 1.0 + r0
        gens = rec.pair
        s_dom = rec.s_hi if direction > 0 else rec.s_lo

        delta = 3e-7 * scale
        s_probe = s0 + direction * delta
        if (s_dom - s_probe) * direction <= 0:
            return None
        # a wave already ahead of the front at the probe kills this direction
        qp = rec.point(s_probe)
        rp = float(rec.radius(s_probe))
        if self.eset.any_closer(qp, rp - 1e-9 * scale, gens):
            return None

        # claimed-interval cap
        s_lim = s_dom
        cap_kind = "domain"
        claim_edge = self._next_claim_boundary(rec.branch_key, s0, direction)
        if claim_edge is not None and (s_lim - claim_edge) * direction > 0:
            s_lim, cap_kind = claim_edge, "claim"

        span_full = abs(s_lim - s0)
        q0 = rec.point(s0)
        touch = self.eset.closed_near(q0, r0 + 2e-6 * scale, gens)
        # first analytic third-wave crossing beyond the probe; the root set
        # depends only on the bisector's geometry, so it is solved once per
        # branch against the full element set and cached for re-propagation
        cached = self._root_cache.get(rec.branch_key)
        if cached is None:
            params, ids = self._crossing_params(rec)
            if isinstance(rec, ParabolaBisector):
                with np.errstate(invalid="ignore"):
                    params = rec.s_of_xi(params)
            keep = np.isfinite(params)
            cached = (params[keep], ids[keep])
            self._root_cache[rec.branch_key] = cached
        params, ids = cached
        ahead = (params - s_probe) * direction
        nongen = (ids != gens[0]) & (ids != gens[1])
        ok = (ahead > 0) & ((s_lim - params) * direction > 0) & nongen
        # Crossings with the parent junction's own generators right at the
        # start are numerical scatter of that junction's root (the deficit
        # vanishes to second order there), not new events; honoring them
        # leaves micro-links whose claims block the real continuation.
        parent_gens = self.nodes[shock.parent_node].gen_ids
        if len(parent_gens) > 2 and ok.any():
            near = np.abs(params - s0) <= 1e-5 * scale
            if near.any():
                pg = np.isin(ids, list(parent_gens))
                ok &= ~(near & pg)
        s_first = None
        if ok.any():
            dist_ahead = np.where(ok, ahead, _INF)
            s_first = float(params[int(np.argmin(dist_ahead))])
        # contact transition at the start: an element already touching the
        # front here (closed distance covers foot-window entries, whose open
        # distance is still infinite) may overtake this direction, which the
        # near probe is too close to resolve; test the touching set farther
        # out.  An overtake whose analytic crossing lies ahead inside the
        # tested span is legitimate -- the link simply ends there; only an
        # overtake with no resolvable crossing kills the direction.
        if touch:
            s_far = s0 + direction * min(1e-3 * scale, 0.45 * span_full)
            q_far = rec.point(s_far)
            r_far = float(rec.radius(s_far))
            for eid in touch:
                if self.eset.open_dist_one(int(eid), q_far) - r_far \
                        < -1e-11 * scale:
                    hit = ok & (ids == int(eid)) \
                        & ((s_far - params) * direction >= 0)
                    if not hit.any():
                        return None
        end_kind = cap_kind
        s_end = s_lim
        if s_first is not None and (s_lim - s_first) * direction > 0:
            s_end, end_kind = s_first, "junction"
        if abs(s_end - s0) <= 1e-6 * scale:
            return None

        crossing = []
        if end_kind == "junction":
            crossing = self.eset.near_elements(
                rec.point(s_end), float(rec.radius(s_end)) + 1e-6 * scale, gens)
        elif end_kind == "domain":
            # feet ran out: the generator endpoint's wave takes over there
            crossing = self.eset.near_elements(
                rec.point(s_end), float(rec.radius(s_end)) + 1e-6 * scale, gens)
            end_kind = "junction" if crossing else \
                ("boxexit" if self.box.inset_distance(rec.point(s_end)) < 1e-6
                 else "domain")
        elif end_kind == "claim":
            end_kind = "junction"

        # validity sweep: exact deficit at interior samples; a violation means
        # a crossing was missed, so truncate there by bisection
        ts = s0 + _SWEEP_FRAC * (s_end - s0)
        pts = rec.point(ts)
        rs = np.asarray(rec.radius(ts), dtype=float)
        if self.eset.n > 48:
            mid = 0.5 * (pts[0] + pts[-1])
            reach = float(np.hypot(pts[:, 0] - mid[0], pts[:, 1] - mid[1]).max()) \
                + float(rs.max()) + 0.5 * ElementSet.SAMPLE_STEP + 1e-9
            sids = self.eset._kd().query_ball_point(mid, reach)
            near = np.unique(self.eset._sample_eid[sids])
            near = near[(near != gens[0]) & (near != gens[1])]
            if len(near):
                md = self.eset.subset_distances(pts, near).min(axis=1) - rs
            else:
                md = np.full(len(ts), _INF)
        else:
            md = self.eset.min_third_many(pts, gens) - rs
        if md.min() < -1e-9 * scale:
            self.stats["sweep_truncations"] = \
                self.stats.get("sweep_truncations", 0) + 1
            if getattr(self, "_debug_sweep", None):
                self._debug_sweep(rec, s0, s_end, ts, md)
            bad = int(np.argmax(md < -1e-9 * scale))
            lo = s0 if bad == 0 else float(ts[bad - 1])
            hi = float(ts[bad])
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                dv = self.eset.min_third(rec.point(mid), gens) - float(rec.radius(mid))
                if dv >= 0.0:
                    lo = mid
                else:
                    hi = mid
            s_end, end_kind = lo, "junction"
            if abs(s_end - s0) <= 1e-6 * scale:
                return None
            crossing = self.eset.near_elements(
                rec.point(s_end), float(rec.radius(s_end)) + 1e-6 * scale, gens)

        end_loc = rec.point(s_end)
        end_r = float(rec.radius(s_end))
        node_to = self._node_at(end_loc, end_r, set(gens) | set(crossing))
        self._claim(rec.branch_key, s0, s_end)
        lid = len(self.links)
        self.links.append(RawLink(lid, rec, s0, s_end, shock.parent_node,
                                  node_to, end_kind))
        shock.end_param = s_end
        if end_kind == "junction":
            self._discover_outflows(node_to)
        return end_kind

    def _valid_candidates(self) -> list[ShockCandidate]:
        """Enumerate and validity-filter candidates without building objects
        for the (vast) invalid majority."""
        t, x, y, g1, g2, br = _candidate_arrays(self.elements)
        self.stats["candidates"] = len(t)
        if len(t) == 0:
            return []
        locs = np.column_stack([x, y])
        alive = np.ones(len(t), dtype=bool)
        if self.eset.n > 48:
            # kd prefilter: a non-generator sample closer than the formation
            # time proves invalidity (sample distance bounds element distance
            # from above)
            tree = self.eset._kd()
            ds, idx = tree.query(locs, k=8, workers=-1)
            eids = self.eset._sample_eid[idx]
            nongen = (eids != g1[:, None]) & (eids != g2[:, None])
            dmin = np.where(nongen, ds, _INF).min(axis=1)
            alive = dmin >= t - 1e-9
        # exact validation of the survivors
        surv = np.nonzero(alive)[0]
        ok = np.zeros(len(t), dtype=bool)
        for lo in range(0, len(surv), 2048):
            rows = surv[lo:lo + 2048]
            d = self.eset.open_distances_many(locs[rows])
            rr = np.arange(len(rows))
            d[rr, g1[rows]] = _INF
            d[rr, g2[rows]] = _INF
            ok[rows] = d.min(axis=1) >= t[rows] - 1e-9
        self.stats["discarded"] = int((~ok).sum())
        out = [ShockCandidate(float(t[k]), int(g1[k]), int(g2[k]), int(br[k]),
                              (float(x[k]), float(y[k])))
               for k in np.nonzero(ok)[0]]
        out.sort()
        return out

    # -- main loop ---------------------------------------------------------
    def run(self) -> RawGraph:
        queue = self._valid_candidates()
        side: list = []  # corrected candidates (clip moved their minimum)
        qi = 0

        while True:
            self.events += 1
            if self.events > self.event_budget:
                raise NonterminationError(
                    "event budget exceeded",
                    diagnostics={"events": self.events,
                                 "nodes": len(self.nodes),
                                 "links": len(self.links),
                                 "pending_candidates": len(queue) - qi})
            if self._active:
                _, _, shock = heapq.heappop(self._active)
                self.propagate(shock)
                continue
            nxt = None
            if side and (qi >= len(queue) or side[0][0] <= queue[qi].time):
                nxt = heapq.heappop(side)
            elif qi < len(queue):
                nxt = queue[qi]
                qi += 1
            if nxt is None:
                break
            self._visit_candidate(nxt, side)

        self.stats["events"] = self.events
        self.stats["nodes"] = len(self.nodes)
        self.stats["links"] = len(self.links)
        return RawGraph(self.nodes, self.links, dict(self.stats))

    def _visit_candidate(self, cand, side):
        if isinstance(cand, tuple):
            time, _, (lo, hi, rec_idx) = cand
            recs = self._bisectors(lo, hi)
            if rec_idx >= len(recs):
                return
            chosen = [recs[rec_idx]]
        else:
            time = cand.time
            lo, hi = cand.gen_lo, cand.gen_hi
            recs = self._bisectors(lo, hi)
            chosen = recs
        for idx, rec in enumerate(recs):
            if rec not in chosen:
                continue
            s_star = rec.argmin_radius()
            t_star = float(rec.radius(s_star))
            if t_star > time + 1e-9:
                heapq.heappush(side, (t_star, next(self._seq), (lo, hi, idx)))
                continue
            if self._claimed_at(rec.branch_key, s_star):
                continue
            loc = rec.point(s_star)
            if self.eset.min_third(loc, rec.pair) < t_star - 1e-9:
                continue  # clip moved the minimum onto blocked ground
            node_id = self._node_at(loc, t_star, set(rec.pair))
            self.stats["realized"] += 1
            for direction in (1.0, -1.0):
                self._spawn(rec, s_star, direction, node_id, t_star)


def _param_near(rec: Bisector, loc):
    """Parameter of the point on rec nearest to loc (closed form per kind)."""
    from .bisectors import ParabolaBisector, _LineLike
    if isinstance(rec, _LineLike):
        v = (loc[0] - rec.origin[0], loc[1] - rec.origin[1])
        return v[0] * rec.direction[0] + v[1] * rec.direction[1]
    if isinstance(rec, ParabolaBisector):
        xi = ((loc[0] - rec.F[0]) * rec.e1[0] + (loc[1] - rec.F[1]) * rec.e1[1])
        return float(rec.s_of_xi(xi))
    return None


def run(elements: list[BoundaryElement], box: Rect,
        event_budget: int | None = None) -> RawGraph:
    """Run the full propagation and return the raw node/link structure."""
    return Engine(elements, box, event_budget=event_budget).run()
