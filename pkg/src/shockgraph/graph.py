"""Attributed, directed shock graph built from the raw propagation output.

The engine emits one raw link per bisector branch portion, which splits what
is conceptually a single shock curve at every generator transition (each
polyline vertex flips the local bisector between line and parabola pieces).
Here flow-through raw nodes -- exactly one incoming and one outgoing link --
are dissolved and their links chained into composite links, so the node set
contains only sources, sinks and true junctions and the graph topology does
not depend on how densely a contour was sampled.

Node attributes (radius, per-incident-link tangents/normals, the object angle
phi between the shock tangent and the contact rays, and the contact points
bp+/bp-) and link attributes (arc length, curvature samples, acceleration,
swept area, per-side boundary summaries) are computed analytically from the
underlying bisectors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bisectors import KIND_PARABOLA, Bisector
from .contours import BoundaryElement
from .errors import StructuralError

# Node labels
SOURCE = "Source"
SINK = "Sink"
JUNCTION = "Junction"

# Link labels (by generator kinds: 0, 1 or 2 point generators)
REGULAR = "Regular"
SEMIDEGENERATE = "SemiDegenerate"
DEGENERATE = "Degenerate"

NODE_LABEL_CODES = {SOURCE: 0, SINK: 1, JUNCTION: 2}
LINK_LABEL_CODES = {REGULAR: 0, SEMIDEGENERATE: 1, DEGENERATE: 2}

CURVATURE_SAMPLES = 16


@dataclass
class Piece:
    """One bisector portion traversed from s0 to s1 (flow = increasing time)."""
    bisector: Bisector
    s0: float
    s1: float

    @property
    def direction(self) -> float:
        return 1.0 if self.s1 >= self.s0 else -1.0

    @property
    def length(self) -> float:
        return abs(self.s1 - self.s0)

    def params(self, n: int) -> np.ndarray:
        return np.linspace(self.s0, self.s1, n)

    def side_generators(self) -> tuple[int, int]:
        """(plus, minus) generator ids relative to the flow direction."""
        b = self.bisector
        if self.direction > 0:
            return b.gen_plus, b.gen_minus
        return b.gen_minus, b.gen_plus

    def contacts_at(self, s: float) -> tuple[tuple, tuple]:
        """(bp_plus, bp_minus) relative to the flow direction."""
        cp, cm = self.bisector.contacts(float(s))
        return (cp, cm) if self.direction > 0 else (cm, cp)

    def contacts_array(self, ss: np.ndarray):
        """contacts_at over a parameter vector: two (n, 2) arrays."""
        cp, cm = self.bisector.contacts_array(ss)
        return (cp, cm) if self.direction > 0 else (cm, cp)


@dataclass
class BoundaryRef:
    """Per-side contact summary: which generators, contact-locus arc length,
    and mean boundary curvature (identically 0 for point/segment scenes)."""
    generators: tuple
    arc_length: float
    curvature: float = 0.0


@dataclass
class ShockLink:
    id: int
    from_node: int
    to_node: int
    pieces: list            # list[Piece], in flow order
    label: str = ""
    length: float = 0.0
    curvature_samples: np.ndarray = None
    curvature: float = 0.0  # mean of the samples
    acceleration: float = 0.0
    area: float = 0.0
    boundary_plus: BoundaryRef = None
    boundary_minus: BoundaryRef = None
    end_kind: str = "junction"

    # -- geometry sampling --------------------------------------------------

    def _cum_lengths(self):
        cum = getattr(self, "_cum_cache", None)
        if cum is None or len(cum) != len(self.pieces) + 1:
            cum = np.concatenate(
                [[0.0], np.cumsum([p.length for p in self.pieces])])
            self._cum_cache = cum
        return cum

    def piece_param(self, u: float):
        """(piece, s) at arc length u from the link start."""
        cum = self._cum_lengths()
        i = min(int(np.searchsorted(cum, u, side="right")) - 1,
                len(self.pieces) - 1)
        i = max(i, 0)
        p = self.pieces[i]
        return p, p.s0 + p.direction * (u - cum[i])

    def piece_params(self, us: np.ndarray):
        """(piece index array, s array) at arc lengths us from the start."""
        cum = self._cum_lengths()
        idx = np.clip(np.searchsorted(cum, us, side="right") - 1,
                      0, len(self.pieces) - 1)
        ss = np.empty(len(us))
        for i in np.unique(idx):
            p = self.pieces[i]
            m = idx == i
            ss[m] = p.s0 + p.direction * (us[m] - cum[i])
        return idx, ss

    def sample_points(self, n: int) -> np.ndarray:
        """(n, 2) points uniformly spaced in arc length over the link."""
        idx, ss = self.piece_params(np.linspace(0.0, self.length, n))
        out = np.empty((n, 2))
        for i in np.unique(idx):
            m = idx == i
            out[m] = np.atleast_2d(self.pieces[i].bisector.point(ss[m]))
        return out

    def sample_radii(self, n: int) -> np.ndarray:
        idx, ss = self.piece_params(np.linspace(0.0, self.length, n))
        out = np.empty(n)
        for i in np.unique(idx):
            m = idx == i
            out[m] = np.asarray(self.pieces[i].bisector.radius(ss[m]))
        return out

    def sample_contacts(self, n: int):
        """(bp_plus, bp_minus) arrays of shape (n, 2), flow-oriented sides."""
        bp = np.empty((n, 2))
        bm = np.empty((n, 2))
        for j, u in enumerate(np.linspace(0.0, self.length, n)):
            p, s = self.piece_param(u)
            cp, cm = p.contacts_at(s)
            bp[j], bm[j] = cp, cm
        return bp, bm

    @property
    def radius_from(self) -> float:
        p = self.pieces[0]
        return float(p.bisector.radius(p.s0))

    @property
    def radius_to(self) -> float:
        p = self.pieces[-1]
        return float(p.bisector.radius(p.s1))

    def tangent_at_from(self) -> np.ndarray:
        p = self.pieces[0]
        return p.direction * np.asarray(p.bisector.tangent(p.s0), dtype=float)

    def tangent_at_to(self) -> np.ndarray:
        p = self.pieces[-1]
        return p.direction * np.asarray(p.bisector.tangent(p.s1), dtype=float)

    def dradius_at(self, node_end: str) -> float:
        """dr per unit arc length along the flow direction at an end.

        Evaluated a hair inside the link: r(s) has a corner (|s|) at branch
        apexes, where the one-sided derivative into the link is the right
        limit, not the two-sided 0."""
        if node_end == "from":
            p = self.pieces[0]
            eps = 1e-9 + 1e-7 * p.length
            return p.direction * float(p.bisector.dradius(
                p.s0 + p.direction * eps))
        p = self.pieces[-1]
        eps = 1e-9 + 1e-7 * p.length
        return p.direction * float(p.bisector.dradius(
            p.s1 - p.direction * eps))

    def contacts_at_end(self, node_end: str):
        if node_end == "from":
            p = self.pieces[0]
            return p.contacts_at(p.s0)
        p = self.pieces[-1]
        return p.contacts_at(p.s1)


@dataclass
class ShockNode:
    id: int
    location: tuple
    radius: float
    label: str = ""
    link_ids: list = field(default_factory=list)      # angle-sorted
    outgoing: list = field(default_factory=list)      # parallel: True if link leaves
    tangents: list = field(default_factory=list)      # flow tangents, one per link
    normals: list = field(default_factory=list)       # left normals of the tangents
    phis: list = field(default_factory=list)          # object angle per link
    boundary_points: list = field(default_factory=list)  # [(bp+, th+), (bp-, th-)] per link

    @property
    def degree(self) -> int:
        return len(self.link_ids)


@dataclass
class ShockGraph:
    nodes: list            # list[ShockNode], ids are list positions
    links: list            # list[ShockLink], ids are list positions
    scene: tuple = None    # (width, height, box Rect)
    stats: dict = field(default_factory=dict)

    def incident(self, node_id: int):
        n = self.nodes[node_id]
        return [self.links[lid] for lid in n.link_ids]

    def validate(self, tol: float = 1e-6) -> None:
        """Raise StructuralError on any violated graph invariant.

        Node/link radius continuity is checked at tol scaled by the scene
        span, matching the duplicate-node snap tolerance at build time:
        a junction realized once as a crossing root and once as a domain
        end scatters proportionally to the coordinate magnitude.
        """
        span = 1.0
        if self.nodes:
            xy = np.array([nd.location for nd in self.nodes], dtype=float)
            span = max(1.0, float((xy.max(axis=0) - xy.min(axis=0)).max()))
        for ln in self.links:
            if not (0 <= ln.from_node < len(self.nodes)
                    and 0 <= ln.to_node < len(self.nodes)):
                raise StructuralError(f"link {ln.id}: dangling node reference")
            if ln.radius_to < ln.radius_from - tol * span:
                raise StructuralError(f"link {ln.id}: time decreases along flow")
        for nd in self.nodes:
            if nd.degree == 0:
                # pruning may collapse a whole component onto its latest
                # node, which survives as a labeled, link-less sink
                if not nd.label:
                    raise StructuralError(f"node {nd.id}: isolated")
                continue
            if nd.label == JUNCTION and nd.degree < 3:
                # a self-loop contributes both ends to its anchor node
                loops = sum(1 for lid in nd.link_ids
                            if self.links[lid].from_node == self.links[lid].to_node)
                if nd.degree + loops < 3:
                    raise StructuralError(
                        f"node {nd.id}: junction with degree {nd.degree}")
            for lid, out in zip(nd.link_ids, nd.outgoing):
                ln = self.links[lid]
                r = ln.radius_from if out else ln.radius_to
                if abs(r - nd.radius) > tol * span:
                    raise StructuralError(
                        f"node {nd.id}/link {lid}: radius mismatch "
                        f"{r} vs {nd.radius}")


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

def classify_node(node: ShockNode) -> str:
    """Source iff every incident link leaves, Sink iff every one arrives,
    Junction otherwise. Isolated nodes are a structural error."""
    if node.degree == 0:
        raise StructuralError(f"node {node.id}: isolated (no incident links)")
    if all(node.outgoing):
        return SOURCE
    if not any(node.outgoing):
        return SINK
    return JUNCTION


def classify_link(link: ShockLink, is_point: dict) -> str:
    """Label by the generator kinds of the link's dominant (longest) piece:
    two segment generators -> Regular, exactly one point -> SemiDegenerate,
    two points -> Degenerate.

    Composite links may chain pieces with different generator kinds (a corner
    parabola flowing into a segment-pair line); the dominant piece decides,
    so vanishing transition slivers cannot flip the label.
    """
    piece = max(link.pieces, key=lambda p: p.length)
    gp, gm = piece.side_generators()
    n_pts = int(bool(is_point.get(gp))) + int(bool(is_point.get(gm)))
    return (REGULAR, SEMIDEGENERATE, DEGENERATE)[n_pts]


# ---------------------------------------------------------------------------
# Link attribute computation
# ---------------------------------------------------------------------------

def _shoelace(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _piece_side_area(piece: Piece, side: int) -> float:
    """Area between the shock curve and one contact locus, closed by the end
    rays.

    Exact in closed form for every bisector kind: straight bisectors with
    straight (or constant) contact loci bound a quadrilateral, and for a
    parabola the directrix-side area is the integral of the directrix
    distance eta over xi while the focus-side sector is half of it (the
    cross product (p - focus) x dp/dxi reduces to eta)."""
    if piece.length <= 0.0:
        return 0.0
    bis = piece.bisector
    if bis.kind == KIND_PARABOLA:
        xi0 = float(bis.xi_of_s(piece.s0))
        xi1 = float(bis.xi_of_s(piece.s1))
        h = bis.h
        integral = abs((xi1 ** 3 - xi0 ** 3) / (6.0 * h)
                       + 0.5 * h * (xi1 - xi0))
        focus_on_plus = piece.direction > 0  # gen_plus is the focus
        return 0.5 * integral if (side == 0) == focus_on_plus else integral
    ss = np.array([piece.s0, piece.s1])
    pts = bis.point(ss)
    bps = piece.contacts_array(ss)[side]
    return _shoelace(np.vstack([pts, bps[::-1]]))


def link_area(link: ShockLink) -> float:
    """Area of the region bounded by the link, its two contact loci, and the
    end rays (the region swept by the wavefront while tracing the link)."""
    return sum(_piece_side_area(p, side)
               for p in link.pieces for side in (0, 1))


def _link_curvature(link: ShockLink) -> np.ndarray:
    """Signed curvature at CURVATURE_SAMPLES uniform arc-length samples,
    oriented along the flow direction."""
    idx, ss = link.piece_params(np.linspace(0.0, link.length,
                                            CURVATURE_SAMPLES))
    out = np.empty(CURVATURE_SAMPLES)
    for i in np.unique(idx):
        p = link.pieces[i]
        m = idx == i
        out[m] = p.direction * np.asarray(p.bisector.curvature(ss[m]))
    return out


def _link_acceleration(link: ShockLink) -> float:
    """Mean d(speed)/dt with speed = dr/dt-normalized flow 1/r'(s); computed
    as -r''/r'^3 with r'' by central differencing of the analytic r'. Samples
    where the shock is (nearly) orthogonal to its generators (r' ~ 0, speed
    unbounded) contribute 0."""
    if link.length <= 0.0:
        return 0.0
    h = max(1e-6, 1e-6 * link.length)
    idx, ss = link.piece_params(np.linspace(0.0, link.length,
                                            CURVATURE_SAMPLES))
    vals = np.zeros(CURVATURE_SAMPLES)
    for i in np.unique(idx):
        p = link.pieces[i]
        bis = p.bisector
        m = idx == i
        s = ss[m]
        lo = np.maximum(min(p.s0, p.s1), s - h)
        hi = np.minimum(max(p.s0, p.s1), s + h)
        span = hi - lo
        d1 = p.direction * np.asarray(bis.dradius(s), dtype=float)
        ok = (span > 0.0) & (np.abs(d1) >= 1e-6)
        d2 = np.zeros_like(s)
        if ok.any():
            d2[ok] = (np.asarray(bis.dradius(hi[ok]), dtype=float)
                      - np.asarray(bis.dradius(lo[ok]), dtype=float)) \
                / span[ok]
        vals[m] = np.where(ok, -d2 / np.where(ok, d1, 1.0) ** 3, 0.0)
    return float(np.mean(vals))


def _boundary_refs(link: ShockLink) -> tuple[BoundaryRef, BoundaryRef]:
    """Per-side generator ids and contact-locus arc length. Contact loci of
    point and segment generators are constant or straight per piece, so the
    end-to-end chord per piece is exact."""
    refs = []
    for side in (0, 1):
        gens = []
        arclen = 0.0
        for p in link.pieces:
            gid = p.side_generators()[side]
            if gid not in gens:
                gens.append(gid)
            c0 = p.contacts_at(p.s0)[side]
            c1 = p.contacts_at(p.s1)[side]
            arclen += math.hypot(c1[0] - c0[0], c1[1] - c0[1])
        refs.append(BoundaryRef(tuple(gens), arclen, 0.0))
    return refs[0], refs[1]


def _finalize_link(link: ShockLink, is_point: dict) -> None:
    link.length = sum(p.length for p in link.pieces)
    link.label = classify_link(link, is_point)
    if link.length <= 0.0:
        link.curvature_samples = np.zeros(CURVATURE_SAMPLES)
        link.curvature = 0.0
        link.acceleration = 0.0
        link.area = 0.0
        link.boundary_plus, link.boundary_minus = _boundary_refs(link)
        link.boundary_plus.arc_length = 0.0
        link.boundary_minus.arc_length = 0.0
        return
    link.curvature_samples = _link_curvature(link)
    link.curvature = float(np.mean(link.curvature_samples))
    link.acceleration = _link_acceleration(link)
    link.area = link_area(link)
    link.boundary_plus, link.boundary_minus = _boundary_refs(link)


# ---------------------------------------------------------------------------
# Node attribute computation
# ---------------------------------------------------------------------------

def _element_tangent(elem: BoundaryElement | None) -> float:
    """Boundary tangent angle at a contact: segment direction for segments,
    0 for point generators (no defined tangent)."""
    if elem is None or elem.is_point:
        return 0.0
    (ax, ay), (bx, by) = elem.geometry
    return math.atan2(by - ay, bx - ax)


def _populate_node(node: ShockNode, graph: ShockGraph,
                   by_id: dict) -> None:
    if not node.link_ids:
        # collapse sink retained by pruning: keep its preset label
        if not node.label:
            raise StructuralError(f"node {node.id}: isolated (no incident links)")
        return
    entries = []
    for lid, out in zip(node.link_ids, node.outgoing):
        ln = graph.links[lid]
        end = "from" if out else "to"
        tan = ln.tangent_at_from() if out else ln.tangent_at_to()
        away = tan if out else -tan
        # contact rays make angle phi with the away-tangent:
        # dot(away, ray) = -dr/ds measured away from the node
        dr_away = ln.dradius_at(end) * (1.0 if out else -1.0)
        phi = math.acos(min(1.0, max(-1.0, -dr_away)))
        bp, bm = ln.contacts_at_end(end)
        gp, gm = ln.pieces[0 if out else -1].side_generators()
        bps = [((float(bp[0]), float(bp[1])), _element_tangent(by_id.get(gp))),
               ((float(bm[0]), float(bm[1])), _element_tangent(by_id.get(gm)))]
        key = math.atan2(away[1], away[0])
        entries.append((key, lid, out, tan, phi, bps))
    entries.sort(key=lambda e: (e[0], e[1]))
    node.link_ids = [e[1] for e in entries]
    node.outgoing = [e[2] for e in entries]
    node.tangents = [e[3] for e in entries]
    node.normals = [np.array([-t[1], t[0]]) for t in node.tangents]
    node.phis = [e[4] for e in entries]
    node.boundary_points = [e[5] for e in entries]
    node.label = classify_node(node)


# ---------------------------------------------------------------------------
# Raw graph -> shock graph
# ---------------------------------------------------------------------------

def _snap_duplicate_nodes(raw) -> dict:
    """Map raw node ids onto representatives, merging near-duplicates.

    A junction can be realized twice: once as a crossing root on one shock
    and once as another shock's domain end. Near a foot-window edge the
    crossing deficit vanishes to second order, so the two positions agree
    only to ~sqrt(machine eps) of the scene scale, which can exceed the
    engine's merge tolerance. Nodes within that scatter whose generator
    sets are nested are the same junction; snap them together."""
    n = len(raw.nodes)
    if n == 0:
        return {}
    locs = np.array([nd.location for nd in raw.nodes])
    span = max(np.ptp(locs[:, 0]), np.ptp(locs[:, 1]), 1.0)
    tol = 1e-6 * span

    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    cells: dict[tuple, list] = {}
    for i, (x, y) in enumerate(locs):
        cx, cy = int(math.floor(x / tol)), int(math.floor(y / tol))
        gi = raw.nodes[i].gen_ids
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for j in cells.get((cx + dx, cy + dy), ()):
                    gj = raw.nodes[j].gen_ids
                    if (math.hypot(x - locs[j, 0], y - locs[j, 1]) <= tol
                            and (gi <= gj or gj <= gi)):
                        ri, rj = find(i), find(j)
                        if ri != rj:
                            parent[max(ri, rj)] = min(ri, rj)
        cells.setdefault((cx, cy), []).append(i)
    return {i: find(i) for i in range(n)}


def _chain_raw_links(raw, node_map: dict) -> list[tuple[int, int, list, str]]:
    """Merge raw links across flow-through nodes (exactly 1 in / 1 out).

    Returns (from_raw_node, to_raw_node, [raw links], end_kind) per chain,
    with node ids already snapped through node_map. Pure cycles of
    flow-through nodes (closed shock loops with no junction) are anchored
    at their lowest-id node, which is then retained."""
    ends = {rl.id: (node_map[rl.node_from], node_map[rl.node_to])
            for rl in raw.links}
    # self-loops no longer than the node-snap scatter are slack closed by
    # the snap, not geometry; keeping them would freeze phantom junctions
    if raw.nodes:
        locs = np.array([nd.location for nd in raw.nodes])
        span = max(np.ptp(locs[:, 0]), np.ptp(locs[:, 1]), 1.0)
    else:
        span = 1.0
    loop_tol = 1e-5 * span
    n_in: dict[int, list] = {}
    n_out: dict[int, list] = {}
    for rl in raw.links:
        frm, to = ends[rl.id]
        if frm == to and rl.length <= loop_tol:
            continue
        n_out.setdefault(frm, []).append(rl)
        n_in.setdefault(to, []).append(rl)

    def flow_through(nid):
        return len(n_in.get(nid, ())) == 1 and len(n_out.get(nid, ())) == 1

    visited = set()
    chains = []

    def walk(rl):
        run = [rl]
        visited.add(rl.id)
        while flow_through(ends[rl.id][1]):
            nxt = n_out[ends[rl.id][1]][0]
            if nxt.id in visited:
                break  # cycle closed
            run.append(nxt)
            visited.add(nxt.id)
            rl = nxt
        chains.append((ends[run[0].id][0], ends[run[-1].id][1], run,
                       run[-1].end_kind))

    live = sorted((rl for rl in raw.links if rl.id in ends
                   and (ends[rl.id][0] != ends[rl.id][1]
                        or rl.length > loop_tol)), key=lambda l: l.id)
    for rl in live:
        if rl.id not in visited and not flow_through(ends[rl.id][0]):
            walk(rl)
    # anything left sits on pure flow-through cycles
    for rl in live:
        if rl.id not in visited:
            walk(rl)
    return chains


def build_graph(raw, elements: list[BoundaryElement],
                scene: tuple = None) -> ShockGraph:
    """Build the attributed shock graph from the engine's raw output.

    Raw nodes with exactly one incoming and one outgoing link are generator
    transitions, not graph features; their links are chained into composite
    links. Isolated raw nodes (candidates whose every outflow died instantly)
    are dropped and counted in stats["isolated_dropped"].
    """
    by_id = {e.id: e for e in elements}
    is_point = {e.id: e.is_point for e in elements}

    node_map = _snap_duplicate_nodes(raw)
    chains = _chain_raw_links(raw, node_map)
    used_raw_nodes = sorted({c[0] for c in chains} | {c[1] for c in chains})
    node_index = {rid: i for i, rid in enumerate(used_raw_nodes)}

    nodes = [ShockNode(i, raw.nodes[rid].location, raw.nodes[rid].radius)
             for rid, i in node_index.items()]

    links = []
    for frm, to, run, end_kind in chains:
        pieces = [Piece(rl.bisector, rl.s_from, rl.s_to) for rl in run]
        ln = ShockLink(len(links), node_index[frm], node_index[to], pieces,
                       end_kind=end_kind)
        _finalize_link(ln, is_point)
        links.append(ln)

    stats = dict(raw.stats)
    stats["isolated_dropped"] = len(raw.nodes) - len(nodes)
    stats["dissolved_flow_through"] = len(raw.links) - len(links)
    graph = ShockGraph(nodes, links, scene=scene, stats=stats)

    for ln in links:
        nodes[ln.from_node].link_ids.append(ln.id)
        nodes[ln.from_node].outgoing.append(True)
        nodes[ln.to_node].link_ids.append(ln.id)
        nodes[ln.to_node].outgoing.append(False)
    for nd in nodes:
        _populate_node(nd, graph, by_id)
    return graph


def contact_samples(graph: ShockGraph, per_link: int = 24) -> np.ndarray:
    """Union of contact-point samples over all links: the reconstruction of
    the boundary encoded by the shock graph. Returns an (m, 2) array."""
    pts = []
    for ln in graph.links:
        n = max(2, per_link)
        bp, bm = ln.sample_contacts(n)
        pts.append(bp)
        pts.append(bm)
    if not pts:
        return np.empty((0, 2))
    return np.vstack(pts)
