"""Fixed-length feature vectors for shock graph nodes and links.

Each node is summarized by a 58-entry vector whose populated prefix depends
on the node degree (28 / 43 / 56 for degrees 2 / 3 / 4); the remainder is
exactly zero.  The prefix is a node block followed by one 8-value block per
incident link:

    node block  [x, y, r, label] ++ [theta_i] ++ [phi_i] ++ [bp_i: x, y, theta]
    edge block  [s, kappa, area, label, s_B+, k_B+, s_B-, k_B-]

theta_i is the direction in which link i leaves the node, phi_i the object
angle between that direction and the contact rays, and bp_i the plus-side
contact point with its boundary tangent angle; links are visited in the
node's canonical (angle-sorted) order.  The degree-2 node block is truncated
to 12 entries so the degree-2 prefix is exactly 28; degree-1 leaves are
padded as degree 2 with an all-zero second block.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FeatureOverflowError
from .graph import (LINK_LABEL_CODES, NODE_LABEL_CODES, ShockGraph, ShockLink,
                    ShockNode)

FEATURE_LENGTH = 58
LAYOUT_VERSION = 1

# node-block entry counts per padded degree (4 + 5*d, degree 2 clamped)
_NODE_BLOCK = {2: 12, 3: 19, 4: 24}
PREFIX_LENGTH = {d: _NODE_BLOCK[d] + 8 * d for d in _NODE_BLOCK}  # 28/43/56


@dataclass
class EdgeFeatureVector:
    values: np.ndarray  # 8 entries: s, kappa, a, l, sB+, kB+, sB-, kB-

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)


@dataclass
class NodeFeatureVector:
    values: np.ndarray  # 58 entries, zero beyond the populated prefix
    degree: int
    layout_version: int = LAYOUT_VERSION

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)

    @property
    def prefix_length(self) -> int:
        return PREFIX_LENGTH[self.degree]


def edge_features(link: ShockLink) -> EdgeFeatureVector:
    return EdgeFeatureVector(np.array([
        link.length,
        link.curvature,
        link.area,
        float(LINK_LABEL_CODES[link.label]),
        link.boundary_plus.arc_length,
        link.boundary_plus.curvature,
        link.boundary_minus.arc_length,
        link.boundary_minus.curvature,
    ]))


def _away_angle(node: ShockNode, i: int) -> float:
    t = node.tangents[i]
    sgn = 1.0 if node.outgoing[i] else -1.0
    return math.atan2(sgn * t[1], sgn * t[0])


def node_features(node: ShockNode, graph: ShockGraph) -> NodeFeatureVector:
    """58-entry feature vector of a node in its graph (see module docstring).

    Raises FeatureOverflowError above degree 4: the fixed layout has no slot
    for a fifth incident link.
    """
    d = node.degree
    if d > 4:
        raise FeatureOverflowError(
            f"node {node.id}: degree {d} exceeds the feature layout maximum 4")
    if d == 0:
        vec = np.zeros(FEATURE_LENGTH)
        vec[0], vec[1] = node.location
        vec[2] = node.radius
        vec[3] = float(NODE_LABEL_CODES[node.label])
        return NodeFeatureVector(vec, 2)
    padded = max(d, 2)  # degree-1 leaves carry one all-zero block

    thetas = np.zeros(padded)
    phis = np.zeros(padded)
    bps = np.zeros((padded, 3))
    edges = np.zeros((padded, 8))
    for i in range(d):
        thetas[i] = _away_angle(node, i)
        phis[i] = node.phis[i]
        (bx, by), bth = node.boundary_points[i][0]
        bps[i] = (bx, by, bth)
        edges[i] = edge_features(graph.links[node.link_ids[i]]).values

    block = np.concatenate([
        [node.location[0], node.location[1], node.radius,
         float(NODE_LABEL_CODES[node.label])],
        thetas, phis, bps.ravel(),
    ])[:_NODE_BLOCK[padded]]
    vec = np.zeros(FEATURE_LENGTH)
    prefix = np.concatenate([block, edges.ravel()])
    vec[:len(prefix)] = prefix
    return NodeFeatureVector(vec, padded)


def graph_features(graph: ShockGraph):
    """(node feature matrix, edge feature matrix) for a whole graph."""
    nf = np.zeros((len(graph.nodes), FEATURE_LENGTH))
    for nd in graph.nodes:
        nf[nd.id] = node_features(nd, graph).values
    ef = np.zeros((len(graph.links), 8))
    for ln in graph.links:
        ef[ln.id] = edge_features(ln).values
    return nf, ef
