import numpy as np
import pytest

from shockgraph.errors import FeatureOverflowError
from shockgraph.features import (FEATURE_LENGTH, PREFIX_LENGTH, edge_features,
                                 graph_features, node_features)
from shockgraph.graph import NODE_LABEL_CODES, ShockNode
from shockgraph.scenes import random_scene

from conftest import build_scene


@pytest.fixture(scope="module")
def scene():
    frags, img = random_scene(12, 5)
    return build_scene(frags, img.xmax - img.xmin, img.ymax - img.ymin,
                       lam=1.0)


class TestNodeVectors:
    def test_length_and_padding(self, scene):
        graph, _, _, _ = scene
        for nd in graph.nodes:
            fv = node_features(nd, graph)
            assert fv.values.shape == (FEATURE_LENGTH,)
            k = fv.prefix_length
            assert k == PREFIX_LENGTH[fv.degree]
            assert np.all(fv.values[k:] == 0.0)

    def test_prefix_lengths(self):
        assert PREFIX_LENGTH == {2: 28, 3: 43, 4: 56}

    def test_header_entries(self, scene):
        graph, _, _, _ = scene
        for nd in graph.nodes:
            v = node_features(nd, graph).values
            assert np.allclose(v[:2], nd.location)
            assert v[2] == nd.radius
            assert v[3] == NODE_LABEL_CODES[nd.label]

    def test_overflow_above_degree_four(self):
        nd = ShockNode(0, (0.0, 0.0), 1.0, label="Junction",
                       link_ids=[0, 1, 2, 3, 4],
                       outgoing=[True] * 5)
        with pytest.raises(FeatureOverflowError):
            node_features(nd, None)


class TestEdgeVectors:
    def test_eight_entries(self, scene):
        graph, _, _, _ = scene
        for ln in graph.links:
            ev = edge_features(ln)
            assert ev.values.shape == (8,)
            assert np.isfinite(ev.values).all()

    def test_length_entry_positive(self, scene):
        graph, _, _, _ = scene
        for ln in graph.links:
            assert edge_features(ln).values[0] > 0.0


class TestGraphFeatures:
    def test_matrix_shapes(self, scene):
        graph, _, _, _ = scene
        nf, ef = graph_features(graph)
        assert nf.shape == (len(graph.nodes), FEATURE_LENGTH)
        assert ef.shape == (len(graph.links), 8)
