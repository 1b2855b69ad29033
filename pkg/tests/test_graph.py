import numpy as np
import pytest

from shockgraph.errors import StructuralError
from shockgraph.graph import (DEGENERATE, JUNCTION, REGULAR, SEMIDEGENERATE,
                              SINK, SOURCE, ShockNode, classify_node,
                              contact_samples, link_area)
from shockgraph.scenes import random_scene, rectangle_fragment

from conftest import build_scene


class TestStructure:
    def test_validate_passes(self, rectangle_scene):
        graph, _, _, _ = rectangle_scene
        graph.validate()

    def test_ids_are_positions(self, rectangle_scene):
        graph, _, _, _ = rectangle_scene
        assert [n.id for n in graph.nodes] == list(range(len(graph.nodes)))
        assert [ln.id for ln in graph.links] == list(range(len(graph.links)))

    def test_incident_lists_consistent(self, rectangle_scene):
        graph, _, _, _ = rectangle_scene
        for nd in graph.nodes:
            for lid, out in zip(nd.link_ids, nd.outgoing):
                ln = graph.links[lid]
                assert (ln.from_node if out else ln.to_node) == nd.id


class TestLabels:
    def test_node_labels(self, rectangle_scene):
        graph, _, _, _ = rectangle_scene
        labels = {nd.label for nd in graph.nodes}
        assert labels <= {SOURCE, SINK, JUNCTION}
        # the two interior axis endpoints are degree-3 junction sources
        for nd in graph.nodes:
            assert nd.label == classify_node(nd)

    def test_link_labels(self, rectangle_scene):
        graph, _, _, _ = rectangle_scene
        assert {ln.label for ln in graph.links} <= {
            REGULAR, SEMIDEGENERATE, DEGENERATE}
        # the central axis segment of a rectangle runs between two edges
        central = min(graph.links,
                      key=lambda ln: np.hypot(*ln.sample_points(3)[1]))
        assert central.label == REGULAR

    def test_isolated_node_rejected(self):
        with pytest.raises(StructuralError):
            classify_node(ShockNode(0, (0.0, 0.0), 1.0))


class TestGeometry:
    def test_radii_match_endpoints(self, rectangle_scene):
        graph, _, _, _ = rectangle_scene
        for ln in graph.links:
            assert np.isclose(ln.radius_from,
                              graph.nodes[ln.from_node].radius, atol=1e-6)
            assert np.isclose(ln.radius_to,
                              graph.nodes[ln.to_node].radius, atol=1e-6)

    def test_monotone_radius_along_link(self, rectangle_scene):
        graph, _, _, _ = rectangle_scene
        for ln in graph.links:
            rr = ln.sample_radii(64)
            d = np.diff(rr)
            assert (d >= -1e-9).all() or (d <= 1e-9).all()

    def test_sample_points_endpoints(self, rectangle_scene):
        graph, _, _, _ = rectangle_scene
        for ln in graph.links:
            pts = ln.sample_points(9)
            assert np.allclose(pts[0], graph.nodes[ln.from_node].location,
                               atol=1e-6)
            assert np.allclose(pts[-1], graph.nodes[ln.to_node].location,
                               atol=1e-6)


class TestAreas:
    def test_rectangle_interior_area_partition(self):
        # interior links of the 4 x 2 rectangle sweep the full interior
        graph, elements, _, box_fid = build_scene([rectangle_fragment()],
                                                  100, 100)
        box_ids = {e.id for e in elements if e.fragment_id == box_fid}
        interior = 0.0
        for ln in graph.links:
            mid = ln.sample_points(3)[1]
            if -2 < mid[0] < 2 and -1 < mid[1] < 1:
                interior += link_area(ln)
        assert np.isclose(interior, 8.0, atol=1e-6)

    def test_areas_nonnegative(self, rectangle_scene):
        graph, _, _, _ = rectangle_scene
        for ln in graph.links:
            assert ln.area >= -1e-12
            assert np.isclose(ln.area, link_area(ln), atol=1e-9)


class TestContactSamples:
    def test_contacts_lie_on_generators(self):
        frags, img = random_scene(6, 9)
        graph, elements, _, _ = build_scene(
            frags, img.xmax - img.xmin, img.ymax - img.ymin)
        pts = contact_samples(graph, per_link=8)
        assert pts.ndim == 2 and pts.shape[1] == 2
        assert np.isfinite(pts).all()
