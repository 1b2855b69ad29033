import numpy as np
import pytest

from shockgraph import engine
from shockgraph.contours import check_no_crossings, decompose
from shockgraph.errors import NonterminationError
from shockgraph.regularize import augment_with_box
from shockgraph.scenes import rectangle_fragment, random_scene


def _rectangle_setup():
    frags, rect, _ = augment_with_box([rectangle_fragment()], 100, 100)
    elements = decompose(frags)
    check_no_crossings(elements)
    return elements, rect


class TestEnumeration:
    def test_candidate_count_and_stats(self):
        elements, rect = _rectangle_setup()
        raw = engine.run(elements, rect)
        assert raw.stats["candidates"] > 0
        assert raw.stats["realized"] >= 1
        assert raw.stats["discarded"] >= 0
        assert raw.stats["events"] > 0
        assert raw.stats["nodes"] == len(raw.nodes)
        assert raw.stats["links"] == len(raw.links)

    def test_rectangle_axis_sources(self):
        # the interior medial axis starts at the two deepest points (+-1, 0)
        elements, rect = _rectangle_setup()
        raw = engine.run(elements, rect)
        locs = np.array([n.location for n in raw.nodes])
        for want in ((1.0, 0.0), (-1.0, 0.0)):
            d = np.hypot(locs[:, 0] - want[0], locs[:, 1] - want[1])
            assert d.min() <= 1e-6


class TestLinks:
    def test_links_reference_existing_nodes(self):
        elements, rect = _rectangle_setup()
        raw = engine.run(elements, rect)
        for ln in raw.links:
            assert 0 <= ln.node_from < len(raw.nodes)
            assert 0 <= ln.node_to < len(raw.nodes)

    def test_link_endpoints_on_bisector(self):
        elements, rect = _rectangle_setup()
        raw = engine.run(elements, rect)
        for ln in raw.links:
            p0 = np.asarray(ln.bisector.point(ln.s_from))
            p1 = np.asarray(ln.bisector.point(ln.s_to))
            n0 = np.asarray(raw.nodes[ln.node_from].location)
            n1 = np.asarray(raw.nodes[ln.node_to].location)
            assert np.hypot(*(p0 - n0)) <= 1e-6
            assert np.hypot(*(p1 - n1)) <= 1e-6


class TestBudget:
    def test_tiny_budget_raises(self):
        elements, rect = _rectangle_setup()
        with pytest.raises(NonterminationError):
            engine.run(elements, rect, event_budget=3)

    def test_diagnostics_attached(self):
        elements, rect = _rectangle_setup()
        try:
            engine.run(elements, rect, event_budget=3)
        except NonterminationError as exc:
            assert exc.diagnostics


class TestDeterminism:
    def test_repeat_runs_identical(self):
        frags, img = random_scene(8, 3)
        frags, rect, _ = augment_with_box(frags, img[0], img[1]) \
            if isinstance(img, tuple) else augment_with_box(
                frags, img.xmax - img.xmin, img.ymax - img.ymin)
        elements = decompose(frags)
        check_no_crossings(elements)
        a = engine.run(elements, rect)
        b = engine.run(elements, rect)
        assert a.stats == b.stats
        for na, nb in zip(a.nodes, b.nodes):
            assert na.location == nb.location
