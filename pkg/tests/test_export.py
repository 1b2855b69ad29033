import xml.etree.ElementTree as ET

import numpy as np
import pytest

from shockgraph.errors import InvalidInputError
from shockgraph.export import (format_sgtext, parse_sgtext, read_text,
                               to_document, to_graphml, to_sgtext, to_svg,
                               write_text)
from shockgraph.scenes import random_scene

from conftest import build_scene


@pytest.fixture(scope="module")
def scene():
    frags, img = random_scene(10, 7)
    return build_scene(frags, img.xmax - img.xmin, img.ymax - img.ymin,
                       lam=1.0)


class TestSgText:
    def test_round_trip_bit_exact(self, scene):
        graph, _, rect, _ = scene
        text = to_sgtext(graph, 100, 100, 1.0, 2.0)
        doc = parse_sgtext(text)
        assert format_sgtext(doc) == text

    def test_header_and_counts(self, scene):
        graph, _, _, _ = scene
        doc = parse_sgtext(to_sgtext(graph, 100, 100, 1.0, 2.0))
        assert (doc.width, doc.height) == (100, 100)
        assert doc.lam == 1.0 and doc.bbox_scale == 2.0
        assert len(doc.nodes) == len(graph.nodes)
        assert len(doc.links) == len(graph.links)

    def test_parse_rejects_garbage(self):
        with pytest.raises(InvalidInputError):
            parse_sgtext("not a shockgraph file\n")

    def test_deterministic(self, scene):
        graph, _, _, _ = scene
        a = to_sgtext(graph, 100, 100, 1.0, 2.0)
        b = to_sgtext(graph, 100, 100, 1.0, 2.0)
        assert a == b

    def test_file_round_trip(self, scene, tmp_path):
        graph, _, _, _ = scene
        text = to_sgtext(graph, 100, 100, 1.0, 2.0)
        p = tmp_path / "scene.sg"
        write_text(p, text)
        assert read_text(p) == text

    def test_write_failure_raises(self):
        with pytest.raises(InvalidInputError):
            write_text("/nonexistent-dir/out.sg", "x")


class TestGraphML:
    def test_parses_as_xml(self, scene):
        graph, _, _, _ = scene
        root = ET.fromstring(to_graphml(graph, 100, 100, 1.0, 2.0))
        ns = "{http://graphml.graphdrawing.org/xmlns}"
        g = root.find(f"{ns}graph")
        assert g is not None
        assert len(g.findall(f"{ns}node")) == len(graph.nodes)
        assert len(g.findall(f"{ns}edge")) == len(graph.links)


class TestSvg:
    def test_colors_present(self, scene):
        graph, elements, rect, box_fid = scene
        svg = to_svg(graph, elements, rect, box_fragment_id=box_fid)
        assert "#FF0000" in svg    # contours
        assert "#00FF00" in svg    # shock links
        assert "#FF00FF" in svg    # bounding box
        ET.fromstring(svg)

    def test_pruned_links_gray(self, scene):
        graph, elements, rect, box_fid = scene
        svg = to_svg(graph, elements, rect, box_fragment_id=box_fid,
                     pruned_links=graph.links[:1])
        assert "#808080" in svg
