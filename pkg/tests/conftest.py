import pytest

from shockgraph import engine
from shockgraph.contours import check_no_crossings, decompose
from shockgraph.graph import build_graph
from shockgraph.regularize import augment_with_box, prune
from shockgraph.scenes import rectangle_fragment


def build_scene(fragments, width, height, lam=None):
    """Full pipeline on a list of fragments inside a width x height image.

    Returns (graph, elements, box rect, box fragment id); prunes at lam when
    one is given.
    """
    frags, rect, box_fid = augment_with_box(list(fragments), width, height)
    elements = decompose(frags)
    check_no_crossings(elements)
    graph = build_graph(engine.run(elements, rect), elements,
                        scene=(width, height))
    if lam is not None:
        graph = prune(graph, elements, lam=lam, box_fragment_id=box_fid)
    return graph, elements, rect, box_fid


@pytest.fixture(scope="session")
def rectangle_scene():
    return build_scene([rectangle_fragment()], 100, 100)
