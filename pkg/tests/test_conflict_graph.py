import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from tscmac.conflict_graph import (
    Node,
    RadioPairLink,
    TopologyError,
    build_links,
    build_mcg,
    radio_link_set,
)
from tscmac.phys import PhysParams

P = PhysParams()


def star():
    # B central, A/C/D leaves; radios A:1, B:2, C:1, D:1 (ids A=1, B=2, C=3, D=4)
    return build_links(
        [Node(2, 0, 0, 2, True), Node(1, -200, 0, 1), Node(3, 200, 0, 1), Node(4, 0, 200, 1)], P
    )


def test_link_threshold():
    assert build_links([Node(0, 0, 0, 1, True), Node(1, 200, 0)], P).links == [(0, 1)]
    with pytest.raises(TopologyError, match="node 1"):
        build_links([Node(0, 0, 0, 1, True), Node(1, 300, 0)], P)


def test_link_exactly_at_range():
    assert build_links([Node(0, 0, 0, 1, True), Node(1, 250, 0)], P).links == [(0, 1)]


def test_chain_hops():
    t = build_links([Node(0, 0, 0, 1, True), Node(1, 200, 0), Node(2, 400, 0)], P)
    assert t.hops == {0: 0, 1: 1, 2: 2}


def test_topology_validation():
    with pytest.raises(TopologyError):
        build_links([], P)
    with pytest.raises(TopologyError):
        build_links([Node(0, 0, 0)], P)  # no gateway
    with pytest.raises(TopologyError):
        build_links([Node(0, 0, 0, 1, True), Node(0, 10, 0)], P)
    with pytest.raises(TopologyError):
        build_links([Node(0, 0, 0, 0, True)], P)


def test_radio_link_set_examples():
    t = star()
    assert radio_link_set(t, 2, 1) == {RadioPairLink(1, 1, 2, 1), RadioPairLink(1, 1, 2, 2)}
    assert radio_link_set(t, 1, 3) == set()  # 400 m apart
    assert radio_link_set(t, 2, 2) == set()
    with pytest.raises(KeyError):
        radio_link_set(t, 2, 99)


def test_star_mcg():
    m = build_mcg(star())
    assert len(m.vertices) == 6
    vs = m.vertices
    assert all(m.adjacent(u, v) for u in vs for v in vs if u != v)
    assert len(m.edges) == 15


def test_far_links_not_adjacent():
    nodes = [Node(0, 0, 0, 1, True), Node(1, 200, 0), Node(2, 2000, 0, 1, True), Node(3, 2200, 0)]
    m = build_mcg(build_links(nodes, P))
    a, b = m.groups[(0, 1)][0], m.groups[(2, 3)][0]
    assert not m.adjacent(a, b)
    assert m.edges == set()


def test_single_link():
    m = build_mcg(build_links([Node(0, 0, 0, 1, True), Node(1, 100, 0)], P))
    assert len(m.vertices) == 1 and m.edges == set()


def test_vertex_hop_is_min_endpoint():
    t = build_links([Node(0, 0, 0, 1, True), Node(1, 200, 0), Node(2, 400, 0)], P)
    m = build_mcg(t)
    assert m.vertex_hop(m.groups[(1, 2)][0]) == 1
    assert m.vertex_hop(m.groups[(0, 1)][0]) == 0


nodes_st = st.lists(
    st.tuples(st.integers(0, 700), st.integers(0, 700), st.integers(1, 3)), min_size=2, max_size=7
)


def _topo(raw):
    nodes = [Node(i, float(x), float(y), r, i == 0) for i, (x, y, r) in enumerate(raw)]
    try:
        return build_links(nodes, P)
    except TopologyError:
        return None


@given(nodes_st)
def test_mcg_structure(raw):
    t = _topo(raw)
    assume(t is not None)
    m = build_mcg(t)
    for (p, q), group in m.groups.items():
        assert len(group) == t.nodes[p].radios * t.nodes[q].radios
        assert all(v.pair == (p, q) and v.p < v.q for v in group)
        assert all(1 <= v.s <= t.nodes[v.p].radios and 1 <= v.t <= t.nodes[v.q].radios for v in group)
    for e in m.edges:
        assert len(e) == 2  # no self-edges
        u, v = tuple(e)
        assert m.adjacent(u, v) and m.adjacent(v, u)
    vs = m.vertices
    for u in vs:
        for v in vs:
            if u != v and {u.p, u.q} & {v.p, v.q}:
                assert m.adjacent(u, v)
    again = build_mcg(t)
    assert again.edges == m.edges and again.vertices == vs
    assert t.hops[0] == 0 and all(h < len(raw) for h in t.hops.values())
