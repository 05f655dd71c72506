import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from tscmac.ccaa import AssignmentError, ChannelAssignment, assignment_load_profile, ccaa_color, check_assignment
from tscmac.conflict_graph import Node, TopologyError, build_links, build_mcg
from tscmac.metrics import jain_fairness
from tscmac.phys import PhysParams
from tscmac.sim.baselines import rama_color

P = PhysParams()


def star_hub():
    return build_mcg(build_links(
        [Node(2, 0, 0, 2, True), Node(1, -200, 0, 1), Node(3, 200, 0, 1), Node(4, 0, 200, 1)], P
    ))


@pytest.mark.parametrize("seed", range(10))
def test_star_hub_shares_one_channel(seed):
    m = star_hub()
    a = ccaa_color(m, [1, 2, 3], seed)
    check_assignment(m, a)
    assert len(set(a.link_channel.values())) == 2
    assert len(a.shared) == 1
    assert sorted(assignment_load_profile(a).values()) == [0, 1, 2]
    assert len(a.radio_channel_values(2)) == 2


def test_single_link():
    m = build_mcg(build_links([Node(0, 0, 0, 1, True), Node(1, 100, 0)], P))
    for k in (1, 3):
        a = ccaa_color(m, list(range(1, k + 1)))
        assert len(a.link_channel) == 1 and sum(assignment_load_profile(a).values()) == 1


def test_star_hub_with_enough_radios():
    k = 4
    nodes = [Node(0, 0, 0, k, True)] + [
        Node(i + 1, 200 * np.cos(2 * np.pi * i / k), 200 * np.sin(2 * np.pi * i / k), 1) for i in range(k)
    ]
    m = build_mcg(build_links(nodes, P))
    a = ccaa_color(m, list(range(1, k + 1)))
    assert sorted(a.link_channel.values()) == [1, 2, 3, 4]
    assert not a.shared
    assert jain_fairness(list(assignment_load_profile(a).values())) == 1.0


def test_chain3_two_channels_alternate():
    m = build_mcg(build_links([Node(0, 0, 0, 1, True), Node(1, 200, 0, 2), Node(2, 400, 0, 1)], P))
    a = ccaa_color(m, [1, 2])
    assert a.link_channel[(0, 1)] != a.link_channel[(1, 2)]
    assert jain_fairness(list(assignment_load_profile(a).values())) == 1.0


def test_one_channel_everything_shares_it():
    m = star_hub()
    a = ccaa_color(m, [1])
    assert set(a.link_channel.values()) == {1}
    assert assignment_load_profile(a) == {1: 3}


def test_load_profile_examples():
    assert assignment_load_profile(ChannelAssignment([1, 2, 3])) == {1: 0, 2: 0, 3: 0}
    a = ChannelAssignment([1, 2, 3], link_channel={(0, 1): 1, (0, 2): 2, (0, 3): 3})
    assert assignment_load_profile(a) == {1: 1, 2: 1, 3: 1}


def test_no_channels_rejected():
    with pytest.raises(AssignmentError):
        ccaa_color(star_hub(), [])


def test_deterministic():
    m = star_hub()
    assert ccaa_color(m, [1, 2, 3], 5) == ccaa_color(m, [1, 2, 3], 5)


def test_rama_ccc_on_radio_one():
    m = star_hub()
    a = rama_color(m, [1, 2, 3], 0)
    assert a.ccc == 1 and all(a.radio_channel[(n, 1)] == 1 for n in m.topology.nodes)
    # control traffic of every link is also counted on the common channel
    assert sum(assignment_load_profile(a).values()) == 2 * len(m.groups)


topo_st = st.tuples(
    st.lists(st.tuples(st.integers(0, 600), st.integers(0, 600), st.integers(1, 3)), min_size=2, max_size=7),
    st.integers(1, 4),
    st.integers(0, 2**16),
)


@given(topo_st)
def test_ccaa_invariants(args):
    raw, k, seed = args
    nodes = [Node(i, float(x), float(y), r, i == 0) for i, (x, y, r) in enumerate(raw)]
    try:
        m = build_mcg(build_links(nodes, P))
    except TopologyError:
        assume(False)
    chans = list(range(1, k + 1))
    try:
        a = ccaa_color(m, chans, seed)
    except AssignmentError:
        # only possible when the repair search runs out; never when every node has enough radios
        assert any(n.radios < k for n in nodes)
        return
    check_assignment(m, a)
    # radio uniqueness: one channel per radio
    assert all(c in chans for c in a.radio_channel.values())
    # coverage: every link exactly once
    assert set(a.link_channel) == set(m.groups)
    assert sum(assignment_load_profile(a).values()) == len(m.groups)
    # hop priority over the coloring order
    hops = [m.hop[p] for p in a.order]
    assert hops == sorted(hops)
    # conflict-freedom for links colored from a nonempty C_available
    pos = {p: i for i, p in enumerate(a.order)}
    for p in a.order:
        if p in a.shared or p in a.rehomed:
            continue
        for q in m.link_adj[p] | {x for x in m.groups if set(x) & set(p) and x != p}:
            if q in pos and pos[q] < pos[p] and q not in a.rehomed:
                assert a.link_channel[q] != a.link_channel[p]
    assert ccaa_color(m, chans, seed) == a
