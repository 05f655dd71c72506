import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tscmac.mac import (
    ACK_INVALID,
    ACK_NULL,
    BeaconSchedule,
    BoundLink,
    ControlMessage,
    Crus,
    MacTiming,
    NodeMac,
    apply_overheard,
    crus_reorder,
    dt_phase,
    handle_ack,
    handle_req,
    initiate_negotiation,
    local_channel_status,
    usable_channels,
)
from tscmac.phys import InterferenceLedger, PhysParams, PropagationTable, two_ray_rx_power

T = MacTiming()
P = PhysParams()


def node(i, radios=2, prio=(1, 2, 3), near=None):
    n = NodeMac(i, radios, {1: 1}, Crus(i, list(prio), {}), near=near)
    n.sync_radio_map()
    return n


def rng(s=0):
    return np.random.default_rng(s)


# --- CRUS ----------------------------------------------------------------------
def test_crus_example_order():
    c = crus_reorder(Crus(0, [], {}), {3: None, 1: (5e-11, 1), 2: (8e-11, 1)}, rng())
    assert c.channel_priority == [3, 2, 1]


def test_crus_equal_cmaip_lower_load_first():
    c = crus_reorder(Crus(0, [], {}), {1: (5e-11, 3), 2: (5e-11, 1)}, rng())
    assert c.channel_priority == [2, 1]


def test_crus_all_idle_is_permutation():
    c = crus_reorder(Crus(0, [], {}), {c: None for c in range(1, 7)}, rng(3))
    assert sorted(c.channel_priority) == list(range(1, 7))


@given(
    st.dictionaries(
        st.integers(1, 12),
        st.one_of(st.none(), st.tuples(st.floats(-1e-9, 1e-9), st.integers(0, 5))),
        min_size=1,
    ),
    st.integers(0, 2**32 - 1),
)
def test_crus_ordering_invariant(status, seed):
    order = crus_reorder(Crus(0, [], {}), status, rng(seed)).channel_priority
    assert sorted(order) == sorted(status)
    kinds = [status[c] is None for c in order]
    assert kinds == sorted(kinds, reverse=True)  # idle block first
    busy = [status[c] for c in order if status[c] is not None]
    assert busy == sorted(busy, key=lambda s: (-s[0], s[1]))


def test_local_status_idle_and_busy():
    pos = np.array([[0, 0], [200, 0], [400, 0], [3000, 0]], float)
    led = InterferenceLedger(PropagationTable(range(4), pos, P), P)
    led.schedule((0, 1), 1, two_ray_rx_power(P, 200))
    s = local_channel_status(2, [1, 2, 3], led, {3: {9}})
    assert s[2] is None
    assert s[1][1] == 1 and s[1][0] == pytest.approx(led.cmaip_of((0, 1), 1))
    assert s[3] == (float("inf"), 0)  # only announced
    assert local_channel_status(3, [1], led)[1] is None  # far away


# --- REQ -----------------------------------------------------------------------
def test_req_timing():
    b = node(0)
    for s in range(20):
        r = rng(s)
        k = np.random.default_rng(s).integers(16)
        m = initiate_negotiation(b, 1, 1.0, [1, 2], 1, 16, r, T)
        assert m.kind == "REQ" and m.payload == (1, 2) and m.channel == 1
        assert m.timestamp == pytest.approx(1.0 + T.difs + k * T.slot)
        assert 1.0 + T.difs <= m.timestamp < 1.0 + T.difs + 16 * T.slot


def test_req_guards():
    b = node(0, radios=1)
    b.bind(5, 2)
    assert initiate_negotiation(b, 1, 0.0, [1], 1, 16, rng()) is None
    assert initiate_negotiation(node(0), 1, 0.0, [1], 1, 16, rng(), has_pending=False) is None
    assert initiate_negotiation(node(0), 1, 0.0, [], 1, 16, rng()) is None


# --- ACK -----------------------------------------------------------------------
def req(usable):
    return ControlMessage("REQ", 0, 1, tuple(usable), 0.0, 1)


def test_ack_invalid_when_radios_busy():
    c = node(1, radios=1)
    c.bind(7, 3)
    assert handle_req(c, req([1]), [1], 0.0).payload == ACK_INVALID


def test_ack_null_on_empty_intersection():
    assert handle_req(node(1), req([1]), [2], 0.0).payload == ACK_NULL


def test_ack_picks_dest_priority():
    c = node(1, prio=(3, 2, 1))
    ack = handle_req(c, req([1, 2]), [1, 2, 3], 0.0)
    assert ack.payload == 2 and ack.dst == 0 and ack.kind == "ACK"


def test_ack_payload_domain():
    with pytest.raises(ValueError):
        ControlMessage("ACK", 1, 0, "MAYBE", 0.0, 1)
    with pytest.raises(ValueError):
        ControlMessage("NAV", 1, 0, None, 0.0, 1)


# --- RES -----------------------------------------------------------------------
def ack(payload, src=1):
    return ControlMessage("ACK", src, 0, payload, 0.0, 1)


def test_res_on_null_abandons():
    b = node(0)
    assert handle_ack(b, ack(ACK_NULL), lambda c: True, 0.0) is None
    assert not b.bound


def test_res_binds_radio():
    b = node(0)
    res = handle_ack(b, ack(2), lambda c: True, 0.0)
    assert res.kind == "RES" and res.payload == 2
    assert b.bound_channels() == {2}
    assert any(busy and ch == 2 for ch, busy in b.crus.radio_map.values())


def test_res_abandoned_after_overheard_reservation():
    b = node(0)
    apply_overheard(b, ControlMessage("RES", 5, 1, 2, 0.0, 1))  # neighbour reserved ch2 into peer 1
    assert handle_ack(b, ack(2), lambda c: True, 0.0) is None
    assert not b.bound


def test_invalid_ack_suppresses_further_reqs():
    b = node(0)
    handle_ack(b, ack(ACK_INVALID), lambda c: True, 0.0)
    assert initiate_negotiation(b, 1, 0.0, [1], 1, 16, rng()) is None


# --- overhearing -----------------------------------------------------------------
def test_overheard_res_blocks_vicinity():
    near = lambda a, b: {a, b} in ({1, 2},)
    c = node(3, near=near)
    apply_overheard(c, ControlMessage("RES", 0, 1, 1, 0.0, 1))
    assert c.forbids(1, 1) and c.forbids(1, 2)  # into B and into B's neighbour
    assert not c.forbids(1, 4) and not c.forbids(2, 1)


def test_overheard_null_no_change_and_duplicate_idempotent():
    c = node(3)
    apply_overheard(c, ControlMessage("ACK", 1, 0, ACK_NULL, 0.0, 1))
    assert not c.blocked and not c.invalid_peers
    m = ControlMessage("RES", 0, 1, 2, 0.0, 1)
    apply_overheard(c, m)
    snap = {k: set(v) for k, v in c.blocked.items()}
    apply_overheard(c, m)
    assert c.blocked == snap


def test_usable_channels_respects_blocks_and_radios():
    pos = np.array([[0, 0], [200, 0]], float)
    led = InterferenceLedger(PropagationTable(range(2), pos, P), P)
    b, c = node(0), node(1)
    pr = two_ray_rx_power(P, 200)
    assert usable_channels(b, (0, 1), led, pr, c) == [1, 2, 3]
    apply_overheard(c, ControlMessage("RES", 5, 1, 3, 0.0, 1))
    assert usable_channels(b, (0, 1), led, pr, c) == [1, 2]
    b.bind(9, 1)
    assert usable_channels(b, (0, 1), led, pr, c) == [2]


# --- half-duplex radio binding -------------------------------------------------------
@given(st.lists(st.tuples(st.integers(0, 9), st.integers(1, 4)), max_size=12), st.integers(1, 4))
def test_radio_never_double_bound(binds, radios):
    n = node(0, radios=radios)
    for peer, ch in binds:
        if n.free_radios(ch) and ch not in n.bound_channels():
            n.bind(peer, ch)
    assert len(n.bound) <= radios
    assert set(n.bound) <= set(range(1, radios + 1))
    assert len(n.bound_channels()) == len(n.bound)
    assert set(n.crus.radio_map) == set(range(1, radios + 1))


# --- beacon schedule and DT -------------------------------------------------------------
def test_beacon_schedule():
    b = BeaconSchedule(0.1, 0.02)
    assert b.beacon(3) == pytest.approx(0.3) and b.pilot(3) == pytest.approx(0.32)
    for bad in (0.0, 0.1, 0.2):
        with pytest.raises(ValueError):
            BeaconSchedule(0.1, bad)


def _coupling(a, b):
    return two_ray_rx_power(P, 1.0) / max(abs(a - b), 1) ** 4


def test_dt_empty_queue():
    assert dt_phase([BoundLink(0, 1, 1, 1e-9, [])], 0.05, 0.1, _coupling, 10, 1e-12) == []


def test_dt_window_capacity():
    pkts = [(0.0, 210)] * 100
    txs = dt_phase([BoundLink(0, 1, 1, 1e-9, pkts)], 0.05, 0.1, _coupling, 10, 1e-12, T)
    assert len(txs) <= int(0.05 / (1680 / 1e6)) == 29
    assert len(txs) == int(0.05 // T.exchange_time(210))
    assert all(t.ok and 0.05 <= t.start < t.end <= 0.1 for t in txs)
    assert all(a.end == pytest.approx(b.start) for a, b in zip(txs, txs[1:]))


def test_dt_co_channel_sinr_violation():
    pr = two_ray_rx_power(P, 200)
    links = [BoundLink(0, 200, 1, pr, [(0.0, 210)] * 3), BoundLink(300, 250, 1, pr, [(0.0, 210)] * 3)]
    coupling = lambda a, b: two_ray_rx_power(P, abs(a - b))
    txs = dt_phase(links, 0.05, 0.1, coupling, 10, 1e-12)
    assert txs and not any(t.ok for t in txs)
    links[1].channel = 2  # orthogonal: no interference
    assert all(t.ok for t in dt_phase(links, 0.05, 0.1, coupling, 10, 1e-12))
