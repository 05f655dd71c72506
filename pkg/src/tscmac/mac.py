"""Second coordination stage: CRUS, the REQ/ACK/RES handshake and data transmission.

Functions here act on one node's view; the event loop in ``tscmac.sim``
owns timing, collisions and message delivery.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from .phys import InterferenceLedger, sinr_ok

ACK_NULL = "NULL"
ACK_INVALID = "INVALID"
MSG_KINDS = ("REQ", "ACK", "RES", "BEACON", "PILOT")


@dataclass(frozen=True)
class MacTiming:
    difs: float = 50e-6
    sifs: float = 10e-6
    slot: float = 20e-6
    cw_min: int = 16
    cw_max: int = 1024
    ctrl_airtime: float = 272e-6
    rate_bps: float = 1e6
    mac_overhead_bytes: int = 28
    ack_bytes: int = 14
    switch_time: float = 224e-6
    retry_limit: int = 7

    def __post_init__(self):
        if not (0 < self.cw_min <= self.cw_max):
            raise ValueError("need 0 < cw_min <= cw_max")
        if min(self.difs, self.sifs, self.slot, self.ctrl_airtime, self.rate_bps) <= 0:
            raise ValueError("timing constants must be > 0")

    def data_airtime(self, payload_bytes: int) -> float:
        return (payload_bytes + self.mac_overhead_bytes) * 8 / self.rate_bps

    def ack_airtime(self) -> float:
        return self.ack_bytes * 8 / self.rate_bps

    def exchange_time(self, payload_bytes: int) -> float:
        """DATA + SIFS + ACK."""
        return self.data_airtime(payload_bytes) + self.sifs + self.ack_airtime()

    def next_cw(self, cw: int) -> int:
        return min(2 * cw, self.cw_max)


@dataclass
class Crus:
    node_id: int
    channel_priority: List[int]
    radio_map: Dict[int, Tuple[int, bool]]  # radio -> (channel, busy)


@dataclass(frozen=True)
class ControlMessage:
    kind: str
    src: int
    dst: Optional[int]
    payload: object
    timestamp: float
    channel: int

    def __post_init__(self):
        if self.kind not in MSG_KINDS:
            raise ValueError(f"unknown message kind {self.kind!r}")
        if self.kind == "ACK" and not (isinstance(self.payload, (int, np.integer)) or self.payload in (ACK_NULL, ACK_INVALID)):
            raise ValueError(f"ACK payload must be a channel, NULL or INVALID, got {self.payload!r}")


@dataclass
class BeaconSchedule:
    beacon_interval: float = 0.1
    cna_length: float = 0.02

    def __post_init__(self):
        if not 0 < self.cna_length < self.beacon_interval:
            raise ValueError("need 0 < cna_length < beacon_interval")

    def beacon(self, k: int) -> float:
        return k * self.beacon_interval

    def pilot(self, k: int) -> float:
        return self.beacon(k) + self.cna_length


@dataclass
class NodeMac:
    """Per-node negotiation state, reset at every beacon."""

    id: int
    radios: int
    control: Dict[int, int]  # radio -> control channel from the first stage
    crus: Crus
    # radio -> fixed data channel (None = any); used by the static baseline
    allowed: Dict[int, Optional[int]] = field(default_factory=dict)
    bound: Dict[int, Tuple[int, int]] = field(default_factory=dict)  # radio -> (peer, channel)
    # channel -> endpoints of overheard reservations on it
    blocked: Dict[int, Set[int]] = field(default_factory=dict)
    invalid_peers: Set[int] = field(default_factory=set)
    near: Optional[Callable[[int, int], bool]] = None  # one-hop neighbour test

    def reset(self) -> None:
        self.bound.clear()
        self.blocked.clear()
        self.invalid_peers.clear()
        self.sync_radio_map()

    def free_radios(self, channel: Optional[int] = None) -> List[int]:
        out = []
        for r in range(1, self.radios + 1):
            if r in self.bound:
                continue
            fixed = self.allowed.get(r)
            if channel is not None and fixed is not None and fixed != channel:
                continue
            out.append(r)
        return out

    def forbids(self, channel: int, rx: int) -> bool:
        """True if an overheard reservation on ``channel`` makes a link into ``rx`` a hidden-node risk."""
        for a in self.blocked.get(channel, ()):
            if a == rx or (self.near is not None and self.near(a, rx)):
                return True
        return False

    def bound_channels(self) -> Set[int]:
        return {c for _, c in self.bound.values()}

    def bind(self, peer: int, channel: int) -> int:
        free = self.free_radios(channel)
        if not free:
            raise RuntimeError(f"node {self.id} has no free radio for channel {channel}")
        # prefer a radio already parked on the channel
        r = min(free, key=lambda x: (self.control.get(x) != channel, x))
        self.bound[r] = (peer, channel)
        self.sync_radio_map()
        return r

    def sync_radio_map(self) -> None:
        m = {}
        for r in range(1, self.radios + 1):
            if r in self.bound:
                m[r] = (self.bound[r][1], True)
            else:
                m[r] = (self.control.get(r, self.allowed.get(r) or 0), False)
        self.crus.radio_map = m


def local_channel_status(
    node: int, channels: Sequence[int], ledger: InterferenceLedger, blocked: Mapping[int, Set[int]] | Set[int] = frozenset()
) -> Dict[int, Optional[Tuple[float, int]]]:
    """Per channel: None when idle around ``node``, else (min CMAIP of nearby links, nearby link count).

    A channel is busy when a link on it is audible at the node or a neighbour
    announced it.
    """
    out: Dict[int, Optional[Tuple[float, int]]] = {}
    for c in channels:
        near = [
            l for l in sorted(ledger.links_on(c))
            if node in l or ledger.coupling(l[0], node) > 0 or ledger.coupling(l[1], node) > 0
        ]
        if not near and c not in blocked:
            out[c] = None
        elif not near:
            out[c] = (float("inf"), 0)
        else:
            out[c] = (min(ledger.cmaip_of(l, c) for l in near), len(near))
    return out


def crus_reorder(
    crus: Crus, status: Mapping[int, Optional[Tuple[float, int]]], rng: np.random.Generator
) -> Crus:
    """Idle channels first in random order, then busy ones by CMAIP descending, load ascending."""
    idle = sorted(c for c, s in status.items() if s is None)
    busy = [c for c, s in status.items() if s is not None]
    order = [idle[i] for i in rng.permutation(len(idle))]
    order += sorted(busy, key=lambda c: (-status[c][0], status[c][1], c))
    crus.channel_priority = [int(c) for c in order]
    return crus


def usable_channels(
    state: NodeMac,
    link: Tuple[int, int],
    ledger: InterferenceLedger,
    rx_power: float,
    peer: Optional[NodeMac] = None,
) -> List[int]:
    """Channels in the node's CRUS order that could carry ``link`` now."""
    out = []
    taken = state.bound_channels() | (peer.bound_channels() if peer else set())
    for c in state.crus.channel_priority:
        if c in taken or state.forbids(c, link[1]):
            continue
        if not state.free_radios(c):
            continue
        if peer is not None and (peer.forbids(c, link[1]) or not peer.free_radios(c)):
            continue
        if not ledger.admits(link, c, rx_power):
            continue
        out.append(c)
    return out


def backoff_slots(cw: int, rng: np.random.Generator) -> int:
    return int(rng.integers(cw))


def initiate_negotiation(
    source: NodeMac,
    dest_id: int,
    now: float,
    usable: Sequence[int],
    control_channel: int,
    cw: int,
    rng: np.random.Generator,
    timing: MacTiming = MacTiming(),
    has_pending: bool = True,
) -> Optional[ControlMessage]:
    """REQ carrying the usable channel list, sent after DIFS plus backoff; None if nothing to ask for."""
    if not has_pending or not source.free_radios() or not usable or dest_id in source.invalid_peers:
        return None
    t = now + timing.difs + backoff_slots(cw, rng) * timing.slot
    return ControlMessage("REQ", source.id, dest_id, tuple(int(c) for c in usable), t, control_channel)


def handle_req(dest: NodeMac, req: ControlMessage, usable_at_dest: Sequence[int], now: float) -> ControlMessage:
    """Pick the destination's highest-priority channel that the source also offered."""
    if not dest.free_radios():
        payload = ACK_INVALID
    else:
        offered = set(req.payload)
        ok = set(usable_at_dest)
        pick = [c for c in dest.crus.channel_priority if c in offered and c in ok]
        payload = pick[0] if pick else ACK_NULL
    return ControlMessage("ACK", dest.id, req.src, payload, now, req.channel)


def handle_ack(
    source: NodeMac, ack: ControlMessage, still_usable: Callable[[int], bool], now: float
) -> Optional[ControlMessage]:
    """RES for a still-usable granted channel; None means abandon (caller decides on retry)."""
    if ack.payload in (ACK_NULL, ACK_INVALID):
        if ack.payload == ACK_INVALID:
            source.invalid_peers.add(ack.src)
        return None
    ch = int(ack.payload)
    if source.forbids(ch, ack.src) or ch in source.bound_channels() or not still_usable(ch):
        return None
    source.bind(ack.src, ch)
    return ControlMessage("RES", source.id, ack.src, ch, now, ack.channel)


def apply_overheard(state: NodeMac, msg: ControlMessage) -> NodeMac:
    if msg.kind == "RES" or (msg.kind == "ACK" and msg.payload not in (ACK_NULL, ACK_INVALID)):
        ends = {msg.src} if msg.dst is None else {msg.src, msg.dst}
        state.blocked.setdefault(int(msg.payload), set()).update(ends)
    elif msg.kind == "ACK" and msg.payload == ACK_INVALID:
        state.invalid_peers.add(msg.src)
    return state


@dataclass
class BoundLink:
    tx: int
    rx: int
    channel: int
    rx_power: float
    packets: List[Tuple[float, int]]  # (ready time, payload bytes), FIFO
    start: float = 0.0  # earliest start after any retune
    end: float = float("inf")  # latest finish, e.g. to leave time to retune back


@dataclass(frozen=True)
class DataTx:
    tx: int
    rx: int
    channel: int
    index: int  # position in the link's packet list
    start: float
    end: float
    ok: bool


def dt_phase(
    links: Sequence[BoundLink],
    pilot_time: float,
    next_beacon: float,
    coupling: Callable[[int, int], float],
    gamma: float,
    noise: float,
    timing: MacTiming = MacTiming(),
) -> List[DataTx]:
    """Back-to-back DATA/ACK exchanges per bound link until the next beacon.

    Each exchange must finish before ``next_beacon``. A packet fails if the
    co-channel transmissions overlapping it push its SINR to or below gamma.
    """
    sched: List[List[Tuple[float, float, int]]] = []
    for bl in links:
        t = max(pilot_time, bl.start)
        stop = min(next_beacon, bl.end)
        out = []
        for i, (ready, size) in enumerate(bl.packets):
            s = max(t, ready)
            e = s + timing.exchange_time(size)
            if e > stop:
                break
            out.append((s, e, i))
            t = e
        sched.append(out)
    starts = [[s for s, _, _ in sc] for sc in sched]
    txs: List[DataTx] = []
    for k, bl in enumerate(links):
        others = [j for j, o in enumerate(links) if j != k and o.channel == bl.channel and sched[j]]
        for s, e, i in sched[k]:
            interf = []
            for j in others:
                # any packet of link j overlapping [s, e)
                sc = sched[j]
                pos = bisect.bisect_left(starts[j], e)
                if pos > 0 and sc[pos - 1][1] > s:
                    interf.append(coupling(links[j].tx, bl.rx))
            ok = sinr_ok(bl.rx_power, gamma, noise, float(np.sum(sorted(interf))) if interf else 0.0)
            txs.append(DataTx(bl.tx, bl.rx, bl.channel, i, s, e, bool(ok)))
    return txs
