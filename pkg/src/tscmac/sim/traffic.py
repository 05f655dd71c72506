"""Flows, packets and per-link FIFO queues."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, List, Optional, Tuple

import numpy as np

from ..conflict_graph import Topology
from .rng import stream

WIRED = -1  # the wired sink hanging off the gateway


@dataclass
class CbrFlow:
    id: int
    src: int
    dst: int
    rate_bps: float
    packet_size: int
    start: float = 0.0
    stop: float = math.inf
    route: List[int] = field(default_factory=list)
    kind: str = "cbr"  # or "saturated"

    def __post_init__(self):
        if not self.rate_bps > 0:
            raise ValueError(f"flow {self.id}: rate must be > 0")
        if self.packet_size <= 0:
            raise ValueError(f"flow {self.id}: packet size must be > 0")
        if self.src == self.dst:
            raise ValueError(f"flow {self.id}: src == dst")


class Packet:
    __slots__ = ("flow", "seq", "gen", "size", "hop", "ready", "tries")

    def __init__(self, flow: int, seq: int, gen: float, size: int):
        self.flow = flow
        self.seq = seq
        self.gen = gen
        self.size = size
        self.hop = 0
        self.ready = gen
        self.tries = 0


def route_flow(topo: Topology, flow: CbrFlow) -> List[int]:
    """Static shortest-hop path; wired destinations go through the nearest gateway."""
    if flow.src not in topo.nodes:
        raise KeyError(f"flow {flow.id}: unknown source {flow.src}")
    if flow.dst == WIRED:
        gws = sorted(topo.gateways, key=lambda g: (topo.dist(flow.src, g), g))
        best = min((topo.route(flow.src, g) for g in gws), key=len)
        return best + [WIRED]
    if flow.dst not in topo.nodes:
        raise KeyError(f"flow {flow.id}: unknown destination {flow.dst}")
    return topo.route(flow.src, flow.dst)


def gen_flows(
    topo: Topology,
    n: int,
    rate_bps: float,
    packet_size: int,
    seed: int,
    wired: int = 0,
    one_hop: bool = False,
    kind: str = "cbr",
    per_node: bool = False,
) -> List[CbrFlow]:
    """``wired`` flows go from random non-gateway nodes to the wired sink; the rest are random pairs.

    With ``one_hop`` every flow is a distinct directed neighbour pair. With
    ``per_node`` every node sources one flow to a random neighbour and ``n``
    is ignored.
    """
    rng = stream(seed, "flows")
    ids = sorted(topo.nodes)
    non_gw = [i for i in ids if not topo.nodes[i].gateway] or ids
    flows = []
    if per_node:
        for i, s in enumerate(ids):
            nb = sorted(topo.neighbors(s))
            if not nb:
                raise ValueError(f"node {s} has no neighbour")
            flows.append(CbrFlow(i, s, int(nb[rng.integers(len(nb))]), rate_bps, packet_size, kind=kind))
    elif one_hop:
        pairs = sorted((a, b) for a, b in topo.links) + sorted((b, a) for a, b in topo.links)
        if n > len(pairs):
            raise ValueError(f"only {len(pairs)} directed links for {n} one-hop flows")
        pick = rng.choice(len(pairs), size=n, replace=False)
        for i, k in enumerate(sorted(int(x) for x in pick)):
            s, d = pairs[k]
            flows.append(CbrFlow(i, s, d, rate_bps, packet_size, kind=kind))
    else:
        for i in range(n):
            if i < wired:
                s, d = int(non_gw[rng.integers(len(non_gw))]), WIRED
            else:
                s, d = (int(x) for x in rng.choice(ids, size=2, replace=False))
            flows.append(CbrFlow(i, s, d, rate_bps, packet_size, kind=kind))
    for f in flows:
        f.route = route_flow(topo, f)
    return flows


class TrafficState:
    """Lazy packet generation plus one FIFO per directed link (tx, rx)."""

    def __init__(self, flows: List[CbrFlow], seed: int, transfer_mean_bits: float = 100e6):
        self.flows = {f.id: f for f in flows}
        self.queues: Dict[Tuple[int, int], Deque[Packet]] = {}
        self.generated: Dict[int, int] = {f.id: 0 for f in flows}
        self.delivered: Dict[int, List[Tuple[int, float, float, int]]] = {f.id: [] for f in flows}
        self.dropped: Dict[int, int] = {f.id: 0 for f in flows}
        rng = stream(seed, "traffic")
        self._next: Dict[int, float] = {}
        self._left: Dict[int, float] = {}
        self._rng = rng
        self.transfer_mean_bits = transfer_mean_bits
        for f in flows:
            iv = f.packet_size * 8 / f.rate_bps
            # random phase so CBR sources do not start in lockstep
            self._next[f.id] = f.start + float(rng.uniform(0, iv))
            self._left[f.id] = 0.0
        self.gen_log: List[Tuple[float, int, int, int]] = []  # (t, flow, seq, bytes)

    def queue(self, link: Tuple[int, int]) -> Deque[Packet]:
        q = self.queues.get(link)
        if q is None:
            q = self.queues[link] = deque()
        return q

    def _emit(self, f: CbrFlow, t: float) -> None:
        seq = self.generated[f.id]
        self.generated[f.id] += 1
        p = Packet(f.id, seq, t, f.packet_size)
        self.queue((f.route[0], f.route[1])).append(p)
        self.gen_log.append((t, f.id, seq, f.packet_size))

    def generate_until(self, t: float) -> None:
        """CBR arrivals with generation time < t, enqueued in time order."""
        new = []
        for fid in sorted(self.flows):
            f = self.flows[fid]
            if f.kind != "cbr":
                continue
            iv = f.packet_size * 8 / f.rate_bps
            nxt = self._next[fid]
            while nxt < t and nxt < f.stop:
                new.append((nxt, fid))
                nxt += iv
            self._next[fid] = nxt
        for tt, fid in sorted(new):
            self._emit(self.flows[fid], tt)

    def next_arrival(self) -> float:
        """Generation time of the next CBR packet (inf if none)."""
        out = math.inf
        for fid, f in self.flows.items():
            if f.kind == "cbr" and self._next[fid] < f.stop:
                out = min(out, self._next[fid])
        return out

    def top_up(self, t: float, backlog: int) -> None:
        """Saturated sources: keep at least ``backlog`` packets waiting at the source.

        Bits come from back-to-back transfers with exponential sizes.
        """
        for fid in sorted(self.flows):
            f = self.flows[fid]
            if f.kind != "saturated" or t < f.start or t >= f.stop:
                continue
            q = self.queue((f.route[0], f.route[1]))
            waiting = sum(1 for p in q if p.flow == fid)
            while waiting < backlog:
                if self._left[fid] <= 0:
                    self._left[fid] = float(self._rng.exponential(self.transfer_mean_bits))
                self._left[fid] -= f.packet_size * 8
                self._emit(f, t)
                waiting += 1

    def in_flight(self) -> int:
        return sum(len(q) for q in self.queues.values())

    def in_flight_by_flow(self) -> Dict[int, int]:
        out = {f: 0 for f in self.flows}
        for q in self.queues.values():
            for p in q:
                out[p.flow] += 1
        return out

    def pending_links(self, t: float) -> List[Tuple[int, int]]:
        """Links with a ready head packet, oldest head first (FCFS across a node's links)."""
        ready = [(q[0].ready, l) for l, q in self.queues.items() if q and q[0].ready <= t and l[1] != WIRED]
        return [l for _, l in sorted(ready)]
