"""Load-balancing BFS coloring of the multi-radio conflict graph.

Produces the control channel of every mesh link and the channel each radio is
tuned to during the negotiation sub-interval.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from .conflict_graph import Mcg, Pair, RadioPairLink
from .phys import InterferenceLedger

Radio = Tuple[int, int]


class AssignmentError(RuntimeError):
    pass


class _Infeasible(Exception):
    def __init__(self, pair):
        self.pair = pair


@dataclass
class ChannelAssignment:
    channels: List[int]
    link_vertex: Dict[Pair, Optional[RadioPairLink]] = field(default_factory=dict)
    link_channel: Dict[Pair, int] = field(default_factory=dict)
    radio_channel: Dict[Radio, int] = field(default_factory=dict)
    shared: Set[Pair] = field(default_factory=set)
    # links whose channel was changed by a later retune, and the coloring order
    rehomed: Set[Pair] = field(default_factory=set)
    order: List[Pair] = field(default_factory=list)
    # set when every link's control traffic rides one common channel
    ccc: Optional[int] = None

    def control_channel(self, pair: Pair) -> int:
        return self.ccc if self.ccc is not None else self.link_channel[pair]

    def control_radio(self, node: int, pair: Pair) -> int:
        """Radio index node uses for control traffic on ``pair``."""
        if self.ccc is not None:
            return 1
        v = self.link_vertex[pair]
        return v.s if v.p == node else v.t

    def radio_channel_values(self, node: int) -> List[int]:
        return [c for (n, _), c in self.radio_channel.items() if n == node]

    def node_control_channels(self, node: int) -> Dict[int, int]:
        return {r: c for (n, r), c in sorted(self.radio_channel.items()) if n == node}


def assignment_load_profile(assignment: ChannelAssignment) -> Dict[int, int]:
    """Links bound to each channel.

    A link counts once on its assigned channel; when the assignment has a
    common control channel, every link is also counted on it.
    """
    prof = {c: 0 for c in assignment.channels}
    for c in assignment.link_channel.values():
        prof[c] += 1
    if assignment.ccc is not None:
        prof[assignment.ccc] += len(assignment.link_channel)
    return prof


class _Coloring:
    def __init__(self, mcg: Mcg, channels: Sequence[int], rng: np.random.Generator):
        self.mcg = mcg
        self.topo = mcg.topology
        self.channels = list(channels)
        self.rng = rng
        self.a = ChannelAssignment(self.channels)
        self.load = {c: 0 for c in self.channels}
        self.hop_load: Dict[Tuple[int, int], int] = {}
        self.ledger = InterferenceLedger(self.topo.rx_power, self.topo.phys)
        self.uncolored_by_node: Dict[int, Set[Pair]] = {n: set() for n in self.topo.nodes}
        for pair in mcg.groups:
            for n in pair:
                self.uncolored_by_node[n].add(pair)

    def feasible(self, v: RadioPairLink) -> List[int]:
        b = self.a.radio_channel
        out = []
        for c in self.channels:
            if b.get((v.p, v.s), c) == c and b.get((v.q, v.t), c) == c:
                out.append(c)
        return out

    def neighbor_channels(self, pair: Pair) -> Set[int]:
        lc = self.a.link_channel
        return {lc[o] for o in self.mcg.link_adj[pair] if o in lc}

    def _free_radios(self, node: int) -> int:
        b = self.a.radio_channel
        return sum((node, r) not in b for r in range(1, self.topo.nodes[node].radios + 1))

    def safe(self, v: RadioPairLink, c: int) -> bool:
        """Binding ``v`` to ``c`` leaves every other uncolored link colorable one step ahead."""
        b = self.a.radio_channel
        for node, radio in ((v.p, v.s), (v.q, v.t)):
            if (node, radio) in b or self._free_radios(node) != 1:
                continue
            bound = set(self.a.radio_channel_values(node)) | {c}
            for pair in self.uncolored_by_node[node]:
                if pair == v.pair:
                    continue
                peer = pair[0] if pair[1] == node else pair[1]
                if self._free_radios(peer) == 0 and not (bound & set(self.a.radio_channel_values(peer))):
                    return False
        return True

    def color_link(self, pair: Pair, h: int) -> None:
        group = self.mcg.groups[pair]
        taken = self.neighbor_channels(pair)
        b = self.a.radio_channel

        def rank(v):
            both_free = (v.p, v.s) not in b and (v.q, v.t) not in b
            avail = [c for c in self.feasible(v) if c not in taken]
            return (not both_free, -len(avail), v.s, v.t)

        rep = min(group, key=rank)
        avail = [c for c in self.feasible(rep) if c not in taken]
        if avail:
            safe = [c for c in avail if self.safe(rep, c)]
            pool = safe or avail
            c = pool[int(self.rng.integers(len(pool)))]
            self._bind(rep, c, h, shared=False)
            return
        rx = self.topo.rx_power(pair[0], pair[1])
        best = None
        for v in group:
            for c in self.feasible(v):
                key = (
                    not self.ledger.admits(pair, c, rx),
                    not self.safe(v, c),
                    self.hop_load.get((c, h), 0),
                    self.load[c],
                    c,
                    v.s,
                    v.t,
                )
                if best is None or key < best[0]:
                    best = (key, v, c)
        if best is None:
            if not self._repair(pair):
                raise _Infeasible(pair)
            self.color_link(pair, h)
            return
        self._bind(best[1], best[2], h, shared=True)

    def _repair(self, pair: Pair, depth: int = 3) -> bool:
        """Retune one radio of an exhausted endpoint onto a channel of the other.

        Colored links riding the retuned radio move onto another common
        channel, retuning a radio on their far end in turn when needed (up to
        ``depth`` levels). Everything is rolled back if no retune works.
        """
        a = self.a
        b = a.radio_channel
        saved = (dict(a.link_vertex), dict(a.link_channel), dict(b), set(a.shared), set(a.rehomed))
        for x, y in (pair, pair[::-1]):
            for target in sorted(set(a.radio_channel_values(y)), key=lambda ch: (self._count(ch), ch)):
                for r in range(1, self.topo.nodes[x].radios + 1):
                    if b.get((x, r)) in (None, target):
                        continue
                    if self._retune(x, r, target, depth, {y}) and self._settle():
                        self._recount()
                        return True
                    for cur, old in zip((a.link_vertex, a.link_channel, b, a.shared, a.rehomed), saved):
                        cur.clear()
                        cur.update(old)
        return False

    def _retune(self, x: int, r: int, target: int, depth: int, avoid: Set[int]) -> bool:
        a = self.a
        nodes = self.topo.nodes
        riding = sorted(p for p, v in a.link_vertex.items() if v is not None and (x, r) in v.radios)
        a.radio_channel[(x, r)] = target
        for p in riding:
            y = p[0] if p[1] == x else p[1]
            if self._home(p, x, y):
                continue
            free = [i for i in range(1, nodes[y].radios + 1) if (y, i) not in a.radio_channel]
            if free:
                a.radio_channel[(y, free[0])] = target
            elif depth > 0 and y not in avoid:
                if not any(
                    self._retune(y, ry, target, depth - 1, avoid | {x})
                    for ry in range(1, nodes[y].radios + 1)
                    if a.radio_channel.get((y, ry)) != target
                ):
                    return False
            else:
                return False
            if not self._home(p, x, y):
                return False
        return True

    def _settle(self) -> bool:
        a = self.a
        for p, v in list(a.link_vertex.items()):
            c = a.link_channel[p]
            if v is not None and all(a.radio_channel.get(r) == c for r in v.radios):
                continue
            if not self._home(p, p[0], p[1]):
                return False
        return True

    def _home(self, p: Pair, x: int, y: int) -> bool:
        a = self.a
        common = set(a.radio_channel_values(x)) & set(a.radio_channel_values(y))
        if not common:
            return False
        c = min(common, key=lambda ch: (self._count(ch), ch))
        rx = min(i for (n, i), ch in a.radio_channel.items() if n == x and ch == c)
        ry = min(i for (n, i), ch in a.radio_channel.items() if n == y and ch == c)
        v = RadioPairLink(x, rx, y, ry) if x < y else RadioPairLink(y, ry, x, rx)
        if a.link_vertex.get(p) != v or a.link_channel.get(p) != c:
            a.link_vertex[p] = v
            a.link_channel[p] = c
            a.shared.add(p)
            a.rehomed.add(p)
        return True

    def _count(self, c: int) -> int:
        return sum(1 for ch in self.a.link_channel.values() if ch == c)

    def _recount(self) -> None:
        a = self.a
        self.load = {c: 0 for c in self.channels}
        self.hop_load = {}
        self.ledger.clear()
        for p, c in a.link_channel.items():
            self.load[c] += 1
            k = (c, self.mcg.hop[p])
            self.hop_load[k] = self.hop_load.get(k, 0) + 1
            self.ledger.schedule(p, c, self.topo.rx_power(*p))

    def _bind(self, v: RadioPairLink, c: int, h: int, shared: bool) -> None:
        a = self.a
        a.link_vertex[v.pair] = v
        a.link_channel[v.pair] = c
        a.order.append(v.pair)
        a.radio_channel[(v.p, v.s)] = c
        a.radio_channel[(v.q, v.t)] = c
        if shared:
            a.shared.add(v.pair)
        self.load[c] += 1
        self.hop_load[(c, h)] = self.hop_load.get((c, h), 0) + 1
        self.ledger.schedule(v.pair, c, self.topo.rx_power(*v.pair))
        for n in v.pair:
            self.uncolored_by_node[n].discard(v.pair)

    def run(self) -> ChannelAssignment:
        mcg = self.mcg
        done = self.a.link_channel
        visited: Set[RadioPairLink] = set()
        for h in sorted(set(mcg.hop.values())):
            queue = deque(v for v in mcg.vertices if mcg.hop[v.pair] == h)
            while queue:
                v = queue.popleft()
                if v in visited or v.pair in done:
                    continue
                visited.add(v)
                work = [v.pair]
                for u in mcg.neighbors(v):
                    if mcg.hop[u.pair] == h and u.pair not in done and u not in visited and u.pair not in work:
                        work.append(u.pair)
                for pair in work:
                    if pair not in done:
                        self.color_link(pair, h)
        return self.a


def ccaa_color(mcg: Mcg, channels: Sequence[int], seed: int = 0, attempts: int = 32) -> ChannelAssignment:
    """Color ``mcg`` level by level from the gateway outwards.

    A fresh random stream is derived per attempt; an attempt that paints a
    link into a corner (both endpoints out of radios with no channel in
    common) is discarded and the next one tried.
    """
    if not channels:
        raise AssignmentError("no channels")
    last = None
    for attempt in range(attempts):
        rng = np.random.default_rng([seed, attempt])
        try:
            return _Coloring(mcg, channels, rng).run()
        except _Infeasible as e:
            last = e.pair
    raise AssignmentError(f"no radio-compatible channel for link {last} after {attempts} attempts")


def check_assignment(mcg: Mcg, a: ChannelAssignment) -> None:
    """Raise AssertionError if radio uniqueness or link coverage is broken."""
    for pair in mcg.groups:
        assert pair in a.link_channel, f"link {pair} uncolored"
        v = a.link_vertex.get(pair)
        if v is None:
            continue
        assert v.pair == pair
        for r in v.radios:
            assert a.radio_channel[r] == a.link_channel[pair], f"radio {r} disagrees with link {pair}"
