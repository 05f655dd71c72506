"""Comparison schemes: common-control-channel coloring."""

from __future__ import annotations

from collections import deque
from typing import Sequence, Set

import numpy as np

from ..ccaa import AssignmentError, ChannelAssignment
from ..conflict_graph import Mcg, RadioPairLink


def rama_color(mcg: Mcg, channels: Sequence[int], seed: int = 0) -> ChannelAssignment:
    """Coloring with one common control channel and the radio-removal rule.

    Radio 1 of every node is pinned to the first channel, which carries all
    control traffic and also serves as a data channel. Once a vertex is
    colored, every uncolored vertex sharing one of its radios is dropped;
    links left without any vertex get a uniformly random channel.
    """
    channels = list(channels)
    if len(channels) < 2:
        raise AssignmentError("the common-control-channel scheme needs at least two channels")
    rng = np.random.default_rng(seed)
    ccc = channels[0]
    topo = mcg.topology
    a = ChannelAssignment(channels, ccc=ccc)
    for n in topo.nodes:
        a.radio_channel[(n, 1)] = ccc
    removed: Set[RadioPairLink] = set()
    by_radio = {}
    for v in mcg.vertices:
        for r in v.radios:
            by_radio.setdefault(r, []).append(v)
    done = a.link_channel
    for h in sorted(set(mcg.hop.values())):
        queue = deque(v for v in mcg.vertices if mcg.hop[v.pair] == h)
        while queue:
            v = queue.popleft()
            if v in removed or v.pair in done:
                continue
            b = a.radio_channel
            feas = [c for c in channels if b.get((v.p, v.s), c) == c and b.get((v.q, v.t), c) == c]
            if not feas:
                removed.add(v)
                continue
            used = {}
            for other in mcg.link_adj[v.pair]:
                if other in done:
                    used[done[other]] = used.get(done[other], 0) + 1
            least = min(used.get(c, 0) for c in feas)
            pool = [c for c in feas if used.get(c, 0) == least]
            c = pool[int(rng.integers(len(pool)))]
            done[v.pair] = c
            a.link_vertex[v.pair] = v
            b[(v.p, v.s)] = c
            b[(v.q, v.t)] = c
            for r in v.radios:
                removed.update(u for u in by_radio[r] if u.pair not in done)
    for pair in sorted(mcg.groups):
        if pair not in done:
            done[pair] = channels[int(rng.integers(len(channels)))]
            a.link_vertex[pair] = None
    return a
