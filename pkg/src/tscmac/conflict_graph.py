"""Mesh topology, per-pair radio link sets and the multi-radio conflict graph."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, List, NamedTuple, Sequence, Set, Tuple

import networkx as nx
import numpy as np

from .phys import PhysParams, PropagationTable

Pair = Tuple[int, int]


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class Node:
    id: int
    x: float
    y: float
    radios: int = 1
    gateway: bool = False


class RadioPairLink(NamedTuple):
    """Radio ``s`` of node ``p`` linked to radio ``t`` of node ``q`` (p < q, radios 1-based)."""

    p: int
    s: int
    q: int
    t: int

    @property
    def pair(self) -> Pair:
        return (self.p, self.q)

    @property
    def radios(self):
        return ((self.p, self.s), (self.q, self.t))

    def __str__(self):
        return f"({self.p}.{self.s}:{self.q}.{self.t})"


def canonical(a: int, b: int) -> Pair:
    return (a, b) if a < b else (b, a)


@dataclass
class Topology:
    nodes: Dict[int, Node]
    phys: PhysParams
    links: List[Pair]
    hops: Dict[int, int]
    prop: PropagationTable = field(repr=False)

    @property
    def ids(self) -> List[int]:
        return list(self.nodes)

    @property
    def gateways(self) -> List[int]:
        return [n.id for n in self.nodes.values() if n.gateway]

    @cached_property
    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.nodes)
        g.add_edges_from(self.links)
        return g

    def neighbors(self, n: int) -> List[int]:
        return sorted(self.graph.neighbors(n))

    def linked(self, a: int, b: int) -> bool:
        return self.graph.has_edge(a, b)

    def rx_power(self, tx: int, rx: int) -> float:
        return self.prop(tx, rx)

    def dist(self, a: int, b: int) -> float:
        return self.prop.dist(a, b)

    def route(self, src: int, dst: int) -> List[int]:
        return nx.shortest_path(self.graph, src, dst)


def build_links(nodes: Sequence[Node], phys: PhysParams) -> Topology:
    if not nodes:
        raise TopologyError("empty node list")
    ids = [n.id for n in nodes]
    if len(set(ids)) != len(ids):
        raise TopologyError("duplicate node ids")
    for n in nodes:
        if n.radios < 1:
            raise TopologyError(f"node {n.id} has no radio")
    if not any(n.gateway for n in nodes):
        raise TopologyError("no gateway")
    ordered = sorted(nodes, key=lambda n: n.id)
    pos = np.array([[n.x, n.y] for n in ordered])
    prop = PropagationTable([n.id for n in ordered], pos, phys)
    d = prop.distance
    links = []
    for i in range(len(ordered)):
        for j in range(i + 1, len(ordered)):
            if d[i, j] <= phys.tx_range:
                links.append((ordered[i].id, ordered[j].id))
    g = nx.Graph()
    g.add_nodes_from(n.id for n in ordered)
    g.add_edges_from(links)
    gws = [n.id for n in ordered if n.gateway]
    hops = nx.multi_source_dijkstra_path_length(g, gws, weight=None)
    for n in ordered:
        if n.id not in hops:
            raise TopologyError(f"node {n.id} is disconnected from every gateway")
    return Topology({n.id: n for n in ordered}, phys, links, {n: int(hops[n]) for n in sorted(hops)}, prop)


def radio_link_set(topo: Topology, p: int, q: int) -> Set[RadioPairLink]:
    if p not in topo.nodes or q not in topo.nodes:
        raise KeyError(f"unknown node in pair ({p}, {q})")
    if p == q or not topo.linked(p, q):
        return set()
    a, b = canonical(p, q)
    return {
        RadioPairLink(a, s, b, t)
        for s in range(1, topo.nodes[a].radios + 1)
        for t in range(1, topo.nodes[b].radios + 1)
    }


def links_interfere(topo: Topology, l1: Pair, l2: Pair) -> bool:
    if set(l1) & set(l2):
        return True
    r = topo.phys.sense_range
    return any(topo.dist(a, b) <= r for a in l1 for b in l2)


@dataclass
class Mcg:
    """Vertices are radio-pair links; adjacency is derived from link-level interference."""

    topology: Topology
    groups: Dict[Pair, List[RadioPairLink]]
    link_adj: Dict[Pair, FrozenSet[Pair]]
    hop: Dict[Pair, int]

    @cached_property
    def vertices(self) -> List[RadioPairLink]:
        return [v for pair in sorted(self.groups) for v in self.groups[pair]]

    def neighbors(self, v: RadioPairLink) -> List[RadioPairLink]:
        out = [u for u in self.groups[v.pair] if u != v]
        for other in sorted(self.link_adj[v.pair]):
            out.extend(self.groups[other])
        return out

    def adjacent(self, u: RadioPairLink, v: RadioPairLink) -> bool:
        if u == v:
            return False
        return u.pair == v.pair or v.pair in self.link_adj[u.pair]

    @cached_property
    def edges(self) -> Set[FrozenSet[RadioPairLink]]:
        return {frozenset((u, w)) for u in self.vertices for w in self.neighbors(u)}

    def vertex_hop(self, v: RadioPairLink) -> int:
        return self.hop[v.pair]


def build_mcg(topo: Topology) -> Mcg:
    groups = {pair: sorted(radio_link_set(topo, *pair)) for pair in sorted(topo.links)}
    pairs = sorted(groups)
    adj: Dict[Pair, Set[Pair]] = {p: set() for p in pairs}
    for i, a in enumerate(pairs):
        for b in pairs[i + 1:]:
            if links_interfere(topo, a, b):
                adj[a].add(b)
                adj[b].add(a)
    hop = {p: min(topo.hops[p[0]], topo.hops[p[1]]) for p in pairs}
    return Mcg(topo, groups, {p: frozenset(s) for p, s in adj.items()}, hop)
