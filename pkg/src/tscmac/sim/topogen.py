"""Reproducible topology generators."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

from ..conflict_graph import Node, Topology, build_links
from ..phys import PhysParams
from .rng import stream


class GenerationError(RuntimeError):
    pass


@dataclass
class TopologySpec:
    kind: str = "random"
    nodes: int = 12  # including the gateway
    area: float = 1060.0
    spacing: float = 200.0
    max_radios: int = 2
    radios: Optional[int] = None  # fixed count overrides max_radios
    gateway_radios: Optional[int] = None
    one_hop: int = 10
    two_hop: int = 20
    retries: int = 20000


def _radio_counts(spec: TopologySpec, n: int, seed: int) -> List[int]:
    if spec.radios is not None:
        out = [spec.radios] * n
        if spec.gateway_radios is not None:
            out[0] = spec.gateway_radios
        return out
    u = stream(seed, "radios").random(n)
    out = [1 + min(int(x * spec.max_radios), spec.max_radios - 1) for x in u]
    if spec.gateway_radios is not None:
        out[0] = spec.gateway_radios
    return out


def gen_topology(spec: TopologySpec, phys: PhysParams, seed: int = 0) -> Topology:
    """Node 0 is always the gateway.

    ``random`` drops nodes uniformly in an ``area`` x ``area`` square with the
    gateway at the centre and redraws whole layouts until connected.
    ``tiered`` places ``one_hop`` nodes inside the gateway's range and
    ``two_hop`` nodes outside it but inside some first-tier node's range.
    """
    kind = spec.kind
    if kind == "chain":
        xy = [(i * spec.spacing, 0.0) for i in range(spec.nodes)]
    elif kind == "star":
        k = spec.nodes - 1
        xy = [(0.0, 0.0)] + [
            (spec.spacing * math.cos(2 * math.pi * i / k), spec.spacing * math.sin(2 * math.pi * i / k))
            for i in range(k)
        ]
    elif kind == "grid":
        side = math.ceil(math.sqrt(spec.nodes))
        xy = [((i % side) * spec.spacing, (i // side) * spec.spacing) for i in range(spec.nodes)]
    elif kind == "random":
        xy = _random_layout(spec, phys, seed)
    elif kind == "tiered":
        xy = _tiered_layout(spec, phys, seed)
    else:
        raise ValueError(f"unknown topology kind {kind!r}")
    radios = _radio_counts(spec, len(xy), seed)
    nodes = [Node(i, x, y, radios[i], i == 0) for i, (x, y) in enumerate(xy)]
    return build_links(nodes, phys)


def _connected(xy, r) -> bool:
    n = len(xy)
    seen = {0}
    todo = [0]
    while todo:
        i = todo.pop()
        for j in range(n):
            if j not in seen and math.dist(xy[i], xy[j]) <= r:
                seen.add(j)
                todo.append(j)
    return len(seen) == n


def _random_layout(spec, phys, seed):
    rng = stream(seed, "topology")
    half = spec.area / 2
    for _ in range(spec.retries):
        pts = rng.uniform(-half, half, size=(spec.nodes - 1, 2))
        xy = [(0.0, 0.0)] + [(float(x), float(y)) for x, y in pts]
        if _connected(xy, phys.tx_range):
            return xy
    raise GenerationError(f"no connected layout of {spec.nodes} nodes in {spec.area} m after {spec.retries} draws")


def _tiered_layout(spec, phys, seed):
    rng = stream(seed, "topology")
    r = phys.tx_range
    xy = [(0.0, 0.0)]
    for _ in range(spec.one_hop):
        rad = r * math.sqrt(rng.uniform(0.01, 1.0))
        th = rng.uniform(0, 2 * math.pi)
        xy.append((rad * math.cos(th), rad * math.sin(th)))
    tier1 = xy[1:]
    for _ in range(spec.two_hop):
        for _ in range(spec.retries):
            rad = rng.uniform(r * 1.001, 2 * r)
            th = rng.uniform(0, 2 * math.pi)
            p = (rad * math.cos(th), rad * math.sin(th))
            if any(math.dist(p, q) <= r for q in tier1):
                xy.append(p)
                break
        else:
            raise GenerationError("could not place a two-hop node")
    return xy
