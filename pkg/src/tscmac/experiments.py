"""Experiment grids behind the acceptance checks and the scripts/ runners.

Every function is deterministic in its seeds and returns plain numbers so
tests, scripts and the CLI can share them.
"""

from __future__ import annotations

from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .ccaa import assignment_load_profile, ccaa_color
from .conflict_graph import build_mcg
from .metrics import MetricsRecord, jain_fairness
from .phys import PhysParams
from .sim.baselines import rama_color
from .sim.run import contention_time_probe, run, simulate
from .sim.scenario import ScenarioConfig
from .sim.topogen import TopologySpec, gen_topology

SIZES = (210, 512, 1100, 1500)
NCTFS = (10, 25, 40, 55, 70, 85, 100)
# label -> (protocol, channels)
PROTOCOLS = {"tsc4": ("tsc_m2mac", 4), "tsc2": ("tsc_m2mac", 2), "rama2": ("rama_like", 2), "csma": ("csma_single", 1)}
MESH_FLOW_RATE = 400_000.0  # per flow; six of them saturate every protocol
CHANNEL_RATE = 1e6


def fairness_pair(seed: int, channels: int = 3, one_hop: int = 10, two_hop: int = 20) -> Tuple[float, float]:
    """Jain fairness of per-channel link load: (CCAA, Rama) on one tiered topology.

    Radio counts are uniform in [1, channels] for every node, gateway included.
    """
    spec = TopologySpec(kind="tiered", one_hop=one_hop, two_hop=two_hop, max_radios=channels)
    mcg = build_mcg(gen_topology(spec, PhysParams(), seed))
    chans = list(range(1, channels + 1))
    f = [jain_fairness(list(assignment_load_profile(a).values())) for a in (ccaa_color(mcg, chans, seed), rama_color(mcg, chans, seed))]
    return f[0], f[1]


def mesh_config(label: str, seed: int, pkt_bytes: int = 512, duration: float = 10.0, **over) -> ScenarioConfig:
    """Wired-cum-wireless mesh scaled to 12 nodes / 6 flows (one of them to the wired sink).

    Radio counts are uniform in [1, max(channels, 2)] and the gateway carries
    the maximum, so the single-channel baseline shares the 2-channel layout.
    """
    proto, ch = PROTOCOLS[label]
    radios = max(ch, 2)
    cfg = ScenarioConfig(name=f"mesh-{label}", protocol=proto, channels=ch, seed=seed, duration=duration)
    kv = {
        "topology.nodes": 12, "topology.area": 1060.0, "topology.max_radios": radios,
        "topology.gateway_radios": radios, "traffic.nctf": 6, "traffic.wired_flows": 1,
        "traffic.pkt_bytes": pkt_bytes, "traffic.rate_bps": MESH_FLOW_RATE,
    }
    kv.update(over)
    return cfg.replace(**kv)


def ordering_batch(
    seeds: Iterable[int] = range(5), sizes: Sequence[int] = SIZES, labels: Sequence[str] = tuple(PROTOCOLS)
) -> Dict[Tuple[str, int, int], MetricsRecord]:
    out = {}
    for seed in seeds:
        for size in sizes:
            for lab in labels:
                out[(lab, seed, size)] = run(mesh_config(lab, seed, size))[0]
    return out


def ordering_violations(res: Dict[Tuple[str, int, int], MetricsRecord]) -> List[str]:
    """Per (seed, size): tsc4 > tsc2 > rama2, every multi-channel > csma, delays reversed."""
    bad = []
    keys = sorted({(s, z) for _, s, z in res})
    for seed, size in keys:
        thr = {l: res[(l, seed, size)].aggregated_throughput for l in PROTOCOLS}
        dly = {l: res[(l, seed, size)].mean_end_to_end_delay for l in PROTOCOLS}
        dly = {l: (float("inf") if d is None else d) for l, d in dly.items()}
        pairs = [("tsc4", "tsc2"), ("tsc2", "rama2"), ("tsc4", "csma"), ("tsc2", "csma"), ("rama2", "csma")]
        for hi, lo in pairs:
            if not thr[hi] > thr[lo]:
                bad.append(f"seed={seed} size={size}: throughput {hi}={thr[hi]:.0f} !> {lo}={thr[lo]:.0f}")
            if not dly[hi] < dly[lo]:
                bad.append(f"seed={seed} size={size}: delay {hi}={dly[hi]:.3f} !< {lo}={dly[lo]:.3f}")
    return bad


def throughput_curve(res: Dict[Tuple[str, int, int], MetricsRecord], label: str) -> Tuple[List[int], List[float]]:
    sizes = sorted({z for l, _, z in res if l == label})
    seeds = sorted({s for l, s, _ in res if l == label})
    means = [float(np.mean([res[(label, s, z)].aggregated_throughput for s in seeds])) for z in sizes]
    return sizes, means


def knee(sizes: Sequence[int], thr: Sequence[float]) -> Tuple[bool, float]:
    """(nondecreasing, end slope / start slope) from the first and last segments."""
    nondec = all(b >= a for a, b in zip(thr, thr[1:]))
    s0 = (thr[1] - thr[0]) / (sizes[1] - sizes[0])
    s1 = (thr[-1] - thr[-2]) / (sizes[-1] - sizes[-2])
    ratio = s1 / s0 if s0 > 0 else float("inf")
    return nondec, ratio


def saturation_sweep(
    fractions: Sequence[float] = (0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0),
    seeds: Iterable[int] = range(3),
    labels: Sequence[str] = ("tsc4", "tsc2", "csma"),
    duration: float = 10.0,
) -> Dict[Tuple[str, float], List[float]]:
    """Loss rate per (label, offered fraction of one channel's capacity), one entry per seed."""
    out: Dict[Tuple[str, float], List[float]] = {}
    for lab in labels:
        for fr in fractions:
            for seed in seeds:
                cfg = mesh_config(lab, seed, 210, duration, **{"traffic.offered_bps": fr * CHANNEL_RATE})
                out.setdefault((lab, fr), []).append(run(cfg)[0].packet_loss_rate)
    return out


def contention_curve(nctfs: Sequence[int] = NCTFS, seeds: Iterable[int] = range(20), channels: int = 4) -> List[float]:
    seeds = list(seeds)
    return [float(np.mean([contention_time_probe(n, channels, s) for s in seeds])) for n in nctfs]


def dense_config(seed: int, nctf: int, duration: float = 10.0, **over) -> ScenarioConfig:
    """30 nodes in 700 m with one-hop CBR flows on distinct links: every flow negotiates on its own."""
    cfg = ScenarioConfig(name="dense", protocol="tsc_m2mac", channels=4, seed=seed, duration=duration)
    kv = {
        "topology.nodes": 30, "topology.area": 700.0, "topology.max_radios": 4,
        "traffic.nctf": nctf, "traffic.wired_flows": 0, "traffic.one_hop": True,
        "traffic.rate_bps": 100_000.0, "traffic.pkt_bytes": 512,
    }
    kv.update(over)
    return cfg.replace(**kv)


def aaa_vs_fixed(
    nctfs: Sequence[int] = NCTFS, seeds: Iterable[int] = range(3), duration: float = 10.0, guard: str = "literal"
) -> Tuple[List[float], List[float]]:
    """Mean throughput per NCTF for the adaptive window (max 50 ms) and a fixed 20 ms window."""
    seeds = list(seeds)
    ad, fx = [], []
    for n in nctfs:
        a, f = [], []
        for s in seeds:
            base = dense_config(s, n, duration)
            a.append(run(base.replace(**{"cna.mode": "adaptive", "cna.max": 0.05, "cna.guard": guard}))[0].aggregated_throughput)
            f.append(run(base.replace(**{"cna.mode": "fixed", "cna.fixed": 0.02}))[0].aggregated_throughput)
        ad.append(float(np.mean(a)))
        fx.append(float(np.mean(f)))
    return ad, fx


def psm_config(seed: int, psm: bool, duration: float = 10.0) -> ScenarioConfig:
    """Every node always has data: one saturated flow per node, exponential transfer sizes."""
    return mesh_config(
        "tsc2", seed, 512, duration,
        **{"psm": psm, "traffic.kind": "saturated", "traffic.per_node": True, "traffic.wired_flows": 0,
           "traffic.transfer_mean_bits": 100e6, "power_profile": "wavelan"},
    )


def psm_trial(seed: int, duration: float = 10.0) -> Tuple[float, bool]:
    """(energy with PSM / energy without, delivered sets identical per flow)."""
    on = simulate(psm_config(seed, True, duration))
    off = simulate(psm_config(seed, False, duration))
    same = sorted(d[:2] for d in on.deliveries) == sorted(d[:2] for d in off.deliveries)
    return on.energy / off.energy, same


def convex_with_tolerance(y: Sequence[float], tol: float = 0.10) -> bool:
    """Second differences >= -tol * local value."""
    return all(y[i - 1] - 2 * y[i] + y[i + 1] >= -tol * abs(y[i]) for i in range(1, len(y) - 1))


__all__ = [
    "SIZES", "NCTFS", "PROTOCOLS", "fairness_pair", "mesh_config", "ordering_batch", "ordering_violations", "throughput_curve",
    "knee", "saturation_sweep", "contention_curve", "dense_config", "aaa_vs_fixed", "psm_config", "psm_trial",
    "convex_with_tolerance",
]
