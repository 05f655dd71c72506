"""Top-level entry points: one run, the CSMA baseline and the contention probe."""

from __future__ import annotations

from typing import List, Tuple

from ..conflict_graph import build_mcg
from ..metrics import MetricsRecord, summarize
from .csma import CsmaSim
from .engine import BeaconSim, RunLog
from .scenario import ScenarioConfig, build_scenario
from .topogen import TopologySpec


def record_from_log(cfg: ScenarioConfig, log: RunLog) -> MetricsRecord:
    return summarize(
        log.duration, log.channels, len(log.gen), log.deliveries, len(log.drops), log.in_flight,
        log.energy, log.cna, cfg.seed, cfg.config_hash(),
    )


def check_conservation(log: RunLog) -> None:
    """Per flow: generated = delivered + dropped + in flight."""
    from collections import Counter

    g = Counter(f for _, f, _, _ in log.gen)
    d = Counter(x[0] for x in log.deliveries)
    x = Counter(f for _, f, _ in log.drops)
    for f in set(g) | set(d) | set(x) | set(log.in_flight_by_flow):
        if g[f] != d[f] + x[f] + log.in_flight_by_flow.get(f, 0):
            from .engine import InvariantError

            raise InvariantError(f"flow {f}: generated {g[f]} != delivered {d[f]} + dropped {x[f]} + in flight {log.in_flight_by_flow.get(f, 0)}")


def simulate(cfg: ScenarioConfig) -> RunLog:
    cfg.validate()
    topo, flows = build_scenario(cfg)
    if cfg.protocol == "csma_single":
        log = CsmaSim(cfg, topo, flows).run()
    else:
        log = BeaconSim(cfg, topo, flows).run()
    check_conservation(log)
    return log


def run(cfg: ScenarioConfig) -> Tuple[MetricsRecord, List[str]]:
    log = simulate(cfg)
    return record_from_log(cfg, log), log.trace


def csma_single_run(cfg: ScenarioConfig) -> MetricsRecord:
    if cfg.protocol != "csma_single":
        cfg = cfg.replace(protocol="csma_single")
    return run(cfg)[0]


def contention_time_probe(
    nctf: int,
    channels: int,
    seed: int,
    topology: TopologySpec | None = None,
    base: ScenarioConfig | None = None,
    max_intervals: int = 500,
) -> float:
    """Mean time from the first beacon to each one-hop flow's completed reservation.

    Every interval is one open negotiation window (no data phase). Flows that
    win a reservation leave; the rest renegotiate in the next interval, so
    time lost to collisions, backoff and busy radios accumulates. Flows still
    unreserved after ``max_intervals`` are left out of the mean.
    """
    if nctf < 1:
        raise ValueError("nctf must be >= 1")
    cfg = base or ScenarioConfig()
    cfg = cfg.replace(**{"channels": channels, "seed": seed, "protocol": "tsc_m2mac", "traffic.nctf": nctf,
                         "traffic.one_hop": True, "traffic.kind": "saturated", "traffic.wired_flows": 0})
    cfg.topology = topology or TopologySpec(kind="random", nodes=30, area=700.0, max_radios=channels, retries=20000)
    topo, flows = build_scenario(cfg)
    sim = BeaconSim(cfg, topo, flows)
    BI = cfg.beacon_interval
    pending = sorted({(f.route[0], f.route[1]) for f in flows})
    done: List[float] = []
    for k in range(max_intervals):
        if not pending:
            break
        tb = k * BI
        for st in sim.nodes.values():
            st.reset()
        sim.ledger.clear()
        tasks = sim.negotiate(tb, tb + BI * (1 - 1e-9), pending)
        got = {t.link: t.done for t in tasks if t.outcome == "bound"}
        done += [got[l] for l in sorted(got)]
        pending = [l for l in pending if l not in got]
    if not done:
        return float("nan")
    return sum(done) / len(done)
