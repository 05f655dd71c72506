"""Single-channel CSMA/CA baseline: DIFS + binary exponential backoff + DATA/ACK, no beacons."""

from __future__ import annotations

import math

from typing import Dict, List, Optional, Tuple

from ..conflict_graph import Topology
from ..power import PROFILES, radio_energy
from .engine import RunLog, fmt
from .events import EventQueue
from .rng import stream
from .scenario import ScenarioConfig
from .traffic import WIRED, CbrFlow, Packet, TrafficState

CH = 1


class CsmaSim:
    def __init__(self, cfg: ScenarioConfig, topo: Topology, flows: List[CbrFlow]):
        self.cfg = cfg
        self.topo = topo
        self.T = cfg.mac
        self.rng = stream(cfg.seed, "backoff")
        self.traffic = TrafficState(flows, cfg.seed, cfg.traffic.transfer_mean_bits)
        self.ev = EventQueue()
        self.air: List[Tuple[int, float, float]] = []  # (sender, start, end), pruned as time advances
        self.state: Dict[int, str] = {n: "idle" for n in topo.nodes}
        self.cw: Dict[int, int] = {n: self.T.cw_min for n in topo.nodes}
        self.cur: Dict[int, Optional[Tuple[Tuple[int, int], Packet]]] = {n: None for n in topo.nodes}
        self.log = RunLog(cfg.duration, 1)
        self.acts: Dict[int, List[Tuple[float, float, str]]] = {}
        self.wired_pending: List[int] = []  # flow ids

    def _trace(self, t, node, ev, detail):
        if self.cfg.trace:
            self.log.trace.append(f"t={fmt(t)} node={node} radio=1 ev={ev} ch={CH} detail={detail}")

    def _head(self, n: int, now: float):
        best = None
        for (a, b), q in self.traffic.queues.items():
            if a == n and q and (best is None or (q[0].ready, (a, b)) < (best[1].ready, best[0])):
                best = ((a, b), q[0])
        return best

    def _kick(self, n: int, now: float) -> None:
        if self.state[n] != "idle":
            return
        h = self._head(n, now)
        if h is None:
            return
        self.state[n] = "contending"
        self.cur[n] = h
        t = max(now, h[1].ready) + self.T.difs + int(self.rng.integers(self.cw[n])) * self.T.slot
        self.ev.push(t, "backoff_expiry", n)

    def _busy_until(self, n: int, t: float) -> Optional[float]:
        ends = [e for s_, st, e in self.air if st < t < e and self.topo.rx_power(s_, n) > 0]
        return max(ends) if ends else None

    def _prune(self, now: float) -> None:
        horizon = now - 0.05
        if self.air and self.air[0][2] < horizon:
            self.air = [a for a in self.air if a[2] >= horizon]

    def run(self) -> RunLog:
        cfg, T, ev = self.cfg, self.T, self.ev
        if cfg.traffic.kind == "cbr":
            nxt = self.traffic.next_arrival()
            if nxt < cfg.duration:
                ev.push(nxt, "packet_arrival", None)
        else:
            t = 0.0
            while t < cfg.duration:
                ev.push(t, "custom", ("topup",))
                t += cfg.beacon_interval
        for n in sorted(self.topo.nodes):
            self._kick(n, 0.0)
        while len(ev):
            e = ev.pop()
            now = e.time
            if now > cfg.duration:
                break
            self._prune(now)
            if e.kind == "packet_arrival":
                srcs = {f.src for f in self.traffic.flows.values()}
                self.traffic.generate_until(math.nextafter(now, math.inf))
                for n in sorted(srcs):
                    self._kick(n, now)
                nxt = self.traffic.next_arrival()
                if nxt < cfg.duration:
                    ev.push(nxt, "packet_arrival", None)
            elif e.kind == "custom" and e.payload[0] == "topup":
                self.traffic.top_up(now, int(cfg.beacon_interval / T.exchange_time(cfg.traffic.pkt_bytes)) + 1)
                for n in sorted(self.topo.nodes):
                    self._kick(n, now)
            elif e.kind == "backoff_expiry":
                n = e.payload
                busy = self._busy_until(n, now)
                if busy is not None:
                    ev.push(busy + T.difs + int(self.rng.integers(self.cw[n])) * T.slot, "backoff_expiry", n)
                    continue
                (a, b), p = self.cur[n]
                end = now + T.data_airtime(p.size)
                self.air.append((n, now, end))
                self.state[n] = "tx"
                self.acts.setdefault(n, []).append((now, end, "tx"))
                self.acts.setdefault(b, []).append((now, end, "rx"))
                ev.push(end, "msg_tx_end", (n, now, end))
            elif e.kind == "msg_tx_end":
                n, st, end = e.payload
                (a, b), p = self.cur[n]
                clash = any(
                    s_ != n and s0 < end and e0 > st and self.topo.rx_power(s_, b) > 0 for s_, s0, e0 in self.air
                )
                self._trace(st, n, "data", f"dst={b},flow={p.flow},seq={p.seq},ok={int(not clash)}")
                ack_end = end + T.sifs + T.ack_airtime()
                if not clash:
                    self.air.append((b, end + T.sifs, ack_end))
                    self.acts.setdefault(b, []).append((end + T.sifs, ack_end, "tx"))
                    self.acts.setdefault(n, []).append((end + T.sifs, ack_end, "rx"))
                ev.push(ack_end, "custom", ("done", n, not clash))
            elif e.kind == "custom" and e.payload[0] == "done":
                _, n, ok = e.payload
                (a, b), p = self.cur[n]
                q = self.traffic.queue((a, b))
                if ok:
                    q.popleft()
                    self.cw[n] = T.cw_min
                    self._forward(p, b, now)
                else:
                    p.tries += 1
                    self.cw[n] = T.next_cw(self.cw[n])
                    if p.tries > T.retry_limit:
                        q.popleft()
                        self.cw[n] = T.cw_min
                        self.log.drops.append((now, p.flow, p.seq))
                        self._trace(now, -1, "drop", f"flow={p.flow},seq={p.seq}")
                self.state[n] = "idle"
                self.cur[n] = None
                self._kick(n, now)
        return self._finish()

    def _forward(self, p: Packet, node: int, t: float) -> None:
        f = self.traffic.flows[p.flow]
        p.hop += 1
        nxt = f.route[p.hop + 1] if p.hop + 1 < len(f.route) else None
        if nxt is None or nxt == WIRED:
            td = t + (self.cfg.traffic.wired_delay if nxt == WIRED else 0.0)
            if td > self.cfg.duration:
                self.wired_pending.append(p.flow)
                return
            self.log.deliveries.append((p.flow, p.seq, p.gen, td, CH, p.size))
            self._trace(td, node if nxt is None else WIRED, "deliver", f"flow={p.flow},seq={p.seq},gen={fmt(p.gen)},bytes={p.size}")
        else:
            p.ready = t
            p.tries = 0
            self.traffic.queue((node, nxt)).append(p)
            self._kick(node, t)

    def _finish(self) -> RunLog:
        cfg = self.cfg
        log = self.log
        log.gen = list(self.traffic.gen_log)
        log.in_flight = self.traffic.in_flight() + len(self.wired_pending)
        per = self.traffic.in_flight_by_flow()
        for f in self.wired_pending:
            per[f] += 1
        log.in_flight_by_flow = per
        prof = PROFILES[cfg.power_profile]
        total = 0.0
        for n, node in sorted(self.topo.nodes.items()):
            for r in range(1, node.radios + 1):
                acts = self.acts.get(n, []) if r == 1 else []
                total += radio_energy(acts, cfg.duration, [], [], (), False, prof)[0]
        log.energy = total
        for t, fid, seq, size in log.gen:
            self._trace(t, self.traffic.flows[fid].src, "gen", f"flow={fid},seq={seq},bytes={size}")
        self._trace(cfg.duration, -1, "energy", f"joules={fmt(total)}")
        self._trace(cfg.duration, -1, "end", f"duration={fmt(cfg.duration)},channels=1,in_flight={log.in_flight},drops={len(log.drops)}")
        return log
