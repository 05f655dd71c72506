"""Beacon-structured simulation: negotiation window then data window, every interval.

Shared by ``tsc_m2mac`` (control channels from the load-balancing coloring,
data channels negotiated per interval) and ``rama_like`` (one common control
channel on radio 1, static data channels).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..ccaa import ChannelAssignment, ccaa_color
from ..cna import CnaController, aaa_adjust, idle_from_busy, record_idle
from ..conflict_graph import Topology, build_mcg
from ..mac import (
    ACK_INVALID,
    ACK_NULL,
    BoundLink,
    ControlMessage,
    Crus,
    NodeMac,
    apply_overheard,
    backoff_slots,
    crus_reorder,
    dt_phase,
    handle_ack,
    handle_req,
    initiate_negotiation,
    local_channel_status,
    usable_channels,
)
from ..phys import InterferenceLedger
from .baselines import rama_color
from .events import EventQueue
from .rng import stream, subseed
from .scenario import ScenarioConfig
from .traffic import WIRED, CbrFlow, TrafficState

Link = Tuple[int, int]
NULL_RETRIES = 2


class InvariantError(RuntimeError):
    pass


@dataclass
class Airing:
    sender: int
    channel: int
    start: float
    end: float
    msg: ControlMessage


@dataclass
class Task:
    link: Link
    channel: int  # control channel
    radio_b: int
    radio_c: int
    cw: int
    tries: int = 0
    nulls: int = 0
    outcome: Optional[str] = None
    done: Optional[float] = None
    first_tx: Optional[float] = None
    data_channel: Optional[int] = None
    bound_b: Optional[int] = None
    bound_c: Optional[int] = None
    scheduled: bool = False


@dataclass
class RunLog:
    """Raw outcomes of a run; metrics are derived from it (or from its trace)."""

    duration: float
    channels: int
    gen: List[Tuple[float, int, int, int]] = field(default_factory=list)
    deliveries: List[Tuple[int, int, float, float, int, int]] = field(default_factory=list)  # flow, seq, gen, t, ch, bytes
    drops: List[Tuple[float, int, int]] = field(default_factory=list)
    in_flight: int = 0
    in_flight_by_flow: Dict[int, int] = field(default_factory=dict)
    energy: float = 0.0
    cna: List[Tuple[int, float]] = field(default_factory=list)
    trace: List[str] = field(default_factory=list)
    negotiations: List[Tuple[int, str, float]] = field(default_factory=list)  # interval, outcome, completion delay


def fmt(x: float) -> str:
    return repr(float(x))


class BeaconSim:
    def __init__(self, cfg: ScenarioConfig, topo: Topology, flows: List[CbrFlow], assignment: Optional[ChannelAssignment] = None):
        self.cfg = cfg
        self.topo = topo
        self.flows = flows
        self.timing = cfg.mac
        self.channels = list(range(1, cfg.channels + 1))
        self.rama = cfg.protocol == "rama_like"
        if assignment is None:
            mcg = build_mcg(topo)
            seed = subseed(cfg.seed, "coloring")
            assignment = rama_color(mcg, self.channels, seed) if self.rama else ccaa_color(mcg, self.channels, seed)
        self.a = assignment
        self.ledger = InterferenceLedger(topo.prop, cfg.phys)
        self.rng_backoff = stream(cfg.seed, "backoff")
        self.rng_crus = stream(cfg.seed, "crus")
        self.traffic = TrafficState(flows, cfg.seed, cfg.traffic.transfer_mean_bits)
        self.nodes: Dict[int, NodeMac] = {}
        for n, node in topo.nodes.items():
            if self.rama:
                control = {1: self.a.ccc}
                allowed = {r: self.a.radio_channel.get((n, r)) for r in range(1, node.radios + 1)}
            else:
                control = dict(self.a.node_control_channels(n))
                allowed = {}
            crus = Crus(n, list(self.channels), {})
            st = NodeMac(n, node.radios, control, crus, allowed, near=topo.linked)
            st.sync_radio_map()
            self.nodes[n] = st
        self.ctl = None
        if cfg.cna.mode == "adaptive":
            c = cfg.cna
            self.ctl = CnaController(c.min, c.max, c.step, c.threshold, c.guard, c.margin)
        self.log = RunLog(cfg.duration, cfg.channels)
        self.acts: Dict[Tuple[int, int], List[Tuple[float, float, str]]] = {}
        self.data_intervals: Dict[Tuple[int, int], set] = {}
        self.pilots: List[float] = []
        self.wired_pending: List[Tuple[float, object, int]] = []
        self.tracing = cfg.trace

    # --- helpers -----------------------------------------------------------
    def _trace(self, t, node, radio, ev, ch, detail):
        if self.tracing:
            self.log.trace.append(f"t={fmt(t)} node={node} radio={radio} ev={ev} ch={ch} detail={detail}")

    def _act(self, node, radio, s, e, kind):
        self.acts.setdefault((node, radio), []).append((s, e, kind))

    def _control_of(self, link: Link) -> Tuple[int, int, int]:
        b, c = link
        pair = (min(b, c), max(b, c))
        return self.a.control_channel(pair), self.a.control_radio(b, pair), self.a.control_radio(c, pair)

    def _offer(self, st: NodeMac, link: Link, peer: Optional[NodeMac] = None) -> List[int]:
        st.crus = crus_reorder(st.crus, local_channel_status(st.id, self.channels, self.ledger, st.blocked), self.rng_crus)
        rx_p = self.topo.rx_power(*link)
        usable = usable_channels(st, link, self.ledger, rx_p, peer)
        if self.rama:
            pair = (min(link), max(link))
            pref = [self.a.link_channel[pair], self.a.ccc]
            for c in pref:
                if c in usable:
                    return [c]
            return []
        return usable

    # --- negotiation window -------------------------------------------------
    def negotiate(self, tb: float, pilot: float, links: List[Link]) -> List[Task]:
        T = self.timing
        ev = EventQueue()
        ev.now = tb
        air: Dict[int, List[Airing]] = {c: [] for c in self.channels}
        queues: Dict[Tuple[int, int], deque] = {}
        tasks = []
        for link in links:
            ch, rb, rc = self._control_of(link)
            t = Task(link, ch, rb, rc, T.cw_min)
            tasks.append(t)
            queues.setdefault((link[0], rb), deque()).append(t)
        for key in sorted(queues):
            ev.push(tb, "custom", ("start", key))

        def finish(task: Task, now: float, outcome: str):
            task.outcome = outcome
            task.done = now
            key = (task.link[0], task.radio_b)
            q = queues[key]
            q.popleft()
            if q:
                ev.push(now, "custom", ("start", key))

        def release(task: Task):
            b, c = task.link
            if task.bound_b is not None:
                self.nodes[b].bound.pop(task.bound_b, None)
                self.nodes[b].sync_radio_map()
                task.bound_b = None
            if task.bound_c is not None:
                self.nodes[c].bound.pop(task.bound_c, None)
                self.nodes[c].sync_radio_map()
                task.bound_c = None
            if task.scheduled:
                self.ledger.release(task.link, task.data_channel)
                task.scheduled = False

        def attempt(task: Task, now: float):
            b, c = task.link
            st = self.nodes[b]
            usable = self._offer(st, task.link)
            msg = initiate_negotiation(st, c, now, usable, task.channel, task.cw, self.rng_backoff, T)
            if msg is None:
                finish(task, now, "skip")
                return
            ev.push(msg.timestamp, "backoff_expiry", task)

        def retry(task: Task, now: float, collided: bool):
            release(task)
            task.tries += 1
            if collided:
                task.cw = T.next_cw(task.cw)
            if task.tries > T.retry_limit:
                finish(task, now, "fail")
            else:
                attempt(task, now)

        def sensed_busy(ch: int, node: int, t: float) -> Optional[float]:
            busy = [a.end for a in air[ch] if a.start < t < a.end and self.topo.rx_power(a.sender, node) > 0]
            return max(busy) if busy else None

        def transmit(msg: ControlMessage, radio: int, kind: str, payload) -> Airing:
            a = Airing(msg.src, msg.channel, msg.timestamp, msg.timestamp + T.ctrl_airtime, msg)
            air[msg.channel].append(a)
            self._act(msg.src, radio, a.start, a.end, "tx")
            self._trace(a.start, msg.src, radio, kind, msg.channel, f"dst={msg.dst},payload={payload}")
            ev.push(a.end, "msg_tx_end", (kind, a))
            return a

        def receivers(a: Airing) -> List[int]:
            out = []
            for x in self.topo.neighbors(a.sender):
                st = self.nodes[x]
                radios = [r for r, c in sorted(st.control.items()) if c == a.channel]
                if not radios:
                    continue
                self._act(x, radios[0], a.start, a.end, "rx")
                clash = any(
                    o is not a and o.start < a.end and o.end > a.start and self.topo.rx_power(o.sender, x) > 0
                    for o in air[a.channel]
                )
                if not clash:
                    out.append(x)
            return out

        task_of_msg: Dict[int, Task] = {}
        while len(ev):
            e = ev.pop()
            now = e.time
            if now > pilot:
                break
            if e.kind == "custom" and e.payload[0] == "start":
                q = queues[e.payload[1]]
                if q:
                    attempt(q[0], now)
            elif e.kind == "custom" and e.payload[0] == "timeout":
                retry(e.payload[1], now, True)
            elif e.kind == "backoff_expiry":
                task = e.payload
                b, c = task.link
                busy = sensed_busy(task.channel, b, now)
                if busy is not None:
                    ev.push(busy + T.difs + backoff_slots(task.cw, self.rng_backoff) * T.slot, "backoff_expiry", task)
                    continue
                bst = self.nodes[b]
                # the offer is rebuilt at send time: neighbours may have reserved meanwhile
                usable = self._offer(bst, task.link)
                if not usable or not bst.free_radios() or c in bst.invalid_peers:
                    finish(task, now, "skip")
                    continue
                msg = ControlMessage("REQ", b, c, tuple(usable), now, task.channel)
                if task.first_tx is None:
                    task.first_tx = now
                a = transmit(msg, task.radio_b, "REQ", ",".join(map(str, msg.payload)))
                task_of_msg[id(a)] = task
            elif e.kind == "msg_tx_end":
                kind, a = e.payload
                task = task_of_msg.pop(id(a))
                b, c = task.link
                heard = receivers(a)
                for x in heard:
                    if x not in task.link:
                        apply_overheard(self.nodes[x], a.msg)
                if kind == "REQ":
                    if c not in heard:
                        ev.push(now + T.sifs + T.ctrl_airtime, "custom", ("timeout", task))
                        continue
                    cst = self.nodes[c]
                    usable_c = self._offer(cst, task.link, None)
                    ack = handle_req(cst, a.msg, usable_c, now + T.sifs)
                    if ack.payload not in (ACK_NULL, ACK_INVALID):
                        task.bound_c = cst.bind(b, int(ack.payload))
                    a2 = transmit(ack, task.radio_c, "ACK", ack.payload)
                    task_of_msg[id(a2)] = task
                elif kind == "ACK":
                    if b not in heard:
                        release(task)
                        ev.push(now + T.sifs + T.ctrl_airtime, "custom", ("timeout", task))
                        continue
                    bst = self.nodes[b]
                    ack = a.msg
                    rx_p = self.topo.rx_power(b, c)

                    def still_usable(ch, task=task, rx_p=rx_p, bst=bst):
                        if not bst.free_radios(ch):
                            return False
                        # the destination already holds a radio on ch for this link
                        return self.ledger.admits(task.link, ch, rx_p)

                    res = handle_ack(bst, ack, still_usable, now + T.sifs)
                    if res is None:
                        release(task)
                        if ack.payload == ACK_INVALID:
                            finish(task, now, "invalid")
                        elif ack.payload == ACK_NULL:
                            task.nulls += 1
                            if task.nulls > NULL_RETRIES:
                                finish(task, now, "null")
                            else:
                                attempt(task, now)
                        else:
                            retry(task, now, False)
                        continue
                    task.bound_b = max(r for r, (p, ch) in bst.bound.items() if p == c and ch == res.payload)
                    task.data_channel = int(res.payload)
                    self.ledger.schedule(task.link, task.data_channel, rx_p)
                    task.scheduled = True
                    a3 = transmit(res, task.radio_b, "RES", res.payload)
                    task_of_msg[id(a3)] = task
                else:  # RES
                    finish(task, now, "bound")
        for t in tasks:
            if t.outcome is None:
                release(t)
                t.outcome = "denied"
                t.done = pilot
        self._air = air
        return tasks

    # --- data window ----------------------------------------------------------
    def _data(self, k: int, pilot: float, nb: float, tasks: List[Task]) -> None:
        T = self.timing
        cfg = self.cfg
        bound = [t for t in tasks if t.outcome == "bound"]
        bls, qs = [], []
        cap = int((nb - pilot) / T.exchange_time(1)) + 2
        for t in bound:
            b, c = t.link
            ch = t.data_channel
            rb, rc = t.bound_b, t.bound_c
            retune = self.nodes[b].control.get(rb) != ch or self.nodes[c].control.get(rc) != ch
            q = self.traffic.queue(t.link)
            pk = [(p.ready, p.size) for p in list(q)[:cap]]
            start = pilot + (T.switch_time if retune else 0.0)
            end = nb - (T.switch_time if retune else 0.0)
            bls.append(BoundLink(b, c, ch, self.topo.rx_power(b, c), pk, start, end))
            qs.append((t, q, rb, rc))
        txs = dt_phase(bls, pilot, nb, self.topo.prop, cfg.phys.gamma, cfg.phys.noise, T)
        by_link: Dict[int, Dict[int, object]] = {}
        idx = {(bl.tx, bl.rx): i for i, bl in enumerate(bls)}
        for tx in txs:
            by_link.setdefault(idx[(tx.tx, tx.rx)], {})[tx.index] = tx
        events = []
        for i, (t, q, rb, rc) in enumerate(qs):
            sent = by_link.get(i, {})
            if not sent:
                continue
            items = list(q)
            keep = deque()
            for j, p in enumerate(items):
                tx = sent.get(j)
                if tx is None:
                    keep.append(p)
                    continue
                b, c = t.link
                data_end = tx.start + T.data_airtime(p.size)
                self._act(b, rb, tx.start, data_end, "tx")
                self._act(c, rc, tx.start, data_end, "rx")
                self._act(c, rc, data_end + T.sifs, tx.end, "tx")
                self._act(b, rb, data_end + T.sifs, tx.end, "rx")
                self._trace(tx.start, b, rb, "data", tx.channel, f"dst={c},flow={p.flow},seq={p.seq},ok={int(tx.ok)}")
                if tx.ok:
                    events.append((tx.end, i, j, p, c, tx.channel))
                else:
                    p.tries += 1
                    if p.tries > T.retry_limit:
                        self._drop(tx.end, p)
                    else:
                        keep.append(p)
            q.clear()
            q.extend(keep)
            self.data_intervals.setdefault((t.link[0], rb), set()).add(k)
            self.data_intervals.setdefault((t.link[1], rc), set()).add(k)
        for t_end, _, _, p, node, ch in sorted(events, key=lambda x: (x[0], x[1], x[2])):
            self._forward(p, node, t_end, ch)

    def _drop(self, t, p):
        self.log.drops.append((t, p.flow, p.seq))
        self._trace(t, -1, 0, "drop", 0, f"flow={p.flow},seq={p.seq}")

    def _deliver(self, p, t, ch, node):
        if t > self.cfg.duration:
            self.wired_pending.append((t, p, ch))
            return
        self.log.deliveries.append((p.flow, p.seq, p.gen, t, ch, p.size))
        self._trace(t, node, 0, "deliver", ch, f"flow={p.flow},seq={p.seq},gen={fmt(p.gen)},bytes={p.size}")

    def _forward(self, p, node, t, ch):
        f = self.traffic.flows[p.flow]
        p.hop += 1
        nxt = f.route[p.hop + 1] if p.hop + 1 < len(f.route) else None
        if nxt is None:
            self._deliver(p, t, ch, node)
        elif nxt == WIRED:
            self._deliver(p, t + self.cfg.traffic.wired_delay, ch, WIRED)
        else:
            p.ready = t
            p.tries = 0
            self.traffic.queue((node, nxt)).append(p)

    # --- main loop -----------------------------------------------------------
    def cna_length(self) -> float:
        return self.ctl.cna if self.ctl is not None else self.cfg.cna.fixed

    def run(self) -> RunLog:
        cfg = self.cfg
        BI = cfg.beacon_interval
        n_int = int(math.ceil(cfg.duration / BI - 1e-9))
        T = self.timing
        for k in range(n_int):
            tb = k * BI
            nb = min((k + 1) * BI, cfg.duration)
            cna = self.cna_length()
            pilot = tb + cna
            self.pilots.append(pilot)
            self.traffic.generate_until(tb)
            if cfg.traffic.kind == "saturated":
                self.traffic.top_up(tb, int((BI - cna) / T.exchange_time(cfg.traffic.pkt_bytes)) + 1)
            for st in self.nodes.values():
                st.reset()
            self.ledger.clear()
            self._trace(tb, -1, 0, "beacon", 0, f"k={k},cna={fmt(cna)}")
            links = self.traffic.pending_links(tb)
            tasks = self.negotiate(tb, min(pilot, nb), links)
            for t in tasks:
                self.log.negotiations.append((k, t.outcome, t.done - tb))
            if self.ctl is not None:
                self.ctl.reset_idle(self.channels)
                for c in self.channels:
                    record_idle(self.ctl, c, idle_from_busy((tb, pilot), [(a.start, a.end) for a in self._air[c]]))
                if (k + 1) % max(1, cfg.cna.epochs) == 0:
                    aaa_adjust(self.ctl, k)
                self.log.cna.append((k, self.ctl.cna))
            else:
                self.log.cna.append((k, cna))
            self._trace(pilot, -1, 0, "pilot", 0, f"k={k},bound={sum(t.outcome == 'bound' for t in tasks)}")
            if pilot < nb:
                self.traffic.generate_until(nb)
                self._data(k, pilot, nb, tasks)
        self.traffic.generate_until(cfg.duration)
        self._finish()
        return self.log

    def _finish(self):
        from ..power import PROFILES, radio_energy

        cfg = self.cfg
        self.log.gen = list(self.traffic.gen_log)
        self.log.in_flight = self.traffic.in_flight() + len(self.wired_pending)
        per = self.traffic.in_flight_by_flow()
        for _, p, _ in self.wired_pending:
            per[p.flow] += 1
        self.log.in_flight_by_flow = per
        prof = PROFILES[cfg.power_profile]
        beacons = [k * cfg.beacon_interval for k in range(1, len(self.pilots) + 1)]
        total = 0.0
        for n, node in sorted(self.topo.nodes.items()):
            for r in range(1, node.radios + 1):
                e, _ = radio_energy(
                    self.acts.get((n, r), []), cfg.duration, beacons, self.pilots,
                    self.data_intervals.get((n, r), ()), cfg.psm, prof,
                )
                total += e
        self.log.energy = total
        for t, fid, seq, size in self.log.gen:
            self._trace(t, self.traffic.flows[fid].src, 0, "gen", 0, f"flow={fid},seq={seq},bytes={size}")
        self._trace(cfg.duration, -1, 0, "energy", 0, f"joules={fmt(total)}")
        for k, c in self.log.cna:
            self._trace(k * cfg.beacon_interval, -1, 0, "cna", 0, f"epoch={k},len={fmt(c)}")
        self._trace(cfg.duration, -1, 0, "end", 0, f"duration={fmt(cfg.duration)},channels={cfg.channels},in_flight={self.log.in_flight},drops={len(self.log.drops)}")
