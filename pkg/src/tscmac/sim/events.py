"""Deterministic event queue ordered by (time, insertion sequence)."""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Any, List, Optional

EVENT_KINDS = ("beacon", "pilot", "msg_tx_end", "backoff_expiry", "packet_arrival", "wake", "custom")


class CausalityError(RuntimeError):
    pass


@dataclass(order=True, frozen=True)
class SimEvent:
    time: float
    sequence: int
    kind: str = field(compare=False)
    payload: Any = field(compare=False, default=None)


class EventQueue:
    def __init__(self):
        self._heap: List[SimEvent] = []
        self._seq = itertools.count()
        self.now = 0.0

    def __len__(self):
        return len(self._heap)

    def push(self, time: float, kind: str, payload: Any = None) -> SimEvent:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        if time < self.now:
            raise CausalityError(f"event {kind} at {time} scheduled before now={self.now}")
        ev = SimEvent(float(time), next(self._seq), kind, payload)
        heapq.heappush(self._heap, ev)
        return ev

    def pop(self) -> SimEvent:
        ev = heapq.heappop(self._heap)
        self.now = ev.time
        return ev

    def peek(self) -> Optional[SimEvent]:
        return self._heap[0] if self._heap else None
