"""Adaptive sizing of the channel-negotiation sub-interval."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Tuple


class CnaConfigError(ValueError):
    pass


@dataclass
class CnaController:
    """One network-wide negotiation-window length, resized by at most one step per epoch.

    ``guard`` selects the shrink condition: ``"literal"`` shrinks only when the
    smallest per-channel idle time exceeds ``cna + step`` (never reachable,
    since idle time is bounded by ``cna``); ``"amended"`` shrinks when it
    exceeds ``step + margin``.
    """

    cna_min: float = 0.010
    cna_max: float = 0.050
    step: float = 0.005
    threshold_adj: float = 0.002
    guard: str = "literal"
    margin: float = 0.0
    cna: float = None  # starts at cna_min
    acc_idle: Dict[int, float] = field(default_factory=dict)
    trajectory: List[Tuple[int, float]] = field(default_factory=list)

    def __post_init__(self):
        if not self.step > 0:
            raise CnaConfigError("step must be > 0")
        if not 0 < self.cna_min <= self.cna_max:
            raise CnaConfigError("need 0 < cna_min <= cna_max")
        if self.threshold_adj < 0 or self.margin < 0:
            raise CnaConfigError("threshold and margin must be >= 0")
        if self.guard not in ("literal", "amended"):
            raise CnaConfigError(f"unknown guard {self.guard!r}")
        if self.cna is None:
            self.cna = self.cna_min
        if not self.cna_min <= self.cna <= self.cna_max:
            raise CnaConfigError("initial cna outside [cna_min, cna_max]")

    def reset_idle(self, channels: Iterable[int]) -> None:
        self.acc_idle = {int(c): 0.0 for c in channels}


def record_idle(ctl: CnaController, channel: int, idle_duration: float) -> CnaController:
    if idle_duration < 0:
        raise ValueError("idle_duration must be >= 0")
    v = ctl.acc_idle.get(channel, 0.0) + idle_duration
    # float accumulation may overshoot the window by an ulp
    ctl.acc_idle[channel] = min(v, ctl.cna)
    return ctl


def aaa_adjust(ctl: CnaController, epoch: int | None = None) -> float:
    """Grow, shrink or keep the window based on the busiest channel's idle time."""
    idle = min(ctl.acc_idle.values()) if ctl.acc_idle else ctl.cna
    bound = ctl.cna + ctl.step if ctl.guard == "literal" else ctl.step + ctl.margin
    if idle <= ctl.threshold_adj:
        new = min(ctl.cna + ctl.step, ctl.cna_max)
    elif idle > bound:
        new = max(ctl.cna - ctl.step, ctl.cna_min)
    else:
        new = ctl.cna
    ctl.cna = new
    ctl.trajectory.append((len(ctl.trajectory) if epoch is None else epoch, new))
    return new


def idle_from_busy(window: Tuple[float, float], busy: Iterable[Tuple[float, float]]) -> float:
    """Window length minus the union of busy intervals clipped to it."""
    a, b = window
    spans = sorted((max(s, a), min(e, b)) for s, e in busy if e > a and s < b)
    covered = 0.0
    cur_s = cur_e = None
    for s, e in spans:
        if cur_e is None or s > cur_e:
            if cur_e is not None:
                covered += cur_e - cur_s
            cur_s, cur_e = s, e
        else:
            cur_e = max(cur_e, e)
    if cur_e is not None:
        covered += cur_e - cur_s
    return max(0.0, (b - a) - covered)
