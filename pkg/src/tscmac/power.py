"""Radio power states (busy / idle / doze), doze decisions and energy accounting."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

STATES = ("busy", "idle", "doze")
_LEGAL = {("busy", "idle"), ("idle", "busy"), ("idle", "doze"), ("doze", "idle")}


class PowerStateError(RuntimeError):
    pass


@dataclass(frozen=True)
class PowerProfile:
    tx: float
    rx: float
    idle: float
    doze: float


WAVELAN = PowerProfile(tx=1.65, rx=1.4, idle=1.15, doze=0.045)
CISCO_350 = PowerProfile(tx=1.88, rx=1.3, idle=1.08, doze=0.045)
PROFILES = {"wavelan": WAVELAN, "cisco": CISCO_350}


@dataclass(frozen=True)
class PsmParams:
    sleep_time: float = 250e-6
    wake_time: float = 250e-6
    transition_energy: Optional[float] = None  # default: idle power over sleep + wake

    def transition_cost(self, profile: PowerProfile) -> float:
        if self.transition_energy is not None:
            return self.transition_energy
        return profile.idle * (self.sleep_time + self.wake_time)


@dataclass
class RadioPowerState:
    profile: PowerProfile = WAVELAN
    psm: PsmParams = PsmParams()
    state: str = "idle"
    state_entry_time: float = 0.0
    energy_accumulated: float = 0.0
    history: List[Tuple[float, str]] = field(default_factory=list)

    def enter(self, state: str, t: float) -> None:
        if state not in STATES:
            raise PowerStateError(f"unknown state {state!r}")
        if state == self.state:
            return
        if (self.state, state) not in _LEGAL:
            raise PowerStateError(f"illegal transition {self.state} -> {state}")
        if t < self.state_entry_time:
            raise PowerStateError("time went backwards")
        self.history.append((t, state))
        self.state = state
        self.state_entry_time = t


def accumulate_energy(radio: RadioPowerState, interval: float, activity: str) -> float:
    """Add the energy of ``activity`` over ``interval`` seconds; returns the increment."""
    if interval < 0:
        raise ValueError("negative interval")
    p = radio.profile
    if activity == "transition":
        e = radio.psm.transition_cost(p) if interval > 0 else 0.0
    else:
        try:
            e = getattr(p, activity) * interval
        except AttributeError:
            raise ValueError(f"unknown activity {activity!r}") from None
    radio.energy_accumulated += e
    return e


def decide_doze(
    now: float,
    next_indicator_time: float,
    has_pending_role: bool,
    profile: PowerProfile = WAVELAN,
    psm: PsmParams = PsmParams(),
) -> bool:
    """Doze only if the gap covers sleep + wake and the saving beats the transition cost."""
    if has_pending_role:
        return False
    gap = next_indicator_time - now
    tw = psm.sleep_time + psm.wake_time
    if not gap > tw:
        return False
    # idle*gap - doze*(gap - tw), arranged to avoid cancellation when doze ~ idle
    saved = (profile.idle - profile.doze) * (gap - tw) + profile.idle * tw
    return saved > psm.transition_cost(profile)


def schedule_wake(
    now: float, next_beacon: float, next_pilot: Optional[float], has_data: bool, psm: PsmParams = PsmParams()
) -> float:
    """Timer-driven wake: before the pilot if there is data to exchange, else before the beacon."""
    if has_data and next_pilot is not None and now < next_pilot < next_beacon:
        return next_pilot - psm.wake_time
    return next_beacon - psm.wake_time


def decide_post_cna_doze(radio_bound: bool, queued_packets: int) -> bool:
    """After negotiation: doze through data transmission unless bound with something to send."""
    return not (radio_bound and queued_packets > 0)


def _merge(acts: Iterable[Tuple[float, float, str]]) -> List[Tuple[float, float, str]]:
    # transmit wins where a receive overlaps it
    out: List[List] = []
    for s, e, k in sorted(acts, key=lambda a: (a[0], a[2] != "tx", a[1])):
        if e <= s:
            continue
        if out and s < out[-1][1]:
            last = out[-1]
            if e <= last[1]:
                continue
            if last[2] == k or last[2] == "tx":
                s = last[1]
            else:
                last[1] = s
        out.append([s, e, k])
    return [tuple(x) for x in out if x[1] > x[0]]


def radio_energy(
    activities: Iterable[Tuple[float, float, str]],
    horizon: float,
    beacons: Sequence[float],
    pilots: Sequence[float],
    data_intervals: Iterable[int] = (),
    psm_on: bool = False,
    profile: PowerProfile = WAVELAN,
    psm: PsmParams = PsmParams(),
) -> Tuple[float, RadioPowerState]:
    """Energy of one radio over [0, horizon] given its tx/rx activity log.

    With the power-saving mode on, a radio listens through each negotiation
    window until its own control activity is over (or the pilot closes the
    window). After that every idle gap is checked against the next time
    indicator the radio must be awake for (the next beacon, or the pilot of an
    interval in which it exchanges data). A radio whose next activity falls
    before that indicator stays idle. Outcomes of the activities are
    untouched; only idle time is reclassified.
    """
    acts = _merge(activities)
    st = RadioPowerState(profile=profile, psm=psm)
    data = set(data_intervals)
    t = 0.0

    def indicator_after(x: float) -> float:
        k = bisect.bisect_right(beacons, x)
        nb = beacons[k] if k < len(beacons) else horizon
        kp = bisect.bisect_right(pilots, x)
        if kp < len(pilots) and pilots[kp] < nb and (kp in data):
            return pilots[kp]
        return nb

    def fill_idle(a: float, b: float) -> None:
        last_end = a
        while a < b:
            if not psm_on:
                accumulate_energy(st, b - a, "idle")
                return
            # a radio that has done nothing since the beacon keeps listening
            # until the pilot closes the negotiation window
            k = bisect.bisect_right(pilots, a)
            opened = beacons[k - 1] if 0 < k <= len(beacons) else 0.0
            if k < len(pilots) and opened <= a < pilots[k] and last_end <= opened:
                end = min(pilots[k], b)
                accumulate_energy(st, end - a, "idle")
                a = end
                continue
            ind = min(indicator_after(a), horizon)
            if ind <= a:
                accumulate_energy(st, b - a, "idle")
                return
            end = min(ind, b)
            if ind <= b and decide_doze(a, ind, False, profile, psm):
                st.enter("doze", a)
                accumulate_energy(st, end - a - psm.sleep_time - psm.wake_time, "doze")
                accumulate_energy(st, end - a, "transition")
                st.enter("idle", end)
            else:
                accumulate_energy(st, end - a, "idle")
            a = end

    for s, e, k in acts:
        s, e = max(s, 0.0), min(e, horizon)
        if e <= t or s >= horizon:
            continue
        if s > t:
            fill_idle(t, s)
        s = max(s, t)
        st.enter("busy", s)
        accumulate_energy(st, e - s, k)
        st.enter("idle", e)
        t = e
    fill_idle(t, horizon)
    return st.energy_accumulated, st
