"""Two-ray ground propagation, SINR admission and the co-channel interference ledger."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Hashable, Iterable, Mapping, Tuple

import numpy as np

Link = Tuple[Hashable, Hashable]  # (transmitter node, receiver node)


class LedgerError(RuntimeError):
    pass


@dataclass(frozen=True)
class PhysParams:
    tx_power: float = 0.2818
    gain_tx: float = 1.0
    gain_rx: float = 1.0
    height_tx: float = 1.5
    height_rx: float = 1.5
    gamma: float = 10.0
    noise: float = 1e-12
    tx_range: float = 250.0
    sense_range: float = 550.0

    def __post_init__(self):
        for name in ("tx_power", "gain_tx", "gain_rx", "height_tx", "height_rx", "gamma", "tx_range"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.noise < 0:
            raise ValueError("noise must be >= 0")
        if self.tx_range > self.sense_range:
            raise ValueError("tx_range must not exceed sense_range")


def two_ray_rx_power(params: PhysParams, distance: float) -> float:
    """Received power in watts, Pt*Gt*Gr*ht^2*hr^2 / d^4 (system loss 1)."""
    if not distance > 0:
        raise ValueError(f"distance must be > 0, got {distance}")
    p = params
    return p.tx_power * p.gain_tx * p.gain_rx * p.height_tx ** 2 * p.height_rx ** 2 / distance ** 4


def cmaip(receive_power: float, gamma: float, noise: float, interference_sum: float) -> float:
    """Headroom P_r/gamma - sum(I) - N; negative once the link is already violated."""
    if not receive_power > 0 or not gamma > 0 or noise < 0 or interference_sum < 0:
        raise ValueError("cmaip needs receive_power > 0, gamma > 0, noise >= 0, interference >= 0")
    return receive_power / gamma - interference_sum - noise


def sinr_ok(receive_power: float, gamma: float, noise: float, interference_sum: float) -> bool:
    return receive_power / (noise + interference_sum) > gamma


def admissible(
    new_interference: Mapping[Hashable, float],
    existing_cmaip: Mapping[Hashable, float],
    new_rx_power: float,
    interference_at_new_rx: float,
    gamma: float,
    noise: float,
) -> bool:
    """Admission test for a new co-channel link.

    ``new_interference`` maps each existing link to the power the new
    transmitter injects at that link's receiver; ``existing_cmaip`` holds the
    current headroom of those links. Only links that actually receive
    interference constrain the new one; the largest injected power must stay
    strictly below the smallest of their headrooms. The new receiver must also
    decode against the interference already on the channel.
    """
    hit = [k for k, v in new_interference.items() if v > 0]
    if hit:
        p_iff = max(new_interference[k] for k in hit)
        if not p_iff < min(existing_cmaip[k] for k in hit):
            return False
    return sinr_ok(new_rx_power, gamma, noise, interference_at_new_rx)


class PropagationTable:
    """Pairwise received powers for a fixed node layout.

    Entry [tx, rx] is zero beyond the sensing range and infinite on the
    diagonal (a node cannot receive on a channel it is transmitting on).
    """

    def __init__(self, ids: Iterable[Hashable], positions: np.ndarray, params: PhysParams):
        self.params = params
        self.ids = list(ids)
        self.index = {n: i for i, n in enumerate(self.ids)}
        pos = np.asarray(positions, dtype=float)
        d = np.hypot(pos[:, None, 0] - pos[None, :, 0], pos[:, None, 1] - pos[None, :, 1])
        self.distance = d
        with np.errstate(divide="ignore"):
            p = params
            k = p.tx_power * p.gain_tx * p.gain_rx * p.height_tx ** 2 * p.height_rx ** 2
            power = k / d ** 4
        power[d > params.sense_range] = 0.0
        np.fill_diagonal(power, math.inf)
        self.power = power

    def __call__(self, tx: Hashable, rx: Hashable) -> float:
        return float(self.power[self.index[tx], self.index[rx]])

    def dist(self, a: Hashable, b: Hashable) -> float:
        return float(self.distance[self.index[a], self.index[b]])


class InterferenceLedger:
    """Active co-channel links and the interference each receiver sees.

    Sums are recomputed from the active set with ``math.fsum`` over a sorted
    contribution list, so schedule followed by release restores every value
    exactly.
    """

    def __init__(self, coupling: Callable[[Hashable, Hashable], float], params: PhysParams):
        self.coupling = coupling
        self.params = params
        self._links: Dict[Hashable, Dict[Link, float]] = {}
        self._cache: Dict[Hashable, Dict[tuple, float]] = {}

    def links_on(self, channel) -> Dict[Link, float]:
        return dict(self._links.get(channel, {}))

    def channels(self):
        return [c for c, links in self._links.items() if links]

    def is_active(self, link: Link, channel) -> bool:
        return link in self._links.get(channel, {})

    def interference_at(self, channel, rx, exclude: Link | None = None) -> float:
        cache = self._cache.setdefault(channel, {})
        key = (rx, exclude)
        if key not in cache:
            terms = sorted(
                self.coupling(tx, rx)
                for (tx, r) in self._links.get(channel, {})
                if (tx, r) != exclude
            )
            cache[key] = math.fsum(terms)
        return cache[key]

    def cmaip_of(self, link: Link, channel) -> float:
        try:
            p_r = self._links[channel][link]
        except KeyError:
            raise LedgerError(f"link {link} not active on channel {channel}") from None
        p = self.params
        return cmaip(p_r, p.gamma, p.noise, self.interference_at(channel, link[1], exclude=link))

    def admits(self, link: Link, channel, rx_power: float) -> bool:
        tx, rx = link
        active = self._links.get(channel, {})
        if link in active:
            return False
        new_i = {l: self.coupling(tx, l[1]) for l in active}
        hit = [l for l, v in new_i.items() if v > 0]
        if hit:
            p_iff = max(new_i[l] for l in hit)
            if math.isinf(p_iff) or any(not p_iff < self.cmaip_of(l, channel) for l in hit):
                return False
        i_new_rx = self.interference_at(channel, rx)
        if math.isinf(i_new_rx):
            return False
        p = self.params
        return sinr_ok(rx_power, p.gamma, p.noise, i_new_rx)

    def schedule(self, link: Link, channel, rx_power: float) -> None:
        active = self._links.setdefault(channel, {})
        if link in active:
            raise LedgerError(f"link {link} already scheduled on channel {channel}")
        active[link] = rx_power
        self._cache.pop(channel, None)

    def release(self, link: Link, channel) -> None:
        active = self._links.get(channel, {})
        if link not in active:
            raise LedgerError(f"link {link} not scheduled on channel {channel}")
        del active[link]
        self._cache.pop(channel, None)

    def clear(self) -> None:
        self._links.clear()
        self._cache.clear()

    def snapshot(self):
        """Per (channel, receiver) interference sums; used for equality checks."""
        out = {}
        for c, links in self._links.items():
            for l in links:
                out[(c, l)] = self.interference_at(c, l[1], exclude=l)
        return out


def ledger_update(ledger: InterferenceLedger, action: str, link: Link, channel, rx_power: float | None = None) -> InterferenceLedger:
    """Apply ``schedule`` or ``release`` to ``ledger`` in place and return it."""
    if action == "schedule":
        if rx_power is None:
            rx_power = ledger.coupling(*link)
        ledger.schedule(link, channel, rx_power)
    elif action == "release":
        ledger.release(link, channel)
    else:
        raise ValueError(f"unknown ledger action {action!r}")
    return ledger
