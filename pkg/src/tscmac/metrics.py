"""Evaluation quantities: throughput, delay, loss, fairness, energy."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple


class AccountingError(ValueError):
    pass


def jain_fairness(values: Sequence[float]) -> Optional[float]:
    """(sum x)^2 / (n * sum x^2); None when every value is zero."""
    xs = [float(v) for v in values]
    if not xs:
        raise ValueError("empty input")
    if any(v < 0 for v in xs):
        raise ValueError("fairness needs nonnegative values")
    top = max(xs)
    if top == 0:
        return None
    xs = [v / top for v in xs]  # scale-free; keeps tiny values from underflowing when squared
    return math.fsum(xs) ** 2 / (len(xs) * math.fsum(v * v for v in xs))


def loss_rate(generated: int, delivered: int) -> float:
    if delivered < 0 or delivered > generated:
        raise AccountingError(f"delivered={delivered} outside [0, generated={generated}]")
    if generated == 0:
        return 0.0
    return (generated - delivered) / generated


def e2e_delay(records: Iterable[Tuple[float, float]]) -> Optional[float]:
    """Mean of (delivered - generated) over (generated, delivered) pairs; None if empty."""
    d = [t1 - t0 for t0, t1 in records]
    if not d:
        return None
    return math.fsum(d) / len(d)


def mean_ci(values: Sequence[float], z: float = 1.96) -> Tuple[float, float]:
    """Mean and half-width of a normal confidence interval across seeds."""
    n = len(values)
    m = math.fsum(values) / n
    if n < 2:
        return m, 0.0
    sd = math.sqrt(math.fsum((v - m) ** 2 for v in values) / (n - 1))
    return m, z * sd / math.sqrt(n)


@dataclass
class MetricsRecord:
    aggregated_throughput: float = 0.0
    mean_end_to_end_delay: Optional[float] = None
    packet_loss_rate: float = 0.0
    per_channel_throughput: List[float] = field(default_factory=list)
    fairness_index: Optional[float] = None
    total_energy: float = 0.0
    cna_trajectory: List[Tuple[int, float]] = field(default_factory=list)
    generated: int = 0
    delivered: int = 0
    lost: int = 0
    in_flight: int = 0
    config_hash: str = ""
    seed: int = 0

    @property
    def cna_final(self) -> float:
        return self.cna_trajectory[-1][1] if self.cna_trajectory else 0.0


def summarize(
    duration: float,
    channels: int,
    generated: int,
    deliveries: Sequence[Tuple[int, int, float, float, int, int]],
    dropped: int,
    in_flight: int,
    energy: float,
    cna: Sequence[Tuple[int, float]] = (),
    seed: int = 0,
    config_hash: str = "",
) -> MetricsRecord:
    """Build a record from raw outcomes.

    ``deliveries`` rows are (flow, seq, generated_at, delivered_at, channel,
    bytes); the channel is the one used on the final wireless hop.
    """
    if generated != len(deliveries) + dropped + in_flight:
        raise AccountingError(
            f"generated={generated} != delivered={len(deliveries)} + dropped={dropped} + in_flight={in_flight}"
        )
    bits = [0.0] * channels
    for _, _, _, _, ch, size in deliveries:
        bits[ch - 1] += size * 8
    per_ch = [b / duration for b in bits]
    return MetricsRecord(
        aggregated_throughput=math.fsum(bits) / duration,
        mean_end_to_end_delay=e2e_delay((d[2], d[3]) for d in deliveries),
        packet_loss_rate=loss_rate(generated, len(deliveries)),
        per_channel_throughput=per_ch,
        fairness_index=jain_fairness(per_ch),
        total_energy=energy,
        cna_trajectory=list(cna),
        generated=generated,
        delivered=len(deliveries),
        lost=dropped,
        in_flight=in_flight,
        config_hash=config_hash,
        seed=seed,
    )


def _fields(line: str) -> dict:
    out = {}
    for tok in line.split():
        k, _, v = tok.partition("=")
        out[k] = v
    det = {}
    for kv in out.get("detail", "").split(","):
        if "=" in kv:
            k, _, v = kv.partition("=")
            det[k] = v
    out["detail"] = det
    return out


def record_from_trace(lines: Iterable[str], seed: int = 0, config_hash: str = "") -> MetricsRecord:
    """Recompute a run's metrics from its event trace."""
    gen = 0
    dels = []
    drops = 0
    energy = 0.0
    cna = []
    end = None
    for line in lines:
        if not line.strip() or line.startswith("#"):
            continue
        f = _fields(line)
        ev, d = f["ev"], f["detail"]
        if ev == "gen":
            gen += 1
        elif ev == "deliver":
            dels.append((int(d["flow"]), int(d["seq"]), float(d["gen"]), float(f["t"]), int(f["ch"]), int(d["bytes"])))
        elif ev == "drop":
            drops += 1
        elif ev == "energy":
            energy = float(d["joules"])
        elif ev == "cna":
            cna.append((int(d["epoch"]), float(d["len"])))
        elif ev == "end":
            end = d
    if end is None:
        raise ValueError("trace has no end line")
    return summarize(
        float(end["duration"]), int(end["channels"]), gen, dels, drops, int(end["in_flight"]), energy, cna, seed, config_hash
    )
