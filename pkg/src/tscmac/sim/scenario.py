"""Scenario configuration, flat ``key = value`` config files and topology files."""

from __future__ import annotations

import copy
import dataclasses
import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from ..conflict_graph import Node, Topology, TopologyError, build_links
from ..mac import MacTiming
from ..phys import PhysParams
from .topogen import TopologySpec, gen_topology
from .traffic import WIRED, CbrFlow, gen_flows, route_flow

PROTOCOLS = ("tsc_m2mac", "rama_like", "csma_single")


class ConfigError(ValueError):
    pass


@dataclass
class CnaSpec:
    mode: str = "fixed"  # or "adaptive"
    fixed: float = 0.020
    min: float = 0.010
    max: float = 0.050
    step: float = 0.005
    threshold: float = 0.002
    guard: str = "literal"
    margin: float = 0.0
    epochs: int = 1  # beacon intervals per adjustment


@dataclass
class TrafficSpec:
    kind: str = "cbr"  # cbr | saturated
    nctf: int = 6
    wired_flows: int = 1
    rate_bps: float = 50_000.0
    offered_bps: Optional[float] = None  # overrides rate_bps: split evenly over flows
    pkt_bytes: int = 512
    one_hop: bool = False
    per_node: bool = False  # one flow per node to a random neighbour
    transfer_mean_bits: float = 100e6
    wired_delay: float = 0.001


@dataclass
class ScenarioConfig:
    name: str = "scenario"
    protocol: str = "tsc_m2mac"
    channels: int = 2
    seed: int = 0
    duration: float = 10.0
    beacon_interval: float = 0.1
    psm: bool = False
    power_profile: str = "wavelan"
    trace: bool = False
    topology_file: Optional[str] = None
    topology: TopologySpec = field(default_factory=lambda: TopologySpec(kind="random", nodes=12, area=1060.0))
    phys: PhysParams = field(default_factory=PhysParams)
    mac: MacTiming = field(default_factory=MacTiming)
    cna: CnaSpec = field(default_factory=CnaSpec)
    traffic: TrafficSpec = field(default_factory=TrafficSpec)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        if self.channels < 1:
            raise ConfigError("channels must be >= 1")
        if self.protocol == "rama_like" and self.channels < 2:
            raise ConfigError("rama_like needs at least 2 channels")
        if not self.duration > 0 or not self.beacon_interval > 0:
            raise ConfigError("duration and beacon_interval must be > 0")
        if self.cna.mode not in ("fixed", "adaptive"):
            raise ConfigError(f"cna mode must be fixed or adaptive, got {self.cna.mode!r}")
        hi = self.cna.fixed if self.cna.mode == "fixed" else self.cna.max
        if not 0 < hi < self.beacon_interval:
            raise ConfigError("negotiation window must lie inside the beacon interval")
        if self.traffic.kind not in ("cbr", "saturated"):
            raise ConfigError(f"traffic kind must be cbr or saturated, got {self.traffic.kind!r}")
        if self.traffic.nctf < 0 or self.traffic.pkt_bytes <= 0:
            raise ConfigError("nctf must be >= 0 and pkt_bytes > 0")
        if self.power_profile not in ("wavelan", "cisco"):
            raise ConfigError(f"unknown power profile {self.power_profile!r}")

    def replace(self, **kw) -> "ScenarioConfig":
        """Copy with dotted-key overrides, e.g. ``replace(**{"traffic.pkt_bytes": 210})``."""
        return apply_overrides(self, kw)

    def config_hash(self) -> str:
        return hashlib.sha256(repr(self).encode()).hexdigest()[:12]

    @property
    def flow_rate(self) -> float:
        t = self.traffic
        if t.offered_bps is not None and t.nctf:
            return t.offered_bps / t.nctf
        return t.rate_bps


def _coerce(value: str, current: Any, key: str):
    v = value.strip()
    try:
        if isinstance(current, bool):
            if v.lower() in ("1", "true", "yes", "on"):
                return True
            if v.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(v)
        if isinstance(current, int):
            return int(v)
        if isinstance(current, float):
            return float(v)
        if current is None:
            if v.lower() in ("none", ""):
                return None
            for cast in (int, float):
                try:
                    return cast(v)
                except ValueError:
                    pass
            return v
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {value!r}") from None
    return v


def _set(obj, parts: List[str], value, key: str):
    """Return ``obj`` with the dotted path set; mutable sections are edited on a copy."""
    name = parts[0]
    if not dataclasses.is_dataclass(obj) or name not in {f.name for f in dataclasses.fields(obj)}:
        raise ConfigError(f"unknown config key {key!r}")
    cur = getattr(obj, name)
    if len(parts) > 1:
        new = _set(cur, parts[1:], value, key)
    elif dataclasses.is_dataclass(cur):
        raise ConfigError(f"config key {key!r} names a section, not a value")
    else:
        new = _coerce(value, cur, key) if isinstance(value, str) else value
    if obj.__dataclass_params__.frozen:
        try:
            return dataclasses.replace(obj, **{name: new})
        except (ValueError, TypeError) as e:
            raise ConfigError(f"{key}: {e}") from None
    out = copy.copy(obj)
    setattr(out, name, new)
    return out


# top-level keys live under "scenario." in files; "mac.cna." maps to the cna section
def _path(key: str) -> List[str]:
    parts = key.strip().split(".")
    if parts[0] == "scenario":
        parts = parts[1:]
    if parts[:2] == ["mac", "cna"]:
        parts = parts[1:]
    if not parts or not all(parts):
        raise ConfigError(f"malformed key {key!r}")
    return parts


def apply_overrides(cfg: ScenarioConfig, overrides: Dict[str, Any]) -> ScenarioConfig:
    for k in sorted(overrides):
        cfg = _set(cfg, _path(k), overrides[k], k)
    cfg.validate()
    return cfg


def parse_config_text(text: str, base: Optional[ScenarioConfig] = None) -> ScenarioConfig:
    kv: Dict[str, str] = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        if k in kv:
            raise ConfigError(f"line {n}: duplicate key {k!r}")
        kv[k] = v
    return apply_overrides(base or ScenarioConfig(), kv)


def load_config(path: str | Path) -> ScenarioConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {p}: {e.strerror}") from None
    cfg = parse_config_text(text)
    if cfg.topology_file and not Path(cfg.topology_file).is_absolute():
        cfg = dataclasses.replace(cfg, topology_file=str(p.parent / cfg.topology_file))
    return cfg


def parse_topology_text(text: str) -> Tuple[List[Node], List[Tuple[int, int, float, int]]]:
    """``node <id> <x> <y> <radios> <gw>`` and ``flow <src> <dst> <rate_bps> <pkt_bytes>`` lines.

    A flow destination of ``wired`` targets the sink behind the gateway.
    """
    nodes, flows = [], []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].split()
        if not line:
            continue
        try:
            if line[0] == "node" and len(line) == 6:
                nodes.append(Node(int(line[1]), float(line[2]), float(line[3]), int(line[4]), bool(int(line[5]))))
            elif line[0] == "flow" and len(line) == 5:
                dst = WIRED if line[2] == "wired" else int(line[2])
                flows.append((int(line[1]), dst, float(line[3]), int(line[4])))
            else:
                raise ConfigError(f"topology line {n}: cannot parse {raw.strip()!r}")
        except ValueError:
            raise ConfigError(f"topology line {n}: bad number in {raw.strip()!r}") from None
    if not nodes:
        raise ConfigError("topology file has no nodes")
    return nodes, flows


def load_topology_file(path: str | Path, phys: PhysParams):
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read topology {p}: {e.strerror}") from None
    nodes, flows = parse_topology_text(text)
    return build_links(nodes, phys), flows


def build_scenario(cfg: ScenarioConfig) -> Tuple[Topology, List[CbrFlow]]:
    """Topology and routed flows; identical for every protocol given the seed."""
    t = cfg.traffic
    if cfg.topology_file:
        topo, raw = load_topology_file(cfg.topology_file, cfg.phys)
        flows = []
        for i, (s, d, rate, size) in enumerate(raw):
            if s not in topo.nodes or (d != WIRED and d not in topo.nodes):
                raise TopologyError(f"flow {i} references an unknown node")
            f = CbrFlow(i, s, d, rate, size, kind=t.kind)
            f.route = route_flow(topo, f)
            flows.append(f)
        if not raw and (t.nctf or t.per_node):
            flows = gen_flows(topo, t.nctf, cfg.flow_rate, t.pkt_bytes, cfg.seed, t.wired_flows, t.one_hop, t.kind, t.per_node)
    else:
        topo = gen_topology(cfg.topology, cfg.phys, cfg.seed)
        flows = gen_flows(topo, t.nctf, cfg.flow_rate, t.pkt_bytes, cfg.seed, t.wired_flows, t.one_hop, t.kind, t.per_node) if (t.nctf or t.per_node) else []
    return topo, flows
