"""Command-line runner: ``tscmac run | sweep | color``.

Exit codes: 0 ok, 1 internal invariant violation, 2 config/IO error,
3 topology error. Errors print one ``error code=<n> kind=<k> msg=<...>`` line
on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .ccaa import AssignmentError, assignment_load_profile, ccaa_color
from .conflict_graph import TopologyError, build_mcg
from .metrics import AccountingError, MetricsRecord, jain_fairness
from .sim.engine import InvariantError
from .sim.run import run
from .sim.scenario import ConfigError, ScenarioConfig, build_scenario, load_config, load_topology_file
from .sim.topogen import GenerationError

CSV_COLUMNS = (
    "scenario", "protocol", "channels", "seed", "pkt_bytes", "nctf", "offered_bps",
    "throughput_bps", "delay_s_mean", "loss_rate", "fairness", "energy_j", "cna_final_s",
)

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG, EXIT_TOPOLOGY = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, code: int, kind: str, msg: str):
        super().__init__(msg)
        self.code, self.kind, self.msg = code, kind, msg


def _num(x: Optional[float]) -> str:
    return "" if x is None else repr(float(x))


def csv_row(cfg: ScenarioConfig, m: MetricsRecord) -> List[str]:
    """One row; flow columns describe the flows actually simulated (file flows override config)."""
    _, flows = build_scenario(cfg)
    sizes = {f.packet_size for f in flows}
    pkt = sizes.pop() if len(sizes) == 1 else cfg.traffic.pkt_bytes
    offered = sum(f.rate_bps for f in flows) if cfg.traffic.kind == "cbr" else None
    return [
        cfg.name, cfg.protocol, str(cfg.channels), str(cfg.seed), str(pkt), str(len(flows)), _num(offered),
        _num(m.aggregated_throughput), _num(m.mean_end_to_end_delay), _num(m.packet_loss_rate),
        _num(m.fairness_index), _num(m.total_energy), _num(m.cna_final),
    ]


def append_rows(path: Optional[str], rows: Sequence[Sequence[str]]) -> None:
    """Append rows to a CSV, writing the header only when the file is new or empty."""
    if path is None or path == "-":
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerows(rows)
        return
    p = Path(path)
    new = not p.exists() or p.stat().st_size == 0
    try:
        with p.open("a", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if new:
                w.writerow(CSV_COLUMNS)
            w.writerows(rows)
    except OSError as e:
        raise CliError(EXIT_CONFIG, "io", f"cannot write {p}: {e.strerror}") from None


def _classify(e: BaseException) -> CliError:
    if isinstance(e, CliError):
        return e
    if isinstance(e, (TopologyError, GenerationError, AssignmentError)):
        return CliError(EXIT_TOPOLOGY, "topology", str(e))
    if isinstance(e, (ConfigError, OSError, ValueError)) and not isinstance(e, AccountingError):
        return CliError(EXIT_CONFIG, "config", str(e))
    if isinstance(e, (InvariantError, AccountingError)):
        return CliError(EXIT_INVARIANT, "invariant", str(e))
    return CliError(EXIT_INVARIANT, "internal", f"{type(e).__name__}: {e}")


def _load(path: str) -> ScenarioConfig:
    cfg = load_config(path)
    if cfg.topology_file and not Path(cfg.topology_file).exists():
        raise CliError(EXIT_CONFIG, "io", f"topology file not found: {cfg.topology_file}")
    return cfg


def _run_one(cfg: ScenarioConfig) -> Tuple[List[str], List[str]]:
    m, trace = run(cfg)
    return csv_row(cfg, m), trace


# --- run -----------------------------------------------------------------------
def cmd_run(config: str, seed: Optional[int] = None, out: Optional[str] = None, trace: Optional[str] = None) -> int:
    cfg = _load(config)
    if seed is not None:
        cfg = cfg.replace(seed=seed)
    if trace:
        cfg = cfg.replace(trace=True)
    row, lines = _run_one(cfg)
    if trace:
        try:
            Path(trace).write_text("".join(l + "\n" for l in lines))
        except OSError as e:
            raise CliError(EXIT_CONFIG, "io", f"cannot write {trace}: {e.strerror}") from None
    append_rows(out, [row])
    return EXIT_OK


# --- sweep ---------------------------------------------------------------------
@dataclass
class RunManifest:
    """One block per ``[run]`` section: scenario file, seeds, output path and sweep axes."""

    scenario: str
    seeds: List[int]
    output: str
    axes: Dict[str, List[str]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("manifest seed list is empty")
        if not Path(self.scenario).exists():
            raise CliError(EXIT_CONFIG, "io", f"scenario file not found: {self.scenario}")

    def grid(self) -> List[Dict[str, str]]:
        keys = list(self.axes)
        return [dict(zip(keys, vals)) for vals in itertools.product(*(self.axes[k] for k in keys))]


def parse_manifest(text: str, base_dir: Path = Path(".")) -> List[RunManifest]:
    """Sections start with ``[run]``; keys: scenario, seeds, output, ``axis.<config key>`` (comma lists)."""
    blocks: List[Dict[str, str]] = []
    cur: Optional[Dict[str, str]] = None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "[run]":
            cur = {}
            blocks.append(cur)
            continue
        if "=" not in line:
            raise ConfigError(f"manifest line {n}: expected key = value")
        if cur is None:
            cur = {}
            blocks.append(cur)
        k, v = (s.strip() for s in line.split("=", 1))
        if k in cur:
            raise ConfigError(f"manifest line {n}: duplicate key {k!r}")
        cur[k] = v
    out = []
    for b in blocks:
        for req in ("scenario", "seeds", "output"):
            if req not in b:
                raise ConfigError(f"manifest block missing {req!r}")
        axes = {}
        for k, v in b.items():
            if k.startswith("axis."):
                vals = [x.strip() for x in v.split(",") if x.strip()]
                if vals:
                    axes[k[5:]] = vals
            elif k not in ("scenario", "seeds", "output"):
                raise ConfigError(f"unknown manifest key {k!r}")
        try:
            seeds = [int(x) for x in b["seeds"].split(",") if x.strip()]
        except ValueError:
            raise ConfigError(f"bad seed list {b['seeds']!r}") from None
        scen = Path(b["scenario"])
        outp = Path(b["output"])
        out.append(RunManifest(
            str(scen if scen.is_absolute() else base_dir / scen), seeds,
            str(outp if outp.is_absolute() else base_dir / outp), axes,
        ))
    if not out:
        raise ConfigError("manifest has no run blocks")
    return out


def _sweep_job(args: Tuple[str, Dict[str, str], int]) -> Tuple[Optional[List[str]], Optional[Tuple[int, str, str]]]:
    scenario, point, seed = args
    try:
        cfg = _load(scenario).replace(**point).replace(seed=seed)
        return _run_one(cfg)[0], None
    except Exception as e:  # recorded per row
        c = _classify(e)
        return None, (c.code, c.kind, c.msg)


def cmd_sweep(manifest: str, jobs: int = 1) -> int:
    p = Path(manifest)
    try:
        text = p.read_text()
    except OSError as e:
        raise CliError(EXIT_CONFIG, "io", f"cannot read manifest {p}: {e.strerror}") from None
    worst = EXIT_OK
    for m in parse_manifest(text, p.parent):
        # rows keyed by (axis point, seed); written in that order whatever the execution order
        work = [(m.scenario, point, s) for point in m.grid() for s in m.seeds]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as ex:
                results = list(ex.map(_sweep_job, work))
        else:
            results = [_sweep_job(w) for w in work]
        rows = []
        for (_, point, seed), (row, err) in zip(work, results):
            if err is not None:
                code, kind, msg = err
                where = ",".join(f"{k}={v}" for k, v in point.items())
                print(f"error code={code} kind={kind} row=seed={seed}{',' if where else ''}{where} msg={msg}", file=sys.stderr)
                worst = max(worst, code)
            else:
                rows.append(row)
        append_rows(m.output, rows)
    return worst


# --- color ---------------------------------------------------------------------
def cmd_color(topology: str, channels: int, seed: int = 0) -> int:
    if channels < 1:
        raise CliError(EXIT_CONFIG, "config", "channels must be >= 1")
    topo, _ = load_topology_file(topology, ScenarioConfig().phys)
    a = ccaa_color(build_mcg(topo), list(range(1, channels + 1)), seed)
    buf = io.StringIO()
    buf.write("link channel radios\n")
    for pair in sorted(a.link_channel):
        v = a.link_vertex.get(pair)
        radios = f"{v.p}.{v.s}-{v.q}.{v.t}" if v is not None else "-"
        buf.write(f"{pair[0]}-{pair[1]} {a.link_channel[pair]} {radios}{' shared' if pair in a.shared else ''}\n")
    prof = assignment_load_profile(a)
    buf.write("load " + " ".join(f"ch{c}={prof[c]}" for c in sorted(prof)) + "\n")
    f = jain_fairness([prof[c] for c in sorted(prof)])
    buf.write(f"fairness {'' if f is None else repr(f)}\n")
    sys.stdout.write(buf.getvalue())
    return EXIT_OK


# --- entry point ---------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tscmac", description="Two-stage multi-channel MAC simulator")
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run one scenario and append a CSV row")
    r.add_argument("config")
    r.add_argument("--seed", type=int)
    r.add_argument("--out", help="CSV path (default: stdout)")
    r.add_argument("--trace", help="write the per-event trace here")
    s = sub.add_parser("sweep", help="run a manifest of scenarios x axes x seeds")
    s.add_argument("manifest")
    s.add_argument("--jobs", type=int, default=1)
    c = sub.add_parser("color", help="first-stage control-channel coloring of a topology file")
    c.add_argument("topology")
    c.add_argument("--channels", type=int, required=True)
    c.add_argument("--seed", type=int, default=0)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.cmd == "run":
            return cmd_run(args.config, args.seed, args.out, args.trace)
        if args.cmd == "sweep":
            return cmd_sweep(args.manifest, args.jobs)
        return cmd_color(args.topology, args.channels, args.seed)
    except Exception as e:
        c = _classify(e)
        print(f"error code={c.code} kind={c.kind} msg={c.msg}", file=sys.stderr)
        return c.code


if __name__ == "__main__":
    sys.exit(main())
