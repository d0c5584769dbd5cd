"""Dynamic-traffic discrete-event simulation over the RSA engines.

Arrivals are Poisson, holding times exponential, blocked requests are lost.
Randomness comes from a numpy ``SeedSequence(seed)`` spawned into four
independent PCG64 streams, in this order: inter-arrival times, holding
times, endpoint pairs, request widths. Every arrival consumes exactly one
draw from each stream whether it is admitted or not, so a seed fixes the
offered trace independently of the routing engine.
"""
from __future__ import annotations

import csv
import heapq
import io
import logging
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

from .errors import ConfigError, EngineMismatchError, InadmissibleWidthError, InvalidEndpointError, TraceError
from .lattice import Lattice, RequestPattern
from .rsa import ConnectionRecord, ConnectionRequest, LayeredEngine, OracleState
from .topology import Topology, builtin_topology, load_topology, parse_topology

log = logging.getLogger(__name__)

__all__ = [
    "SimConfig",
    "SimMetrics",
    "TraceEvent",
    "Decision",
    "run_simulation",
    "replay_trace",
    "read_config",
    "parse_config",
    "read_trace",
    "parse_trace",
    "fragmentation",
    "write_metrics_csv",
    "write_decision_log",
    "write_event_log",
]

ENGINES = ("layered", "oracle", "both")


@dataclass
class SimConfig:
    n_slots: int
    pattern: RequestPattern
    topology: Topology
    arrival_rate: float = 1.0
    mean_holding: float = 10.0
    num_requests: int = 1000
    width_weights: dict[int, float] | None = None
    seed: int = 0
    engine: str = "layered"
    topology_source: str = ""

    def validate(self) -> None:
        if self.n_slots < 1:
            raise ConfigError(f"T must be >= 1, got {self.n_slots}")
        if not self.arrival_rate > 0:
            raise ConfigError(f"arrival_rate must be > 0, got {self.arrival_rate}")
        if not self.mean_holding > 0:
            raise ConfigError(f"mean_holding must be > 0, got {self.mean_holding}")
        if self.num_requests < 1:
            raise ConfigError(f"num_requests must be >= 1, got {self.num_requests}")
        if self.engine not in ENGINES:
            raise ConfigError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        if self.topology.n_nodes < 2:
            raise ConfigError("topology needs at least two nodes")
        if self.width_weights is not None:
            for w, weight in self.width_weights.items():
                if not self.pattern.admits(w):
                    raise ConfigError(f"width {w} is not admissible under {self.pattern}")
                if weight < 0 or not math.isfinite(weight):
                    raise ConfigError(f"weight for width {w} must be finite and >= 0")
            if not any(self.width_weights.values()):
                raise ConfigError("width weights are all zero")

    def width_distribution(self) -> tuple[np.ndarray, np.ndarray]:
        widths = np.array(self.pattern.widths)
        if self.width_weights is None:
            probs = np.full(len(widths), 1.0 / len(widths))
        else:
            raw = np.array([self.width_weights.get(int(w), 0.0) for w in widths], dtype=float)
            probs = raw / raw.sum()
        return widths, probs


@dataclass
class SimMetrics:
    offered: int = 0
    blocked: int = 0
    blocking_probability: float = 0.0
    mean_slot_utilization: float = 0.0
    mean_fragmentation: float = 0.0
    layered_checks: int = 0
    oracle_checks: int = 0

    @property
    def check_ratio(self) -> float:
        if self.layered_checks == 0:
            raise ZeroDivisionError("no layered availability checks were recorded")
        return self.oracle_checks / self.layered_checks


@dataclass(frozen=True)
class TraceEvent:
    id: int
    event: str
    src: int | None = None
    dst: int | None = None
    b: int | None = None
    line: int | None = None


@dataclass(frozen=True)
class Decision:
    id: int
    record: ConnectionRecord | None
    src: int

    @property
    def admitted(self) -> bool:
        return self.record is not None


@dataclass
class _EventRow:
    time: float
    event: str
    id: int
    decision: str = ""
    start_slot: str = ""


def fragmentation(free_row: int, n_slots: int) -> float:
    """``1 - largest free block / free slots`` for one link; 0 with no free slots."""
    free = bin(free_row).count("1")
    if free == 0:
        return 0.0
    longest = 0
    x = free_row
    while x:
        x &= x >> 1
        longest += 1
    return 1.0 - longest / free


class _Run:
    """Engine state plus exact time-integration of utilisation and fragmentation."""

    def __init__(self, config: SimConfig):
        self.config = config
        topo = config.topology
        self.n_slots = config.n_slots
        pattern = config.pattern
        if pattern.max_width > config.n_slots:
            log.warning("pattern %s exceeds T=%d; wider requests will always block", pattern, config.n_slots)
            pattern = pattern.clamped(config.n_slots)
        self.lattice = Lattice(pattern, config.n_slots)
        self.layered = LayeredEngine.create(self.lattice, topo) if config.engine in ("layered", "both") else None
        self.oracle = OracleState.for_lattice(self.lattice, topo) if config.engine in ("oracle", "both") else None
        n_links = topo.n_links
        self.capacity = n_links * config.n_slots
        self.occupied = 0
        self.frag = [0.0] * n_links
        self.frag_sum = 0.0
        self.now = 0.0
        self.util_area = 0.0
        self.frag_area = 0.0
        self.offered = 0
        self.blocked = 0
        self.step = 0
        self.active: dict[int, ConnectionRecord] = {}
        self.events: list[_EventRow] = []

    def advance(self, t: float) -> None:
        dt = t - self.now
        if dt > 0:
            if self.capacity:
                self.util_area += dt * self.occupied / self.capacity
                self.frag_area += dt * self.frag_sum / len(self.frag)
            self.now = t

    def _free_row(self, link: int) -> int:
        if self.layered is not None:
            return self.layered.state.slot_row(link)
        return self.oracle.row_bits(link)

    def _refresh(self, links: Iterable[int]) -> None:
        for link in links:
            value = fragmentation(self._free_row(link), self.n_slots)
            self.frag_sum += value - self.frag[link]
            self.frag[link] = value

    def arrive(self, conn_id: int, req: ConnectionRequest) -> ConnectionRecord | None:
        self.offered += 1
        self.step += 1
        record = None
        if req.width_b in self.lattice.levels:
            if self.layered is not None:
                record = self.layered.route(req, conn_id)
            if self.oracle is not None:
                other = self.oracle.route(req, conn_id)
                if self.layered is None:
                    record = other
                elif other != record:
                    raise EngineMismatchError(self.step, record, other)
        elif not self.config.pattern.admits(req.width_b):
            raise InadmissibleWidthError(f"width {req.width_b} is not admissible under {self.config.pattern}")
        if record is None:
            self.blocked += 1
            self.events.append(_EventRow(self.now, "arrive", conn_id, "block"))
            return None
        for engine in (self.layered, self.oracle):
            if engine is not None:
                engine.setup(record)
        self.active[conn_id] = record
        self.occupied += len(record.path) * record.width
        self._refresh(record.path)
        self.events.append(_EventRow(self.now, "arrive", conn_id, "admit", str(record.interval.start)))
        return record

    def depart(self, conn_id: int) -> None:
        record = self.active.pop(conn_id)
        for engine in (self.layered, self.oracle):
            if engine is not None:
                engine.teardown(conn_id)
        self.occupied -= len(record.path) * record.width
        self._refresh(record.path)
        self.events.append(_EventRow(self.now, "depart", conn_id))

    def metrics(self) -> SimMetrics:
        horizon = self.now
        return SimMetrics(
            offered=self.offered,
            blocked=self.blocked,
            blocking_probability=self.blocked / self.offered if self.offered else 0.0,
            mean_slot_utilization=self.util_area / horizon if horizon > 0 else 0.0,
            mean_fragmentation=self.frag_area / horizon if horizon > 0 else 0.0,
            layered_checks=self.layered.check_counter if self.layered is not None else 0,
            oracle_checks=self.oracle.check_counter if self.oracle is not None else 0,
        )


def _streams(seed: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(4)
    return [np.random.Generator(np.random.PCG64(s)) for s in children]


def run_simulation(config: SimConfig, *, return_run: bool = False):
    """Simulate ``num_requests`` Poisson arrivals until every connection departs.

    Metrics are integrated exactly between events over ``[0, t_last]``.
    With ``engine="both"`` every decision is cross-checked and the first
    disagreement raises :class:`EngineMismatchError`.
    """
    config.validate()
    run = _Run(config)
    rng_arrival, rng_holding, rng_pair, rng_width = _streams(config.seed)
    widths, probs = config.width_distribution()
    n = config.topology.n_nodes
    n_pairs = n * (n - 1)

    arrivals = np.cumsum(rng_arrival.exponential(1.0 / config.arrival_rate, size=config.num_requests))
    # (time, kind, seq, id); kind 0 = departure sorts before a simultaneous arrival
    heap: list[tuple[float, int, int, int]] = [(float(t), 1, i, i) for i, t in enumerate(arrivals)]
    heapq.heapify(heap)
    seq = config.num_requests
    holding = rng_holding.exponential(config.mean_holding, size=config.num_requests)
    pairs = rng_pair.integers(0, n_pairs, size=config.num_requests)
    chosen = rng_width.choice(widths, size=config.num_requests, p=probs)

    while heap:
        when, kind, _, conn_id = heapq.heappop(heap)
        run.advance(when)
        if kind == 0:
            run.depart(conn_id)
            continue
        src, rest = divmod(int(pairs[conn_id]), n - 1)
        dst = rest if rest < src else rest + 1
        req = ConnectionRequest(src, dst, int(chosen[conn_id]))
        if run.arrive(conn_id, req) is not None:
            heapq.heappush(heap, (when + float(holding[conn_id]), 0, seq, conn_id))
            seq += 1

    metrics = run.metrics()
    if return_run:
        return metrics, run
    return metrics


def replay_trace(config: SimConfig, trace) -> tuple[list[Decision], SimMetrics]:
    """Replay arrive/depart events in file order; event ``n`` happens at time ``n``.

    ``trace`` is a path, CSV text, or an iterable of :class:`TraceEvent`.
    Only ``n_slots``, ``pattern``, ``topology`` and ``engine`` of ``config``
    are used.
    """
    if isinstance(trace, Path):
        events = read_trace(trace, config.topology)
    elif isinstance(trace, str):
        events = parse_trace(trace, config.topology)
    else:
        events = list(trace)
    if config.engine not in ENGINES:
        raise ConfigError(f"engine must be one of {ENGINES}, got {config.engine!r}")
    run = _Run(config)
    decisions: list[Decision] = []
    seen: set[int] = set()
    for step, ev in enumerate(events, start=1):
        run.advance(float(step))
        if ev.event == "arrive":
            if ev.id in seen:
                raise TraceError(f"duplicate arrival id {ev.id}", ev.line)
            seen.add(ev.id)
            try:
                record = run.arrive(ev.id, ConnectionRequest(ev.src, ev.dst, ev.b))
            except (InadmissibleWidthError, InvalidEndpointError) as exc:
                raise TraceError(str(exc), ev.line) from None
            decisions.append(Decision(ev.id, record, ev.src))
        else:
            if ev.id not in seen:
                raise TraceError(f"departure of id {ev.id} before its arrival", ev.line)
            if ev.id in run.active:
                run.depart(ev.id)
            # departures of blocked requests are no-ops
    return decisions, run.metrics()


# -- file formats -------------------------------------------------------------

_CONFIG_KEYS = {
    "T", "pattern", "topology", "topology_inline", "arrival_rate", "mean_holding",
    "num_requests", "width_weights", "seed", "engine",
}


def parse_config(text: str, base_dir: str | Path | None = None) -> SimConfig:
    """Parse flat ``key = value`` text; ``#`` lines are comments.

    ``topology`` is a file path (relative to ``base_dir``) or ``builtin:NAME``;
    ``topology_inline`` holds ``;``-separated ``A B`` links instead.
    ``width_weights`` is a list like ``1:0.5, 4:0.5``.
    """
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected key=value")
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = value.strip()

    def need(key: str) -> str:
        if key not in values:
            raise ConfigError(f"missing required key {key!r}")
        return values[key]

    try:
        n_slots = int(need("T"))
        pattern = RequestPattern.parse(need("pattern"))
        if "topology_inline" in values:
            topo = parse_topology("\n".join(values["topology_inline"].split(";")))
            source = "inline"
        else:
            source = need("topology")
            if source.startswith("builtin:"):
                topo = builtin_topology(source.split(":", 1)[1])
            else:
                path = Path(source)
                if base_dir is not None and not path.is_absolute():
                    path = Path(base_dir) / path
                topo = load_topology(path)
        weights = None
        if values.get("width_weights"):
            weights = {}
            for item in values["width_weights"].split(","):
                w, _, weight = item.partition(":")
                weights[int(w)] = float(weight)
        config = SimConfig(
            n_slots=n_slots,
            pattern=pattern,
            topology=topo,
            arrival_rate=float(values.get("arrival_rate", 1.0)),
            mean_holding=float(values.get("mean_holding", 10.0)),
            num_requests=int(values.get("num_requests", 1000)),
            width_weights=weights,
            seed=int(values.get("seed", 0)),
            engine=values.get("engine", "layered"),
            topology_source=source,
        )
    except ConfigError:
        raise
    except (ValueError, OSError) as exc:
        raise ConfigError(str(exc)) from exc
    config.validate()
    return config


def read_config(path: str | Path) -> SimConfig:
    path = Path(path)
    return parse_config(path.read_text(), base_dir=path.parent)


TRACE_HEADER = ["id", "event", "src", "dst", "b"]


def parse_trace(text: str, topology: Topology) -> list[TraceEvent]:
    """Parse the ``id,event,src,dst,b`` request trace (node labels for src/dst)."""
    reader = csv.reader(io.StringIO(text))
    events: list[TraceEvent] = []
    header_seen = False
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        row = [cell.strip() for cell in row]
        if not header_seen:
            if row != TRACE_HEADER:
                raise TraceError(f"expected header {','.join(TRACE_HEADER)}", lineno)
            header_seen = True
            continue
        if len(row) != 5:
            raise TraceError(f"expected 5 fields, got {len(row)}", lineno)
        cid, event, src, dst, b = row
        try:
            conn_id = int(cid)
        except ValueError:
            raise TraceError(f"bad id {cid!r}", lineno) from None
        if event == "arrive":
            try:
                s, d = topology.node_index(src), topology.node_index(dst)
                width = int(b)
            except (InvalidEndpointError, ValueError) as exc:
                raise TraceError(str(exc), lineno) from None
            events.append(TraceEvent(conn_id, "arrive", s, d, width, lineno))
        elif event == "depart":
            if src or dst or b:
                raise TraceError("depart rows must leave src, dst and b empty", lineno)
            events.append(TraceEvent(conn_id, "depart", line=lineno))
        else:
            raise TraceError(f"unknown event {event!r}", lineno)
    return events


def read_trace(path: str | Path, topology: Topology) -> list[TraceEvent]:
    return parse_trace(Path(path).read_text(), topology)


def write_decision_log(decisions: Iterable[Decision], topology: Topology, fh: TextIO) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["id", "decision", "start_slot", "path"])
    for d in decisions:
        if d.record is None:
            writer.writerow([d.id, "block", "", ""])
            continue
        nodes = topology.path_nodes(d.src, list(d.record.path))
        path = "+".join(topology.node_names[v] for v in nodes)
        writer.writerow([d.id, "admit", d.record.interval.start, path])


METRIC_FIELDS = [f.name for f in fields(SimMetrics)]


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def write_metrics_csv(metrics: SimMetrics, fh: TextIO) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(METRIC_FIELDS)
    row = asdict(metrics)
    writer.writerow([_fmt(row[name]) for name in METRIC_FIELDS])


def write_event_log(run: _Run, fh: TextIO) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["timestamp", "event", "id", "decision", "start_slot"])
    for ev in run.events:
        writer.writerow([_fmt(ev.time), ev.event, ev.id, ev.decision, ev.start_slot])
