"""First-fit routing and spectrum assignment.

Two engines make the same decisions from different data:

* the layered engine reads one precomputed mask per candidate interval;
* the slot-by-slot oracle keeps a free-slot row per link and checks every
  slot of every candidate interval on every link.

Both scan candidate intervals by ascending start slot and route each one
with the same deterministic BFS, so on mirrored states they must agree on
the admit/block decision, the interval and the path.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import ConflictError, InadmissibleWidthError, InvalidEndpointError, NotOccupiedError
from .lattice import Lattice, SlotInterval
from .netmodel import LayeredState
from .topology import Topology, shortest_path

__all__ = [
    "ConnectionRequest",
    "ConnectionRecord",
    "route_first_fit",
    "setup",
    "teardown",
    "LayeredEngine",
    "OracleState",
    "oracle_route_first_fit",
    "check_ratio",
]


@dataclass(frozen=True)
class ConnectionRequest:
    src: int
    dst: int
    width_b: int


@dataclass(frozen=True)
class ConnectionRecord:
    id: int
    path: tuple[int, ...]
    interval: SlotInterval

    @property
    def width(self) -> int:
        return self.interval.width


def _validate(req: ConnectionRequest, topology: Topology, lattice: Lattice) -> None:
    n = topology.n_nodes
    if not (0 <= req.src < n and 0 <= req.dst < n) or req.src == req.dst:
        raise InvalidEndpointError(f"invalid endpoints {req.src}->{req.dst}")
    if req.width_b not in lattice.levels:
        raise InadmissibleWidthError(f"width {req.width_b} is not admissible under {lattice.pattern}")


def route_first_fit(state: LayeredState, req: ConnectionRequest, conn_id: int = 0) -> ConnectionRecord | None:
    """Leftmost interval of width ``b`` that has a path, or ``None`` if blocked.

    Does not modify the state (only its check counter).
    """
    _validate(req, state.topology, state.lattice)
    topo = state.topology
    for node in state.lattice.level_nodes(req.width_b):
        path = shortest_path(topo, state.mask_at(node), req.src, req.dst)
        if path is not None:
            return ConnectionRecord(conn_id, tuple(path), node)
    return None


def setup(state: LayeredState, record: ConnectionRecord) -> None:
    state.occupy(record.path, record.interval)


def teardown(state: LayeredState, record: ConnectionRecord) -> None:
    state.release(record.path, record.interval)


class LayeredEngine:
    """Connection lifecycle on a :class:`LayeredState`."""

    def __init__(self, state: LayeredState):
        self.state = state
        self.active: dict[int, ConnectionRecord] = {}

    @classmethod
    def create(cls, lattice: Lattice, topology: Topology) -> LayeredEngine:
        return cls(LayeredState(lattice, topology))

    @property
    def check_counter(self) -> int:
        return self.state.check_counter

    def route(self, req: ConnectionRequest, conn_id: int = 0) -> ConnectionRecord | None:
        return route_first_fit(self.state, req, conn_id)

    def setup(self, record: ConnectionRecord) -> None:
        if record.id in self.active:
            raise ConflictError(f"connection {record.id} is already active")
        setup(self.state, record)
        self.active[record.id] = record

    def teardown(self, conn_id: int) -> ConnectionRecord:
        record = self.active.get(conn_id)
        if record is None:
            raise NotOccupiedError(f"connection {conn_id} is not active")
        teardown(self.state, record)
        del self.active[conn_id]
        return record


class OracleState:
    """Per-link free-slot rows; the baseline that checks slot by slot."""

    def __init__(self, topology: Topology, n_slots: int, widths):
        self.topology = topology
        self.n_slots = n_slots
        self.widths = tuple(widths)
        self.rows: list[list[bool]] = [[True] * n_slots for _ in range(topology.n_links)]
        self.check_counter = 0
        self.active: dict[int, ConnectionRecord] = {}

    @classmethod
    def for_lattice(cls, lattice: Lattice, topology: Topology) -> OracleState:
        return cls(topology, lattice.n_slots, lattice.levels)

    def route(self, req: ConnectionRequest, conn_id: int = 0) -> ConnectionRecord | None:
        return oracle_route_first_fit(self, self.topology, req, conn_id)

    def setup(self, record: ConnectionRecord) -> None:
        if record.id in self.active:
            raise ConflictError(f"connection {record.id} is already active")
        for link in record.path:
            row = self.rows[link]
            for m in record.interval.slots():
                if not row[m]:
                    raise ConflictError(f"slot {m} already occupied on link {link}")
        for link in record.path:
            row = self.rows[link]
            for m in record.interval.slots():
                row[m] = False
        self.active[record.id] = record

    def teardown(self, conn_id: int) -> ConnectionRecord:
        record = self.active.pop(conn_id, None)
        if record is None:
            raise NotOccupiedError(f"connection {conn_id} is not active")
        for link in record.path:
            row = self.rows[link]
            for m in record.interval.slots():
                row[m] = True
        return record

    def row_bits(self, link: int) -> int:
        return sum(1 << m for m, free in enumerate(self.rows[link]) if free)


def oracle_route_first_fit(
    oracle: OracleState, topology: Topology, req: ConnectionRequest, conn_id: int = 0
) -> ConnectionRecord | None:
    """First-fit by explicit slot checks: ``b`` reads per link per candidate start."""
    n = topology.n_nodes
    if not (0 <= req.src < n and 0 <= req.dst < n) or req.src == req.dst:
        raise InvalidEndpointError(f"invalid endpoints {req.src}->{req.dst}")
    b = req.width_b
    if b not in oracle.widths:
        raise InadmissibleWidthError(f"width {b} is not admissible")
    rows = oracle.rows
    n_links = topology.n_links
    for start in range(oracle.n_slots - b + 1):
        window = range(start, start + b)
        mask = 0
        for link in range(n_links):
            row = rows[link]
            if all(row[m] for m in window):
                mask |= 1 << link
        oracle.check_counter += b * n_links
        path = shortest_path(topology, mask, req.src, req.dst)
        if path is not None:
            return ConnectionRecord(conn_id, tuple(path), SlotInterval(start, start + b - 1))
    return None


def check_ratio(state, oracle) -> float:
    """Oracle checks per layered check for the same replayed trace."""
    layered = state.check_counter
    if layered == 0:
        raise ZeroDivisionError("no layered availability checks were recorded")
    return oracle.check_counter / layered
