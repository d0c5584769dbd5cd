"""Join semi-lattice of contiguous spectrum-slot intervals.

A fiber carries ``T`` slots. Each admissible request width ``w`` contributes
the ``T - w + 1`` intervals ``[i, i + w - 1]``; ordering them by containment
gives a poset whose Hasse diagram records which slot groups depend on which.
Two request patterns are supported: ``uniform(k)`` (widths ``1..k``) and
``pow2(p)`` (widths ``1, 2, 4, ..., 2**p``).

The :class:`Lattice` object is immutable. Occupancy effects (up-set deletion,
fragmentation into components) are evaluated against an occupancy set and
never mutate the structure, so one lattice can be shared by every link.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, NamedTuple

from .errors import InadmissibleWidthError, InvalidPatternError, UnknownNodeError

__all__ = [
    "SlotInterval",
    "RequestPattern",
    "Lattice",
    "OUT_OF_LATTICE",
    "build_lattice",
    "expected_node_count",
    "up_set",
    "down_neighbors",
    "level_nodes",
    "interval_meet",
    "interval_join",
    "components_after",
]


class SlotInterval(NamedTuple):
    """Contiguous slots ``start..end`` (both inclusive, 0-based)."""

    start: int
    end: int

    @classmethod
    def slot(cls, i: int) -> SlotInterval:
        return cls(i, i)

    @classmethod
    def of_width(cls, start: int, width: int) -> SlotInterval:
        return cls(start, start + width - 1)

    @property
    def width(self) -> int:
        return self.end - self.start + 1

    @property
    def label(self) -> str:
        if self.start == self.end:
            return f"s_{self.start}"
        return f"s_{{{self.start},{self.end}}}"

    def slots(self) -> range:
        return range(self.start, self.end + 1)

    def contains(self, other: SlotInterval) -> bool:
        return self.start <= other.start and other.end <= self.end

    def __str__(self) -> str:
        return self.label


class _OutOfLattice:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "OUT_OF_LATTICE"

    def __bool__(self) -> bool:
        return False


OUT_OF_LATTICE = _OutOfLattice()
"""Result of :func:`interval_join` when the span has an inadmissible width."""


@dataclass(frozen=True)
class RequestPattern:
    """Admissible request widths.

    ``kind`` is ``"uniform"`` (widths ``1..bound``) or ``"pow2"``
    (widths ``2**0..2**bound``).
    """

    kind: str
    bound: int

    def __post_init__(self):
        if self.kind not in ("uniform", "pow2"):
            raise InvalidPatternError(f"unknown pattern kind {self.kind!r}")
        if isinstance(self.bound, bool) or not isinstance(self.bound, int):
            raise InvalidPatternError(f"pattern bound must be an integer, got {self.bound!r}")
        if self.kind == "uniform" and self.bound < 1:
            raise InvalidPatternError(f"uniform bound k must be >= 1, got {self.bound}")
        if self.kind == "pow2" and self.bound < 0:
            raise InvalidPatternError(f"pow2 exponent p must be >= 0, got {self.bound}")

    @classmethod
    def uniform(cls, k: int) -> RequestPattern:
        return cls("uniform", k)

    @classmethod
    def pow2(cls, p: int) -> RequestPattern:
        return cls("pow2", p)

    @classmethod
    def parse(cls, text: str) -> RequestPattern:
        """Parse ``"uniform:4"`` or ``"pow2:2"``."""
        kind, sep, bound = text.strip().partition(":")
        if not sep:
            raise InvalidPatternError(f"expected KIND:BOUND, got {text!r}")
        try:
            value = int(bound)
        except ValueError:
            raise InvalidPatternError(f"pattern bound is not an integer: {bound!r}") from None
        return cls(kind.strip(), value)

    @property
    def max_width(self) -> int:
        return self.bound if self.kind == "uniform" else 1 << self.bound

    @property
    def widths(self) -> tuple[int, ...]:
        if self.kind == "uniform":
            return tuple(range(1, self.bound + 1))
        return tuple(1 << e for e in range(self.bound + 1))

    def admits(self, width: int) -> bool:
        if width < 1 or width > self.max_width:
            return False
        return self.kind == "uniform" or width & (width - 1) == 0

    def validate(self, n_slots: int) -> None:
        if n_slots < 1:
            raise InvalidPatternError(f"slot count must be >= 1, got {n_slots}")
        if self.max_width > n_slots:
            raise InvalidPatternError(
                f"{self} needs {self.max_width} consecutive slots but the fiber has {n_slots}"
            )

    def clamped(self, n_slots: int) -> RequestPattern:
        """The same pattern restricted to widths that fit in ``n_slots``."""
        if self.kind == "uniform":
            return RequestPattern.uniform(min(self.bound, n_slots))
        return RequestPattern.pow2(min(self.bound, n_slots.bit_length() - 1))

    def __str__(self) -> str:
        return f"{self.kind}:{self.bound}"


def expected_node_count(pattern: RequestPattern, n_slots: int) -> int:
    """Closed-form number of lattice elements.

    uniform(k): ``k * (T - (k - 1) / 2)``, evaluated as ``k * (2T - k + 1) // 2``
    (the numerator is always even). pow2(p): ``T(p + 1) - 2**(p + 1) + p + 2``.
    """
    pattern.validate(n_slots)
    if pattern.kind == "uniform":
        k = pattern.bound
        return k * (2 * n_slots - k + 1) // 2
    p = pattern.bound
    return n_slots * (p + 1) - (1 << (p + 1)) + p + 2


class Lattice:
    """Hasse diagram of all admissible slot intervals for one fiber.

    Nodes are ordered level-major (ascending width) and by ascending start
    within a level, which is also the first-fit scan order.
    """

    def __init__(self, pattern: RequestPattern, n_slots: int):
        pattern.validate(n_slots)
        self.pattern = pattern
        self.n_slots = n_slots
        self.levels: tuple[int, ...] = pattern.widths
        # offset of the first node of each level inside ``nodes``
        offsets = []
        total = 0
        for w in self.levels:
            offsets.append(total)
            total += n_slots - w + 1
        self._offsets = tuple(offsets)
        self._level_pos = {w: i for i, w in enumerate(self.levels)}
        self.nodes: tuple[SlotInterval, ...] = tuple(
            SlotInterval(i, i + w - 1) for w in self.levels for i in range(n_slots - w + 1)
        )

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self) -> Iterator[SlotInterval]:
        return iter(self.nodes)

    def __contains__(self, node) -> bool:
        try:
            self.index(node)
        except UnknownNodeError:
            return False
        return True

    def __repr__(self) -> str:
        return f"Lattice(pattern={self.pattern}, n_slots={self.n_slots}, nodes={len(self.nodes)})"

    def index(self, node: SlotInterval) -> int:
        """Position of ``node`` in :attr:`nodes`."""
        try:
            start, end = node
        except (TypeError, ValueError):
            raise UnknownNodeError(node) from None
        w = end - start + 1
        pos = self._level_pos.get(w)
        if pos is None or start < 0 or end >= self.n_slots:
            raise UnknownNodeError(node)
        return self._offsets[pos] + start

    def level_nodes(self, width: int) -> tuple[SlotInterval, ...]:
        pos = self._level_pos.get(width)
        if pos is None:
            raise InadmissibleWidthError(f"width {width} is not admissible under {self.pattern}")
        lo = self._offsets[pos]
        return self.nodes[lo:lo + self.n_slots - width + 1]

    def _lower_width(self, width: int) -> int | None:
        pos = self._level_pos[width]
        return self.levels[pos - 1] if pos else None

    def _upper_width(self, width: int) -> int | None:
        pos = self._level_pos[width] + 1
        return self.levels[pos] if pos < len(self.levels) else None

    def down_neighbors(self, node: SlotInterval) -> tuple[SlotInterval, ...]:
        """Intervals covered by ``node``: every sub-interval on the next lower level."""
        self.index(node)
        lower = self._lower_width(node.width)
        if lower is None:
            return ()
        return tuple(SlotInterval(i, i + lower - 1) for i in range(node.start, node.end - lower + 2))

    def up_neighbors(self, node: SlotInterval) -> tuple[SlotInterval, ...]:
        """Intervals covering ``node``: every super-interval on the next higher level."""
        self.index(node)
        upper = self._upper_width(node.width)
        if upper is None:
            return ()
        lo = max(0, node.end - upper + 1)
        hi = min(node.start, self.n_slots - upper)
        return tuple(SlotInterval(i, i + upper - 1) for i in range(lo, hi + 1))

    def up_set(self, node: SlotInterval) -> frozenset[SlotInterval]:
        """All admissible intervals strictly containing ``node``."""
        self.index(node)
        out = []
        first = bisect.bisect_right(self.levels, node.width)
        for w in self.levels[first:]:
            lo = max(0, node.end - w + 1)
            hi = min(node.start, self.n_slots - w)
            out.extend(SlotInterval(i, i + w - 1) for i in range(lo, hi + 1))
        return frozenset(out)

    def edges(self) -> Iterator[tuple[SlotInterval, SlotInterval]]:
        """Cover pairs ``(lower, upper)`` in node order of ``upper``."""
        for node in self.nodes:
            for child in self.down_neighbors(node):
                yield child, node

    @cached_property
    def covers(self) -> dict[SlotInterval, tuple[tuple[SlotInterval, ...], tuple[SlotInterval, ...]]]:
        """``node -> (down_neighbors, up_neighbors)`` for every node."""
        return {n: (self.down_neighbors(n), self.up_neighbors(n)) for n in self.nodes}

    def join(self, a: SlotInterval, b: SlotInterval):
        return interval_join(a, b, self.pattern)

    def components_after(self, occupied: Iterable[int]) -> list[frozenset[SlotInterval]]:
        return components_after(self, occupied)

    def to_dot(self, name: str = "hasse") -> str:
        """Graphviz source of the Hasse diagram, one ``rank=same`` group per level."""
        ids = {node: f"n{idx}" for idx, node in enumerate(self.nodes)}
        lines = [f"graph {name} {{", "  rankdir=BT;", "  node [shape=ellipse];"]
        for w in self.levels:
            row = self.level_nodes(w)
            lines.append(f"  subgraph level_{w} {{")
            lines.append("    rank=same;")
            for node in row:
                lines.append(f'    {ids[node]} [label="{node.label}"];')
            lines.append("  }")
        for lower, upper in self.edges():
            lines.append(f"  {ids[lower]} -- {ids[upper]};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_lattice(pattern: RequestPattern, n_slots: int) -> Lattice:
    return Lattice(pattern, n_slots)


def up_set(lattice: Lattice, node: SlotInterval) -> frozenset[SlotInterval]:
    return lattice.up_set(node)


def down_neighbors(lattice: Lattice, node: SlotInterval) -> frozenset[SlotInterval]:
    return frozenset(lattice.down_neighbors(node))


def level_nodes(lattice: Lattice, width: int) -> list[SlotInterval]:
    return list(lattice.level_nodes(width))


def interval_meet(a: SlotInterval, b: SlotInterval) -> SlotInterval | None:
    """Intersection of two intervals, ``None`` when they are disjoint."""
    start, end = max(a[0], b[0]), min(a[1], b[1])
    if start > end:
        return None
    return SlotInterval(start, end)


def interval_join(a: SlotInterval, b: SlotInterval, pattern: RequestPattern | None = None):
    """Smallest interval spanning ``a`` and ``b``.

    Returns :data:`OUT_OF_LATTICE` when ``pattern`` is given and the span's
    width is not one of its admissible widths.
    """
    span = SlotInterval(min(a[0], b[0]), max(a[1], b[1]))
    if pattern is not None and not pattern.admits(span.width):
        return OUT_OF_LATTICE
    return span


def components_after(lattice: Lattice, occupied: Iterable[int]) -> list[frozenset[SlotInterval]]:
    """Connected components left after deleting occupied slots and their up-sets.

    An interval survives iff it contains no occupied slot. Components are
    returned sorted by their first node in lattice order.
    """
    taken = set(occupied)
    for m in taken:
        if not 0 <= m < lattice.n_slots:
            raise ValueError(f"slot {m} outside 0..{lattice.n_slots - 1}")
    alive = {n for n in lattice.nodes if not any(m in taken for m in n.slots())} if taken else set(lattice.nodes)

    seen: set[SlotInterval] = set()
    components = []
    for root in lattice.nodes:
        if root not in alive or root in seen:
            continue
        seen.add(root)
        stack = [root]
        members = []
        while stack:
            node = stack.pop()
            members.append(node)
            for nb in lattice.down_neighbors(node) + lattice.up_neighbors(node):
                if nb in alive and nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        components.append(frozenset(members))
    return components
