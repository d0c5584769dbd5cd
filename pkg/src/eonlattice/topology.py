"""Physical network graph, link masks and deterministic BFS routing."""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import DuplicateLinkError, InvalidEndpointError, SelfLoopError, TopologyParseError

log = logging.getLogger(__name__)

__all__ = ["Topology", "LinkMask", "parse_topology", "load_topology", "builtin_topology", "shortest_path"]


@dataclass(frozen=True)
class LinkMask:
    """Availability bit per link; bit ``l`` of ``bits`` is link index ``l``."""

    bits: int
    size: int

    @classmethod
    def full(cls, size: int) -> LinkMask:
        return cls((1 << size) - 1, size)

    @classmethod
    def from_links(cls, links, size: int) -> LinkMask:
        bits = 0
        for link in links:
            bits |= 1 << link
        return cls(bits, size)

    def __getitem__(self, link: int) -> bool:
        if not 0 <= link < self.size:
            raise IndexError(link)
        return bool(self.bits >> link & 1)

    def __len__(self) -> int:
        return self.size

    def without(self, links) -> LinkMask:
        bits = self.bits
        for link in links:
            bits &= ~(1 << link)
        return LinkMask(bits, self.size)

    def to_string(self) -> str:
        return "".join("1" if self.bits >> i & 1 else "0" for i in range(self.size))


@dataclass
class Topology:
    node_names: list[str] = field(default_factory=list)
    links: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        self._index = {name: i for i, name in enumerate(self.node_names)}
        adjacency: list[list[tuple[int, int]]] = [[] for _ in self.node_names]
        for idx, (u, v) in enumerate(self.links):
            adjacency[u].append((v, idx))
            adjacency[v].append((u, idx))
        for row in adjacency:
            row.sort()
        self.adjacency = adjacency

    @property
    def n_nodes(self) -> int:
        return len(self.node_names)

    @property
    def n_links(self) -> int:
        return len(self.links)

    def node_index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise InvalidEndpointError(f"unknown node {name!r}") from None

    def link_label(self, link: int) -> str:
        u, v = self.links[link]
        return f"{self.node_names[u]}-{self.node_names[v]}"

    def link_between(self, u: int, v: int) -> int:
        for nb, link in self.adjacency[u]:
            if nb == v:
                return link
        raise KeyError((u, v))

    def path_nodes(self, src: int, path: list[int]) -> list[int]:
        """Node sequence visited by a link path starting at ``src``."""
        nodes = [src]
        for link in path:
            u, v = self.links[link]
            nodes.append(v if nodes[-1] == u else u)
        return nodes

    def full_mask(self) -> LinkMask:
        return LinkMask.full(self.n_links)

    def is_connected(self) -> bool:
        if self.n_nodes <= 1:
            return True
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v, _ in self.adjacency[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == self.n_nodes


def parse_topology(text: str) -> Topology:
    """Parse an edge list: one ``A B`` pair per line, ``#`` starts a comment line."""
    names: list[str] = []
    index: dict[str, int] = {}
    links: list[tuple[int, int]] = []
    seen: set[frozenset[int]] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise TopologyParseError(f"expected two node labels, got {len(parts)} fields", lineno)
        a, b = parts
        if a == b:
            raise SelfLoopError(f"self-loop on {a!r}", lineno)
        for name in parts:
            if name not in index:
                index[name] = len(names)
                names.append(name)
        u, v = index[a], index[b]
        key = frozenset((u, v))
        if key in seen:
            raise DuplicateLinkError(f"duplicate link {a}-{b}", lineno)
        seen.add(key)
        links.append((u, v))
    topo = Topology(names, links)
    if not topo.is_connected():
        log.warning("topology is not connected (%d nodes, %d links)", topo.n_nodes, topo.n_links)
    return topo


def load_topology(path: str | Path) -> Topology:
    return parse_topology(Path(path).read_text())


def builtin_topology(name: str) -> Topology:
    """Bundled topologies: ``nsfnet`` (14 nodes, 21 links)."""
    text = resources.files("eonlattice.data").joinpath(f"{name}.txt").read_text()
    return parse_topology(text)


def shortest_path(topology: Topology, mask: LinkMask | int, src: int, dst: int) -> list[int] | None:
    """Minimum-hop path from ``src`` to ``dst`` over links enabled in ``mask``.

    Neighbours are expanded in ascending node index, so among equal-length
    paths the lexicographically smallest node sequence is returned. Returns
    the link indices along the path, or ``None`` if ``dst`` is unreachable.
    """
    n = topology.n_nodes
    if not (0 <= src < n and 0 <= dst < n):
        raise InvalidEndpointError(f"endpoint out of range: {src}->{dst} with {n} nodes")
    if src == dst:
        raise InvalidEndpointError(f"source equals destination ({src})")
    bits = mask.bits if isinstance(mask, LinkMask) else mask

    adjacency = topology.adjacency
    parent: dict[int, tuple[int, int]] = {src: (-1, -1)}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for v, link in adjacency[u]:
            if v in parent or not bits >> link & 1:
                continue
            parent[v] = (u, link)
            if v == dst:
                path = []
                while v != src:
                    v, link = parent[v]
                    path.append(link)
                path.reverse()
                return path
            queue.append(v)
    return None
