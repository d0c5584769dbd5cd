"""Layered network state: one link-availability mask per lattice node.

The mask at interval ``[i, j]`` holds the links on which *every* slot
``i..j`` is free, i.e. the AND of the single-slot masks ``i..j``. Routing a
width-``b`` request then needs one mask read per link instead of ``b``.
"""
from __future__ import annotations

from typing import Iterable

from .errors import ConflictError, NotOccupiedError
from .lattice import Lattice, SlotInterval
from .topology import LinkMask, Topology

__all__ = ["LayeredState", "init_state"]


class LayeredState:
    """Mutable per-node link masks over a shared :class:`Lattice`.

    Only one writer may mutate a state at a time.
    """

    def __init__(self, lattice: Lattice, topology: Topology):
        self.lattice = lattice
        self.topology = topology
        self.n_links = topology.n_links
        self._full = (1 << self.n_links) - 1
        self.masks: list[int] = [self._full] * len(lattice)
        self.check_counter = 0
        self._upsets: dict[int, tuple[int, ...]] = {}
        self._downs: dict[int, tuple[int, ...]] = {}

    # -- index caches -----------------------------------------------------

    def _upset_of_slot(self, m: int) -> tuple[int, ...]:
        idx = self._upsets.get(m)
        if idx is None:
            lat = self.lattice
            idx = tuple(sorted(lat.index(n) for n in lat.up_set(SlotInterval(m, m))))
            self._upsets[m] = idx
        return idx

    def _down_of(self, node_idx: int) -> tuple[int, ...]:
        idx = self._downs.get(node_idx)
        if idx is None:
            lat = self.lattice
            idx = tuple(lat.index(n) for n in lat.down_neighbors(lat.nodes[node_idx]))
            self._downs[node_idx] = idx
        return idx

    def _link_bits(self, links: Iterable[int]) -> int:
        bits = 0
        for link in links:
            if not 0 <= link < self.n_links:
                raise IndexError(f"link {link} out of range 0..{self.n_links - 1}")
            bits |= 1 << link
        return bits

    def _check_interval(self, interval: SlotInterval) -> None:
        # level-1 node of slot m sits at index m
        self.lattice.index(SlotInterval.slot(interval.start))
        self.lattice.index(SlotInterval.slot(interval.end))
        if interval.start > interval.end:
            raise ValueError(f"empty interval {interval!r}")

    # -- mutation ---------------------------------------------------------

    def occupy(self, links: Iterable[int], interval: SlotInterval) -> None:
        """Clear ``links`` on every slot of ``interval`` and on each slot's up-set."""
        bits = self._link_bits(links)
        if not bits:
            return
        self._check_interval(interval)
        masks = self.masks
        for m in interval.slots():
            if masks[m] & bits != bits:
                busy = bits & ~masks[m]
                raise ConflictError(
                    f"slot {m} already occupied on links {_bit_list(busy)}"
                )
        keep = ~bits
        for m in interval.slots():
            masks[m] &= keep
            for idx in self._upset_of_slot(m):
                masks[idx] &= keep

    def release(self, links: Iterable[int], interval: SlotInterval) -> None:
        """Restore ``links`` on the interval's slots and recompute their up-sets.

        Each affected higher node takes the AND of its down-neighbours for the
        released links, processed bottom-up so children are final first.
        """
        bits = self._link_bits(links)
        if not bits:
            return
        self._check_interval(interval)
        masks = self.masks
        for m in interval.slots():
            if masks[m] & bits:
                raise NotOccupiedError(
                    f"slot {m} is not occupied on links {_bit_list(masks[m] & bits)}"
                )
        affected: set[int] = set()
        for m in interval.slots():
            masks[m] |= bits
            affected.update(self._upset_of_slot(m))
        keep = ~bits
        # node indices are level-major, so ascending index is bottom-up
        for idx in sorted(affected):
            acc = bits
            for child in self._down_of(idx):
                acc &= masks[child]
            masks[idx] = (masks[idx] & keep) | acc

    # -- queries ----------------------------------------------------------

    def link_available(self, node: SlotInterval, link: int) -> bool:
        idx = self.lattice.index(node)
        if not 0 <= link < self.n_links:
            raise IndexError(link)
        self.check_counter += 1
        return bool(self.masks[idx] >> link & 1)

    def mask_at(self, node: SlotInterval) -> LinkMask:
        """Copy of the mask at ``node``; costs one check per link."""
        idx = self.lattice.index(node)
        self.check_counter += self.n_links
        return LinkMask(self.masks[idx], self.n_links)

    def slot_row(self, link: int) -> int:
        """Free-slot bitmap of one link (bit ``m`` set = slot ``m`` free), from level-1 masks."""
        row = 0
        masks = self.masks
        for m in range(self.lattice.n_slots):
            if masks[m] >> link & 1:
                row |= 1 << m
        return row

    def memory_stats(self) -> dict[str, int]:
        nodes = len(self.lattice)
        return {"node_count": nodes, "bits_total": nodes * self.n_links}

    def is_consistent(self) -> bool:
        """Every node mask equals the AND of the single-slot masks it spans."""
        masks = self.masks
        for idx, node in enumerate(self.lattice.nodes):
            acc = self._full
            for m in node.slots():
                acc &= masks[m]
            if masks[idx] != acc:
                return False
        return True

    def reset_counter(self) -> None:
        self.check_counter = 0

    def dump(self) -> str:
        """One line per node: label, space, mask as a 0/1 string in link order."""
        n = self.n_links
        lines = []
        for node, bits in zip(self.lattice.nodes, self.masks):
            row = "".join("1" if bits >> i & 1 else "0" for i in range(n))
            lines.append(f"{node.label} {row}")
        return "\n".join(lines) + "\n"


def init_state(lattice: Lattice, topology: Topology) -> LayeredState:
    return LayeredState(lattice, topology)


def _bit_list(bits: int) -> list[int]:
    return [i for i in range(bits.bit_length()) if bits >> i & 1]
