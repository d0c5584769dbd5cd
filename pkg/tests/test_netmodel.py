import random

import pytest
from hypothesis import given, settings, strategies as st

from eonlattice import (
    ConflictError,
    LayeredState,
    NotOccupiedError,
    RequestPattern,
    SlotInterval as s,
    Topology,
    UnknownNodeError,
    build_lattice,
    init_state,
    parse_topology,
)

from conftest import NE, NS, WE, WN, OccupancyMirror, expected_masks, random_pattern, random_step, random_topology


@pytest.fixture
def state(uni44, scenario):
    return init_state(uni44, scenario)


def ring(n):
    return Topology([str(i) for i in range(n)], [(i, (i + 1) % n) for i in range(n)])


class TestInit:
    def test_uniform(self, state):
        assert state.masks == [0b1111] * 10
        assert state.check_counter == 0

    def test_pow2(self, pow2_42, scenario):
        assert init_state(pow2_42, scenario).masks == [0b1111] * 8

    def test_empty_topology(self, uni44):
        st_ = init_state(uni44, parse_topology(""))
        assert st_.mask_at(s(0, 3)).size == 0
        assert st_.dump().splitlines()[0] == "s_0 "


class TestOccupy:
    def test_walkthrough_first_connection(self, state):
        state.occupy([WN, NS], s(0, 0))
        cleared = {node for node, bits in zip(state.lattice.nodes, state.masks) if bits != 0b1111}
        assert cleared == {s(0, 0), s(0, 1), s(0, 2), s(0, 3)}
        for node in cleared:
            assert state.mask_at(node).to_string() == "0011"

    def test_empty_links_noop(self, state):
        state.occupy([], s(1, 2))
        assert state.masks == [0b1111] * 10

    def test_double_booking(self, state):
        state.occupy([WN], s(0, 0))
        with pytest.raises(ConflictError):
            state.occupy([WN], s(0, 0))

    def test_overlap_conflict_leaves_state_untouched(self, state):
        state.occupy([NE], s(1, 2))
        before = list(state.masks)
        with pytest.raises(ConflictError):
            state.occupy([WE, NE], s(2, 3))
        assert state.masks == before

    def test_bad_link(self, state):
        with pytest.raises(IndexError):
            state.occupy([7], s(0, 0))

    def test_bad_interval(self, state):
        with pytest.raises(UnknownNodeError):
            state.occupy([0], s(2, 4))


class TestRelease:
    def test_round_trip(self, state, uni44, scenario):
        state.occupy([WN, NS], s(0, 0))
        state.release([WN, NS], s(0, 0))
        assert state.dump() == init_state(uni44, scenario).dump()

    def test_overlapping_connections(self, state):
        l1, l2 = [WN, NS], [NE]
        state.occupy(l1, s(0, 0))
        state.occupy(l2, s(1, 1))
        state.release(l1, s(0, 0))
        # replay against the slot-wise AND: only slot 1 on link NE stays busy
        for node, bits in zip(state.lattice.nodes, state.masks):
            expected = 0b1111 & ~(1 << NE) if 1 in node.slots() else 0b1111
            assert bits == expected, node
        assert state.is_consistent()

    def test_not_occupied(self, state):
        with pytest.raises(NotOccupiedError):
            state.release([WE], s(3, 3))

    def test_partial_release_rejected(self, state):
        state.occupy([WN], s(0, 1))
        with pytest.raises(NotOccupiedError):
            state.release([WN], s(0, 2))


class TestQueries:
    def test_link_available_counts_one(self, state):
        assert state.link_available(s(1, 3), WE) is True
        assert state.check_counter == 1

    def test_after_first_connection(self, state):
        state.occupy([WN, NS], s(0, 0))
        assert state.link_available(s(0, 1), WN) is False
        assert state.link_available(s(1, 2), WN) is True
        assert state.check_counter == 2

    def test_mask_at(self, state):
        assert state.mask_at(s(0, 3)).to_string() == "1111"
        assert state.check_counter == 4
        state.occupy([0], s(1, 1))
        assert state.mask_at(s(1, 2))[0] is False
        state.release([0], s(1, 1))
        assert state.mask_at(s(1, 2)).to_string() == "1111"

    def test_mask_at_unknown(self, state):
        with pytest.raises(UnknownNodeError):
            state.mask_at(s(1, 5))

    def test_slot_row(self, state):
        state.occupy([NS], s(1, 2))
        assert state.slot_row(NS) == 0b1001
        assert state.slot_row(WN) == 0b1111


class TestMemory:
    def test_small(self, state):
        assert state.memory_stats() == {"node_count": 10, "bits_total": 40}

    def test_nsfnet_scale(self):
        lat = build_lattice(RequestPattern.uniform(32), 400)
        assert LayeredState(lat, ring(42)).memory_stats() == {"node_count": 12304, "bits_total": 516768}

    def test_empty_topology(self, uni44):
        assert init_state(uni44, parse_topology("")).memory_stats() == {"node_count": 10, "bits_total": 0}


def test_dump_format(state):
    state.occupy([WN], s(2, 2))
    lines = state.dump().splitlines()
    assert lines[0] == "s_0 1111"
    assert lines[2] == "s_2 0111"
    assert lines[5] == "s_{1,2} 0111"
    assert len(lines) == 10


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_sequences_keep_all_laws(seed):
    rng = random.Random(seed)
    topo = random_topology(rng, max_nodes=10)
    n_slots = rng.randint(1, 16)
    lat = build_lattice(random_pattern(rng, n_slots), n_slots)
    state = LayeredState(lat, topo)
    fresh = state.dump()
    mirror = OccupancyMirror(topo.n_links, n_slots)
    for _ in range(40):
        before = list(state.masks)
        op = random_step(rng, state, mirror)
        assert state.masks == expected_masks(state, mirror)
        for link in range(topo.n_links):
            assert state.slot_row(link) == mirror.free_row(link)
        if op is None:
            continue
        kind, links, interval = op
        # frame: only the interval's single slots and their up-sets may change
        touched = {lat.index(s(m, m)) for m in interval.slots()}
        for m in interval.slots():
            touched |= {lat.index(n) for n in lat.up_set(s(m, m))}
        for idx, (a, b) in enumerate(zip(before, state.masks)):
            if idx not in touched:
                assert a == b
        if kind == "occupy":
            snapshot = list(state.masks)
            state.release(links, interval)
            assert state.masks == before
            state.occupy(links, interval)
            assert state.masks == snapshot
    while mirror.live:
        links, interval = mirror.release(0)
        state.release(links, interval)
    assert state.dump() == fresh
