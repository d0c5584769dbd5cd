import random
from pathlib import Path

import pytest

from eonlattice import RequestPattern, Topology, build_lattice, parse_topology

DATA = Path(__file__).parent / "data"

# nodes in first-appearance order: W=0, N=1, S=2, E=3
# links: 0 W-N, 1 N-S, 2 N-E, 3 W-E
W, N, S, E = range(4)
WN, NS, NE, WE = range(4)


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def scenario():
    return parse_topology((DATA / "scenario.topo").read_text())


@pytest.fixture
def uni44():
    return build_lattice(RequestPattern.uniform(4), 4)


@pytest.fixture
def pow2_42():
    return build_lattice(RequestPattern.pow2(2), 4)


def random_topology(rng: random.Random, max_nodes: int = 16, min_nodes: int = 2) -> Topology:
    """Connected random graph: a random spanning tree plus extra chords."""
    n = rng.randint(min_nodes, max_nodes)
    order = list(range(n))
    rng.shuffle(order)
    edges = set()
    for i in range(1, n):
        u, v = order[i], order[rng.randrange(i)]
        edges.add((min(u, v), max(u, v)))
    for _ in range(rng.randint(0, n)):
        u, v = rng.sample(range(n), 2)
        edges.add((min(u, v), max(u, v)))
    edges = sorted(edges)
    rng.shuffle(edges)
    return Topology([str(i) for i in range(n)], edges)


def random_pattern(rng: random.Random, n_slots: int) -> RequestPattern:
    if rng.random() < 0.5:
        return RequestPattern.uniform(rng.randint(1, n_slots))
    return RequestPattern.pow2(rng.randint(0, n_slots.bit_length() - 1))


class OccupancyMirror:
    """Independent record of occupied (link, slot) pairs for checking a LayeredState."""

    def __init__(self, n_links: int, n_slots: int):
        self.n_slots = n_slots
        self.busy = [set() for _ in range(n_links)]
        self.live = []  # (links, interval)

    def feasible(self, links, interval) -> bool:
        return all(not (self.busy[l] & set(interval.slots())) for l in links)

    def occupy(self, links, interval):
        for l in links:
            self.busy[l] |= set(interval.slots())
        self.live.append((tuple(links), interval))

    def release(self, i):
        links, interval = self.live.pop(i)
        for l in links:
            self.busy[l] -= set(interval.slots())
        return links, interval

    def free_row(self, link) -> int:
        return sum(1 << m for m in range(self.n_slots) if m not in self.busy[link])


def expected_masks(state, mirror):
    """Node masks derived slot by slot from the mirror, for the consistency law."""
    out = []
    for node in state.lattice.nodes:
        bits = 0
        for link in range(state.n_links):
            if not mirror.busy[link] & set(node.slots()):
                bits |= 1 << link
        out.append(bits)
    return out


def random_step(rng, state, mirror, tries: int = 20):
    """One random feasible occupy or release; returns the op performed or None."""
    if mirror.live and rng.random() < 0.4:
        links, interval = mirror.release(rng.randrange(len(mirror.live)))
        state.release(links, interval)
        return ("release", links, interval)
    lat = state.lattice
    for _ in range(tries):
        interval = rng.choice(lat.nodes)
        k = rng.randint(1, max(1, min(4, state.n_links)))
        links = rng.sample(range(state.n_links), k) if state.n_links else []
        if links and mirror.feasible(links, interval):
            state.occupy(links, interval)
            mirror.occupy(links, interval)
            return ("occupy", tuple(links), interval)
    return None


# -- acceptance reporting -------------------------------------------------------

_criteria: list[tuple[int, str, str]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _criteria.append((marker[0], marker[1], "PASS" if report.passed else "FAIL"))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        report.criterion = tuple(mark.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, status in sorted(_criteria):
        terminalreporter.write_line(f"[{status}] criterion {number}: {title}")
