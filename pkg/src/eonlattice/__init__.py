"""Layered slot-interval model and first-fit RSA for flexible-grid optical networks."""
from .errors import (
    ConflictError,
    EngineMismatchError,
    EonLatticeError,
    InadmissibleWidthError,
    InvalidEndpointError,
    InvalidPatternError,
    NotOccupiedError,
    UnknownNodeError,
)
from .lattice import (
    OUT_OF_LATTICE,
    Lattice,
    RequestPattern,
    SlotInterval,
    build_lattice,
    components_after,
    down_neighbors,
    expected_node_count,
    interval_join,
    interval_meet,
    level_nodes,
    up_set,
)
from .netmodel import LayeredState, init_state
from .rsa import (
    ConnectionRecord,
    ConnectionRequest,
    LayeredEngine,
    OracleState,
    check_ratio,
    oracle_route_first_fit,
    route_first_fit,
    setup,
    teardown,
)
from .sim import SimConfig, SimMetrics, replay_trace, run_simulation
from .topology import LinkMask, Topology, builtin_topology, load_topology, parse_topology, shortest_path

__version__ = "0.1.0"
