"""Resource ledger, placement strategies, and the full constraint system.

NetworkState tracks used CPU/memory per satellite and used bandwidth per ISL
and ground link.  All capacity comparisons use a 1e-9 epsilon because demands
are continuous.  Mutation happens only through commit/release; snapshots are
cheap copies that concurrent solvers may read freely.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .pathing import Path
from .requests import UserRequest
from .topology import SatelliteNetwork, CoverageMap

EPS = 1e-9


class CommitError(RuntimeError):
    """Commit of an infeasible strategy, or release of an unknown one."""


@dataclass(frozen=True)
class PlacementStrategy:
    """A complete placement decision for one request.

    ``edge`` selects satellite edge service; otherwise the interior VNFs run
    in the cloud and only the two access legs touch the satellite network.
    """

    request_id: int
    edge: bool
    src_access: int
    dst_access: int
    # Edge mode: one host per VNF (access functions included) and one routed
    # path per chain edge; co-located neighbours use the empty path.
    vnf_hosts: tuple[int, ...] = ()
    chain_paths: tuple[Path, ...] = ()
    # Cloud mode: gateway satellites and the two routed legs.
    up_gateway: int = -1
    down_gateway: int = -1
    up_path: Path | None = None     # src_access -> up_gateway
    down_path: Path | None = None   # down_gateway -> dst_access
    delay: float = 0.0              # realized end-to-end delay, ms


@dataclass(frozen=True)
class Violation:
    constraint: str  # node_capacity | isl_bandwidth | ground_bandwidth | structure | delay
    detail: str


@dataclass(frozen=True)
class CostReport:
    bandwidth_mbps: float
    mean_delay_ms: float
    allocated_fraction: float


class NetworkState:
    """Mutable ledger of used resources over an immutable network."""

    def __init__(self, network: SatelliteNetwork):
        self.network = network
        n = network.n_satellites
        self.cpu_used = [0.0] * n
        self.mem_used = [0.0] * n
        self.isl_used = [0.0] * network.n_links
        self.ground_used = [0.0] * n  # nonzero only at cloud gateways
        self.committed: dict[int, tuple[UserRequest, PlacementStrategy]] = {}

    def snapshot(self) -> "NetworkState":
        s = NetworkState.__new__(NetworkState)
        s.network = self.network
        s.cpu_used = self.cpu_used.copy()
        s.mem_used = self.mem_used.copy()
        s.isl_used = self.isl_used.copy()
        s.ground_used = self.ground_used.copy()
        s.committed = self.committed.copy()
        return s

    def equals(self, other: "NetworkState") -> bool:
        return (
            self.cpu_used == other.cpu_used
            and self.mem_used == other.mem_used
            and self.isl_used == other.isl_used
            and self.ground_used == other.ground_used
            and set(self.committed) == set(other.committed)
        )


def strategy_deltas(request: UserRequest, strategy: PlacementStrategy):
    """Resource deltas a strategy adds on commit.

    Returns (node deltas sat -> [cpu, mem], link deltas link -> Mbps,
    ground deltas gateway sat -> Mbps).
    """
    nodes: dict[int, list[float]] = {}
    links: dict[int, float] = {}
    ground: dict[int, float] = {}
    if strategy.edge:
        for vnf, host in zip(request.vnfs, strategy.vnf_hosts):
            if vnf.is_access:
                continue
            acc = nodes.setdefault(host, [0.0, 0.0])
            acc[0] += vnf.cpu
            acc[1] += vnf.mem
        for bw, path in zip(request.edge_bandwidths, strategy.chain_paths):
            for lk in path.links:
                links[lk] = links.get(lk, 0.0) + bw
    else:
        b_up = request.edge_bandwidths[0]
        b_down = request.edge_bandwidths[-1]
        for lk in strategy.up_path.links:
            links[lk] = links.get(lk, 0.0) + b_up
        for lk in strategy.down_path.links:
            links[lk] = links.get(lk, 0.0) + b_down
        ground[strategy.up_gateway] = ground.get(strategy.up_gateway, 0.0) + b_up
        ground[strategy.down_gateway] = ground.get(strategy.down_gateway, 0.0) + b_down
    return nodes, links, ground


def strategy_bandwidth_cost(request: UserRequest, strategy: PlacementStrategy) -> float:
    """Total ISL bandwidth the strategy consumes (Mbps summed over links)."""
    _, links, _ = strategy_deltas(request, strategy)
    return sum(links.values())


def end_to_end_delay(
    network: SatelliteNetwork,
    request: UserRequest,
    strategy: PlacementStrategy,
    coverage: CoverageMap,
) -> float:
    """Compute + transmission delay realized by a strategy, in ms.

    Cloud-internal switching is free; the two ground hops and the two access
    hops are charged once each way.
    """
    total = request.compute_total
    total += coverage.access_delay_for(request.source, strategy.src_access)
    total += coverage.access_delay_for(request.destination, strategy.dst_access)
    if strategy.edge:
        total += sum(p.delay for p in strategy.chain_paths)
    else:
        cloud = network.cloud
        total += strategy.up_path.delay + cloud.link_for(strategy.up_gateway).delay
        total += cloud.link_for(strategy.down_gateway).delay + strategy.down_path.delay
    return total


def _structural_violations(network, request, strategy) -> list[Violation]:
    bad = []
    if strategy.edge:
        hosts = strategy.vnf_hosts
        if len(hosts) != len(request.vnfs):
            bad.append(Violation("structure", "one host per VNF is required"))
            return bad
        if len(strategy.chain_paths) != len(request.edge_bandwidths):
            bad.append(Violation("structure", "one routed path per chain edge is required"))
            return bad
        if hosts[0] != strategy.src_access or hosts[-1] != strategy.dst_access:
            bad.append(Violation("structure", "access functions must sit on the access satellites"))
        for k, path in enumerate(strategy.chain_paths):
            a, b = hosts[k], hosts[k + 1]
            if a == b:
                if path.links:
                    bad.append(Violation("structure", f"chain edge {k}: co-located VNFs must use the empty path"))
            elif path.nodes[0] != a or path.nodes[-1] != b:
                bad.append(Violation("structure", f"chain edge {k}: path endpoints do not match hosts"))
    else:
        cloud = network.cloud
        if cloud is None:
            bad.append(Violation("structure", "cloud strategy without a cloud data center"))
            return bad
        if not request.interior:
            bad.append(Violation("structure", "chains without interior VNFs cannot be offloaded to the cloud"))
        if strategy.up_gateway not in cloud.gateways or strategy.down_gateway not in cloud.gateways:
            bad.append(Violation("structure", "cloud access satellites must be cloud gateways"))
        if strategy.up_path is None or strategy.down_path is None:
            bad.append(Violation("structure", "cloud strategy needs both routed legs"))
            return bad
        if (strategy.up_path.nodes[0] != strategy.src_access
                or strategy.up_path.nodes[-1] != strategy.up_gateway):
            bad.append(Violation("structure", "uplink leg endpoints do not match"))
        if (strategy.down_path.nodes[0] != strategy.down_gateway
                or strategy.down_path.nodes[-1] != strategy.dst_access):
            bad.append(Violation("structure", "downlink leg endpoints do not match"))
    return bad


def check_feasible(
    state: NetworkState,
    request: UserRequest,
    strategy: PlacementStrategy,
    coverage: CoverageMap,
) -> list[Violation]:
    """Every violated constraint for deploying the strategy on this state.

    Empty list means feasible.  Checks structure, node capacities, ISL and
    ground-link bandwidth, and the end-to-end delay bound.
    """
    network = state.network
    bad = _structural_violations(network, request, strategy)
    if bad:
        return bad

    nodes, links, ground = strategy_deltas(request, strategy)
    for sat, (cpu, mem) in nodes.items():
        cap = network.satellites[sat]
        if state.cpu_used[sat] + cpu > cap.cpu_capacity + EPS:
            bad.append(Violation("node_capacity", f"satellite {sat}: cpu {state.cpu_used[sat] + cpu:.6g} > {cap.cpu_capacity:.6g}"))
        if state.mem_used[sat] + mem > cap.mem_capacity + EPS:
            bad.append(Violation("node_capacity", f"satellite {sat}: mem {state.mem_used[sat] + mem:.6g} > {cap.mem_capacity:.6g}"))
    for lk, bw in links.items():
        link = network.links[lk]
        if state.isl_used[lk] + bw > link.bandwidth + EPS:
            bad.append(Violation("isl_bandwidth", f"link {lk}: {state.isl_used[lk] + bw:.6g} > {link.bandwidth:.6g}"))
    for gw, bw in ground.items():
        gl = network.cloud.link_for(gw)
        if state.ground_used[gw] + bw > gl.bandwidth + EPS:
            bad.append(Violation("ground_bandwidth", f"gateway {gw}: {state.ground_used[gw] + bw:.6g} > {gl.bandwidth:.6g}"))

    delay = end_to_end_delay(network, request, strategy, coverage)
    if delay > request.max_delay + EPS:
        bad.append(Violation("delay", f"delay {delay:.6g} ms exceeds bound {request.max_delay:.6g} ms"))
    return bad


def commit(state: NetworkState, request: UserRequest, strategy: PlacementStrategy,
           coverage: CoverageMap) -> None:
    """Apply a feasible strategy's demands to the ledger."""
    if request.id in state.committed:
        raise CommitError(f"request {request.id} is already committed")
    bad = check_feasible(state, request, strategy, coverage)
    if bad:
        raise CommitError(f"infeasible strategy for request {request.id}: {bad[0].detail}")
    _apply(state, request, strategy, +1.0)
    state.committed[request.id] = (request, strategy)


def release(state: NetworkState, request: UserRequest, strategy: PlacementStrategy) -> None:
    """Subtract exactly the quantities a prior commit added."""
    entry = state.committed.get(request.id)
    if entry is None or entry[1] is not strategy and entry[1] != strategy:
        raise CommitError(f"request {request.id} has no matching committed strategy")
    _apply(state, request, strategy, -1.0)
    del state.committed[request.id]


def _apply(state: NetworkState, request, strategy, sign: float) -> None:
    nodes, links, ground = strategy_deltas(request, strategy)
    for sat, (cpu, mem) in nodes.items():
        state.cpu_used[sat] += sign * cpu
        state.mem_used[sat] += sign * mem
    for lk, bw in links.items():
        state.isl_used[lk] += sign * bw
    for gw, bw in ground.items():
        state.ground_used[gw] += sign * bw


def bandwidth_cost(state: NetworkState) -> float:
    """Mean used bandwidth over the ISLs, in Mbps (ground links excluded)."""
    n = len(state.isl_used)
    if n == 0:
        return 0.0
    return sum(state.isl_used) / n


def user_delay_cost(strategies) -> float:
    """Mean realized delay over deployed strategies; 0 when none are deployed."""
    delays = [s.delay for s in strategies]
    if not delays:
        return 0.0
    return sum(delays) / len(delays)
