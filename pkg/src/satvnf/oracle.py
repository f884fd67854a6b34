"""Brute-force references used by tests and post-hoc audits.

`brute_force_optimal` enumerates every (route, per-VNF host) combination over
the same search space the beam solver uses, so solver-vs-oracle equivalence
is over identical candidates.  `verify_constraints` recomputes all used
resources from scratch and checks every constraint on a live state.
"""
from __future__ import annotations

import dataclasses
import itertools
from dataclasses import dataclass

from .pathing import CandidateRoute, subpath
from .requests import UserRequest
from .state import (EPS, NetworkState, PlacementStrategy, Violation,
                    _structural_violations, check_feasible, end_to_end_delay,
                    strategy_bandwidth_cost, strategy_deltas)
from .topology import CoverageMap


class OracleGuardError(ValueError):
    """Instance exceeds the brute-force tractability guard."""


@dataclass(frozen=True)
class OracleResult:
    strategy: PlacementStrategy | None
    delay: float | None
    bandwidth: float | None
    enumeration_count: int


def brute_force_optimal(
    request: UserRequest,
    snapshot: NetworkState,
    candidates: list[CandidateRoute],
    coverage: CoverageMap,
    widen_hosts: bool = False,
    path_table=None,
    max_interior: int = 4,
    max_sats: int = 6,
    max_paths: int = 4,
) -> OracleResult:
    """Exhaustive optimum under the delay-lexicographic objective.

    Routes are scanned in the given (delay-ascending) order; the first route
    with any feasible assignment supplies the optimum, the minimum-bandwidth
    assignment on it (ties: fewer distinct hosts, then lower host indices).
    With ``widen_hosts`` the per-VNF host set is every satellite and chain
    edges route over the table's first shortest path (reported for
    comparison, never part of the equivalence contract).
    """
    network = snapshot.network
    interior = request.interior
    if len(interior) > max_interior:
        raise OracleGuardError(f"{len(interior)} interior VNFs exceed guard {max_interior}")
    if network.n_satellites > max_sats:
        raise OracleGuardError(f"{network.n_satellites} satellites exceed guard {max_sats}")
    if len(candidates) > max_paths:
        raise OracleGuardError(f"{len(candidates)} candidate routes exceed guard {max_paths}")
    if widen_hosts and path_table is None:
        raise ValueError("widen_hosts requires a path table for chain-edge routing")

    count = 0
    winner = None
    for route in candidates:
        if widen_hosts:
            hosts_pool = tuple(range(network.n_satellites))
        else:
            hosts_pool = route.path.nodes
        feasible: list[tuple[tuple, PlacementStrategy]] = []
        for assignment in itertools.product(hosts_pool, repeat=len(interior)):
            count += 1
            hosts = (route.src_sat,) + assignment + (route.dst_sat,)
            strategy = _materialize(network, request, route, hosts,
                                    widen_hosts, path_table, coverage)
            if check_feasible(snapshot, request, strategy, coverage):
                continue
            bw = strategy_bandwidth_cost(request, strategy)
            feasible.append(((bw, len(set(hosts)), hosts), strategy))
        if feasible and winner is None:
            winner = min(feasible, key=lambda t: t[0])[1]
    if winner is None:
        return OracleResult(None, None, None, count)
    return OracleResult(winner, winner.delay,
                        strategy_bandwidth_cost(request, winner), count)


def _materialize(network, request, route, hosts, widen_hosts, path_table,
                 coverage) -> PlacementStrategy:
    from .pathing import empty_path

    if widen_hosts:
        chain_paths = [empty_path(a) if a == b else path_table.paths(a, b)[0]
                       for a, b in zip(hosts, hosts[1:])]
    else:
        index = {sat: q for q, sat in enumerate(route.path.nodes)}
        chain_paths = [subpath(network, route.path, index[a], index[b])
                       for a, b in zip(hosts, hosts[1:])]
    skeleton = PlacementStrategy(
        request_id=request.id,
        edge=True,
        src_access=route.src_sat,
        dst_access=route.dst_sat,
        vnf_hosts=tuple(hosts),
        chain_paths=tuple(chain_paths),
    )
    delay = end_to_end_delay(network, request, skeleton, coverage)
    return dataclasses.replace(skeleton, delay=delay)


def random_tiny_instance(seed: int, d: int = 4):
    """A seeded small instance inside the brute-force guard.

    Returns (network, coverage, path_table, request, snapshot, candidates):
    a 2x3 constellation, one random request with at most 4 interior VNFs,
    and a snapshot with random pre-existing load so capacity constraints
    actually bite.
    """
    import numpy as np

    from .pathing import PathTable, candidate_paths
    from .requests import WorkloadParams, generate_request
    from .topology import CoverageMap, attach_cloud, build_constellation

    rng = np.random.default_rng(seed)
    network = build_constellation(2, 3, cpu_capacity=8.0, mem_capacity=12.0,
                                  isl_bandwidth=30.0)
    network = attach_cloud(network, {0}, bandwidth=100.0, delay=13.1)
    coverage = CoverageMap(2, 3, overlap=0.3)
    table = PathTable(network, d)
    params = WorkloadParams(chain_min=2, chain_max=6,
                            bandwidth_range=(1.0, 8.0))
    request = generate_request(rng, coverage, params, req_id=seed)
    snapshot = NetworkState(network)
    for sat in range(network.n_satellites):
        snapshot.cpu_used[sat] = float(rng.uniform(0.0, 7.0))
        snapshot.mem_used[sat] = float(rng.uniform(0.0, 11.0))
    for lk in range(network.n_links):
        snapshot.isl_used[lk] = float(rng.uniform(0.0, 25.0))
    candidates = candidate_paths(request, table, coverage, d)
    return network, coverage, table, request, snapshot, candidates


def verify_constraints(state: NetworkState, coverage: CoverageMap) -> list[Violation]:
    """Full recount audit of a live state against its committed strategies.

    Recomputes every used quantity from scratch, compares it with the ledger,
    and re-checks all capacity, structural, and delay constraints.  An empty
    report is a hard requirement for any engine output.
    """
    network = state.network
    n = network.n_satellites
    cpu = [0.0] * n
    mem = [0.0] * n
    isl = [0.0] * network.n_links
    ground = [0.0] * n
    bad: list[Violation] = []

    for req, strat in state.committed.values():
        bad.extend(_structural_violations(network, req, strat))
        nodes, links, gw_deltas = strategy_deltas(req, strat)
        for sat, (c, m) in nodes.items():
            cpu[sat] += c
            mem[sat] += m
        for lk, bw in links.items():
            isl[lk] += bw
        for gw, bw in gw_deltas.items():
            ground[gw] += bw
        delay = end_to_end_delay(network, req, strat, coverage)
        if delay > req.max_delay + EPS:
            bad.append(Violation("delay", f"request {req.id}: {delay:.6g} ms over bound"))

    for sat in range(n):
        cap = network.satellites[sat]
        if abs(cpu[sat] - state.cpu_used[sat]) > EPS or cpu[sat] > cap.cpu_capacity + EPS:
            bad.append(Violation(
                "node_capacity",
                f"satellite {sat}: recounted cpu {cpu[sat]:.6g}, ledger "
                f"{state.cpu_used[sat]:.6g}, capacity {cap.cpu_capacity:.6g}"))
        if abs(mem[sat] - state.mem_used[sat]) > EPS or mem[sat] > cap.mem_capacity + EPS:
            bad.append(Violation(
                "node_capacity",
                f"satellite {sat}: recounted mem {mem[sat]:.6g}, ledger "
                f"{state.mem_used[sat]:.6g}, capacity {cap.mem_capacity:.6g}"))
    for lk in range(network.n_links):
        cap = network.links[lk].bandwidth
        if abs(isl[lk] - state.isl_used[lk]) > EPS or isl[lk] > cap + EPS:
            bad.append(Violation(
                "isl_bandwidth",
                f"link {lk}: recounted {isl[lk]:.6g}, ledger "
                f"{state.isl_used[lk]:.6g}, capacity {cap:.6g}"))
    if network.cloud is not None:
        for gl in network.cloud.links:
            gw = gl.satellite
            if abs(ground[gw] - state.ground_used[gw]) > EPS or ground[gw] > gl.bandwidth + EPS:
                bad.append(Violation(
                    "ground_bandwidth",
                    f"gateway {gw}: recounted {ground[gw]:.6g}, ledger "
                    f"{state.ground_used[gw]:.6g}, capacity {gl.bandwidth:.6g}"))
    for sat in range(n):
        if network.cloud is None or sat not in network.cloud.gateways:
            if state.ground_used[sat] != 0.0 or ground[sat] != 0.0:
                bad.append(Violation("ground_bandwidth",
                                     f"non-gateway satellite {sat} carries ground traffic"))
    return bad
