"""Distributed placement orchestration and experiment drivers.

One placement round freezes a snapshot of the resource state, lets every
request's decision agent solve against it (edge first, cloud fallback), then
applies the resulting strategies first-come-first-served against the live
state; a strategy invalidated by earlier commits is a resource conflict and
its request is deferred to the next round.  Centralized baselines instead
place requests one at a time against the live state.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algorithms import (SolverParams, greedy_place, path_selection_place,
                         viterbi_place)
from .pathing import PathTable, candidate_paths
from .requests import (UserRequest, WorkloadParams, generate_request,
                       sample_arrivals, sample_duration)
from .state import (NetworkState, PlacementStrategy, bandwidth_cost, commit,
                    check_feasible, release, user_delay_cost)
from .topology import CoverageMap, SatelliteNetwork

ALGORITHMS = ("dvnfp", "greedy", "viterbi")


@dataclass(frozen=True)
class Agent:
    """A satellite-hosted decision maker and its frozen view of the network."""

    satellite: int
    view: NetworkState
    assigned: tuple[int, ...] = ()  # request ids decided this round


@dataclass
class RoundOutcome:
    committed: list[tuple[UserRequest, PlacementStrategy]] = field(default_factory=list)
    deferred: list[UserRequest] = field(default_factory=list)
    failed_local: list[UserRequest] = field(default_factory=list)
    agents: dict[int, int] = field(default_factory=dict)  # request id -> agent sat
    solver_calls: int = 0


@dataclass
class BatchResult:
    committed: list[tuple[UserRequest, PlacementStrategy]]
    failed_local: list[UserRequest]
    rounds: int
    solver_calls: int


@dataclass(frozen=True)
class SlotMetrics:
    slot: int
    bandwidth_mbps: float
    mean_delay_ms: float
    allocated_fraction: float
    arrivals: int
    edge_count: int
    cloud_count: int
    local_count: int
    rounds: int
    solver_calls: int


@dataclass(frozen=True)
class ExperimentResult:
    bandwidth_mbps: float
    mean_delay_ms: float
    allocated_fraction: float
    edge_count: int
    cloud_count: int
    local_count: int
    rounds: int
    solver_calls: int


class PlacementContext:
    """Shared immutable inputs plus per-run caches for one simulation."""

    def __init__(self, network: SatelliteNetwork, coverage: CoverageMap,
                 path_table: PathTable, params: SolverParams):
        self.network = network
        self.coverage = coverage
        self.path_table = path_table
        self.params = params
        self._routes: dict[tuple, list] = {}

    def neighbours(self, request: UserRequest):
        src = tuple(sorted(self.coverage.covering(request.source)))
        dst = tuple(sorted(self.coverage.covering(request.destination)))
        return (src, dst)

    def routes(self, request: UserRequest):
        src, dst = self.neighbours(request)
        key = (src, dst)
        cached = self._routes.get(key)
        if cached is None:
            cached = candidate_paths(request, self.path_table, self.coverage,
                                     self.params.d, src_sats=src, dst_sats=dst)
            self._routes[key] = cached
        return cached


def _solve(ctx: PlacementContext, request: UserRequest, snapshot: NetworkState,
           solver: str) -> PlacementStrategy | None:
    src, dst = ctx.neighbours(request)
    routes = ctx.routes(request)
    place = greedy_place if solver == "greedy" else viterbi_place
    strategy = place(request, snapshot, ctx.path_table, ctx.coverage,
                     ctx.params, candidates=routes)
    # greedy_place already runs its own cloud fallback.
    if (strategy is None and solver != "greedy"
            and ctx.network.cloud is not None and request.interior):
        strategy = path_selection_place(request, snapshot, ctx.path_table,
                                        ctx.coverage, ctx.params,
                                        src_sats=src, dst_sats=dst)
    return strategy


def dvnfp_round(ctx: PlacementContext, requests, state: NetworkState,
                rng=None) -> RoundOutcome:
    """One decision+commit round over a frozen snapshot.

    All agents solve against the same snapshot; strategies are then applied
    in first-come-first-served order (arrival slot, then request id) with a
    feasibility re-check against the live state.
    """
    outcome = RoundOutcome()
    snapshot = state.snapshot()
    solved: list[tuple[UserRequest, PlacementStrategy]] = []
    for request in requests:
        src, dst = ctx.neighbours(request)
        if not src or not dst:
            outcome.failed_local.append(request)
            continue
        if rng is not None:
            # The deciding agent is any source neighbour; affects logs only,
            # every agent sees the same snapshot.
            outcome.agents[request.id] = int(src[int(rng.integers(len(src)))])
        else:
            outcome.agents[request.id] = src[0]
        outcome.solver_calls += 1
        strategy = _solve(ctx, request, snapshot, "viterbi")
        if strategy is None:
            outcome.failed_local.append(request)
        else:
            solved.append((request, strategy))

    solved.sort(key=lambda rs: (rs[0].arrival_slot, rs[0].id))
    for request, strategy in solved:
        if check_feasible(state, request, strategy, ctx.coverage):
            outcome.deferred.append(request)  # resource conflict; strategy reset
        else:
            commit(state, request, strategy, ctx.coverage)
            outcome.committed.append((request, strategy))
    return outcome


def dvnfp_place_all(ctx: PlacementContext, requests, state: NetworkState,
                    rng=None) -> BatchResult:
    """Round loop: re-solve deferred requests until none remain or a round
    commits nothing (the remaining set then runs locally)."""
    committed: list[tuple[UserRequest, PlacementStrategy]] = []
    failed: list[UserRequest] = []
    pending = list(requests)
    rounds = 0
    solver_calls = 0
    while pending:
        rounds += 1
        outcome = dvnfp_round(ctx, pending, state, rng)
        solver_calls += outcome.solver_calls
        committed.extend(outcome.committed)
        failed.extend(outcome.failed_local)
        if not outcome.committed and outcome.deferred:
            failed.extend(outcome.deferred)
            break
        pending = outcome.deferred
    return BatchResult(committed, failed, rounds, solver_calls)


def sequential_place_all(ctx: PlacementContext, requests, state: NetworkState,
                         solver: str) -> BatchResult:
    """Centralized baseline: one pass over the live state in arrival order."""
    committed = []
    failed = []
    calls = 0
    for request in sorted(requests, key=lambda r: (r.arrival_slot, r.id)):
        src, dst = ctx.neighbours(request)
        if not src or not dst:
            failed.append(request)
            continue
        calls += 1
        strategy = _solve(ctx, request, state, solver)
        if strategy is None:
            failed.append(request)
        else:
            commit(state, request, strategy, ctx.coverage)
            committed.append((request, strategy))
    return BatchResult(committed, failed, rounds=1 if requests else 0,
                       solver_calls=calls)


def place_batch(ctx: PlacementContext, algorithm: str, requests,
                state: NetworkState, rng=None) -> BatchResult:
    if algorithm == "dvnfp":
        return dvnfp_place_all(ctx, requests, state, rng)
    if algorithm in ("greedy", "viterbi"):
        return sequential_place_all(ctx, requests, state, algorithm)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def _batch_summary(result: BatchResult, state: NetworkState, total: int):
    edge = sum(1 for _, s in result.committed if s.edge)
    cloud = len(result.committed) - edge
    local = len(result.failed_local)
    allocated = 1.0 if total == 0 else len(result.committed) / total
    return edge, cloud, local, allocated


def run_static_experiment(ctx: PlacementContext, workload: WorkloadParams,
                          algorithm: str, m: int, rng) -> ExperimentResult:
    """Place one batch of m fresh requests on an empty state."""
    # Agent choice draws come from a side stream so the workload stream is
    # identical across algorithms for a given seed.
    agent_rng = np.random.default_rng(int(rng.integers(2 ** 63)))
    requests = [generate_request(rng, ctx.coverage, workload, req_id=i)
                for i in range(m)]
    state = NetworkState(ctx.network)
    result = place_batch(ctx, algorithm, requests, state, agent_rng)
    edge, cloud, local, allocated = _batch_summary(result, state, m)
    return ExperimentResult(
        bandwidth_mbps=bandwidth_cost(state),
        mean_delay_ms=user_delay_cost([s for _, s in result.committed]),
        allocated_fraction=allocated,
        edge_count=edge,
        cloud_count=cloud,
        local_count=local,
        rounds=result.rounds,
        solver_calls=result.solver_calls,
    )


@dataclass
class DynamicRun:
    metrics: list[SlotMetrics]
    state: NetworkState
    live: dict[int, tuple[UserRequest, PlacementStrategy, int]]  # id -> (req, strat, expiry)

    def drain(self) -> None:
        """Force expiry of everything still live (releases all resources)."""
        for req, strat, _ in list(self.live.values()):
            release(self.state, req, strat)
        self.live.clear()


def run_dynamic_simulation(ctx: PlacementContext, workload: WorkloadParams,
                           algorithm: str, slots: int, rng) -> DynamicRun:
    """Time-slot loop: expire, arrive, place, measure."""
    state = NetworkState(ctx.network)
    live: dict[int, tuple[UserRequest, PlacementStrategy, int]] = {}
    metrics: list[SlotMetrics] = []
    next_id = 0
    agent_rng = np.random.default_rng(int(rng.integers(2 ** 63)))
    for slot in range(slots):
        expired = [rid for rid, (_, _, end) in live.items() if end <= slot]
        for rid in expired:
            req, strat, _ = live.pop(rid)
            release(state, req, strat)

        n_arrivals = sample_arrivals(rng, workload.arrival_rate)
        batch = []
        for _ in range(n_arrivals):
            duration = sample_duration(rng, workload.duration_mean)
            batch.append(generate_request(rng, ctx.coverage, workload,
                                          req_id=next_id, arrival_slot=slot,
                                          duration=duration))
            next_id += 1

        result = place_batch(ctx, algorithm, batch, state, agent_rng)
        for req, strat in result.committed:
            live[req.id] = (req, strat, slot + req.duration)

        edge, cloud, local, allocated = _batch_summary(result, state, n_arrivals)
        metrics.append(SlotMetrics(
            slot=slot,
            bandwidth_mbps=bandwidth_cost(state),
            mean_delay_ms=user_delay_cost([s for _, s in result.committed]),
            allocated_fraction=allocated,
            arrivals=n_arrivals,
            edge_count=edge,
            cloud_count=cloud,
            local_count=local,
            rounds=result.rounds,
            solver_calls=result.solver_calls,
        ))
    return DynamicRun(metrics, state, live)
