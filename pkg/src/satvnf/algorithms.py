"""Per-request placement solvers.

All solvers are pure functions of (request, state snapshot): they never
mutate the snapshot, and any strategy they return is feasible on it.  The
objective is delay-lexicographic: candidate routes are tried in ascending
end-to-end delay and the first route admitting a complete feasible
assignment wins, with bandwidth cost minimized on that route.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .pathing import (CandidateRoute, CoverageError, Path, PathTable,
                      candidate_paths, subpath)
from .requests import UserRequest
from .state import EPS, NetworkState, PlacementStrategy, end_to_end_delay
from .topology import CoverageMap


@dataclass(frozen=True)
class SolverParams:
    d: int = 8           # candidate paths per pair
    beam_width: int = 4  # partial states kept per Viterbi stage

    def __post_init__(self):
        if self.d < 1 or self.beam_width < 1:
            raise ValueError("d and beam_width must be >= 1")


@dataclass
class BeamState:
    """Partial assignment along one candidate path.

    Tracks its own shadow resource deltas over the snapshot so that two VNFs
    of one chain cannot jointly oversubscribe a nearly-full satellite.
    """

    position: int                 # path position of the last placed VNF
    hosts: tuple[int, ...]        # hosts so far, access function included
    bandwidth: float              # cumulative bandwidth cost (Mbps over links)
    isl_delay: float              # cumulative routed ISL delay, ms
    cpu_delta: dict
    mem_delta: dict
    link_delta: dict

    def sort_key(self):
        # Ties on bandwidth prefer fewer distinct hosts, then lower indices.
        return (self.bandwidth, len(set(self.hosts)), self.hosts)


def _route_candidates(request, snapshot, path_table, coverage, params,
                      candidates):
    if candidates is None:
        candidates = candidate_paths(request, path_table, coverage, params.d)
    return candidates


def _finish_edge_strategy(network, request, route, hosts, positions, coverage):
    """Materialize chain paths and the realized delay for a host sequence."""
    chain_paths = tuple(
        subpath(network, route.path, positions[k], positions[k + 1])
        for k in range(len(hosts) - 1))
    skeleton = PlacementStrategy(
        request_id=request.id,
        edge=True,
        src_access=route.src_sat,
        dst_access=route.dst_sat,
        vnf_hosts=tuple(hosts),
        chain_paths=chain_paths,
    )
    # The realized delay is recomputed with the canonical summation so it is
    # bit-identical to what feasibility checks and audits compute.
    delay = end_to_end_delay(network, request, skeleton, coverage)
    return dataclasses.replace(skeleton, delay=delay)


def viterbi_place(
    request: UserRequest,
    snapshot: NetworkState,
    path_table: PathTable,
    coverage: CoverageMap,
    params: SolverParams,
    candidates: list[CandidateRoute] | None = None,
) -> PlacementStrategy | None:
    """Beam search over VNF stages along each candidate route.

    Routes are tried in ascending delay; per route, every VNF stage considers
    the satellites on the route as candidate servers and the beam keeps the
    ``beam_width`` lowest-bandwidth partial states.  Returns the minimum-
    bandwidth complete state of the first route with any feasible assignment,
    or None if every route fails.
    """
    candidates = _route_candidates(request, snapshot, path_table, coverage,
                                   params, candidates)
    network = snapshot.network
    sats = network.satellites
    cpu_used = snapshot.cpu_used
    mem_used = snapshot.mem_used
    isl_used = snapshot.isl_used
    links = network.links
    interior = request.interior
    bandwidths = request.edge_bandwidths
    compute = request.compute_total
    B = params.beam_width

    for route in candidates:
        # Route-level pruning: even an all-forward assignment cannot beat the
        # route's own transfer delay.
        if route.delay + compute > request.max_delay + EPS:
            continue
        path = route.path
        nodes = path.nodes
        prefix = path.prefix
        last = len(nodes) - 1
        access = route.delay - path.delay  # the two access hops

        beam = [BeamState(0, (route.src_sat,), 0.0, 0.0, {}, {}, {})]
        for idx, vnf in enumerate(interior):
            bw = bandwidths[idx]
            cpu_d, mem_d = vnf.cpu, vnf.mem
            grown: list[BeamState] = []
            for st in beam:
                a = st.position
                for q in range(len(nodes)):
                    sat = nodes[q]
                    if (cpu_used[sat] + st.cpu_delta.get(sat, 0.0) + cpu_d
                            > sats[sat].cpu_capacity + EPS):
                        continue
                    if (mem_used[sat] + st.mem_delta.get(sat, 0.0) + mem_d
                            > sats[sat].mem_capacity + EPS):
                        continue
                    lo, hi = (a, q) if a <= q else (q, a)
                    seg = path.links[lo:hi]
                    ok = True
                    for lk in seg:
                        if (isl_used[lk] + st.link_delta.get(lk, 0.0) + bw
                                > links[lk].bandwidth + EPS):
                            ok = False
                            break
                    if not ok:
                        continue
                    seg_delay = prefix[hi] - prefix[lo]
                    isl_delay = st.isl_delay + seg_delay
                    # Optimistic remaining delay: straight run to the route end.
                    if (compute + access + isl_delay + prefix[last] - prefix[max(a, q)]
                            > request.max_delay + EPS):
                        continue
                    cpu2 = dict(st.cpu_delta)
                    cpu2[sat] = cpu2.get(sat, 0.0) + cpu_d
                    mem2 = dict(st.mem_delta)
                    mem2[sat] = mem2.get(sat, 0.0) + mem_d
                    link2 = st.link_delta
                    if seg:
                        link2 = dict(link2)
                        for lk in seg:
                            link2[lk] = link2.get(lk, 0.0) + bw
                    grown.append(BeamState(
                        q, st.hosts + (sat,), st.bandwidth + bw * len(seg),
                        isl_delay, cpu2, mem2, link2))
            if not grown:
                beam = []
                break
            grown.sort(key=BeamState.sort_key)
            beam = grown[:B]

        if not beam:
            continue

        # Final stage: the destination access function, pinned to the route end.
        bw = bandwidths[-1]
        terminal: list[BeamState] = []
        for st in beam:
            a = st.position
            lo, hi = (a, last) if a <= last else (last, a)
            seg = path.links[lo:hi]
            ok = True
            for lk in seg:
                if (isl_used[lk] + st.link_delta.get(lk, 0.0) + bw
                        > links[lk].bandwidth + EPS):
                    ok = False
                    break
            if not ok:
                continue
            isl_delay = st.isl_delay + (prefix[hi] - prefix[lo])
            if compute + access + isl_delay > request.max_delay + EPS:
                continue
            terminal.append(BeamState(
                last, st.hosts + (route.dst_sat,), st.bandwidth + bw * len(seg),
                isl_delay, st.cpu_delta, st.mem_delta, st.link_delta))
        if not terminal:
            continue

        best = min(terminal, key=BeamState.sort_key)
        positions = _positions_for(nodes, best.hosts)
        return _finish_edge_strategy(network, request, route, best.hosts,
                                     positions, coverage)
    return None


def _positions_for(nodes, hosts):
    index = {sat: q for q, sat in enumerate(nodes)}
    return [index[h] for h in hosts]


def _cloud_leg_candidates(snapshot, path_table, access_sats, gateways,
                          access_delay, ground_delays, d, inbound):
    """All (access sat, gateway, path) legs sorted by delay, truncated to d.

    ``inbound`` False: access sat -> gateway (uplink).  True: gateway ->
    access sat (downlink).  Delay includes the access hop and the ground hop.
    """
    out = []
    for sat in access_sats:
        for gw in gateways:
            src, dst = (gw, sat) if inbound else (sat, gw)
            for p in path_table.paths(src, dst):
                out.append((access_delay + p.delay + ground_delays[gw], sat, gw, p))
    out.sort(key=lambda t: (t[0], t[1], t[2], t[3].links))
    return out[:d]


def path_selection_place(
    request: UserRequest,
    snapshot: NetworkState,
    path_table: PathTable,
    coverage: CoverageMap,
    params: SolverParams,
    src_sats=None,
    dst_sats=None,
) -> PlacementStrategy | None:
    """Cloud fallback: pick the minimum-delay feasible leg each way.

    Interior VNFs run in the cloud; the satellite network routes the uplink
    chain edge to a gateway and the downlink chain edge back.  Both legs are
    selected independently (first feasible in ascending delay); the combined
    strategy is returned only if both legs succeed and remain jointly
    feasible, including the delay bound.
    """
    network = snapshot.network
    cloud = network.cloud
    if cloud is None:
        raise ValueError("no cloud data center configured")
    if not request.interior:
        return None
    if src_sats is None:
        src_sats = sorted(coverage.covering(request.source))
    if dst_sats is None:
        dst_sats = sorted(coverage.covering(request.destination))
    if not src_sats or not dst_sats:
        raise CoverageError(f"request {request.id} has an uncovered endpoint")

    ground_delays = {gl.satellite: gl.delay for gl in cloud.links}
    ground_caps = {gl.satellite: gl.bandwidth for gl in cloud.links}
    b_up = request.edge_bandwidths[0]
    b_down = request.edge_bandwidths[-1]
    t_src = coverage.access_delay_for(request.source, src_sats[0])
    t_dst = coverage.access_delay_for(request.destination, dst_sats[0])

    def pick(legs, bw):
        for delay, sat, gw, p in legs:
            if snapshot.ground_used[gw] + bw > ground_caps[gw] + EPS:
                continue
            if any(snapshot.isl_used[lk] + bw > network.links[lk].bandwidth + EPS
                   for lk in p.links):
                continue
            return delay, sat, gw, p
        return None

    up = pick(_cloud_leg_candidates(snapshot, path_table, src_sats,
                                    cloud.gateways, t_src, ground_delays,
                                    params.d, inbound=False), b_up)
    if up is None:
        return None
    down = pick(_cloud_leg_candidates(snapshot, path_table, dst_sats,
                                      cloud.gateways, t_dst, ground_delays,
                                      params.d, inbound=True), b_down)
    if down is None:
        return None

    up_delay, src_sat, up_gw, up_path = up
    down_delay, dst_sat, down_gw, down_path = down
    total = request.compute_total + up_delay + down_delay
    if total > request.max_delay + EPS:
        return None

    # Joint re-check: the two legs may share links or a gateway.
    shared = set(up_path.links) & set(down_path.links)
    for lk in shared:
        if (snapshot.isl_used[lk] + b_up + b_down
                > network.links[lk].bandwidth + EPS):
            return None
    if up_gw == down_gw and (snapshot.ground_used[up_gw] + b_up + b_down
                             > ground_caps[up_gw] + EPS):
        return None

    skeleton = PlacementStrategy(
        request_id=request.id,
        edge=False,
        src_access=src_sat,
        dst_access=dst_sat,
        up_gateway=up_gw,
        down_gateway=down_gw,
        up_path=up_path,
        down_path=down_path,
    )
    delay = end_to_end_delay(network, request, skeleton, coverage)
    return dataclasses.replace(skeleton, delay=delay)


def greedy_place(
    request: UserRequest,
    snapshot: NetworkState,
    path_table: PathTable,
    coverage: CoverageMap,
    params: SolverParams,
    candidates: list[CandidateRoute] | None = None,
) -> PlacementStrategy | None:
    """Stage-local baseline: along each candidate route, give every VNF the
    first feasible server (in path order) minimizing the immediate incremental
    bandwidth cost.  Falls back to cloud path selection when no route admits a
    full assignment.
    """
    candidates = _route_candidates(request, snapshot, path_table, coverage,
                                   params, candidates)
    network = snapshot.network
    sats = network.satellites
    cpu_used = snapshot.cpu_used
    mem_used = snapshot.mem_used
    isl_used = snapshot.isl_used
    links = network.links
    interior = request.interior
    bandwidths = request.edge_bandwidths
    compute = request.compute_total

    for route in candidates:
        if route.delay + compute > request.max_delay + EPS:
            continue
        path = route.path
        nodes = path.nodes
        prefix = path.prefix
        last = len(nodes) - 1
        access = route.delay - path.delay

        pos = 0
        hosts = [route.src_sat]
        positions = [0]
        isl_delay = 0.0
        cpu_delta: dict = {}
        mem_delta: dict = {}
        link_delta: dict = {}
        failed = False
        for idx, vnf in enumerate(interior):
            bw = bandwidths[idx]
            best = None
            for q in range(len(nodes)):
                sat = nodes[q]
                if (cpu_used[sat] + cpu_delta.get(sat, 0.0) + vnf.cpu
                        > sats[sat].cpu_capacity + EPS):
                    continue
                if (mem_used[sat] + mem_delta.get(sat, 0.0) + vnf.mem
                        > sats[sat].mem_capacity + EPS):
                    continue
                lo, hi = (pos, q) if pos <= q else (q, pos)
                seg = path.links[lo:hi]
                if any(isl_used[lk] + link_delta.get(lk, 0.0) + bw
                       > links[lk].bandwidth + EPS for lk in seg):
                    continue
                seg_delay = prefix[hi] - prefix[lo]
                if (compute + access + isl_delay + seg_delay
                        + prefix[last] - prefix[max(pos, q)]
                        > request.max_delay + EPS):
                    continue
                cost = bw * len(seg)
                if best is None or cost < best[0]:
                    best = (cost, q, sat, seg, seg_delay)
            if best is None:
                failed = True
                break
            cost, q, sat, seg, seg_delay = best
            pos = q
            hosts.append(sat)
            positions.append(q)
            isl_delay += seg_delay
            cpu_delta[sat] = cpu_delta.get(sat, 0.0) + vnf.cpu
            mem_delta[sat] = mem_delta.get(sat, 0.0) + vnf.mem
            for lk in seg:
                link_delta[lk] = link_delta.get(lk, 0.0) + bw
        if failed:
            continue

        bw = bandwidths[-1]
        lo, hi = (pos, last) if pos <= last else (last, pos)
        seg = path.links[lo:hi]
        if any(isl_used[lk] + link_delta.get(lk, 0.0) + bw
               > links[lk].bandwidth + EPS for lk in seg):
            continue
        isl_delay += prefix[hi] - prefix[lo]
        if compute + access + isl_delay > request.max_delay + EPS:
            continue
        hosts.append(route.dst_sat)
        positions.append(last)
        return _finish_edge_strategy(network, request, route, hosts,
                                     positions, coverage)

    if network.cloud is not None and request.interior:
        return path_selection_place(request, snapshot, path_table, coverage,
                                    params)
    return None
