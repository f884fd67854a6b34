"""Delay-shortest path precomputation and per-request candidate routes.

Paths between satellite pairs are assumed known in advance, so a PathTable
enumerates the d loopless minimum-delay paths for every ordered pair once
(Yen's algorithm) and is then shared read-only.  Ties on delay break on the
lexicographic link-id sequence so results are reproducible.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass

from .topology import SatelliteNetwork, CoverageMap, OutsideAreaError


class CoverageError(ValueError):
    """Request endpoint has no covering satellite; the request runs locally."""


@dataclass(frozen=True)
class Path:
    nodes: tuple[int, ...]    # satellite sequence; a single node is the empty path
    links: tuple[int, ...]    # link ids, len(nodes) - 1
    delay: float              # ms, sum of member link delays
    prefix: tuple[float, ...]  # prefix[i] = delay of links[:i]

    @property
    def hops(self) -> int:
        return len(self.links)

    def segment_delay(self, i: int, j: int) -> float:
        """Delay of the sub-path between positions i <= j."""
        return self.prefix[j] - self.prefix[i]


def make_path(network: SatelliteNetwork, nodes: tuple[int, ...],
              links: tuple[int, ...]) -> Path:
    prefix = [0.0]
    for lk in links:
        prefix.append(prefix[-1] + network.links[lk].delay)
    return Path(nodes=nodes, links=links, delay=prefix[-1], prefix=tuple(prefix))


def empty_path(sat: int) -> Path:
    return Path(nodes=(sat,), links=(), delay=0.0, prefix=(0.0,))


def subpath(network: SatelliteNetwork, path: Path, i: int, j: int) -> Path:
    """Routed sub-path between path positions i and j (either direction)."""
    if i == j:
        return empty_path(path.nodes[i])
    if i < j:
        return make_path(network, path.nodes[i:j + 1], path.links[i:j])
    nodes = tuple(reversed(path.nodes[j:i + 1]))
    links = tuple(reversed(path.links[j:i]))
    return make_path(network, nodes, links)


def _dijkstra(adjacency, delays, src: int, dst: int,
              banned_nodes: set[int], banned_links: set[int]) -> Path | None:
    """Min-delay path with (delay, link-id sequence) ordering for determinism."""
    # Heap entries carry the link sequence so equal-delay paths pop in
    # lexicographic link order.
    heap = [(0.0, (), src)]
    best: dict[int, tuple[float, tuple[int, ...]]] = {}
    while heap:
        d, links, node = heapq.heappop(heap)
        if node == dst:
            nodes = [src]
            # Reconstruct node sequence from the link list.
            cur = src
            # adjacency lookup by link id
            for lk in links:
                for l2, nb in adjacency[cur]:
                    if l2 == lk:
                        cur = nb
                        break
                nodes.append(cur)
            prefix = [0.0]
            for lk in links:
                prefix.append(prefix[-1] + delays[lk])
            return Path(tuple(nodes), links, d, tuple(prefix))
        seen = best.get(node)
        if seen is not None and seen <= (d, links):
            continue
        best[node] = (d, links)
        for lk, nb in adjacency[node]:
            if lk in banned_links or nb in banned_nodes:
                continue
            heapq.heappush(heap, (d + delays[lk], links + (lk,), nb))
    return None


def k_shortest_paths(network: SatelliteNetwork, src: int, dst: int, d: int) -> list[Path]:
    """The d loopless minimum-delay paths from src to dst (Yen), fewer if fewer exist.

    Sorted strictly by (delay, lexicographic link-id sequence); src == dst
    yields the single empty path.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    n = network.n_satellites
    if not (0 <= src < n and 0 <= dst < n):
        raise ValueError("src/dst must be satellites in the network")
    if src == dst:
        return [empty_path(src)]

    adjacency = network.adjacency
    delays = [lk.delay for lk in network.links]

    first = _dijkstra(adjacency, delays, src, dst, set(), set())
    if first is None:
        return []
    found = [first]
    candidates: list[tuple[float, tuple[int, ...], Path]] = []
    seen_links = {first.links}

    while len(found) < d:
        prev = found[-1]
        for i in range(len(prev.nodes) - 1):
            spur_node = prev.nodes[i]
            root_nodes = prev.nodes[:i + 1]
            root_links = prev.links[:i]
            banned_links = set()
            for p in found:
                if p.links[:i] == root_links and len(p.links) > i:
                    banned_links.add(p.links[i])
            banned_nodes = set(root_nodes[:-1])
            spur = _dijkstra(adjacency, delays, spur_node, dst,
                             banned_nodes, banned_links)
            if spur is None:
                continue
            links = root_links + spur.links
            if links in seen_links:
                continue
            seen_links.add(links)
            nodes = root_nodes + spur.nodes[1:]
            prefix = [0.0]
            for lk in links:
                prefix.append(prefix[-1] + delays[lk])
            path = Path(tuple(nodes), links, prefix[-1], tuple(prefix))
            heapq.heappush(candidates, (path.delay, path.links, path))
        if not candidates:
            break
        _, _, nxt = heapq.heappop(candidates)
        found.append(nxt)
    return found


class PathTable:
    """Precomputed d shortest paths for every ordered satellite pair."""

    def __init__(self, network: SatelliteNetwork, d: int):
        if d < 1:
            raise ValueError("d must be >= 1")
        self.network = network
        self.d = d
        self._table: dict[tuple[int, int], tuple[Path, ...]] = {}
        n = network.n_satellites
        for a in range(n):
            for b in range(n):
                self._table[(a, b)] = tuple(k_shortest_paths(network, a, b, d))

    def paths(self, src: int, dst: int) -> tuple[Path, ...]:
        return self._table[(src, dst)]


@dataclass(frozen=True)
class CandidateRoute:
    """One access-pair/path combination, with its end-to-end transfer delay."""

    src_sat: int
    dst_sat: int
    path: Path
    delay: float  # access in + path + access out, ms


def candidate_paths(
    request,
    path_table: PathTable,
    coverage: CoverageMap,
    d: int,
    src_sats=None,
    dst_sats=None,
) -> list[CandidateRoute]:
    """The d best access/path combinations for a request, sorted by delay.

    Evaluates every (source neighbour, destination neighbour, path) combination
    and keeps the d lowest-delay routes; ties break on (src sat, dst sat,
    link-id sequence).
    """
    if src_sats is None:
        src_sats = sorted(coverage.covering(request.source))
    if dst_sats is None:
        dst_sats = sorted(coverage.covering(request.destination))
    if not src_sats or not dst_sats:
        raise CoverageError(f"request {request.id} has an uncovered endpoint")
    out = []
    for n1 in src_sats:
        t_in = coverage.access_delay_for(request.source, n1)
        for n2 in dst_sats:
            t_out = coverage.access_delay_for(request.destination, n2)
            for p in path_table.paths(n1, n2):
                out.append(CandidateRoute(n1, n2, p, t_in + p.delay + t_out))
    out.sort(key=lambda c: (c.delay, c.src_sat, c.dst_sat, c.path.links))
    return out[:d]
