"""Service-chain user requests and random workload generation.

A request is an ordered VNF chain whose first and last elements are
zero-demand access functions pinned to covering satellites; interior VNFs
carry CPU/memory/compute-time demands and consecutive VNFs are joined by
bandwidth-weighted chain edges.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict

from .topology import CoverageMap


@dataclass(frozen=True)
class Vnf:
    cpu: float          # vCPUs
    mem: float          # GB
    compute_time: float  # ms

    @property
    def is_access(self) -> bool:
        return self.cpu == 0.0 and self.mem == 0.0 and self.compute_time == 0.0


ACCESS_VNF = Vnf(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class UserRequest:
    id: int
    vnfs: tuple[Vnf, ...]                 # first and last are access functions
    edge_bandwidths: tuple[float, ...]    # Mbps, one per consecutive VNF pair
    source: tuple[float, float]
    destination: tuple[float, float]
    max_delay: float                      # ms
    arrival_slot: int = 0
    duration: int = 1                     # whole slots

    def __post_init__(self):
        if len(self.vnfs) < 2:
            raise ValueError("a chain needs at least the two access functions")
        if len(self.edge_bandwidths) != len(self.vnfs) - 1:
            raise ValueError("need exactly one bandwidth per chain edge")
        if not (self.vnfs[0].is_access and self.vnfs[-1].is_access):
            raise ValueError("chain must start and end with access functions")

    @property
    def interior(self) -> tuple[Vnf, ...]:
        return self.vnfs[1:-1]

    @property
    def compute_total(self) -> float:
        return sum(v.compute_time for v in self.vnfs)


@dataclass(frozen=True)
class WorkloadParams:
    chain_exponent: float = 2.0
    chain_min: int = 2
    chain_max: int = 7
    cpu_range: tuple[float, float] = (1.0, 2.0)
    mem_range: tuple[float, float] = (2.0, 4.0)
    compute_range: tuple[float, float] = (20.0, 30.0)   # ms
    bandwidth_range: tuple[float, float] = (1.0, 5.0)   # Mbps
    max_delay: float = 250.0                            # ms
    integer_demands: bool = False
    arrival_rate: float = 0.0       # mean arrivals per slot
    duration_mean: float = 3.0      # mean lifetime in slots

    def __post_init__(self):
        if self.chain_min < 2 or self.chain_max < self.chain_min:
            raise ValueError("need 2 <= chain_min <= chain_max")
        for lo, hi in (self.cpu_range, self.mem_range, self.compute_range,
                       self.bandwidth_range):
            if lo > hi:
                raise ValueError("range minimum exceeds maximum")
        if self.arrival_rate < 0:
            raise ValueError("arrival rate must be >= 0")
        if self.duration_mean <= 0:
            raise ValueError("duration mean must be > 0")


def sample_chain_length(rng, exponent: float = 2.0, lo: int = 2, hi: int = 7) -> int:
    """Draw a chain length k in [lo, hi] with P(k) proportional to k^-exponent."""
    if lo < 2:
        raise ValueError("chain length minimum must be >= 2")
    weights = [k ** (-exponent) for k in range(lo, hi + 1)]
    total = sum(weights)
    u = rng.random() * total
    acc = 0.0
    for k, w in zip(range(lo, hi + 1), weights):
        acc += w
        if u < acc:
            return k
    return hi


# Resource and bandwidth demands are quantized to this dyadic grid so that
# ledger sums and their inverses are exact in double precision (commit then
# release restores the state bitwise).
_GRID = 2.0 ** 20


def _quantize(x: float, lo: float, hi: float) -> float:
    q = round(x * _GRID) / _GRID
    return min(max(q, lo), hi)


def _draw(rng, lo: float, hi: float, integer: bool) -> float:
    if integer:
        return float(rng.integers(int(lo), int(hi) + 1))
    return _quantize(float(rng.uniform(lo, hi)), lo, hi)


def generate_request(
    rng,
    coverage: CoverageMap,
    params: WorkloadParams,
    req_id: int,
    arrival_slot: int = 0,
    duration: int = 1,
) -> UserRequest:
    """Generate one random request with covered source and destination points."""
    length = sample_chain_length(rng, params.chain_exponent,
                                 params.chain_min, params.chain_max)
    source = coverage.sample_covered_point(rng)
    destination = coverage.sample_covered_point(rng)
    interior = tuple(
        Vnf(
            cpu=_draw(rng, *params.cpu_range, params.integer_demands),
            mem=_draw(rng, *params.mem_range, params.integer_demands),
            compute_time=float(rng.uniform(*params.compute_range)),
        )
        for _ in range(length - 2)
    )
    bandwidths = tuple(
        _quantize(float(rng.uniform(*params.bandwidth_range)), *params.bandwidth_range)
        for _ in range(length - 1)
    )
    return UserRequest(
        id=req_id,
        vnfs=(ACCESS_VNF,) + interior + (ACCESS_VNF,),
        edge_bandwidths=bandwidths,
        source=source,
        destination=destination,
        max_delay=params.max_delay,
        arrival_slot=arrival_slot,
        duration=duration,
    )


def sample_arrivals(rng, rate: float) -> int:
    """Poisson arrival count for one slot."""
    if rate < 0:
        raise ValueError("arrival rate must be >= 0")
    if rate == 0:
        return 0
    return int(rng.poisson(rate))


def sample_duration(rng, mean: float) -> int:
    """Exponential lifetime with the given mean, rounded up to >= 1 whole slot."""
    if mean <= 0:
        raise ValueError("duration mean must be > 0")
    return max(1, math.ceil(rng.exponential(mean)))


def requests_to_json(reqs: list[UserRequest]) -> str:
    return json.dumps([asdict(r) for r in reqs], sort_keys=True)


def requests_from_json(text: str) -> list[UserRequest]:
    out = []
    for obj in json.loads(text):
        out.append(UserRequest(
            id=obj["id"],
            vnfs=tuple(Vnf(**v) for v in obj["vnfs"]),
            edge_bandwidths=tuple(obj["edge_bandwidths"]),
            source=tuple(obj["source"]),
            destination=tuple(obj["destination"]),
            max_delay=obj["max_delay"],
            arrival_slot=obj["arrival_slot"],
            duration=obj["duration"],
        ))
    return out
