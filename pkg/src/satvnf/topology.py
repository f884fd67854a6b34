"""LEO constellation graph, cloud data center attachment, and ground coverage.

The constellation is a torus: a ring of satellites within each orbital plane
and a ring across planes at each slot index.  Coverage is modeled as one
rectangular ground cell per satellite with a configurable overlap band and
uncovered gap band, which is enough to produce single-cover, multi-cover,
and uncovered ground points.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

# Defaults follow the published constellation parameters.
DEFAULT_CPU_CAPACITY = 96.0       # vCPUs per satellite
DEFAULT_MEM_CAPACITY = 112.0      # GB per satellite
DEFAULT_ISL_BANDWIDTH = 1000.0    # Mbps
DEFAULT_GROUND_BANDWIDTH = 10000.0  # Mbps, satellite to cloud
DEFAULT_GROUND_DELAY = 13.1       # ms, satellite to cloud
DEFAULT_ACCESS_DELAY = 13.1       # ms, user to covering satellite

INTRA_PLANE = "intra"
INTER_PLANE = "inter"


class TopologyError(ValueError):
    """Invalid constellation or cloud configuration."""


class OutsideAreaError(ValueError):
    """Ground point lies outside the modeled coverage area."""


@dataclass(frozen=True)
class DelayProfile:
    """Per-link-kind ISL delays in ms.

    Intra-plane rings alternate between the two intra values so that in an
    even-sized ring every satellite sees one link of each delay; inter-plane
    links share a single value.
    """

    intra_even: float = 7.25
    intra_odd: float = 12.6
    inter_plane: float = 13.4


@dataclass(frozen=True)
class Satellite:
    id: int
    cpu_capacity: float
    mem_capacity: float
    plane: int
    slot_in_plane: int


@dataclass(frozen=True)
class Link:
    id: int
    u: int
    v: int
    bandwidth: float  # Mbps
    delay: float      # ms
    kind: str         # INTRA_PLANE or INTER_PLANE

    def other(self, sat: int) -> int:
        return self.v if sat == self.u else self.u


@dataclass(frozen=True)
class GroundLink:
    satellite: int
    bandwidth: float  # Mbps
    delay: float      # ms


@dataclass(frozen=True)
class CloudDataCenter:
    gateways: tuple[int, ...]
    links: tuple[GroundLink, ...]

    def link_for(self, sat: int) -> GroundLink:
        for gl in self.links:
            if gl.satellite == sat:
                return gl
        raise KeyError(f"satellite {sat} is not a cloud gateway")


@dataclass(frozen=True)
class SatelliteNetwork:
    planes: int
    sats_per_plane: int
    satellites: tuple[Satellite, ...]
    links: tuple[Link, ...]
    cloud: CloudDataCenter | None = None
    # adjacency[sat] = tuple of (link_id, neighbour sat id)
    adjacency: tuple[tuple[tuple[int, int], ...], ...] = field(default=())

    @property
    def n_satellites(self) -> int:
        return len(self.satellites)

    @property
    def n_links(self) -> int:
        return len(self.links)


def _build_adjacency(n: int, links: tuple[Link, ...]):
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for lk in links:
        adj[lk.u].append((lk.id, lk.v))
        adj[lk.v].append((lk.id, lk.u))
    return tuple(tuple(a) for a in adj)


def build_constellation(
    planes: int,
    sats_per_plane: int,
    cpu_capacity: float = DEFAULT_CPU_CAPACITY,
    mem_capacity: float = DEFAULT_MEM_CAPACITY,
    delay_profile: DelayProfile = DelayProfile(),
    isl_bandwidth: float = DEFAULT_ISL_BANDWIDTH,
) -> SatelliteNetwork:
    """Build the torus constellation.

    Satellite ids are ``plane * sats_per_plane + slot``.  Rings of size 2
    deduplicate the wrap link; rings of size 1 produce no link.
    """
    if planes < 1 or sats_per_plane < 1:
        raise TopologyError("planes and sats_per_plane must be >= 1")
    if cpu_capacity <= 0 or mem_capacity <= 0:
        raise TopologyError("satellite capacities must be positive")
    if isl_bandwidth <= 0:
        raise TopologyError("ISL bandwidth must be positive")

    sats = tuple(
        Satellite(
            id=p * sats_per_plane + s,
            cpu_capacity=float(cpu_capacity),
            mem_capacity=float(mem_capacity),
            plane=p,
            slot_in_plane=s,
        )
        for p in range(planes)
        for s in range(sats_per_plane)
    )

    links: list[Link] = []

    def add(u: int, v: int, delay: float, kind: str) -> None:
        links.append(Link(len(links), u, v, float(isl_bandwidth), float(delay), kind))

    # Intra-plane ring: link from slot s to slot s+1 (wrapping); the delay
    # alternates with the parity of the lower slot so even rings give every
    # satellite one link of each published intra-plane delay.
    for p in range(planes):
        base = p * sats_per_plane
        if sats_per_plane >= 2:
            span = sats_per_plane if sats_per_plane > 2 else 1
            for s in range(span):
                delay = delay_profile.intra_even if s % 2 == 0 else delay_profile.intra_odd
                add(base + s, base + (s + 1) % sats_per_plane, delay, INTRA_PLANE)

    # Inter-plane ring at each slot.
    if planes >= 2:
        span = planes if planes > 2 else 1
        for s in range(sats_per_plane):
            for p in range(span):
                u = p * sats_per_plane + s
                v = ((p + 1) % planes) * sats_per_plane + s
                add(u, v, delay_profile.inter_plane, INTER_PLANE)

    for lk in links:
        if lk.delay <= 0:
            raise TopologyError("link delays must be positive")

    return SatelliteNetwork(
        planes=planes,
        sats_per_plane=sats_per_plane,
        satellites=sats,
        links=tuple(links),
        cloud=None,
        adjacency=_build_adjacency(len(sats), tuple(links)),
    )


def attach_cloud(
    network: SatelliteNetwork,
    covering: set[int] | tuple[int, ...] | list[int],
    bandwidth: float = DEFAULT_GROUND_BANDWIDTH,
    delay: float = DEFAULT_GROUND_DELAY,
) -> SatelliteNetwork:
    """Attach the cloud data center behind the given gateway satellites."""
    gateways = tuple(sorted(set(covering)))
    if not gateways:
        raise TopologyError("cloud data center needs at least one covering satellite")
    if bandwidth <= 0 or delay <= 0:
        raise TopologyError("ground link bandwidth and delay must be positive")
    n = network.n_satellites
    for g in gateways:
        if not (0 <= g < n):
            raise TopologyError(f"covering satellite {g} is not in the network")
    cloud = CloudDataCenter(
        gateways=gateways,
        links=tuple(GroundLink(g, float(bandwidth), float(delay)) for g in gateways),
    )
    return dataclasses.replace(network, cloud=cloud)


@dataclass(frozen=True)
class CoverageMap:
    """Rectangular per-satellite footprints over a ``planes x sats_per_plane`` grid.

    The ground area is ``[0, planes) x [0, sats_per_plane)`` with one unit cell
    per satellite: a point's x coordinate selects the plane and y the slot.
    Each footprint extends ``overlap`` cell-widths beyond its cell on every
    side and retreats ``gap / 2`` on every side, so ``overlap = gap = 0``
    partitions the area exactly.
    """

    planes: int
    sats_per_plane: int
    overlap: float = 0.0
    gap: float = 0.0
    access_delay: float = DEFAULT_ACCESS_DELAY

    def __post_init__(self):
        if not (0.0 <= self.overlap < 1.0):
            raise TopologyError("overlap must be in [0, 1)")
        if not (0.0 <= self.gap < 1.0):
            raise TopologyError("gap must be in [0, 1)")
        if self.access_delay <= 0:
            raise TopologyError("access delay must be positive")

    def _axis_cover(self, coord: float, cells: int) -> list[int]:
        lo_ext = self.overlap - self.gap / 2.0
        out = []
        base = int(coord)
        for c in (base - 1, base, base + 1):
            if 0 <= c < cells and c - lo_ext <= coord < c + 1 + lo_ext:
                out.append(c)
        return out

    def covering(self, point: tuple[float, float]) -> set[int]:
        """Satellites whose footprint contains the point; may be empty."""
        x, y = point
        if not (0.0 <= x < self.planes and 0.0 <= y < self.sats_per_plane):
            raise OutsideAreaError(f"point {point!r} is outside the modeled area")
        covered = set()
        for p in self._axis_cover(x, self.planes):
            for s in self._axis_cover(y, self.sats_per_plane):
                covered.add(p * self.sats_per_plane + s)
        return covered

    def access_delay_for(self, point, sat: int) -> float:
        """User-to-satellite hop delay; a flat per-map value."""
        return self.access_delay

    def cell_center(self, sat: int) -> tuple[float, float]:
        p, s = divmod(sat, self.sats_per_plane)
        return (p + 0.5, s + 0.5)

    def sample_covered_point(self, rng) -> tuple[float, float]:
        """Uniform point over the covered part of the area (rejection sampling)."""
        while True:
            x = rng.uniform(0.0, self.planes)
            y = rng.uniform(0.0, self.sats_per_plane)
            if self.covering((x, y)):
                return (x, y)


def neighbouring_satellites(coverage: CoverageMap, point) -> set[int]:
    """Satellites covering the ground point (empty when in a gap)."""
    return coverage.covering(point)
