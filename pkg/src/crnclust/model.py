"""Domain types and channel/graph arithmetic shared by every clustering scheme.

Channel sets are fixed-width bit vectors, so all common-channel math reduces
to integer AND/OR.  Node ids are dense integers in ``[0, N)``: they double as
list indices and as the universal deterministic tie-breaker.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence


class ChannelSet:
    """Immutable set of licensed-channel indices below a fixed capacity."""

    __slots__ = ("mask", "capacity")

    def __init__(self, mask: int, capacity: int):
        if capacity < 0:
            raise ValueError("channel capacity must be non-negative")
        if mask < 0 or mask >> capacity:
            raise ValueError(f"channel index out of range for capacity {capacity}")
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "capacity", capacity)

    def __setattr__(self, name, value):  # pragma: no cover - immutability guard
        raise AttributeError("ChannelSet is immutable")

    @classmethod
    def of(cls, channels: Iterable[int], capacity: int) -> "ChannelSet":
        mask = 0
        for c in channels:
            if not 0 <= c < capacity:
                raise ValueError(f"channel {c} outside [0, {capacity})")
            mask |= 1 << c
        return cls(mask, capacity)

    @classmethod
    def empty(cls, capacity: int) -> "ChannelSet":
        return cls(0, capacity)

    @classmethod
    def full(cls, capacity: int) -> "ChannelSet":
        return cls((1 << capacity) - 1, capacity)

    def channels(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.capacity) if self.mask >> i & 1)

    @property
    def is_empty(self) -> bool:
        return self.mask == 0

    def _check(self, other: "ChannelSet") -> None:
        if self.capacity != other.capacity:
            raise ValueError("channel sets have different capacities")

    def __and__(self, other: "ChannelSet") -> "ChannelSet":
        self._check(other)
        return ChannelSet(self.mask & other.mask, self.capacity)

    def __or__(self, other: "ChannelSet") -> "ChannelSet":
        self._check(other)
        return ChannelSet(self.mask | other.mask, self.capacity)

    def __sub__(self, other: "ChannelSet") -> "ChannelSet":
        self._check(other)
        return ChannelSet(self.mask & ~other.mask, self.capacity)

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __contains__(self, channel: int) -> bool:
        return 0 <= channel < self.capacity and bool(self.mask >> channel & 1)

    def __iter__(self) -> Iterator[int]:
        return iter(self.channels())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ChannelSet)
            and self.mask == other.mask
            and self.capacity == other.capacity
        )

    def __hash__(self) -> int:
        return hash((self.mask, self.capacity))

    def __repr__(self) -> str:
        return f"ChannelSet({set(self.channels()) or '{}'}, capacity={self.capacity})"


def common_channels(a: ChannelSet, b: ChannelSet) -> ChannelSet:
    """Channels available to both ``a`` and ``b`` (exact set intersection)."""
    return a & b


@dataclass(frozen=True)
class ConnectivityVector:
    """Per-node spectrum-proximity metrics used in head election.

    ``d`` sums the shared-channel counts with every neighbor; ``g`` is the
    size of the channel intersection over the node plus all its neighbors.
    """

    d: int
    g: int


class Topology:
    """Node set with per-node channel availability and symmetric adjacency.

    Two construction modes: generated topologies carry positions and derive
    edges from the unit-disk rule plus channel overlap; fixture topologies
    carry explicit edges and no positions.  Instances are immutable after
    construction and safe to share across runs.
    """

    __slots__ = ("_channels", "_masks", "_adj", "_nbrs", "_positions", "num_channels")

    def __init__(
        self,
        channels: Sequence[ChannelSet],
        edges: Iterable[tuple[int, int]],
        positions: Sequence[tuple[float, float]] | None = None,
    ):
        n = len(channels)
        caps = {c.capacity for c in channels}
        if len(caps) > 1:
            raise ValueError("all channel sets must share one capacity")
        self._channels = tuple(channels)
        self._masks = tuple(c.mask for c in channels)
        self.num_channels = caps.pop() if caps else 0
        adj: list[set[int]] = [set() for _ in range(n)]
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop on node {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i},{j}) references unknown node")
            if self._masks[i] & self._masks[j] == 0:
                raise ValueError(f"edge ({i},{j}) joins nodes with no common channel")
            adj[i].add(j)
            adj[j].add(i)
        self._adj = tuple(frozenset(s) for s in adj)
        self._nbrs = tuple(tuple(sorted(s)) for s in adj)
        self._positions = tuple((float(x), float(y)) for x, y in positions) if positions is not None else None

    @classmethod
    def from_positions(
        cls,
        positions: Sequence[tuple[float, float]],
        channels: Sequence[ChannelSet],
        radius: float,
    ) -> "Topology":
        """Unit-disk topology: edge iff distance < radius and channels overlap."""
        if len(positions) != len(channels):
            raise ValueError("positions and channels must align")
        if radius <= 0:
            raise ValueError("radius must be positive")
        n = len(channels)
        r2 = radius * radius
        edges = []
        for i in range(n):
            xi, yi = positions[i]
            mi = channels[i].mask
            for j in range(i + 1, n):
                xj, yj = positions[j]
                dx, dy = xi - xj, yi - yj
                if dx * dx + dy * dy < r2 and mi & channels[j].mask:
                    edges.append((i, j))
        return cls(channels, edges, positions)

    @classmethod
    def explicit(
        cls, channels: Sequence[ChannelSet], edges: Iterable[tuple[int, int]]
    ) -> "Topology":
        return cls(channels, edges, None)

    @property
    def n(self) -> int:
        return len(self._channels)

    @property
    def positions(self) -> tuple[tuple[float, float], ...] | None:
        return self._positions

    def channel_set(self, i: int) -> ChannelSet:
        return self._channels[i]

    def channel_mask(self, i: int) -> int:
        return self._masks[i]

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self._nbrs[i]

    def adjacent(self, i: int, j: int) -> bool:
        return j in self._adj[i]

    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.n) for j in self._nbrs[i] if i < j]

    def distance(self, i: int, j: int) -> float:
        if self._positions is None:
            raise ValueError("topology has no positions")
        return math.dist(self._positions[i], self._positions[j])

    # -- document round-trip ------------------------------------------------

    def to_document(self) -> dict:
        nodes = []
        for i in range(self.n):
            node: dict = {"id": i, "channels": list(self._channels[i].channels())}
            if self._positions is not None:
                node["pos"] = list(self._positions[i])
            nodes.append(node)
        return {
            "num_channels": self.num_channels,
            "nodes": nodes,
            "edges": [list(e) for e in self.edges()],
        }

    @classmethod
    def from_document(cls, doc: dict) -> "Topology":
        num_channels = doc["num_channels"]
        nodes = sorted(doc["nodes"], key=lambda nd: nd["id"])
        if [nd["id"] for nd in nodes] != list(range(len(nodes))):
            raise ValueError("node ids must be dense integers starting at 0")
        channels = [ChannelSet.of(nd["channels"], num_channels) for nd in nodes]
        positions = None
        if nodes and all("pos" in nd for nd in nodes):
            positions = [tuple(nd["pos"]) for nd in nodes]
        if "edges" not in doc:
            raise ValueError("document has no edge list; cannot derive edges without a radius")
        edges = [tuple(e) for e in doc["edges"]]
        return cls(channels, edges, positions)

    def to_json(self) -> str:
        return json.dumps(self.to_document(), sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Topology":
        return cls.from_document(json.loads(text))


def cluster_cc(members: Iterable[int], topology: Topology) -> ChannelSet:
    """Common channels over a member set; singletons return the node's own set."""
    mask = None
    for m in members:
        mask = topology.channel_mask(m) if mask is None else mask & topology.channel_mask(m)
    if mask is None:
        raise ValueError("cluster members must be non-empty")
    return ChannelSet(mask, topology.num_channels)


def connectivity_vector(topology: Topology, i: int) -> ConnectivityVector:
    """Connectivity vector of node ``i``.

    ``d`` is the true shared-channel sum over all neighbors; ``g`` intersects
    over ``i`` plus all neighbors regardless of any node's head status.  The
    election-time view (members advertising the sentinel) lives in the scheme
    state, never here.
    """
    mi = topology.channel_mask(i)
    d = 0
    g_mask = mi
    for j in topology.neighbors(i):
        mj = topology.channel_mask(j)
        d += (mi & mj).bit_count()
        g_mask &= mj
    return ConnectivityVector(d=d, g=g_mask.bit_count())


@dataclass(frozen=True)
class Cluster:
    """A head plus its members with the cached common-channel set."""

    head: int
    members: frozenset[int]
    cc: ChannelSet

    def __post_init__(self):
        if self.head not in self.members:
            raise ValueError("cluster head must be a member")

    @classmethod
    def of(cls, topology: Topology, head: int, members: Iterable[int]) -> "Cluster":
        ms = frozenset(members) | {head}
        return cls(head=head, members=ms, cc=cluster_cc(ms, topology))

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def is_singleton(self) -> bool:
        return len(self.members) == 1

    def sorted_members(self) -> tuple[int, ...]:
        return tuple(sorted(self.members))


@dataclass(frozen=True)
class Clustering:
    """A collection of clusters over the node set.

    Final (post-membership-clarification or centralized) clusterings are
    exact partitions; phase-I intermediates may overlap, with the overlap
    members being exactly the debatable nodes.
    """

    clusters: tuple[Cluster, ...]

    @classmethod
    def of(cls, clusters: Iterable[Cluster]) -> "Clustering":
        return cls(tuple(sorted(clusters, key=lambda c: c.head)))

    def __len__(self) -> int:
        return len(self.clusters)

    def __iter__(self) -> Iterator[Cluster]:
        return iter(self.clusters)

    def membership_counts(self, n: int) -> list[int]:
        counts = [0] * n
        for c in self.clusters:
            for m in c.members:
                counts[m] += 1
        return counts

    def sizes(self) -> list[int]:
        return [c.size for c in self.clusters]

    def singletons(self) -> list[Cluster]:
        return [c for c in self.clusters if c.is_singleton]

    def cluster_of(self, node: int) -> Cluster:
        for c in self.clusters:
            if node in c.members:
                return c
        raise KeyError(node)


@dataclass
class ValidationReport:
    """Violations found in a clustering; empty report means feasible."""

    overlapping: list[int] = field(default_factory=list)
    uncovered: list[int] = field(default_factory=list)
    nonadjacent: list[tuple[int, int]] = field(default_factory=list)
    empty_cc: list[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.overlapping or self.uncovered or self.nonadjacent or self.empty_cc)

    def __str__(self) -> str:
        if self.ok:
            return "clustering valid"
        parts = []
        if self.overlapping:
            parts.append(f"nodes in multiple clusters: {self.overlapping}")
        if self.uncovered:
            parts.append(f"uncovered nodes: {self.uncovered}")
        if self.nonadjacent:
            parts.append(f"members not adjacent to their head: {self.nonadjacent}")
        if self.empty_cc:
            parts.append(f"non-singleton clusters without common channel: {self.empty_cc}")
        return "; ".join(parts)


def validate_clustering(
    clustering: Clustering, topology: Topology, require_partition: bool = True
) -> ValidationReport:
    """Check coverage, disjointness, head adjacency and common channels.

    Overlap is reported only when ``require_partition`` is set (phase-I
    intermediates legitimately overlap); coverage, head adjacency and the
    non-singleton common-channel requirement are always checked.
    """
    report = ValidationReport()
    counts = clustering.membership_counts(topology.n)
    report.uncovered = [i for i, c in enumerate(counts) if c == 0]
    if require_partition:
        report.overlapping = [i for i, c in enumerate(counts) if c > 1]
    for cl in clustering:
        for m in sorted(cl.members):
            if m != cl.head and not topology.adjacent(cl.head, m):
                report.nonadjacent.append((cl.head, m))
        if not cl.is_singleton and cl.cc.is_empty:
            report.empty_cc.append(cl.head)
    return report
