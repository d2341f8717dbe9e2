"""ROSS phase I: head election, common-channel guarantee, size control.

The distributed protocol is simulated as a deterministic state machine:
nodes activate in ascending-id round-robin order until quiescent, which is
one of the activation orders the asynchronous protocol permits.  Broadcast
counts are tracked per message kind so the harness can compare them to the
per-scheme bounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .model import Cluster, Clustering, Topology, connectivity_vector

UNDECIDED, MEMBER, HEAD = 0, 1, 2


def head_election_step(
    d_i: int, g_i: int, node_id: int, rivals: Iterable[tuple[int, int, int]]
) -> bool:
    """One election step: does this node win against its non-head rivals?

    Wins with strictly smallest effective degree ``d``; degree ties fall to
    the larger neighborhood degree ``g``; remaining ties to the smaller id.
    ``rivals`` holds (d, g, id) for the non-head neighbors, with members
    advertising the sentinel as their d.
    """
    ties = []
    for d_j, g_j, j in rivals:
        if d_i > d_j:
            return False
        if d_i == d_j:
            ties.append((g_j, j))
    if not ties:
        return True
    g_ties = []
    for g_j, j in ties:
        if g_i < g_j:
            return False
        if g_i == g_j:
            g_ties.append(j)
    if not g_ties:
        return True
    return all(node_id < j for j in g_ties)


def estimate_max_clusters(area_side: float, radius: float) -> float:
    """Saturation estimate for the cluster count: one head per radius cell."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    return (area_side / radius) ** 2


def _eviction_pick(topology: Topology, head: int, members: set[int]) -> int:
    """Member to evict next: least channels shared with the head, then the
    one whose removal gains the most common channels, then smaller id."""
    head_mask = topology.channel_mask(head)
    cc_mask = head_mask
    for m in members:
        cc_mask &= topology.channel_mask(m)
    cc_size = cc_mask.bit_count()
    best, best_key = -1, None
    for m in sorted(members):
        if m == head:
            continue
        shared = (head_mask & topology.channel_mask(m)).bit_count()
        without = head_mask
        for o in members:
            if o != m:
                without &= topology.channel_mask(o)
        gain = without.bit_count() - cc_size
        key = (shared, -gain, m)
        if best_key is None or key < best_key:
            best, best_key = m, key
    return best


def guarantee_cc(cluster: Cluster, topology: Topology) -> tuple[Cluster, list[int]]:
    """Evict members until the cluster has at least one common channel.

    The head is never evicted; the worst case is a singleton cluster keeping
    only the head.
    """
    members = set(cluster.members)
    evicted: list[int] = []
    while len(members) > 1:
        cc = topology.channel_mask(cluster.head)
        for m in members:
            cc &= topology.channel_mask(m)
        if cc:
            break
        out = _eviction_pick(topology, cluster.head, members)
        members.remove(out)
        evicted.append(out)
    return Cluster.of(topology, cluster.head, members), evicted


def prune_to_size(
    cluster: Cluster, t_factor: float, delta: int, topology: Topology
) -> tuple[Cluster, list[int]]:
    """Evict members while the size exceeds t·delta (exact rational compare)."""
    threshold = Fraction(str(t_factor)) * delta
    if threshold < 1:
        raise ValueError("t_factor * delta must be at least 1")
    members = set(cluster.members)
    evicted: list[int] = []
    while len(members) > threshold:
        out = _eviction_pick(topology, cluster.head, members)
        members.remove(out)
        evicted.append(out)
    return Cluster.of(topology, cluster.head, members), evicted


@dataclass
class Phase1State:
    """Mutable state of one phase-I run (roles, clusters, counters)."""

    topology: Topology
    delta: int | None = None
    t_factor: float | None = None

    role: list[int] = field(init=False)
    true_d: list[int] = field(init=False)
    g: list[int] = field(init=False)
    eff_d: list[int] = field(init=False)
    clusters: dict[int, set[int]] = field(init=False, default_factory=dict)
    membership: list[set[int]] = field(init=False)
    sentinel: int = field(init=False)

    step_counter: int = 0
    initial_pass_steps: int = 0
    evictions: int = 0
    head_broadcasts: int = 0
    member_updates: int = 0

    def __post_init__(self):
        n = self.topology.n
        vecs = [connectivity_vector(self.topology, i) for i in range(n)]
        self.role = [UNDECIDED] * n
        self.true_d = [v.d for v in vecs]
        self.g = [v.g for v in vecs]
        self.eff_d = list(self.true_d)
        self.membership = [set() for _ in range(n)]
        self.sentinel = self.topology.num_channels * n + 1

    # -- queries -------------------------------------------------------------

    def heads(self) -> list[int]:
        return sorted(self.clusters)

    def debatable(self) -> list[int]:
        return sorted(i for i, ms in enumerate(self.membership) if len(ms) > 1)

    def to_clustering(self) -> Clustering:
        return Clustering.of(
            Cluster.of(self.topology, h, ms) for h, ms in self.clusters.items()
        )

    # -- protocol steps -------------------------------------------------------

    def _make_head(self, i: int) -> None:
        self.role[i] = HEAD
        self.step_counter += 1
        members = {i}
        for j in self.topology.neighbors(i):
            if self.role[j] == HEAD:
                continue
            members.add(j)
            self.membership[j].add(i)
            if self.role[j] == UNDECIDED:
                # Joining a first cluster: advertise the sentinel degree.
                self.role[j] = MEMBER
                self.eff_d[j] = self.sentinel
                self.member_updates += 1
                self.step_counter += 1
        self.clusters[i] = members
        self.membership[i].add(i)
        self.head_broadcasts += 1

    def _election_rounds(self) -> None:
        while True:
            undecided = [i for i in range(self.topology.n) if self.role[i] == UNDECIDED]
            if not undecided:
                return
            progressed = False
            for i in undecided:
                if self.role[i] != UNDECIDED:
                    continue
                rivals = [
                    (self.eff_d[j], self.g[j], j)
                    for j in self.topology.neighbors(i)
                    if self.role[j] != HEAD
                ]
                if head_election_step(self.eff_d[i], self.g[i], i, rivals):
                    self._make_head(i)
                    progressed = True
            if not progressed:
                raise RuntimeError("election made no progress")  # pragma: no cover

    def _evict(self, head: int, member: int) -> bool:
        """Remove a member; returns True when the node ends up cluster-less."""
        self.clusters[head].remove(member)
        self.membership[member].discard(head)
        self.head_broadcasts += 1  # head broadcasts the changed composition
        self.evictions += 1
        if not self.membership[member]:
            self.role[member] = UNDECIDED
            self.eff_d[member] = self.true_d[member]
            self.member_updates += 1  # evicted node restores its degree
            return True
        return False

    def _trim_cluster(self, head: int) -> list[int]:
        """Run the shared eviction loop: common-channel guarantee first, then
        size control when enabled."""
        orphans = []
        members = self.clusters[head]

        def cc_mask() -> int:
            m = self.topology.channel_mask(head)
            for x in members:
                m &= self.topology.channel_mask(x)
            return m

        while len(members) > 1 and cc_mask() == 0:
            out = _eviction_pick(self.topology, head, members)
            if self._evict(head, out):
                orphans.append(out)
        if self.delta is not None:
            threshold = Fraction(str(self.t_factor or 1.3)) * self.delta
            while len(members) > threshold:
                out = _eviction_pick(self.topology, head, members)
                if self._evict(head, out):
                    orphans.append(out)
        return orphans

    def run(self) -> "Phase1State":
        self._election_rounds()
        self.initial_pass_steps = self.step_counter
        pending = self.heads()
        processed: set[int] = set()
        while pending:
            orphans: list[int] = []
            for h in pending:
                processed.add(h)
                orphans.extend(self._trim_cluster(h))
            if not any(self.role[i] == UNDECIDED for i in range(self.topology.n)):
                break
            self._election_rounds()
            pending = [h for h in self.heads() if h not in processed]
        return self


def run_phase1(
    topology: Topology, *, delta: int | None = None, t_factor: float | None = None
) -> Phase1State:
    """Run phase I to quiescence; size control is enabled by passing ``delta``."""
    return Phase1State(topology, delta=delta, t_factor=t_factor).run()


def reintegrate(state: Phase1State, evicted: Iterable[int]) -> Phase1State:
    """Re-run election rounds for cluster-less evicted nodes.

    Restores their true degrees, lets them compete again and pushes any newly
    formed cluster through the same guarantee/size loop.
    """
    touched = False
    for i in evicted:
        if state.membership[i]:
            raise ValueError(f"node {i} still belongs to a cluster")
        if state.role[i] != UNDECIDED:
            state.role[i] = UNDECIDED
            state.eff_d[i] = state.true_d[i]
            state.member_updates += 1
            touched = True
        else:
            touched = True
    if not touched:
        return state
    before = set(state.heads())
    state._election_rounds()
    pending = [h for h in state.heads() if h not in before]
    while pending:
        orphans = []
        for h in pending:
            before.add(h)
            orphans.extend(state._trim_cluster(h))
        if not orphans:
            break
        state._election_rounds()
        pending = [h for h in state.heads() if h not in before]
    return state
