"""Centralized robust clustering: candidate enumeration, penalized scoring,
exact-cover optimization, an independent brute-force oracle and the
set-packing reduction used as a solver cross-check.

Scores are exact rationals so optimality comparisons never depend on float
rounding.  The per-cluster score ``|K(C)| - N * p(|C|)`` is what one node row
of the assignment objective contributes when summed over all nodes, so
maximizing the score sum is the same optimization as minimizing the original
double-sum objective.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Iterable, Sequence

from .model import ChannelSet, Cluster, Clustering, Topology, cluster_cc


class PoolSizeError(RuntimeError):
    """Enumeration window would exceed the candidate budget."""


class InfeasibleCoverError(RuntimeError):
    """No exact cover exists (possible only when singletons were excluded)."""


@dataclass(frozen=True)
class Candidate:
    """One enumerated cluster: members, head, cached cc and optional score."""

    members: frozenset[int]
    mask: int
    head: int
    cc: ChannelSet
    score: Fraction | None = None

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class CandidatePool:
    """Candidate clusters for the solver, with the window they came from."""

    candidates: tuple[Candidate, ...]
    window: tuple[int, int]
    n_nodes: int

    def __len__(self) -> int:
        return len(self.candidates)

    @property
    def scored(self) -> bool:
        return all(c.score is not None for c in self.candidates)


@dataclass(frozen=True)
class PenaltySchedule:
    """Size-deviation weights: 0 at the desired size, rho1 at deviation one,
    rho2 at deviation two, then rho2 * (k - 1) for deviation k >= 3."""

    rho1: Fraction
    rho2: Fraction

    def __post_init__(self):
        if not 0 < self.rho1 < self.rho2:
            raise ValueError("need 0 < rho1 < rho2")

    @classmethod
    def of(cls, rho1, rho2) -> "PenaltySchedule":
        return cls(Fraction(str(rho1)), Fraction(str(rho2)))

    def penalty(self, deviation: int) -> Fraction:
        if deviation == 0:
            return Fraction(0)
        if deviation == 1:
            return self.rho1
        if deviation == 2:
            return self.rho2
        return self.rho2 * (deviation - 1)


def size_penalty(size: int, delta: int, schedule: PenaltySchedule) -> Fraction:
    if size < 1:
        raise ValueError("cluster size must be at least 1")
    return schedule.penalty(abs(size - delta))


def cluster_score(
    cc_count: int,
    size: int,
    n_nodes: int,
    delta: int,
    schedule: PenaltySchedule,
    penalty_scale: str = "n",
) -> Fraction:
    """Per-cluster contribution to the objective.

    ``penalty_scale='n'`` multiplies the penalty by the network size, which is
    what the node-row expansion of the assignment objective yields;
    ``'cluster'`` is the softer per-member reading kept for sensitivity runs.
    """
    scale = n_nodes if penalty_scale == "n" else size
    if penalty_scale not in ("n", "cluster"):
        raise ValueError("penalty_scale must be 'n' or 'cluster'")
    return Fraction(cc_count) - scale * size_penalty(size, delta, schedule)


def estimate_pool_size(topology: Topology, window: tuple[int, int]) -> int:
    lo, hi = window
    total = topology.n  # singletons
    for h in range(topology.n):
        deg = len(topology.neighbors(h))
        for size in range(max(2, lo), hi + 1):
            total += comb(deg, size - 1)
    return total


def enumerate_clusters(
    topology: Topology,
    window: tuple[int, int],
    require_cc: bool = True,
    max_candidates: int = 2_000_000,
) -> CandidatePool:
    """All head-rooted clusters with sizes inside the window, plus singletons.

    For every node ``h`` and every subset of its neighborhood containing
    ``h``, emit one candidate; member sets reachable from several heads are
    kept once under the smallest head id.  Singletons are always appended
    (and exempt from the common-channel requirement) so the solver stays
    feasible.
    """
    lo, hi = window
    if lo < 1 or hi < lo:
        raise ValueError("invalid enumeration window")
    estimate = estimate_pool_size(topology, window)
    if estimate > max_candidates:
        raise PoolSizeError(
            f"window {window} could enumerate ~{estimate} candidates "
            f"(budget {max_candidates})"
        )
    best_head: dict[frozenset[int], tuple[int, int]] = {}
    for h in range(topology.n):
        nbrs = topology.neighbors(h)
        h_mask = topology.channel_mask(h)
        for size in range(max(2, lo), hi + 1):
            if size - 1 > len(nbrs):
                break
            for combo in combinations(nbrs, size - 1):
                mask = h_mask
                for m in combo:
                    mask &= topology.channel_mask(m)
                if require_cc and mask == 0:
                    continue
                members = frozenset(combo) | {h}
                prev = best_head.get(members)
                if prev is None or h < prev[0]:
                    best_head[members] = (h, mask)
    for h in range(topology.n):
        members = frozenset((h,))
        best_head.setdefault(members, (h, topology.channel_mask(h)))
    candidates = []
    for members, (head, mask) in best_head.items():
        node_mask = 0
        for m in members:
            node_mask |= 1 << m
        candidates.append(
            Candidate(
                members=members,
                mask=node_mask,
                head=head,
                cc=ChannelSet(mask, topology.num_channels),
            )
        )
    candidates.sort(key=lambda c: (c.size, c.head, tuple(sorted(c.members))))
    return CandidatePool(tuple(candidates), window=window, n_nodes=topology.n)


def score_pool(
    pool: CandidatePool,
    delta: int,
    schedule: PenaltySchedule,
    penalty_scale: str = "n",
) -> CandidatePool:
    scored = tuple(
        replace(
            c,
            score=cluster_score(
                len(c.cc), c.size, pool.n_nodes, delta, schedule, penalty_scale
            ),
        )
        for c in pool.candidates
    )
    return CandidatePool(scored, window=pool.window, n_nodes=pool.n_nodes)


def add_zero_singletons(pool: CandidatePool, topology: Topology) -> CandidatePool:
    """Append missing singletons with score zero (feasibility padding only)."""
    present = {c.members for c in pool.candidates}
    extra = []
    for i in range(topology.n):
        members = frozenset((i,))
        if members not in present:
            extra.append(
                Candidate(
                    members=members,
                    mask=1 << i,
                    head=i,
                    cc=topology.channel_set(i),
                    score=Fraction(0),
                )
            )
    return CandidatePool(
        pool.candidates + tuple(extra), window=pool.window, n_nodes=pool.n_nodes
    )


def _solution_key(score: Fraction, chosen: list[Candidate]):
    heads = tuple(sorted(c.head for c in chosen))
    return (-score, len(chosen), heads)


def solve(pool: CandidatePool, topology: Topology) -> Clustering:
    """Maximum-score exact cover of the node set by pool candidates.

    Depth-first search with branch-and-bound pruning: the optimistic bound
    adds, for every uncovered node, the best per-node score share among the
    candidates containing it.  Ties break to fewer clusters, then to the
    lexicographically smallest sorted head list.
    """
    if not pool.scored:
        raise ValueError("pool must be scored before solving")
    n = pool.n_nodes
    by_node: list[list[Candidate]] = [[] for _ in range(n)]
    for c in pool.candidates:
        for m in c.members:
            by_node[m].append(c)
    full = (1 << n) - 1
    share = [None] * n
    for i in range(n):
        if not by_node[i]:
            raise InfeasibleCoverError(f"node {i} appears in no candidate")
        by_node[i].sort(key=lambda c: (-c.score, c.size, c.head))
        share[i] = max(c.score / c.size for c in by_node[i])

    best_key = None
    best: list[Candidate] | None = None

    def bound(uncovered: int) -> Fraction:
        total = Fraction(0)
        m = uncovered
        while m:
            i = (m & -m).bit_length() - 1
            total += share[i]
            m &= m - 1
        return total

    def dfs(covered: int, score: Fraction, chosen: list[Candidate]):
        nonlocal best_key, best
        if covered == full:
            key = _solution_key(score, chosen)
            if best_key is None or key < best_key:
                best_key, best = key, list(chosen)
            return
        uncovered = full & ~covered
        if best_key is not None and -(score + bound(uncovered)) > best_key[0]:
            return
        # branch on the uncovered node with fewest usable candidates
        pivot, options = -1, None
        m = uncovered
        while m:
            i = (m & -m).bit_length() - 1
            opts = [c for c in by_node[i] if c.mask & covered == 0]
            if options is None or len(opts) < len(options):
                pivot, options = i, opts
                if len(opts) <= 1:
                    break
            m &= m - 1
        if not options:
            return
        for c in options:
            chosen.append(c)
            dfs(covered | c.mask, score + c.score, chosen)
            chosen.pop()

    dfs(0, Fraction(0), [])
    if best is None:
        raise InfeasibleCoverError("no exact cover found")
    return Clustering.of(
        Cluster.of(topology, c.head, c.members) for c in best
    )


def solution_score(
    clustering: Clustering,
    n_nodes: int,
    delta: int,
    schedule: PenaltySchedule,
    penalty_scale: str = "n",
) -> Fraction:
    return sum(
        (
            cluster_score(len(c.cc), c.size, n_nodes, delta, schedule, penalty_scale)
            for c in clustering
        ),
        Fraction(0),
    )


def brute_force_oracle(
    topology: Topology,
    window: tuple[int, int],
    delta: int,
    schedule: PenaltySchedule,
    require_cc: bool = True,
    penalty_scale: str = "n",
    max_nodes: int = 14,
) -> Clustering:
    """Exhaustive search over all partitions of the node set into valid
    clusters; independent of :func:`solve` (own block enumeration, no
    branch-and-bound, no shared search state)."""
    n = topology.n
    if n > max_nodes:
        raise ValueError(f"oracle limited to {max_nodes} nodes, got {n}")
    lo, hi = window

    # Blocks containing each node, built from neighborhood subsets per head.
    seen: dict[frozenset[int], int] = {}
    for h in range(n):
        nbrs = topology.neighbors(h)
        sizes = {1} | set(range(max(2, lo), min(hi, len(nbrs) + 1) + 1))
        for size in sorted(sizes):
            for combo in combinations(nbrs, size - 1):
                members = frozenset(combo) | {h}
                cc = cluster_cc(members, topology)
                if require_cc and len(members) > 1 and cc.is_empty:
                    continue
                if members not in seen or h < seen[members]:
                    seen[members] = h

    def block_score(members: frozenset[int]) -> Fraction:
        cc = cluster_cc(members, topology)
        return cluster_score(len(cc), len(members), n, delta, schedule, penalty_scale)

    blocks = []
    for members, head in seen.items():
        mask = 0
        for m in members:
            mask |= 1 << m
        blocks.append((mask, members, head, block_score(members)))
    by_node: list[list[tuple]] = [[] for _ in range(n)]
    for b in blocks:
        for m in b[1]:
            by_node[m].append(b)

    full = (1 << n) - 1
    best_key = None
    best_partition: list[tuple] | None = None

    def explore(covered: int, score: Fraction, picked: list[tuple]):
        nonlocal best_key, best_partition
        if covered == full:
            heads = tuple(sorted(b[2] for b in picked))
            key = (-score, len(picked), heads)
            if best_key is None or key < best_key:
                best_key, best_partition = key, list(picked)
            return
        lowest = ((full & ~covered) & -(full & ~covered)).bit_length() - 1
        for b in by_node[lowest]:
            if b[0] & covered:
                continue
            picked.append(b)
            explore(covered | b[0], score + b[3], picked)
            picked.pop()

    explore(0, Fraction(0), [])
    if best_partition is None:
        raise InfeasibleCoverError("no feasible partition")
    return Clustering.of(
        Cluster.of(topology, b[2], b[1]) for b in best_partition
    )


# -- set-packing reduction ----------------------------------------------------


@dataclass(frozen=True)
class SetPackingInstance:
    """Weighted set-packing instance over a finite ground set."""

    elements: tuple[int, ...]
    sets: tuple[frozenset[int], ...]
    weights: tuple[int, ...]

    def __post_init__(self):
        ground = set(self.elements)
        if len(self.sets) != len(self.weights):
            raise ValueError("sets and weights must align")
        for s, w in zip(self.sets, self.weights):
            if not s or not s <= ground:
                raise ValueError("every set must be a non-empty subset of the ground set")
            if not (isinstance(w, int) and w >= 1):
                raise ValueError("weights must be positive integers")

    @classmethod
    def from_text(cls, text: str) -> "SetPackingInstance":
        """Parse lines of the form ``set: e1 e2 ... ; weight: w``."""
        sets, weights, ground = [], [], set()
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                set_part, weight_part = line.split(";")
                elems = [int(tok) for tok in set_part.split(":", 1)[1].split()]
                w = int(weight_part.split(":", 1)[1])
            except (ValueError, IndexError) as exc:
                raise ValueError(f"line {lineno}: expected 'set: e1 e2 ; weight: w'") from exc
            sets.append(frozenset(elems))
            weights.append(w)
            ground.update(elems)
        return cls(tuple(sorted(ground)), tuple(sets), tuple(weights))

    def to_text(self) -> str:
        lines = [
            f"set: {' '.join(str(e) for e in sorted(s))} ; weight: {w}"
            for s, w in zip(self.sets, self.weights)
        ]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SetPackingReduction:
    """Image of a packing instance as a clustering problem.

    Packing weight and clustering score coincide set-by-set, so a packing of
    weight >= lambda exists iff the reduced pool admits a cover whose
    non-singleton score sum is >= lambda (the threshold maps to itself).
    """

    instance: SetPackingInstance
    topology: Topology
    pool: CandidatePool
    node_of_element: dict[int, int]
    set_candidates: tuple[Candidate, ...]

    def packing_weight(self, clustering: Clustering) -> int:
        by_members = {c.members: i for i, c in enumerate(self.set_candidates)}
        total = 0
        for cl in clustering:
            idx = by_members.get(cl.members)
            if idx is not None:
                total += self.instance.weights[idx]
        return total


def reduce_set_packing(
    instance: SetPackingInstance, max_channels: int = 4096
) -> SetPackingReduction:
    """Build the clustering instance whose optimum equals the packing optimum.

    One node per ground element; each set becomes a clique holding a fresh
    block of ``weight`` channels, so the image cluster's common-channel count
    equals the set's weight exactly.  Nested sets would break that equality,
    hence the subset-free precondition.
    """
    for i, a in enumerate(instance.sets):
        for j, b in enumerate(instance.sets):
            if i != j and a <= b:
                raise ValueError(f"set {i} is contained in set {j}; instance must be subset-free")
    total_channels = sum(instance.weights)
    if total_channels > max_channels:
        raise ValueError(f"reduction needs {total_channels} channels (cap {max_channels})")
    node_of = {e: idx for idx, e in enumerate(instance.elements)}
    n = len(instance.elements)
    masks = [0] * n
    offset = 0
    set_blocks = []
    for s, w in zip(instance.sets, instance.weights):
        block = ((1 << w) - 1) << offset
        offset += w
        set_blocks.append(block)
        for e in s:
            masks[node_of[e]] |= block
    channels = [ChannelSet(m, total_channels) for m in masks]
    edges = set()
    for s in instance.sets:
        ids = sorted(node_of[e] for e in s)
        for a, b in combinations(ids, 2):
            edges.add((a, b))
    topology = Topology.explicit(channels, sorted(edges))
    candidates = []
    for s, w, block in zip(instance.sets, instance.weights, set_blocks):
        members = frozenset(node_of[e] for e in s)
        mask = 0
        for m in members:
            mask |= 1 << m
        candidates.append(
            Candidate(
                members=members,
                mask=mask,
                head=min(members),
                cc=ChannelSet(block, total_channels),
                score=Fraction(w),
            )
        )
    pool = CandidatePool(tuple(candidates), window=(1, max((len(s) for s in instance.sets), default=1)), n_nodes=n)
    return SetPackingReduction(
        instance=instance,
        topology=topology,
        pool=pool,
        node_of_element=node_of,
        set_candidates=tuple(candidates),
    )
