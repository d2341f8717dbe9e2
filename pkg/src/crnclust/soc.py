"""SOC baseline: greedy clustering driven by the |common channels| x |size|
product.

Deterministic reconstruction of the three-round scheme.  Round one: every
node grows its own tentative cluster from its neighborhood, adding whichever
neighbor raises the product most; tentative clusters overlap.  Rounds two
and three: nodes in ascending id order either merge their cluster with an
adjacent one or abandon it to join another, whenever that strictly raises
the product.  Finally each node keeps exactly its best affiliation, which is
where the scheme's unclustered nodes come from: a cluster whose members got
better offers elsewhere collapses around its owner.  One broadcast per node
per round is counted, 3N in total.
"""

from __future__ import annotations

from .model import Cluster, Clustering, Topology, cluster_cc


def _product(members, topology: Topology) -> int:
    mask = None
    for m in members:
        mm = topology.channel_mask(m)
        mask = mm if mask is None else mask & mm
    return mask.bit_count() * len(members)


def _head_for(members, topology: Topology) -> int | None:
    for h in sorted(members):
        if all(m == h or topology.adjacent(h, m) for m in members):
            return h
    return None


def _grow_tentative(seed: int, topology: Topology) -> frozenset[int]:
    members = {seed}
    current = _product(members, topology)
    while True:
        best, best_key = None, None
        for j in topology.neighbors(seed):
            if j in members:
                continue
            value = _product(members | {j}, topology)
            if value > current:
                key = (-value, j)
                if best_key is None or key < best_key:
                    best, best_key = j, key
        if best is None:
            return frozenset(members)
        members.add(best)
        current = -best_key[0]


def run_soc(topology: Topology) -> Clustering:
    """Run the three rounds and return the final exact partition."""
    n = topology.n
    clusters: dict[int, frozenset[int]] = {
        i: _grow_tentative(i, topology) for i in range(n)
    }

    for _ in range(2):  # rounds two and three
        for i in range(n):
            if i not in clusters:
                continue
            mine = clusters[i]
            current = _product(mine, topology)
            # candidate owners: clusters overlapping mine or touching it by an edge
            nearby: set[int] = set()
            reach = set(mine)
            for m in mine:
                reach.update(topology.neighbors(m))
            for owner, members in clusters.items():
                if owner != i and (members & reach):
                    nearby.add(owner)
            best = None  # (value, tiebreak owner, kind, payload)
            for j in sorted(nearby):
                union = mine | clusters[j]
                head = _head_for(union, topology)
                if head is None or cluster_cc(union, topology).is_empty:
                    continue
                value = _product(union, topology)
                if value > current and (best is None or (-value, j) < best[:2]):
                    best = (-value, j, "merge", union)
            for j in sorted(nearby):
                target = clusters[j]
                if i in target:
                    continue
                head = _head_for(target, topology)
                if head is None or not topology.adjacent(head, i):
                    continue
                joined = target | {i}
                if _head_for(joined, topology) is None:
                    continue
                if cluster_cc(joined, topology).is_empty:
                    continue
                value = _product(joined, topology)
                if value > current and (best is None or (-value, j) < best[:2]):
                    best = (-value, j, "join", joined)
            if best is None:
                continue
            _, j, kind, members = best
            if kind == "merge":
                clusters[i] = frozenset(members)
                del clusters[j]
            else:
                clusters[j] = frozenset(members)
                del clusters[i]

    # each node keeps exactly its best affiliation (largest product, then
    # smallest owner id); clusters shrink to their keepers
    affiliation: dict[int, int] = {}
    for node in range(n):
        best_key = None
        for owner, members in clusters.items():
            if node in members:
                key = (-_product(members, topology), owner)
                if best_key is None or key < best_key:
                    best_key = key
        if best_key is not None:
            affiliation[node] = best_key[1]

    final: list[Cluster] = []
    placed: set[int] = set()
    for owner in sorted(clusters):
        keepers = {nd for nd, o in affiliation.items() if o == owner}
        # keepers may have lost the member that made them reachable; strip
        # from the largest id until a head covers the rest
        while keepers:
            head = _head_for(keepers, topology)
            if head is not None and (
                len(keepers) == 1 or not cluster_cc(keepers, topology).is_empty
            ):
                final.append(Cluster.of(topology, head, keepers))
                placed.update(keepers)
                break
            drop = max(keepers)
            keepers.remove(drop)
            final.append(Cluster.of(topology, drop, [drop]))
            placed.add(drop)
    for node in range(n):
        if node not in placed:
            final.append(Cluster.of(topology, node, [node]))
    return Clustering.of(final)


def soc_message_total(n: int) -> int:
    """SOC broadcasts once per node per round across its three rounds."""
    return 3 * n
