"""ROSS phase II: debatable-node membership clarification.

Nodes sitting in several phase-I clusters play a player-specific singleton
congestion game: each picks exactly one claiming cluster, preferring the one
whose common channels suffer least from its presence.  Best-response rounds
(DGA) converge to a Nash equilibrium; the one-shot variant (DFA) decides all
players simultaneously against the static phase-I compositions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .model import Cluster, Clustering, Topology, cluster_cc


class ConvergenceError(RuntimeError):
    """Best-response dynamics exceeded the guaranteed step bound."""


def departure_gain(cluster: Cluster, node: int, topology: Topology) -> int:
    """Common channels gained by the cluster if ``node`` leaves it."""
    if node not in cluster.members:
        raise ValueError(f"node {node} is not in cluster {cluster.head}")
    if cluster.size == 1:
        return 0
    rest = cluster.members - {node}
    return len(cluster_cc(rest, topology)) - len(cluster.cc)


def _presence_cost(topology: Topology, members: frozenset[int], node: int) -> int:
    """Drop in the cluster's common-channel count caused by ``node``'s presence.

    Works for both views: if the node is currently counted in ``members`` the
    cost is the gain from leaving, otherwise the loss from joining.
    """
    base = members - {node}
    if not base:
        return 0
    mask = None
    for m in base:
        mm = topology.channel_mask(m)
        mask = mm if mask is None else mask & mm
    with_node = mask & topology.channel_mask(node)
    return mask.bit_count() - with_node.bit_count()


def choose_cluster(topology: Topology, node: int, options: Sequence[Cluster]) -> Cluster:
    """Pick the claiming cluster per the four-level preference.

    Minimize the presence cost; tie to the head sharing the most channels
    with the node; tie to the smallest resulting size; tie to the smaller
    head id.  ``options`` carry the current compositions (the node itself may
    or may not be counted in each).
    """
    if not options:
        raise ValueError("node has no claiming clusters")
    node_mask = topology.channel_mask(node)

    def key(c: Cluster):
        cost = _presence_cost(topology, c.members, node)
        head_cc = (topology.channel_mask(c.head) & node_mask).bit_count()
        size = len(c.members | {node})
        return (cost, -head_cc, size, c.head)

    return min(options, key=key)


@dataclass
class GameState:
    """State and log of one membership-clarification game."""

    topology: Topology
    players: tuple[int, ...]
    claiming: dict[int, tuple[int, ...]]
    core: dict[int, frozenset[int]]
    assignment: dict[int, int | None]
    response_log: list[tuple[int, int | None, int, int]] = field(default_factory=list)
    affiliation_msgs: int = 0
    composition_msgs: int = 0
    rounds: int = 0

    @property
    def n_players(self) -> int:
        return len(self.players)

    @property
    def n_resources(self) -> int:
        return len({h for hs in self.claiming.values() for h in hs})

    @property
    def max_claiming(self) -> int:
        return max((len(hs) for hs in self.claiming.values()), default=0)

    def step_bound(self) -> int:
        return self.n_players * self.n_players * self.n_resources

    def effective_members(self, head: int) -> frozenset[int]:
        extra = {p for p, h in self.assignment.items() if h == head}
        return self.core[head] | extra

    def current_options(self, player: int) -> list[Cluster]:
        return [
            Cluster.of(self.topology, h, self.effective_members(h))
            for h in self.claiming[player]
        ]

    def to_rows(self) -> list[tuple[int, int | None, int, int]]:
        return list(self.response_log)


def _setup(clustering: Clustering, topology: Topology) -> GameState:
    counts = clustering.membership_counts(topology.n)
    players = tuple(i for i in range(topology.n) if counts[i] > 1)
    claiming = {
        p: tuple(sorted(c.head for c in clustering if p in c.members)) for p in players
    }
    player_set = set(players)
    core = {
        c.head: frozenset(c.members - player_set) | {c.head} for c in clustering
    }
    return GameState(
        topology=topology,
        players=players,
        claiming=claiming,
        core=core,
        assignment={p: None for p in players},
    )


def _final_clustering(state: GameState) -> Clustering:
    clusters = []
    for head in sorted(state.core):
        members = state.effective_members(head)
        clusters.append(Cluster.of(state.topology, head, members))
    return Clustering.of(clusters)


def run_dga(clustering: Clustering, topology: Topology) -> tuple[Clustering, GameState]:
    """Round-robin best responses until a full round changes nothing.

    Players are counted only in their currently chosen cluster; unassigned
    players are counted in none.  Every affiliation decision broadcasts once
    and every claiming-cluster head whose composition changed broadcasts once.
    """
    state = _setup(clustering, topology)
    bound = state.step_bound()
    while True:
        state.rounds += 1
        changed = False
        for p in state.players:
            best = choose_cluster(topology, p, state.current_options(p))
            old = state.assignment[p]
            if best.head == old:
                continue
            if len(state.response_log) >= bound > 0:
                raise ConvergenceError(
                    f"exceeded {bound} best responses (n={state.n_players}, "
                    f"m={state.n_resources})"
                )
            state.assignment[p] = best.head
            state.response_log.append((p, old, best.head, state.rounds))
            state.affiliation_msgs += 1
            state.composition_msgs += 1 if old is None else 2
            changed = True
        if not changed:
            break
    return _final_clustering(state), state


def run_dfa(clustering: Clustering, topology: Topology) -> tuple[Clustering, GameState]:
    """One-shot variant: all players decide simultaneously against the static
    phase-I compositions (claiming clusters still holding all their debatable
    nodes), then every decision is applied at once."""
    state = _setup(clustering, topology)
    static = {c.head: c for c in clustering}
    decisions = {}
    for p in state.players:
        options = [static[h] for h in state.claiming[p]]
        decisions[p] = choose_cluster(topology, p, options).head
    state.rounds = 1
    changed_heads = set()
    for p in state.players:
        state.assignment[p] = decisions[p]
        state.response_log.append((p, None, decisions[p], 1))
        state.affiliation_msgs += 1
        for h in state.claiming[p]:
            if h != decisions[p]:
                changed_heads.add(h)  # cluster loses this debatable node
    state.composition_msgs = len(changed_heads)
    return _final_clustering(state), state


def is_nash_equilibrium(state: GameState) -> bool:
    """No player can improve under the full four-level preference."""
    for p in state.players:
        if state.assignment[p] is None:
            raise ValueError(f"player {p} is unassigned")
    for p in state.players:
        best = choose_cluster(state.topology, p, state.current_options(p))
        if best.head != state.assignment[p]:
            return False
    return True
