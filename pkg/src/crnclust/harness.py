"""Experiment drivers: metrics, robustness and scale studies, per-scheme
message accounting and CSV persistence.

Scheme identifiers: ross-dga, ross-dfa, ross-sc-dga, ross-sc-dfa, soc,
central.  Message bounds per scheme are checked as measured phase-one
traffic plus the scheme's clarification-phase bound (2*m for one-shot
clarification, 2*m^2*d for best-response rounds, with m debatable nodes and
d the largest claiming-cluster count); SOC must total exactly 3N and the
centralized scheme's traffic is modeled, not simulated, as h + m + N over a
phase-one backbone.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import centralized, membership, ross, soc
from .model import ChannelSet, Clustering, Topology, validate_clustering
from .scenario import ScenarioConfig, ScenarioState, add_pu_batch, derive_availability, generate

SCHEMES = ("ross-dga", "ross-dfa", "ross-sc-dga", "ross-sc-dfa", "soc", "central")


@dataclass(frozen=True)
class RunRecord:
    """One metrics row for a single scheme run."""

    seed: int
    scheme: str
    n: int
    num_pu: int
    avg_cc_nonsingleton: float | None
    num_clusters: int
    num_singletons: int
    num_unclustered: int
    size_histogram: dict[int, int]
    n_heads: int
    n_debatable: int
    max_claiming: int
    head_broadcasts: int
    member_updates: int
    affiliation_msgs: int
    composition_msgs: int

    @property
    def total_messages(self) -> int:
        return (
            self.head_broadcasts
            + self.member_updates
            + self.affiliation_msgs
            + self.composition_msgs
        )


def metric_avg_cc_nonsingleton(clustering: Clustering) -> float | None:
    """Mean |K(C)| over clusters with at least two members; None if none exist."""
    counts = [len(c.cc) for c in clustering if not c.is_singleton]
    if not counts:
        return None
    return sum(counts) / len(counts)


def metric_avg_cc_all(clustering: Clustering) -> float:
    return sum(len(c.cc) for c in clustering) / len(clustering)


def size_cdf(clustering: Clustering) -> list[tuple[int, float]]:
    """Node-weighted cumulative distribution over cluster sizes."""
    total = sum(c.size for c in clustering)
    by_size: dict[int, int] = {}
    for c in clustering:
        by_size[c.size] = by_size.get(c.size, 0) + c.size
    out, acc = [], 0
    for size in sorted(by_size):
        acc += by_size[size]
        out.append((size, acc / total))
    return out


def node_weighted_median_size(clustering: Clustering) -> int:
    for size, frac in size_cdf(clustering):
        if frac >= 0.5:
            return size
    raise ValueError("empty clustering")


def _histogram(clustering: Clustering) -> dict[int, int]:
    h: dict[int, int] = {}
    for c in clustering:
        h[c.size] = h.get(c.size, 0) + 1
    return dict(sorted(h.items()))


def _record(
    scheme: str,
    state: ScenarioState,
    clustering: Clustering,
    *,
    n_heads: int,
    n_debatable: int,
    max_claiming: int,
    head_broadcasts: int,
    member_updates: int,
    affiliation_msgs: int,
    composition_msgs: int,
) -> RunRecord:
    singles = clustering.singletons()
    return RunRecord(
        seed=state.config.seed,
        scheme=scheme,
        n=state.topology.n,
        num_pu=len(state.pus),
        avg_cc_nonsingleton=metric_avg_cc_nonsingleton(clustering),
        num_clusters=len(clustering),
        num_singletons=len(singles),
        num_unclustered=sum(c.size for c in singles),
        size_histogram=_histogram(clustering),
        n_heads=n_heads,
        n_debatable=n_debatable,
        max_claiming=max_claiming,
        head_broadcasts=head_broadcasts,
        member_updates=member_updates,
        affiliation_msgs=affiliation_msgs,
        composition_msgs=composition_msgs,
    )


def run_scheme(scheme: str, state: ScenarioState) -> tuple[Clustering, RunRecord]:
    """Run one scheme on a scenario, validate the result and build its record."""
    topology = state.topology
    cfg = state.config
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")

    if scheme.startswith("ross"):
        size_control = "-sc-" in scheme
        phase1 = ross.run_phase1(
            topology,
            delta=cfg.delta if size_control else None,
            t_factor=cfg.t_factor if size_control else None,
        )
        overlapping = phase1.to_clustering()
        runner = membership.run_dga if scheme.endswith("dga") else membership.run_dfa
        clustering, game = runner(overlapping, topology)
        record = _record(
            scheme,
            state,
            clustering,
            n_heads=len(phase1.heads()),
            n_debatable=game.n_players,
            max_claiming=game.max_claiming,
            head_broadcasts=phase1.head_broadcasts,
            member_updates=phase1.member_updates,
            affiliation_msgs=game.affiliation_msgs,
            composition_msgs=game.composition_msgs,
        )
    elif scheme == "soc":
        clustering = soc.run_soc(topology)
        record = _record(
            scheme,
            state,
            clustering,
            n_heads=len(clustering),
            n_debatable=0,
            max_claiming=0,
            head_broadcasts=soc.soc_message_total(topology.n),
            member_updates=0,
            affiliation_msgs=0,
            composition_msgs=0,
        )
    else:  # central
        window = (max(1, cfg.delta - 2), cfg.delta + 2)
        pool = centralized.enumerate_clusters(topology, window)
        pool = centralized.score_pool(
            pool, cfg.delta, centralized.PenaltySchedule.of(cfg.rho1, cfg.rho2)
        )
        clustering = centralized.solve(pool, topology)
        h, m = _backbone_counts(topology)
        record = _record(
            scheme,
            state,
            clustering,
            n_heads=h,
            n_debatable=m,
            max_claiming=0,
            head_broadcasts=h,
            member_updates=topology.n,
            affiliation_msgs=m,
            composition_msgs=0,
        )
    report = validate_clustering(clustering, topology, require_partition=True)
    if not report.ok:
        raise RuntimeError(f"{scheme} produced an invalid clustering: {report}")
    return clustering, record


def _backbone_counts(topology: Topology) -> tuple[int, int]:
    """Heads and debatable-node counts of the phase-one backbone used by the
    modeled centralized information gathering/dissemination."""
    phase1 = ross.run_phase1(topology)
    return len(phase1.heads()), len(phase1.debatable())


# -- message accounting -------------------------------------------------------


@dataclass(frozen=True)
class MessageRow:
    scheme: str
    seed: int
    h: int
    m: int
    d: int
    measured: int
    bound: int

    @property
    def ok(self) -> bool:
        return self.measured <= self.bound


def message_bound(record: RunRecord) -> int:
    phase1 = record.head_broadcasts + record.member_updates
    if record.scheme in ("ross-dga", "ross-sc-dga"):
        return phase1 + 2 * record.n_debatable**2 * record.max_claiming
    if record.scheme in ("ross-dfa", "ross-sc-dfa"):
        return phase1 + 2 * record.n_debatable
    if record.scheme == "soc":
        return soc.soc_message_total(record.n)
    if record.scheme == "central":
        return record.n_heads + record.n_debatable + record.n
    raise ValueError(record.scheme)


def message_report(records: Iterable[RunRecord]) -> list[MessageRow]:
    rows = []
    for r in records:
        rows.append(
            MessageRow(
                scheme=r.scheme,
                seed=r.seed,
                h=r.n_heads,
                m=r.n_debatable,
                d=r.max_claiming,
                measured=r.total_messages,
                bound=message_bound(r),
            )
        )
    return rows


# -- experiments ---------------------------------------------------------------


def ci95(values: Sequence[float]) -> tuple[float, float]:
    """Mean and 95% normal-approximation half-width over per-seed values."""
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, 1.96 * math.sqrt(var / n)


def compare_experiment(
    config: ScenarioConfig, schemes: Sequence[str], seeds: Sequence[int]
) -> tuple[list[RunRecord], dict[tuple[str, int], Clustering]]:
    records, clusterings = [], {}
    for seed in sorted(seeds):
        state = generate(config.override(seed=seed))
        for scheme in schemes:
            clustering, record = run_scheme(scheme, state)
            records.append(record)
            clusterings[(scheme, seed)] = clustering
    return records, clusterings


@dataclass
class RobustnessCurve:
    """Per-batch unclustered counts for one scheme: means, CIs and samples."""

    scheme: str
    seeds: tuple[int, ...]
    num_pu: list[int] = field(default_factory=list)
    samples: list[list[int]] = field(default_factory=list)  # [batch][seed]

    def points(self) -> list[tuple[int, float, float]]:
        out = []
        for pu, counts in zip(self.num_pu, self.samples):
            mean, hw = ci95(counts)
            out.append((pu, mean, hw))
        return out


def unclustered_under(
    clustering: Clustering, availability: Sequence[ChannelSet]
) -> int:
    """Nodes outside any surviving non-singleton cluster.

    A cluster survives while its common channels stay non-empty and every
    member still shares a channel with the head under the new availability.
    """
    count = 0
    for c in clustering:
        if c.is_singleton:
            count += 1
            continue
        cc = None
        head_mask = availability[c.head].mask
        alive = True
        for m in c.members:
            mask = availability[m].mask
            cc = mask if cc is None else cc & mask
            if m != c.head and mask & head_mask == 0:
                alive = False
        if not alive or not cc:
            count += c.size
    return count


def robustness_experiment(
    config: ScenarioConfig,
    schemes: Sequence[str],
    batches: int,
    batch_size: int,
    seeds: Sequence[int],
) -> dict[str, RobustnessCurve]:
    """Form clusters once per seed, then add PU batches and count survivors.

    Clusters are frozen after formation: the metric asks how many nodes keep
    a usable non-singleton cluster as the spectrum shrinks, not how well the
    network would re-cluster.
    """
    seeds = tuple(sorted(seeds))
    curves = {s: RobustnessCurve(scheme=s, seeds=seeds) for s in schemes}
    pu_counts = [config.n_pu + b * batch_size for b in range(batches + 1)]
    for s in schemes:
        curves[s].num_pu = list(pu_counts)
        curves[s].samples = [[] for _ in pu_counts]
    for seed in seeds:
        state = generate(config.override(seed=seed))
        formed = {s: run_scheme(s, state)[0] for s in schemes}
        current = state
        for batch in range(batches + 1):
            if batch > 0:
                current = add_pu_batch(current, batch_size)
            assert current.topology.positions is not None
            avail = derive_availability(
                current.topology.positions, current.pus, config.num_channels
            )
            for s in schemes:
                curves[s].samples[batch].append(unclustered_under(formed[s], avail))
    return curves


def scale_experiment(
    config: ScenarioConfig, n_list: Sequence[int], seeds: Sequence[int]
) -> dict[int, tuple[float, float, list[int]]]:
    """Mean cluster count of ross-dga per network size at fixed area/range."""
    out = {}
    for n in n_list:
        counts = []
        for seed in sorted(seeds):
            state = generate(config.override(n_cr=n, seed=seed))
            clustering, _ = run_scheme("ross-dga", state)
            counts.append(len(clustering))
        mean, hw = ci95(counts)
        out[n] = (mean, hw, counts)
    return out


# -- canned configurations -----------------------------------------------------


def part1_config(seed: int = 0, **overrides) -> ScenarioConfig:
    """Small-network study: 20 nodes, 10 PUs, ranges a third of the area side."""
    base = ScenarioConfig(
        n_cr=20,
        n_pu=10,
        area_side=1.0,
        cr_range=1.0 / 3.0,
        pu_range=1.0 / 3.0,
        delta=3,
        rho1=0.4,
        rho2=0.6,
        seed=seed,
    )
    return base.override(**overrides) if overrides else base


_PART2_DELTA = {100: 6, 200: 12, 300: 20}


def part2_config(n: int, seed: int = 0, **overrides) -> ScenarioConfig:
    """Scale study: CR range a fifth of the side, PU range two fifths, 30 PUs."""
    delta = _PART2_DELTA.get(n, max(2, round(0.06 * n)))
    base = ScenarioConfig(
        n_cr=n,
        n_pu=30,
        area_side=1.0,
        cr_range=0.2,
        pu_range=0.4,
        delta=delta,
        rho1=0.4,
        rho2=0.6,
        seed=seed,
    )
    return base.override(**overrides) if overrides else base


# -- CSV persistence -------------------------------------------------------------

RUNS_HEADER = [
    "seed",
    "scheme",
    "n",
    "num_pu",
    "avg_cc_nonsingleton",
    "num_clusters",
    "num_singletons",
    "num_unclustered",
    "size_histogram",
    "n_heads",
    "n_debatable",
    "max_claiming",
    "head_broadcasts",
    "member_updates",
    "affiliation_msgs",
    "composition_msgs",
    "total_messages",
]


def write_runs_csv(path, records: Iterable[RunRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RUNS_HEADER)
        for r in records:
            hist = ";".join(f"{k}:{v}" for k, v in r.size_histogram.items())
            w.writerow(
                [
                    r.seed,
                    r.scheme,
                    r.n,
                    r.num_pu,
                    "" if r.avg_cc_nonsingleton is None else repr(r.avg_cc_nonsingleton),
                    r.num_clusters,
                    r.num_singletons,
                    r.num_unclustered,
                    hist,
                    r.n_heads,
                    r.n_debatable,
                    r.max_claiming,
                    r.head_broadcasts,
                    r.member_updates,
                    r.affiliation_msgs,
                    r.composition_msgs,
                    r.total_messages,
                ]
            )


def write_robustness_csv(path, curves: dict[str, RobustnessCurve]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scheme", "seed", "batch", "num_pu", "unclustered"])
        for scheme in sorted(curves):
            curve = curves[scheme]
            for batch, (pu, counts) in enumerate(zip(curve.num_pu, curve.samples)):
                for seed, count in zip(curve.seeds, counts):
                    w.writerow([scheme, seed, batch, pu, count])


def write_sizes_csv(path, clusterings: dict[tuple[str, int], Clustering]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scheme", "seed", "size", "node_fraction"])
        for (scheme, seed) in sorted(clusterings):
            clustering = clusterings[(scheme, seed)]
            total = sum(c.size for c in clustering)
            by_size: dict[int, int] = {}
            for c in clustering:
                by_size[c.size] = by_size.get(c.size, 0) + c.size
            for size in sorted(by_size):
                w.writerow([scheme, seed, size, repr(by_size[size] / total)])


def write_messages_csv(path, rows: Iterable[MessageRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scheme", "seed", "h", "m", "d", "measured", "bound"])
        for r in rows:
            w.writerow([r.scheme, r.seed, r.h, r.m, r.d, r.measured, r.bound])


def write_scale_csv(path, results: dict[int, tuple[float, float, list[int]]], seeds) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "seed", "num_clusters"])
        for n in sorted(results):
            for seed, count in zip(sorted(seeds), results[n][2]):
                w.writerow([n, seed, count])


# -- fixture constraint checker ---------------------------------------------------


@dataclass
class FixtureReport:
    """Programmatic validation of the compiled-in example network."""

    lines: list[str] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)
    values: dict[str, object] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    def check(self, name: str, passed: bool, detail: str) -> None:
        mark = "ok" if passed else "FAIL"
        self.lines.append(f"[{mark}] {name}: {detail}")
        if not passed:
            self.failures.append(name)

    def note(self, name: str, detail: str) -> None:
        self.lines.append(f"[--] {name}: {detail}")

    def __str__(self) -> str:
        return "\n".join(self.lines)


def fixture_report() -> FixtureReport:
    """Run the whole pipeline on the fixture and check every pinned fact."""
    from .model import connectivity_vector
    from .scenario import fig1_fixture, fig1_id, fig1_label

    rep = FixtureReport()
    state = fig1_fixture()
    topo = state.topology
    a, b, c, d, e = (fig1_id(x) for x in "ABCDE")
    g_node, h_node = fig1_id("G"), fig1_id("H")

    vec_b = connectivity_vector(topo, b)
    vec_h = connectivity_vector(topo, h_node)
    rep.check("initial-degree-tie", vec_b.d == vec_h.d, f"d_B={vec_b.d}, d_H={vec_h.d}")
    rep.check("g-values", (vec_h.g, vec_b.g) == (2, 1), f"g_H={vec_h.g}, g_B={vec_b.g}")

    phase1 = ross.run_phase1(topo)
    clusters = {cl.head: set(cl.members) for cl in phase1.to_clustering()}
    want_h = {h_node, a, b, g_node}
    rep.check(
        "head-H-cluster",
        clusters.get(h_node) == want_h,
        f"C(H)={sorted(fig1_label(x) for x in clusters.get(h_node, set()))}",
    )
    want_c = {c, a, b, d}
    rep.check(
        "claiming-clusters-of-A",
        clusters.get(c) == want_c and clusters.get(h_node) == want_h,
        f"C(C)={sorted(fig1_label(x) for x in clusters.get(c, set()))}",
    )
    debatable = phase1.debatable()
    rep.check(
        "debatable-set",
        debatable == sorted([a, b, d]),
        f"{[fig1_label(x) for x in debatable]}",
    )

    pool = centralized.enumerate_clusters(topo, (1, 3))
    rep.check("pool-size-38", len(pool) == 38, f"|pool|={len(pool)}")
    rep.values["pool_size"] = len(pool)

    dga_clustering, _ = membership.run_dga(phase1.to_clustering(), topo)
    a_head = dga_clustering.cluster_of(a).head
    rep.check("dga-A-joins-C", a_head == c, f"A ended under head {fig1_label(a_head)}")

    dga_avg = metric_avg_cc_all(dga_clustering)
    rep.values["ross_dga_avg_cc"] = dga_avg
    rep.note("ross-dga-avg-cc", f"{dga_avg:.4f}")

    dfa_clustering, _ = membership.run_dfa(phase1.to_clustering(), topo)
    rep.values["ross_dfa_avg_cc"] = metric_avg_cc_all(dfa_clustering)
    rep.note("ross-dfa-avg-cc", f"{metric_avg_cc_all(dfa_clustering):.4f}")

    schedule = centralized.PenaltySchedule.of(state.config.rho1, state.config.rho2)
    scored = centralized.score_pool(
        centralized.enumerate_clusters(topo, (1, state.config.delta + 2)),
        state.config.delta,
        schedule,
    )
    central_clustering = centralized.solve(scored, topo)
    rep.values["central_avg_cc"] = metric_avg_cc_all(central_clustering)
    rep.note("central-avg-cc", f"{metric_avg_cc_all(central_clustering):.4f}")

    soc_clustering = soc.run_soc(topo)
    rep.values["soc_avg_cc_all"] = metric_avg_cc_all(soc_clustering)
    rep.values["soc_avg_cc_nonsingleton"] = metric_avg_cc_nonsingleton(soc_clustering)
    rep.values["soc_has_singleton_h"] = any(
        cl.is_singleton and cl.head == h_node for cl in soc_clustering
    )
    rep.note(
        "soc-averages",
        f"all={rep.values['soc_avg_cc_all']:.4f} "
        f"nonsingleton={rep.values['soc_avg_cc_nonsingleton']} "
        f"singleton-H={rep.values['soc_has_singleton_h']}",
    )
    return rep
