"""Command-line interface: scenario generation, clustering runs, validation,
experiments and the set-packing reduction."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

from . import centralized, harness
from .model import Cluster, Clustering, Topology, validate_clustering
from .scenario import (
    ScenarioConfig,
    ScenarioState,
    fig1_fixture,
    generate,
    parse_config,
)


def _canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    for f in fields(ScenarioConfig):
        flag = "--" + f.name.replace("_", "-")
        parser.add_argument(flag, dest=f.name, default=None)


def _config_from_args(args) -> ScenarioConfig:
    cfg = ScenarioConfig()
    if getattr(args, "config", None):
        cfg = parse_config(Path(args.config).read_text())
    overrides = {}
    for f in fields(ScenarioConfig):
        raw = getattr(args, f.name, None)
        if raw is None:
            continue
        if raw == "none":
            overrides[f.name] = None
        elif "int" in f.type:
            overrides[f.name] = int(raw)
        else:
            overrides[f.name] = float(raw)
    return cfg.override(**overrides) if overrides else cfg


def _clustering_document(scheme: str, clustering: Clustering, topology: Topology) -> dict:
    return {
        "scheme": scheme,
        "scenario": topology.to_document(),
        "clusters": [
            {"head": c.head, "members": sorted(c.members)} for c in clustering
        ],
    }


def _load_clustering(doc: dict) -> tuple[Clustering, Topology, str]:
    topology = Topology.from_document(doc["scenario"])
    clusters = [
        Cluster.of(topology, c["head"], c["members"]) for c in doc["clusters"]
    ]
    return Clustering.of(clusters), topology, doc.get("scheme", "?")


def _cmd_fixture(args) -> int:
    state = fig1_fixture()
    Path(args.out).write_text(state.topology.to_json())
    print(f"wrote fixture scenario to {args.out}")
    return 0


def _cmd_generate(args) -> int:
    config = _config_from_args(args)
    state = generate(config)
    Path(args.out).write_text(state.topology.to_json())
    print(
        f"wrote scenario (n={config.n_cr}, pu={config.n_pu}, seed={config.seed}) "
        f"to {args.out}"
    )
    return 0


def _state_from_scenario_file(path: str, config: ScenarioConfig) -> ScenarioState:
    topology = Topology.from_json(Path(path).read_text())
    import numpy as np

    rng = np.random.default_rng(config.seed)
    cfg = config.override(n_cr=topology.n, num_channels=topology.num_channels)
    return ScenarioState(
        config=cfg, topology=topology, pus=(), rng_state=rng.bit_generator.state
    )


def _cmd_cluster(args) -> int:
    config = _config_from_args(args)
    state = _state_from_scenario_file(args.infile, config)
    clustering, record = harness.run_scheme(args.scheme, state)
    doc = _clustering_document(args.scheme, clustering, state.topology)
    Path(args.out).write_text(_canonical_json(doc))
    if args.responses and args.scheme.startswith("ross"):
        # re-run the game to export the response log
        from . import membership, ross

        size_control = "-sc-" in args.scheme
        phase1 = ross.run_phase1(
            state.topology,
            delta=state.config.delta if size_control else None,
            t_factor=state.config.t_factor if size_control else None,
        )
        runner = membership.run_dga if args.scheme.endswith("dga") else membership.run_dfa
        _, game = runner(phase1.to_clustering(), state.topology)
        with open(args.responses, "w") as fh:
            fh.write("player,from_head,to_head,round\n")
            for player, old, new, rnd in game.to_rows():
                fh.write(f"{player},{'' if old is None else old},{new},{rnd}\n")
    print(
        f"{args.scheme}: {record.num_clusters} clusters, "
        f"{record.num_singletons} singletons, {record.total_messages} messages"
    )
    return 0


def _cmd_validate(args) -> int:
    doc = json.loads(Path(args.infile).read_text())
    clustering, topology, scheme = _load_clustering(doc)
    report = validate_clustering(clustering, topology, require_partition=True)
    if report.ok:
        print(f"{args.infile}: valid clustering ({scheme})")
        return 0
    print(f"{args.infile}: INVALID ({scheme}): {report}", file=sys.stderr)
    return 1


def _cmd_experiment(args) -> int:
    config = _config_from_args(args)
    seeds = range(args.seeds)
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    schemes = args.schemes.split(",") if args.schemes else None
    if args.kind == "compare":
        schemes = schemes or ["ross-dga", "ross-dfa", "ross-sc-dga", "ross-sc-dfa", "soc"]
        records, clusterings = harness.compare_experiment(config, schemes, seeds)
        harness.write_runs_csv(outdir / "runs.csv", records)
        harness.write_sizes_csv(outdir / "sizes.csv", clusterings)
        rows = harness.message_report(records)
        harness.write_messages_csv(outdir / "messages.csv", rows)
        bad = [r for r in rows if not r.ok]
        print(f"wrote runs.csv, sizes.csv, messages.csv to {outdir}")
        if bad:
            print(f"{len(bad)} message-bound violations", file=sys.stderr)
            return 1
    elif args.kind == "robustness":
        schemes = schemes or ["ross-sc-dga", "ross-sc-dfa", "soc"]
        curves = harness.robustness_experiment(
            config, schemes, args.batches, args.batch_size, seeds
        )
        harness.write_robustness_csv(outdir / "robustness.csv", curves)
        print(f"wrote robustness.csv to {outdir}")
    else:  # scale
        n_list = [int(tok) for tok in args.n_list.split(",")]
        results = harness.scale_experiment(config, n_list, seeds)
        harness.write_scale_csv(outdir / "scale.csv", results, seeds)
        print(f"wrote scale.csv to {outdir}")
    return 0


def _cmd_reduce(args) -> int:
    instance = centralized.SetPackingInstance.from_text(Path(args.packing).read_text())
    reduction = centralized.reduce_set_packing(instance)
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "reduced_scenario.json").write_text(reduction.topology.to_json())
    with open(outdir / "pool.csv", "w") as fh:
        fh.write("head,members,cc_count,score\n")
        for c in reduction.pool.candidates:
            members = " ".join(str(m) for m in sorted(c.members))
            fh.write(f"{c.head},{members},{len(c.cc)},{c.score}\n")
    print(
        f"reduced {len(instance.sets)} sets over {len(instance.elements)} elements "
        f"into {reduction.topology.n} nodes / {reduction.topology.num_channels} channels"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crnclust", description="robust clustering simulator for ad-hoc CRNs"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fixture", help="emit the example-network scenario file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fixture)

    p = sub.add_parser("generate", help="generate a scenario from config + seed")
    p.add_argument("--config")
    _add_config_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("cluster", help="run one scheme on a scenario file")
    p.add_argument("--scheme", required=True, choices=harness.SCHEMES)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--responses", help="CSV path for the best-response log")
    p.add_argument("--config")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("validate", help="check the invariants of a clustering file")
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("experiment", help="multi-seed CSV experiments")
    p.add_argument("kind", choices=["compare", "robustness", "scale"])
    p.add_argument("--config")
    _add_config_flags(p)
    p.add_argument("--seeds", type=int, default=50)
    p.add_argument("--schemes", help="comma-separated scheme list")
    p.add_argument("--batches", type=int, default=19)
    p.add_argument("--batch-size", type=int, default=5)
    p.add_argument("--n-list", default="100,200,300")
    p.add_argument("--out-dir", default="results")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("reduce", help="reduce a weighted set-packing instance")
    p.add_argument("--packing", required=True)
    p.add_argument("--out-dir", default="reduction")
    p.set_defaults(func=_cmd_reduce)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
