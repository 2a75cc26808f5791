"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 input error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from dataclasses import fields
from pathlib import Path

import numpy as np

from .baselines import sybilbelief_priors, sybilrank
from .config import ExperimentConfig, load_config
from .experiments import (
    SCENARIO_COMBOS,
    SynthParams,
    facebook_sweep,
    feature_pipeline,
    synthetic_sweep,
    write_sweep,
)
from .graph import GraphFormatError, Label, load_edge_list, load_labels
from .inference import PairwiseMRF, SybilFrame, rank, run_lbp, save_beliefs, save_ranking
from .metrics import evaluate, format_value, write_report_csv
from .priors import load_edge_priors, load_node_priors, save_edge_priors, save_feature_csv, save_node_priors
from .synth import ConfigError

log = logging.getLogger("sybilframe")

EXIT_CONFIG = 2
EXIT_INPUT = 3
SYNTH_KINDS = ("synthetic-node-prior", "synthetic-edge-prior", "seed-targeting", "baseline-compare")


class InputError(Exception):
    pass


def _flag(name):
    return "--" + name.replace("_", "-")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file; flags override its keys")
    for f in fields(ExperimentConfig):
        common.add_argument(_flag(f.name), dest=f.name, default=None, metavar=f.name.upper())
    parser = argparse.ArgumentParser(prog="sybilframe", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("synth-sweep", parents=[common], help="synthetic sweeps (node/edge priors, seed targeting, baselines)")
    sub.add_parser("facebook-style", parents=[common], help="one graph as both regions with Jaccard edge priors")
    sub.add_parser("feature-pipeline", parents=[common], help="features, classifier priors and LBP on a follower graph")
    p = sub.add_parser("rank", parents=[common], help="run LBP on a graph with prior files")
    p.add_argument("--node-priors")
    p.add_argument("--edge-priors")
    p.add_argument("--seeds", help="label file; benign/sybil entries become trust seeds")
    p = sub.add_parser("eval", parents=[common], help="score a beliefs file against labels")
    p.add_argument("--beliefs", required=True)
    p = sub.add_parser("baseline", parents=[common], help="SybilRank or SybilBelief ranking")
    p.add_argument("--method", choices=("sybilrank", "sybilbelief"), default="sybilrank")
    p.add_argument("--seeds", required=True)
    p.add_argument("--sybilrank-iters", type=int)
    return parser


def _config(args, kind=None):
    overrides = {f.name: getattr(args, f.name) for f in fields(ExperimentConfig)}
    return load_config(args.config, overrides, default_kind=kind)


def _run_dir(cfg, label=None):
    stamp = time.strftime("%Y%m%d-%H%M%S")
    base = Path(cfg.out_dir) / f"{label or cfg.kind}-{cfg.digest()}-{stamp}"
    path, i = base, 1
    while path.exists():
        path = base.with_name(f"{base.name}-{i}")
        i += 1
    path.mkdir(parents=True)
    cfg.to_ini(path / "config.ini")
    return path


def _require(path, what):
    if not path:
        raise InputError(f"--{what} is required")
    if not Path(path).is_file():
        raise InputError(f"{what} file not found: {path}")
    return path


def _seed_sets(path, graph):
    labels = load_labels(path, graph)
    return np.flatnonzero(labels == Label.BENIGN), np.flatnonzero(labels == Label.SYBIL)


def cmd_synth_sweep(args):
    cfg = _config(args, "synthetic-node-prior")
    if cfg.kind not in SYNTH_KINDS:
        raise ConfigError(f"synth-sweep cannot run kind {cfg.kind!r}")
    params = SynthParams(
        prior=cfg.prior,
        benign_size=cfg.benign_size,
        sybil_size=cfg.sybil_size,
        avg_degree=cfg.avg_degree,
        attack_edges=cfg.attack_edges,
        fpr=cfg.fpr,
        fnr=cfg.fnr,
        benign_seeds=cfg.benign_seeds,
        sybil_seeds=cfg.sybil_seeds,
        benign_scenario=cfg.benign_scenario,
        sybil_scenario=cfg.sybil_scenario,
        lbp_iters=cfg.lbp_iters,
        scenarios=SCENARIO_COMBOS if cfg.kind == "seed-targeting" else (),
        with_sybilrank=cfg.kind == "baseline-compare",
    )
    values = cfg.sweep_values()
    # fail fast on an impossible sweep point before starting the pool
    for v in values:
        params.with_value(cfg.sweep, v).synthetic_config()
    out = _run_dir(cfg)
    results = synthetic_sweep(params, cfg.sweep, values, cfg.runs, cfg.seed, cfg.threads)
    write_sweep(results, out, cfg.sweep)
    print(out)
    return 0


def cmd_facebook_style(args):
    cfg = _config(args, "facebook-style")
    base = load_edge_list(_require(cfg.graph, "graph"))
    out = _run_dir(cfg)
    results = facebook_sweep(
        base,
        cfg.sweep_values(),
        cfg.runs,
        cfg.seed,
        cfg.threads,
        lbp_iters=cfg.lbp_iters,
        n_seeds=cfg.benign_seeds,
    )
    write_sweep(results, out, "attack_edges")
    print(out)
    return 0


def cmd_feature_pipeline(args):
    cfg = _config(args, "feature-pipeline")
    directed = load_edge_list(_require(cfg.graph, "graph"), directed=True)
    labels = load_labels(_require(cfg.labels, "labels"), directed)
    try:
        res = feature_pipeline(
            directed,
            labels,
            rng=np.random.default_rng(cfg.seed),
            train_per_class=cfg.train_per_class or None,
            n_seeds=cfg.benign_seeds,
            class_weights=(cfg.benign_weight, cfg.sybil_weight),
            C=cfg.C,
            lbp_iters=cfg.lbp_iters,
            ks=cfg.topk(),
            n_jobs=cfg.threads,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = _run_dir(cfg)
    ids = res.node_ids
    save_feature_csv(res.features, out / "features.csv", ["req_in", "req_out", "clustering"], ids)
    save_node_priors(res.node_prior, out / "node_priors.txt", ids)
    save_edge_priors(res.graph, res.edge_prior, out / "edge_priors.txt")
    save_beliefs(res.beliefs["sybilframe"], out / "beliefs.txt", ids)
    save_ranking(res.beliefs["sybilframe"], out / "ranking.csv", ids, res.rankings["sybilframe"])
    with open(out / "report.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        first = next(iter(res.reports.values())).as_row()
        cols = list(first)
        w.writerow(["method"] + cols)
        for name, rep in res.reports.items():
            row = rep.as_row()
            w.writerow([name] + [format_value(row.get(c, float("nan"))) for c in cols])
    print(out)
    return 0


def cmd_rank(args):
    cfg = _config(args)
    graph = load_edge_list(_require(cfg.graph, "graph"))
    node_prior = load_node_priors(_require(args.node_priors, "node-priors"), graph) if args.node_priors else None
    edge_prior = load_edge_priors(_require(args.edge_priors, "edge-priors"), graph) if args.edge_priors else None
    bs, ss = _seed_sets(_require(args.seeds, "seeds"), graph) if args.seeds else ((), ())
    try:
        sf = SybilFrame(max_iter=cfg.lbp_iters, n_jobs=cfg.threads).fit(graph, node_prior, edge_prior, bs, ss)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = _run_dir(cfg, "rank")
    save_beliefs(sf.beliefs_, out / "beliefs.txt", graph.node_ids)
    save_ranking(sf.beliefs_, out / "ranking.csv", graph.node_ids)
    print(out)
    return 0


def _load_beliefs(path):
    ids, vals = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            try:
                ids.append(int(parts[0]))
                vals.append(float(parts[1]))
            except (ValueError, IndexError):
                raise GraphFormatError(f"{path}:{lineno}: expected 'node_id belief'") from None
    return np.array(ids, dtype=np.int64), np.array(vals)


def cmd_eval(args):
    cfg = _config(args)
    ids, bel = _load_beliefs(_require(args.beliefs, "beliefs"))
    raw = load_labels(_require(cfg.labels, "labels"))
    truth = np.zeros(len(ids), dtype=np.int8)
    inside = ids < len(raw)
    truth[inside] = raw[ids[inside]]
    ks = [k for k in cfg.topk() if k <= len(ids)]
    try:
        rep = evaluate(bel, truth, ranking=rank(bel), ks=ks)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = _run_dir(cfg, "eval")
    write_report_csv(out / "report.csv", [rep])
    print(out)
    return 0


def cmd_baseline(args):
    cfg = _config(args)
    graph = load_edge_list(_require(cfg.graph, "graph"))
    bs, ss = _seed_sets(_require(args.seeds, "seeds"), graph)
    try:
        if args.method == "sybilrank":
            scores = sybilrank(graph, bs, args.sybilrank_iters)
        else:
            pri = sybilbelief_priors(graph, bs, ss)
            scores = run_lbp(PairwiseMRF(graph, pri.node_prior, pri.edge_prior, cfg.lbp_iters), n_jobs=cfg.threads)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = _run_dir(cfg, "baseline")
    save_ranking(scores, out / "ranking.csv", graph.node_ids)
    if args.method == "sybilbelief":
        save_beliefs(scores, out / "beliefs.txt", graph.node_ids)
    print(out)
    return 0


COMMANDS = {
    "synth-sweep": cmd_synth_sweep,
    "facebook-style": cmd_facebook_style,
    "feature-pipeline": cmd_feature_pipeline,
    "rank": cmd_rank,
    "eval": cmd_eval,
    "baseline": cmd_baseline,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InputError, GraphFormatError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
