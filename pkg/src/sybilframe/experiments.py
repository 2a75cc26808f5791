"""Experiment drivers shared by the CLI and the acceptance suite.

Every run is a pure function of its parameters and a run seed. Each run draws
three independent streams (graph, priors, trust seeds) from
``SeedSequence(master_seed, spawn_key=(run_index,))``, so a run's instance does
not depend on which sweep point it belongs to or on the worker count.
"""

from __future__ import annotations

import csv
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .baselines import sybilbelief_priors, sybilrank
from .classifier import train_classifier
from .graph import Label, largest_connected_component, mutualize
from .inference import PairwiseMRF, SybilFrame, rank, run_lbp
from .metrics import EvaluationReport, aggregate_runs, auc, evaluate, format_value, topk_sybil_portion
from .priors import (
    NoiseModel,
    SEED_BENIGN,
    SEED_SYBIL,
    classify_to_node_priors,
    jaccard_edge_priors,
    node_feature_matrix,
    node_priors_to_edge_priors,
    synth_edge_priors,
    synth_node_priors,
)
from .synth import (
    ConfigError,
    SyntheticConfig,
    generate_pa_region,
    select_trust_seeds,
    wire_attack_edges,
)

SWEEP_VARIABLES = (
    "fpr_fnr",
    "fpr",
    "fnr",
    "attack_edges",
    "sybil_size",
    "benign_size",
    "avg_degree",
)
SCENARIO_COMBOS = tuple(itertools.product(("SI", "SII"), repeat=2))


@dataclass
class SynthParams:
    prior: str = "node"  # "node" or "edge"
    benign_size: int = 1000
    sybil_size: int = 400
    avg_degree: int = 10
    attack_edges: int = 1000
    fpr: float = 0.3
    fnr: float = 0.3
    benign_seeds: int = 1
    sybil_seeds: int = 1
    benign_scenario: str = "SI"
    sybil_scenario: str = "SI"
    lbp_iters: int = 6
    scenarios: tuple = ()  # seed-targeting: evaluate every listed (benign, sybil) combo
    with_sybilrank: bool = False

    def with_value(self, var, value):
        if var == "fpr_fnr":
            return replace(self, fpr=float(value), fnr=float(value))
        if var in ("fpr", "fnr"):
            return replace(self, **{var: float(value)})
        if var in ("attack_edges", "sybil_size", "benign_size", "avg_degree"):
            return replace(self, **{var: int(value)})
        raise ConfigError(f"unknown sweep variable {var!r}")

    def synthetic_config(self):
        for name in ("fpr", "fnr"):
            if not 0.0 <= getattr(self, name) <= 0.5:
                raise ConfigError(f"{name} must lie in [0, 0.5], got {getattr(self, name)}")
        return SyntheticConfig(
            benign_size=self.benign_size,
            sybil_size=self.sybil_size,
            avg_degree=self.avg_degree,
            attack_edges=self.attack_edges,
            benign_scenario=self.benign_scenario,
            sybil_scenario=self.sybil_scenario,
            benign_seeds=self.benign_seeds,
            sybil_seeds=self.sybil_seeds,
        ).validate()


def run_streams(master_seed, run_index, n=3):
    ss = np.random.SeedSequence(master_seed, spawn_key=(run_index,))
    return [np.random.default_rng(s) for s in ss.spawn(n)]


def _detector(iters):
    return SybilFrame(max_iter=iters)


def synthetic_run(params, master_seed, run_index):
    """One synthetic experiment; returns ``{method: EvaluationReport}``.

    Methods: ``sybilframe``, ``sybilbelief`` and, for node priors, ``prior``
    (the simulated classifier on its own). With ``params.scenarios`` set,
    SybilFrame is evaluated once per seed-placement combo on the same
    instance and priors, under method names like ``SI/SII``.
    """
    params.synthetic_config()
    g_rng, p_rng, s_rng = run_streams(master_seed, run_index)
    benign = generate_pa_region(params.benign_size, params.avg_degree, g_rng)
    sybil = generate_pa_region(params.sybil_size, params.avg_degree, g_rng)
    inst = wire_attack_edges(benign, sybil, params.attack_edges, g_rng)
    noise = NoiseModel(params.fpr, params.fnr)
    combos = params.scenarios or ((params.benign_scenario, params.sybil_scenario),)
    out = {}
    for b_scen, s_scen in combos:
        bs, ss = select_trust_seeds(
            inst,
            b_scen,
            np.random.default_rng(s_rng.bit_generator.seed_seq),
            n_benign=params.benign_seeds,
            n_sybil=params.sybil_seeds,
            sybil_scenario=s_scen,
        )
        prior_rng = np.random.default_rng(p_rng.bit_generator.seed_seq)
        if params.prior == "node":
            node_prior = synth_node_priors(inst.truth, bs, ss, noise, prior_rng)
            edge_prior = None
        elif params.prior == "edge":
            node_prior = None
            edge_prior = synth_edge_priors(inst.graph, inst.truth, bs, ss, noise, prior_rng)
        else:
            raise ConfigError(f"unknown prior kind {params.prior!r}")
        sf = _detector(params.lbp_iters).fit(inst.graph, node_prior, edge_prior, bs, ss)
        rep = evaluate(sf.beliefs_, inst.truth)
        if params.scenarios:
            out[f"{b_scen}/{s_scen}"] = rep
            continue
        out["sybilframe"] = rep
        sb = _detector(params.lbp_iters).fit(inst.graph, None, None, bs, ss)
        out["sybilbelief"] = evaluate(sb.beliefs_, inst.truth)
        if node_prior is not None:
            out["prior"] = evaluate(node_prior, inst.truth)
        if params.with_sybilrank:
            out["sybilrank"] = EvaluationReport(auc=auc(sybilrank(inst.graph, bs), inst.truth))
    return out


def facebook_run(base, attack_edges, master_seed, run_index, lbp_iters=6, n_seeds=1, sybilrank_iters=None):
    """Use ``base`` as both regions, wire attack edges, compare three methods.

    SybilFrame uses scaled Jaccard edge priors; SybilRank is scored by AUC only.
    """
    g_rng, _, s_rng = run_streams(master_seed, run_index)
    inst = wire_attack_edges(base, base, attack_edges, g_rng)
    bs, ss = select_trust_seeds(inst, "SI", s_rng, n_benign=n_seeds, n_sybil=n_seeds)
    edge_prior = jaccard_edge_priors(inst.graph, bs, ss)
    sf = _detector(lbp_iters).fit(inst.graph, None, edge_prior, bs, ss)
    sb = _detector(lbp_iters).fit(inst.graph, None, None, bs, ss)
    scores = sybilrank(inst.graph, bs, sybilrank_iters)
    return {
        "sybilframe": evaluate(sf.beliefs_, inst.truth),
        "sybilbelief": evaluate(sb.beliefs_, inst.truth),
        "sybilrank": EvaluationReport(auc=auc(scores, inst.truth)),
    }


def run_sweep(run_fn, values, runs, master_seed, threads=1):
    """Evaluate ``run_fn(value, master_seed, run_index)`` over a sweep.

    Returns ``{value: {method: [report per run]}}``; runs are ordered by run
    index whatever the worker count.
    """
    if runs < 1:
        raise ConfigError("runs must be >= 1")
    if not len(values):
        raise ConfigError("sweep range is empty")
    jobs = [(v, r) for v in values for r in range(runs)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(lambda j: run_fn(j[0], master_seed, j[1]), jobs))
    else:
        results = [run_fn(v, master_seed, r) for v, r in jobs]
    out = {}
    for (v, r), res in zip(jobs, results):
        slot = out.setdefault(v, {})
        for method, rep in res.items():
            slot.setdefault(method, []).append(rep)
    return out


def synthetic_sweep(params, var, values, runs=20, master_seed=0, threads=1):
    return run_sweep(
        lambda v, seed, r: synthetic_run(params.with_value(var, v), seed, r),
        values,
        runs,
        master_seed,
        threads,
    )


def facebook_sweep(base, values, runs=20, master_seed=0, threads=1, **kw):
    return run_sweep(
        lambda k, seed, r: facebook_run(base, int(k), seed, r, **kw),
        values,
        runs,
        master_seed,
        threads,
    )


# ---------------------------------------------------------------------------
# Feature pipeline


@dataclass
class PipelineResult:
    graph: object
    node_ids: np.ndarray
    features: np.ndarray
    truth: np.ndarray
    node_prior: np.ndarray
    edge_prior: np.ndarray
    beliefs: dict
    reports: dict
    train_nodes: np.ndarray
    benign_seeds: np.ndarray
    sybil_seeds: np.ndarray
    unknown: np.ndarray
    rankings: dict = field(default_factory=dict)


def feature_pipeline(
    directed,
    labels,
    rng=None,
    train_per_class=None,
    n_seeds=None,
    class_weights=(1.0, 1.0),
    C=1.0,
    lbp_iters=6,
    ks=(),
    n_jobs=1,
):
    """Structure-only detection on a directed follower graph.

    Keeps mutual arcs, takes the largest component, computes reciprocity and
    clustering features, trains the weighted classifier on a balanced sample,
    turns its probabilities into node priors (Unknown-label nodes get 0.5) and
    edge priors, and runs LBP. Evaluation covers known-label nodes outside
    the training sample.
    """
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    labels = np.asarray(labels)
    if len(labels) != directed.n_nodes:
        raise ValueError("labels must cover every node of the directed graph")
    undirected = mutualize(directed)
    lcc, kept = largest_connected_component(undirected)
    truth = labels[kept]
    feats = node_feature_matrix(directed, lcc, kept)
    benign = np.flatnonzero(truth == Label.BENIGN)
    sybil = np.flatnonzero(truth == Label.SYBIL)
    unknown = np.flatnonzero(truth == Label.UNKNOWN)
    if len(benign) < 2 or len(sybil) < 2:
        raise ValueError("training needs labelled benign and Sybil nodes in the largest component")
    if train_per_class is None:
        train_per_class = min(10000, len(benign) // 2, len(sybil) // 2)
    train_per_class = max(2, min(train_per_class, len(benign) - 1, len(sybil) - 1))
    tb = np.sort(rng.choice(benign, train_per_class, replace=False))
    ts = np.sort(rng.choice(sybil, train_per_class, replace=False))
    train = np.concatenate([tb, ts])
    clf = train_classifier(feats[train], truth[train], class_weights=class_weights, C=C)
    node_prior = classify_to_node_priors(clf, feats, unknown=unknown)
    if n_seeds is None:
        n_seeds = min(1000, train_per_class)
    bs = np.sort(rng.choice(tb, min(n_seeds, len(tb)), replace=False))
    ss = np.sort(rng.choice(ts, min(n_seeds, len(ts)), replace=False))
    framed = node_prior.copy()
    framed[bs] = SEED_BENIGN
    framed[ss] = SEED_SYBIL
    edge_prior = node_priors_to_edge_priors(framed, lcc)
    sf = SybilFrame(max_iter=lbp_iters, n_jobs=n_jobs).fit(lcc, framed, edge_prior)
    belief_prior = sybilbelief_priors(lcc, bs, ss)
    sb_bel = run_lbp(
        PairwiseMRF(lcc, belief_prior.node_prior, belief_prior.edge_prior, max_iter=lbp_iters),
        n_jobs=n_jobs,
    )
    beliefs = {"classifier": node_prior, "sybilframe": sf.beliefs_, "sybilbelief": sb_bel}
    exclude = np.union1d(train, unknown)
    valid_ks = [k for k in ks if 0 < k <= lcc.n_nodes]
    reports, rankings = {}, {}
    for name, bel in beliefs.items():
        order = rank(bel)
        rankings[name] = order
        rep = evaluate(bel, truth, exclude=exclude)
        if valid_ks:
            rep.topk_portions = topk_sybil_portion(order, truth, valid_ks)
        reports[name] = rep
    scores = sybilrank(lcc, bs)
    rankings["sybilrank"] = rank(scores)
    sr = EvaluationReport(auc=auc(scores, truth, exclude=exclude))
    if valid_ks:
        sr.topk_portions = topk_sybil_portion(rankings["sybilrank"], truth, valid_ks)
    reports["sybilrank"] = sr
    return PipelineResult(
        graph=lcc,
        node_ids=lcc.node_ids,
        features=feats,
        truth=truth,
        node_prior=node_prior,
        edge_prior=edge_prior,
        beliefs=beliefs,
        reports=reports,
        train_nodes=train,
        benign_seeds=bs,
        sybil_seeds=ss,
        unknown=unknown,
        rankings=rankings,
    )


# ---------------------------------------------------------------------------
# Output

SWEEP_METRICS = ("accuracy", "fp", "fn", "auc")


def _slug(method):
    return method.replace("/", "-")


def write_sweep(results, out_dir, sweep_name="x"):
    """Write a sweep to ``out_dir``; returns the list of files written.

    * ``runs.csv``: one row per (sweep point, method, run)
    * ``<method>_<metric>.csv``: one row per sweep point with mean and std
    * ``plot_data.csv``: (x, method, metric, mean, std) tuples
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    methods = sorted({m for per in results.values() for m in per})
    xs = list(results)
    written = []
    cols = ["tp", "tn", "fp", "fn", "accuracy", "fpr", "fnr", "auc"]
    path = out / "runs.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([sweep_name, "method", "run"] + cols)
        for x in xs:
            for m in methods:
                for i, rep in enumerate(results[x].get(m, [])):
                    row = rep.as_row()
                    w.writerow([format_value(x), m, i] + [format_value(row[c]) for c in cols])
    written.append(path)
    plot = []
    for m in methods:
        aggs = {x: aggregate_runs(results[x][m]) for x in xs if m in results[x]}
        for metric in SWEEP_METRICS:
            if all(np.isnan(a.mean[metric]) for a in aggs.values()):
                continue
            path = out / f"{_slug(m)}_{metric}.csv"
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow([sweep_name, "mean", "std", "n_runs"])
                for x, a in aggs.items():
                    w.writerow([format_value(x), format_value(a.mean[metric]), format_value(a.std[metric]), a.n_runs])
                    plot.append((x, m, metric, a.mean[metric], a.std[metric]))
            written.append(path)
    path = out / "plot_data.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "method", "metric", "mean", "std"])
        for x, m, metric, mean, std in plot:
            w.writerow([format_value(x), m, metric, format_value(mean), format_value(std)])
    written.append(path)
    return written
