"""Acceptance checks with pinned tolerances.

Every test records one ``PASS``/``FAIL`` line; the lines are repeated in the
terminal summary so they survive output capture. Sweeps are cached and shared
with the determinism check, which reruns each one on four threads.
"""

import functools
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from oracles import aligned, auc_oracle, brute_force_marginals, modularity_oracle, random_cycle, random_tree
from sybilframe.experiments import (
    SCENARIO_COMBOS,
    SynthParams,
    facebook_sweep,
    feature_pipeline,
    synthetic_sweep,
    write_sweep,
)
from sybilframe.graph import Label, UndirectedGraph, modularity
from sybilframe.inference import PairwiseMRF, run_lbp
from sybilframe.metrics import auc
from sybilframe.synth import generate_follow_network, generate_pa_region

MASTER_SEED = 2024
RUNS = 20
ATTACK = [200, 400, 600, 800, 1000]


@pytest.fixture
def verdict(record_property):
    def emit(criterion, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
        print(line)
        record_property("acceptance", line)
        assert ok, line

    return emit


def fb_base():
    # stand-in for a ~4k-node social graph at a similar average degree
    return generate_pa_region(4039, 44, np.random.default_rng(MASTER_SEED))


SWEEPS = {
    "node_prior": lambda threads: synthetic_sweep(
        SynthParams(), "fpr_fnr", [0.0, 0.1, 0.2, 0.3, 0.4, 0.5], RUNS, MASTER_SEED, threads
    ),
    "attack_edges": lambda threads: synthetic_sweep(
        SynthParams(fpr=0.3, fnr=0.3), "attack_edges", [0] + ATTACK, RUNS, MASTER_SEED, threads
    ),
    "edge_prior": lambda threads: synthetic_sweep(
        SynthParams(prior="edge", fpr=0.1, fnr=0.5), "attack_edges", ATTACK, RUNS, MASTER_SEED, threads
    ),
    "seed_node": lambda threads: synthetic_sweep(
        SynthParams(scenarios=SCENARIO_COMBOS), "attack_edges", ATTACK, RUNS, MASTER_SEED, threads
    ),
    "seed_edge": lambda threads: synthetic_sweep(
        SynthParams(prior="edge", fpr=0.1, fnr=0.5, scenarios=SCENARIO_COMBOS),
        "attack_edges",
        ATTACK,
        RUNS,
        MASTER_SEED,
        threads,
    ),
    "facebook": lambda threads: facebook_sweep(
        fb_base(), [1000, 5000, 10000, 15000, 20000], RUNS, MASTER_SEED, threads
    ),
}


@functools.lru_cache(maxsize=None)
def sweep(name, threads=1):
    """(results, {csv name: bytes}, seconds) for a named sweep."""
    t0 = time.perf_counter()
    res = SWEEPS[name](threads)
    elapsed = time.perf_counter() - t0
    with tempfile.TemporaryDirectory() as tmp:
        paths = write_sweep(res, Path(tmp), name)
        files = {p.name: p.read_bytes() for p in paths}
    return res, files, elapsed


def mean_of(reports, metric="accuracy"):
    return float(np.mean([getattr(r, metric) for r in reports]))


def test_criterion_01_tree_oracle(verdict):
    rng = np.random.default_rng(MASTER_SEED)
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(200):
        n = int(rng.integers(1, 13))
        edges = random_tree(n, rng)
        node_p = rng.uniform(0.1, 0.9, n)
        edge_p = rng.uniform(0.1, 0.9, len(edges))
        g = UndirectedGraph.from_edges(n, edges)
        bel = run_lbp(PairwiseMRF(g, node_p, aligned(g, edges, edge_p), max_iter=max(n, 1)))
        exact = brute_force_marginals(n, edges, node_p, edge_p)
        worst = max(worst, float(np.max(np.abs(bel - exact))))
    elapsed = time.perf_counter() - t0
    verdict(1, worst <= 1e-9 and elapsed < 10, f"max |err| {worst:.2e} (<= 1e-9), {elapsed:.1f}s (< 10s)")


def test_criterion_02_cycle_proximity(verdict):
    rng = np.random.default_rng(MASTER_SEED)
    maes = []
    for i in range(100):
        n = int(rng.integers(3, 13))
        edges = random_cycle(n, rng)
        node_p = rng.uniform(0.1, 0.9, n)
        edge_p = rng.uniform(0.1, 0.9, n)
        g = UndirectedGraph.from_edges(n, edges)
        bel = run_lbp(PairwiseMRF(g, node_p, aligned(g, edges, edge_p), max_iter=50))
        mae = float(np.mean(np.abs(bel - brute_force_marginals(n, edges, node_p, edge_p))))
        if mae > 1e-3:
            print(f"cycle {i}: n={n} MAE {mae:.2e} exceeds 1e-3")
        maes.append(mae)
    p95 = float(np.percentile(maes, 95))
    over = sum(m > 1e-3 for m in maes)
    verdict(2, p95 < 1e-2, f"{over}/100 cycles above 1e-3 MAE (logged), p95 MAE {p95:.2e} (< 1e-2)")


@pytest.mark.slow
def test_criterion_03_node_prior_sweep(verdict):
    res, _, elapsed = sweep("node_prior")
    low = [x for x in res if x <= 0.3]
    acc = {x: mean_of(res[x]["sybilframe"]) for x in res}
    auc_ = {x: mean_of(res[x]["sybilframe"], "auc") for x in res}
    sb = {x: mean_of(res[x]["sybilbelief"]) for x in res}
    ok = (
        all(acc[x] >= 0.95 and auc_[x] >= 0.97 for x in low)
        and all(acc[x] > sb[x] for x in res if x <= 0.4)
        and elapsed < 300
    )
    detail = " ".join(f"x={x}: acc {acc[x]:.3f}/auc {auc_[x]:.3f}/sb {sb[x]:.3f}" for x in res)
    verdict(3, ok, f"{detail}; {elapsed:.0f}s")


@pytest.mark.slow
def test_criterion_04_attack_edge_sweep(verdict):
    res, _, elapsed = sweep("attack_edges")
    sb200, sb1000 = mean_of(res[200]["sybilbelief"]), mean_of(res[1000]["sybilbelief"])
    sf1000 = mean_of(res[1000]["sybilframe"])
    ok = sb200 - sb1000 >= 0.05 and sf1000 >= 0.93 and elapsed < 300
    verdict(
        4,
        ok,
        f"SybilBelief drop 200->1000 {sb200 - sb1000:.3f} (>= 0.05), SybilFrame@1000 {sf1000:.3f} (>= 0.93); {elapsed:.0f}s",
    )


@pytest.mark.slow
def test_criterion_05_edge_prior_sweep(verdict):
    res, _, elapsed = sweep("edge_prior")
    pairs = {k: (mean_of(res[k]["sybilframe"]), mean_of(res[k]["sybilbelief"])) for k in ATTACK}
    ok = all(sf > sb for sf, sb in pairs.values()) and elapsed < 300
    detail = " ".join(f"k={k}: {sf:.3f} vs {sb:.3f}" for k, (sf, sb) in pairs.items())
    verdict(5, ok, f"SybilFrame vs SybilBelief {detail}; {elapsed:.0f}s")


@pytest.mark.slow
def test_criterion_06_seed_targeting(verdict):
    spreads = {}
    elapsed = 0.0
    for name in ("seed_node", "seed_edge"):
        res, _, secs = sweep(name)
        elapsed += secs
        for k in ATTACK:
            means = [mean_of(res[k][f"{b}/{s}"]) for b, s in SCENARIO_COMBOS]
            spreads[name, k] = max(means) - min(means)
    ok = all(v <= 0.02 for v in spreads.values()) and elapsed < 600
    detail = " ".join(f"{n[5:]}@{k}: {v:.3f}" for (n, k), v in spreads.items())
    verdict(6, ok, f"max scenario spread (<= 0.02) {detail}; {elapsed:.0f}s")


@pytest.mark.slow
def test_criterion_07_facebook_style(verdict):
    res, _, elapsed = sweep("facebook")
    sf, sb = mean_of(res[20000]["sybilframe"]), mean_of(res[20000]["sybilbelief"])
    ok = sf >= 0.9 and sb <= 0.6 and elapsed < 600
    verdict(7, ok, f"k=20000 SybilFrame {sf:.3f} (>= 0.9), SybilBelief {sb:.3f} (<= 0.6); {elapsed:.0f}s")


def test_criterion_08_metric_oracles(verdict):
    rng = np.random.default_rng(MASTER_SEED)
    auc_bad = 0
    for _ in range(1000):
        n = int(rng.integers(2, 80))
        truth = rng.choice([Label.BENIGN, Label.SYBIL], n)
        truth[0], truth[1] = Label.BENIGN, Label.SYBIL
        scores = rng.integers(0, 12, n) / 11.0 if rng.random() < 0.5 else rng.random(n)
        expected = auc_oracle(scores[truth == Label.BENIGN], scores[truth == Label.SYBIL])
        auc_bad += auc(scores, truth) != expected
    mod_err = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 25))
        pairs = rng.integers(0, n, (int(rng.integers(1, 3 * n)), 2))
        g = UndirectedGraph.from_edges(n, pairs)
        if g.n_edges == 0:
            g = UndirectedGraph.from_edges(n, [(0, 1)])
        part = rng.integers(0, 4, n)
        mod_err = max(mod_err, abs(modularity(g, part) - modularity_oracle(n, g.edges.tolist(), part)))
    verdict(8, auc_bad == 0 and mod_err <= 1e-12, f"AUC mismatches {auc_bad}/1000, modularity max err {mod_err:.1e}")


@pytest.mark.slow
def test_criterion_09_determinism(verdict):
    differing = [name for name in SWEEPS if sweep(name, 1)[1] != sweep(name, 4)[1]]
    verdict(9, not differing, f"{len(SWEEPS) - len(differing)}/{len(SWEEPS)} sweeps byte-identical on 1 vs 4 threads")


def test_criterion_10_feature_pipeline(verdict):
    diffs = []
    for s in range(20):
        g, truth = generate_follow_network(rng=s)
        rep = feature_pipeline(g, truth, rng=100 + s).reports
        diffs.append(rep["sybilframe"].accuracy - rep["classifier"].accuracy)
    g, truth = generate_follow_network(rng=MASTER_SEED)
    rates = []
    for w in (1.0, 2.0, 4.0, 8.0):
        clf = feature_pipeline(g, truth, rng=MASTER_SEED, class_weights=(w, 1.0)).reports["classifier"]
        rates.append((clf.fpr, clf.fnr))
    fpr, fnr = zip(*rates)
    monotone = (
        all(a >= b for a, b in zip(fpr, fpr[1:]))
        and all(a <= b for a, b in zip(fnr, fnr[1:]))
        and fpr[-1] < fpr[0]
        and fnr[-1] > fnr[0]
    )
    ok = min(diffs) >= 0 and monotone
    verdict(
        10,
        ok,
        f"min paired accuracy gain {min(diffs):+.4f} (>= 0); weights 1,2,4,8 FPR "
        + ",".join(f"{v:.3f}" for v in fpr)
        + " FNR "
        + ",".join(f"{v:.3f}" for v in fnr),
    )


def _random_graph(n_edges, rng):
    n = n_edges // 5
    return UndirectedGraph.from_edges(n, rng.integers(0, n, (n_edges, 2)))


def _lbp_seconds(g, rng, repeats=3):
    mrf = PairwiseMRF(g, rng.uniform(0.1, 0.9, g.n_nodes), rng.uniform(0.1, 0.9, g.n_edges), max_iter=6)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        run_lbp(mrf, n_jobs=4)
        best = min(best, time.perf_counter() - t0)
    return best


@pytest.mark.slow
def test_criterion_11_scalability(verdict):
    rng = np.random.default_rng(MASTER_SEED)
    small, big = _random_graph(100_000, rng), _random_graph(1_000_000, rng)
    t_small, t_big = _lbp_seconds(small, rng), _lbp_seconds(big, rng)
    ratio = t_big / t_small
    ok = t_big < 60 and 8 <= ratio <= 12
    verdict(
        11,
        ok,
        f"{big.n_edges} edges {t_big:.2f}s (< 60s), {small.n_edges}->{big.n_edges} ratio {ratio:.1f} (8-12)",
    )
