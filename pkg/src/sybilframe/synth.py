"""Synthetic benign/Sybil topologies with random attack edges."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import DirectedGraph, Label, UndirectedGraph

SCENARIOS = ("SI", "SII")


class ConfigError(ValueError):
    """Invalid generator or experiment configuration."""


@dataclass
class SyntheticConfig:
    benign_size: int = 1000
    sybil_size: int = 400
    avg_degree: int = 10
    attack_edges: int = 1000
    rng_seed: int = 0
    benign_scenario: str = "SI"
    sybil_scenario: str = "SI"
    benign_seeds: int = 1
    sybil_seeds: int = 1

    def validate(self):
        if self.avg_degree < 2 or self.avg_degree % 2:
            raise ConfigError(f"avg_degree must be even and >= 2, got {self.avg_degree}")
        for name in ("benign_size", "sybil_size"):
            if getattr(self, name) <= self.avg_degree:
                raise ConfigError(f"{name} must exceed avg_degree")
        if not 0 <= self.attack_edges <= self.benign_size * self.sybil_size:
            raise ConfigError("attack_edges must lie in [0, benign_size * sybil_size]")
        for name in ("benign_scenario", "sybil_scenario"):
            if getattr(self, name) not in SCENARIOS:
                raise ConfigError(f"{name} must be one of {SCENARIOS}")
        if self.benign_seeds < 1 or self.sybil_seeds < 1:
            raise ConfigError("at least one trust seed per class is required")
        return self


@dataclass
class SyntheticInstance:
    graph: UndirectedGraph
    truth: np.ndarray
    attack_edge_set: np.ndarray
    benign_seeds: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    sybil_seeds: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def n_benign(self):
        return int(np.sum(self.truth == Label.BENIGN))

    @property
    def n_sybil(self):
        return int(np.sum(self.truth == Label.SYBIL))


def _rng(rng):
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def generate_pa_region(n, avg_degree, rng=None):
    """Barabási–Albert graph seeded with an ``(m+1)``-clique, ``m = avg_degree / 2``.

    Every arriving node links to ``m`` distinct existing nodes drawn with
    probability proportional to their current degree.
    """
    if avg_degree < 2 or avg_degree % 2:
        raise ConfigError(f"avg_degree must be even and >= 2, got {avg_degree}")
    m = avg_degree // 2
    if n <= avg_degree:
        raise ConfigError(f"region size {n} must exceed avg_degree {avg_degree}")
    rng = _rng(rng)
    n_edges = m * (m + 1) // 2 + m * (n - m - 1)
    edges = np.empty((n_edges, 2), dtype=np.int64)
    # every edge endpoint appears once per incident edge: sampling a slot
    # uniformly is sampling a node proportionally to its degree
    ends = np.empty(2 * n_edges, dtype=np.int64)
    k = 0
    for u in range(m + 1):
        for v in range(u + 1, m + 1):
            edges[k] = (u, v)
            ends[2 * k] = u
            ends[2 * k + 1] = v
            k += 1
    for new in range(m + 1, n):
        targets = set()
        filled = 2 * k
        while len(targets) < m:
            targets.add(int(ends[rng.integers(filled)]))
        for t in sorted(targets):
            edges[k] = (t, new)
            ends[2 * k] = t
            ends[2 * k + 1] = new
            k += 1
    return UndirectedGraph.from_edges(n, edges)


def wire_attack_edges(benign, sybil, k, rng=None):
    """Disjoint union of two regions plus ``k`` distinct random cross edges.

    Benign nodes keep ids ``0..nb-1``; Sybil nodes follow.
    """
    nb, ns = benign.n_nodes, sybil.n_nodes
    if not 0 <= k <= nb * ns:
        raise ConfigError(f"cannot place {k} attack edges between {nb} and {ns} nodes")
    rng = _rng(rng)
    if k > nb * ns // 2:
        # dense case: sample the pair index set directly
        picked = np.sort(rng.choice(nb * ns, size=k, replace=False))
    else:
        chosen = np.zeros(0, dtype=np.int64)
        while len(chosen) < k:
            draw = rng.integers(0, nb * ns, size=k - len(chosen))
            # keep first occurrence order so the sample is reproducible
            chosen = np.concatenate([chosen, draw])
            _, first = np.unique(chosen, return_index=True)
            chosen = chosen[np.sort(first)]
        picked = chosen
    attack = np.column_stack([picked // ns, nb + picked % ns]).astype(np.int64)
    edges = np.concatenate([benign.edges, sybil.edges + nb, attack])
    graph = UndirectedGraph.from_edges(nb + ns, edges)
    truth = np.concatenate(
        [np.full(nb, Label.BENIGN, dtype=np.int8), np.full(ns, Label.SYBIL, dtype=np.int8)]
    )
    order = np.lexsort((attack[:, 1], attack[:, 0]))
    return SyntheticInstance(graph=graph, truth=truth, attack_edge_set=attack[order])


def cross_label_edges(graph, truth):
    """Edges whose endpoints carry different truth labels."""
    e = graph.edges
    return e[truth[e[:, 0]] != truth[e[:, 1]]]


def select_trust_seeds(inst, scenario="SI", rng=None, n_benign=1, n_sybil=1, sybil_scenario=None):
    """Draw trust seeds without replacement.

    ``SI`` draws from nodes that are not attack-edge endpoints, ``SII`` from
    those that are. ``sybil_scenario`` defaults to ``scenario``; passing a
    different value gives the mixed combinations.
    """
    sybil_scenario = scenario if sybil_scenario is None else sybil_scenario
    for s in (scenario, sybil_scenario):
        if s not in SCENARIOS:
            raise ConfigError(f"unknown seed scenario {s!r}")
    rng = _rng(rng)
    endpoint = np.zeros(inst.graph.n_nodes, dtype=bool)
    endpoint[inst.attack_edge_set.ravel()] = True
    seeds = []
    for label, scen, count in (
        (Label.BENIGN, scenario, n_benign),
        (Label.SYBIL, sybil_scenario, n_sybil),
    ):
        region = inst.truth == label
        pool = np.flatnonzero(region & (endpoint if scen == "SII" else ~endpoint))
        if len(pool) < count:
            raise ConfigError(
                f"{scen}: only {len(pool)} candidate {label.name.lower()} seeds for {count} requested"
            )
        seeds.append(np.sort(rng.choice(pool, size=count, replace=False)))
    inst.benign_seeds, inst.sybil_seeds = seeds
    return seeds[0], seeds[1]


def make_instance(config, rng=None):
    """Generate a full instance (regions, attack edges, seeds) from ``config``."""
    config.validate()
    rng = _rng(config.rng_seed if rng is None else rng)
    benign = generate_pa_region(config.benign_size, config.avg_degree, rng)
    sybil = generate_pa_region(config.sybil_size, config.avg_degree, rng)
    inst = wire_attack_edges(benign, sybil, config.attack_edges, rng)
    select_trust_seeds(
        inst,
        config.benign_scenario,
        rng,
        n_benign=config.benign_seeds,
        n_sybil=config.sybil_seeds,
        sybil_scenario=config.sybil_scenario,
    )
    return inst


def generate_follow_network(
    n_benign=600,
    n_sybil=300,
    avg_degree=10,
    attack_edges=600,
    benign_followback=0.6,
    sybil_followback=0.5,
    sybil_spam_follows=2,
    rng=None,
):
    """Directed follower network with planted reciprocity differences.

    Benign-benign friendships are PA edges followed back with probability
    ``benign_followback``; Sybils send extra unreciprocated follows to random
    benign users and mostly fail to get them back, while accepting whatever
    follows them. Returns ``(DirectedGraph, truth)``.
    """
    rng = _rng(rng)
    benign = generate_pa_region(n_benign, avg_degree, rng)
    sybil = generate_pa_region(n_sybil, avg_degree, rng)
    arcs = []

    def _add(edges, p_back):
        flip = rng.random(len(edges)) < 0.5
        a = np.where(flip, edges[:, 1], edges[:, 0])
        b = np.where(flip, edges[:, 0], edges[:, 1])
        back = rng.random(len(edges)) < p_back
        arcs.append(np.column_stack([a, b]))
        arcs.append(np.column_stack([b[back], a[back]]))

    _add(benign.edges, benign_followback)
    _add(sybil.edges + n_benign, sybil_followback)
    # attack edges: Sybil follows benign; benign follows back sometimes,
    # and a benign-initiated follow to a Sybil is always accepted
    s = rng.integers(n_benign, n_benign + n_sybil, size=attack_edges)
    t = rng.integers(0, n_benign, size=attack_edges)
    arcs.append(np.column_stack([s, t]))
    back = rng.random(attack_edges) < 0.5
    arcs.append(np.column_stack([t[back], s[back]]))
    spam_s = np.repeat(np.arange(n_benign, n_benign + n_sybil), sybil_spam_follows)
    spam_t = rng.integers(0, n_benign, size=len(spam_s))
    arcs.append(np.column_stack([spam_s, spam_t]))
    g = DirectedGraph.from_arcs(n_benign + n_sybil, np.concatenate(arcs))
    truth = np.concatenate(
        [np.full(n_benign, Label.BENIGN, dtype=np.int8), np.full(n_sybil, Label.SYBIL, dtype=np.int8)]
    )
    return g, truth
