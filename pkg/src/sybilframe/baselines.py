"""Comparison baselines: degree-normalised trust propagation and uninformed LBP."""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator

from .inference import default_priors, rank
from .priors import PriorAssignment


def trust_propagation(g, benign_seeds, iterations=None):
    """Spread trust from benign seeds by power iteration.

    Total trust ``|V|`` starts split evenly over the seeds; each round every
    node hands its trust out equally to its neighbours. Returns the raw trust
    vector after ``iterations`` rounds (default ``ceil(log2 n)``).
    """
    seeds = np.unique(np.asarray(benign_seeds, dtype=np.int64))
    if len(seeds) == 0:
        raise ValueError("at least one benign seed is required")
    n = g.n_nodes
    if iterations is None:
        iterations = max(1, math.ceil(math.log2(n))) if n > 1 else 1
    trust = np.zeros(n)
    trust[seeds] = n / len(seeds)
    deg = g.degrees.astype(float)
    src = g.csr_sources()
    for _ in range(iterations):
        share = np.divide(trust, deg, out=np.zeros(n), where=deg > 0)
        spread = np.bincount(g.indices, weights=share[src], minlength=n)
        # isolated nodes keep what they have
        trust = np.where(deg > 0, spread, trust)
    return trust


def sybilrank(g, benign_seeds, iterations=None):
    """Degree-normalised trust scores; low scores are suspicious."""
    trust = trust_propagation(g, benign_seeds, iterations)
    deg = g.degrees.astype(float)
    return np.divide(trust, deg, out=np.zeros(g.n_nodes), where=deg > 0)


class SybilRank(BaseEstimator):
    """Trust-propagation ranking baseline with an estimator interface."""

    def __init__(self, iterations=None):
        self.iterations = iterations

    def fit(self, graph, benign_seeds):
        self.trust_ = trust_propagation(graph, benign_seeds, self.iterations)
        deg = graph.degrees.astype(float)
        self.scores_ = np.divide(self.trust_, deg, out=np.zeros(graph.n_nodes), where=deg > 0)
        return self

    def decision_function(self, nodes=None):
        return self.scores_ if nodes is None else self.scores_[np.asarray(nodes)]

    def rank(self):
        return rank(self.scores_)


def sybilbelief_priors(graph, benign_seeds, sybil_seeds):
    """Seeds 0.9 / 0.1, every other node 0.5, every edge 0.9."""
    node, edge = default_priors(graph, benign_seeds, sybil_seeds)
    return PriorAssignment(node, edge)
