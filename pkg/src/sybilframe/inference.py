"""Pairwise MRF over the social graph and synchronous loopy belief propagation.

Labels are binary: ``+1`` benign, ``-1`` Sybil. A node prior ``p`` gives the
node potential ``(p, 1 - p)``; an edge prior ``q`` gives the edge potential
``q`` when the endpoints agree and ``1 - q`` otherwise.

Messages live on directed edges, i.e. the CSR slots of the graph: slot ``p``
carries ``m_{u -> v}`` with ``u = csr_sources()[p]`` and ``v = indices[p]``.
Column 0 of a message is the ``+1`` state, column 1 the ``-1`` state.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .graph import Label
from .priors import EPS, HOMOPHILY, SEED_BENIGN, SEED_SYBIL, UNINFORMATIVE, clamp

logger = logging.getLogger(__name__)

DEFAULT_ITERATIONS = 6


def node_potential(prior, x):
    """``prior`` for a benign state, ``1 - prior`` for a Sybil state."""
    return prior if x == 1 else 1.0 - prior


def edge_potential(prior, xu, xv):
    """``prior`` when the two labels agree, ``1 - prior`` otherwise."""
    return prior if xu * xv == 1 else 1.0 - prior


@dataclass
class PairwiseMRF:
    graph: object
    node_prior: np.ndarray
    edge_prior: np.ndarray
    max_iter: int = DEFAULT_ITERATIONS

    def __post_init__(self):
        self.node_prior = np.asarray(self.node_prior, dtype=float)
        self.edge_prior = np.asarray(self.edge_prior, dtype=float)
        if self.node_prior.shape != (self.graph.n_nodes,):
            raise ValueError("node_prior must have one entry per node")
        if self.edge_prior.shape != (self.graph.n_edges,):
            raise ValueError("edge_prior must have one entry per edge")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        for name, arr in (("node_prior", self.node_prior), ("edge_prior", self.edge_prior)):
            if arr.size and (not np.all(np.isfinite(arr)) or arr.min() < 0 or arr.max() > 1):
                raise ValueError(f"{name} values must lie in [0, 1]")


class MessageState:
    """Double-buffered messages; ``current`` is read while ``next`` is written.

    Each buffer has shape ``(2, n_slots)``: row 0 holds ``m(+1)``, row 1 ``m(-1)``.
    """

    def __init__(self, n_slots, log_domain=False):
        self.log_domain = log_domain
        init = np.log(0.5) if log_domain else 0.5
        self.buffers = np.full((2, 2, n_slots), init)
        self.active = 0

    @property
    def current(self):
        return self.buffers[self.active]

    @property
    def next(self):
        return self.buffers[1 - self.active]

    def swap(self):
        self.active = 1 - self.active

    def log_messages(self):
        cur = self.current
        return cur if self.log_domain else np.log(cur)


class _Plan:
    """Index arrays shared by every round, split into node-aligned chunks."""

    def __init__(self, graph, n_chunks, log_node, log_edge):
        self.indptr = graph.indptr
        self.rev = graph.reverse_slots()
        self.degrees = graph.degrees
        self.log_node = log_node
        # per-slot edge potentials, gathered once
        self.log_edge = log_edge[:, graph.edge_index]
        n = graph.n_nodes
        n_slots = len(graph.indices)
        # chunk boundaries are node boundaries so each node's incoming sum
        # is computed in one piece no matter how many chunks there are
        bounds = np.searchsorted(graph.indptr, np.linspace(0, n_slots, n_chunks + 1), side="left")
        bounds[0], bounds[-1] = 0, n
        self.chunks = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _incoming(log_msgs, plan, total, back, lo, hi):
    """``total[:, v] = log psi_v + sum of log m_{s -> v}`` for nodes ``lo..hi-1``.

    Also stores, for every slot ``u -> v`` of these nodes, the log message
    travelling the opposite way (``back``); the update step needs it.
    """
    a, b = plan.indptr[lo], plan.indptr[hi]
    total[:, lo:hi] = plan.log_node[:, lo:hi]
    if b == a:
        return
    rev = plan.rev[a:b]
    starts = plan.indptr[lo:hi] - a
    nonempty = plan.indptr[lo + 1 : hi + 1] > plan.indptr[lo:hi]
    for x in (0, 1):
        seg = log_msgs[x].take(rev)
        back[x, a:b] = seg
        total[x, lo:hi][nonempty] += np.add.reduceat(seg, starts[nonempty])


def _update_chunk(state, plan, total, back, lo, hi):
    a, b = plan.indptr[lo], plan.indptr[hi]
    if b == a:
        return
    deg = plan.degrees[lo:hi]
    # cavity: everything node u knows except what v told it
    c_plus = np.repeat(total[0, lo:hi], deg) - back[0, a:b]
    c_minus = np.repeat(total[1, lo:hi], deg) - back[1, a:b]
    top = np.maximum(c_plus, c_minus)
    c_plus -= top
    c_minus -= top
    same, diff = plan.log_edge[0, a:b], plan.log_edge[1, a:b]
    nxt = state.next
    if state.log_domain:
        plus = np.logaddexp(c_plus + same, c_minus + diff)
        minus = np.logaddexp(c_plus + diff, c_minus + same)
        norm = np.logaddexp(plus, minus)
        nxt[0, a:b] = plus - norm
        nxt[1, a:b] = minus - norm
    else:
        ep, em = np.exp(c_plus), np.exp(c_minus)
        q, r = np.exp(same), np.exp(diff)
        plus = ep * q + em * r
        minus = ep * r + em * q
        norm = plus + minus
        nxt[0, a:b] = plus / norm
        nxt[1, a:b] = minus / norm


def run_lbp(mrf, n_jobs=1, log_domain=False, tol=None, eps=EPS, return_state=False):
    """Synchronous loopy belief propagation; returns ``bel_v(+1)`` per node.

    Runs ``mrf.max_iter`` flooding rounds, each recomputing every message from
    the previous round's buffer. Priors are clamped to ``[eps, 1 - eps]``.
    Results do not depend on ``n_jobs``. ``tol`` enables an early stop when the
    largest message change falls below it (diagnostics only).
    """
    g = mrf.graph
    node_p = clamp(mrf.node_prior, eps)
    edge_p = clamp(mrf.edge_prior, eps)
    log_node = np.vstack([np.log(node_p), np.log1p(-node_p)])
    log_edge = np.vstack([np.log(edge_p), np.log1p(-edge_p)])
    n_jobs = max(1, int(n_jobs or 1))
    plan = _Plan(g, n_jobs, log_node, log_edge)
    state = MessageState(len(g.indices), log_domain=log_domain)
    total = np.zeros((2, g.n_nodes))
    back = np.empty((2, len(g.indices)))
    n_iter = 0
    pool = ThreadPoolExecutor(n_jobs) if n_jobs > 1 and len(plan.chunks) > 1 else None

    def _each(fn, *args):
        if pool is None:
            for lo, hi in plan.chunks:
                fn(*args, lo, hi)
        else:
            list(pool.map(lambda ch: fn(*args, *ch), plan.chunks))

    try:
        for _ in range(mrf.max_iter):
            log_msgs = state.log_messages()
            _each(_incoming, log_msgs, plan, total, back)
            _each(_update_chunk, state, plan, total, back)
            n_iter += 1
            if tol is not None:
                delta = np.max(np.abs(state.next - state.current)) if len(g.indices) else 0.0
                state.swap()
                if delta < tol:
                    break
            else:
                state.swap()
        _each(_incoming, state.log_messages(), plan, total, back)
    finally:
        if pool is not None:
            pool.shutdown()
    logit = total[0] - total[1]
    bel = expit(logit)
    if return_state:
        return bel, state, n_iter
    return bel


def classify(bel):
    """Benign when ``bel >= 0.5``, Sybil otherwise."""
    return np.where(np.asarray(bel) >= 0.5, Label.BENIGN, Label.SYBIL).astype(np.int8)


def rank(bel):
    """Node ids in ascending belief, ties by ascending id."""
    bel = np.asarray(bel)
    return np.lexsort((np.arange(len(bel)), bel))


def default_priors(graph, benign_seeds=(), sybil_seeds=(), node_prior=None, edge_prior=None):
    """Fill in the uninformed defaults: 0.5 per node, 0.9 per edge, 0.9/0.1 on seeds."""
    if node_prior is None:
        node_prior = np.full(graph.n_nodes, UNINFORMATIVE)
    else:
        node_prior = np.array(node_prior, dtype=float)
    node_prior[np.asarray(benign_seeds, dtype=np.int64)] = SEED_BENIGN
    node_prior[np.asarray(sybil_seeds, dtype=np.int64)] = SEED_SYBIL
    if edge_prior is None:
        edge_prior = np.full(graph.n_edges, HOMOPHILY)
    return node_prior, np.asarray(edge_prior, dtype=float)


class SybilFrame(BaseEstimator):
    """Sybil detector: prior-augmented pairwise MRF solved by loopy BP.

    ``fit`` runs inference on one graph (transductive); afterwards
    ``beliefs_`` holds the posterior probability of being benign.

    Parameters
    ----------
    max_iter : int
        Number of synchronous message-passing rounds.
    eps : float
        Priors are clamped to ``[eps, 1 - eps]``.
    n_jobs : int
        Worker threads per round; results are identical for any value.
    log_domain : bool
        Keep messages as log-probabilities (very high degree graphs).
    tol : float or None
        Optional early stop on the largest message change.

    Examples
    --------
    >>> from sybilframe.graph import UndirectedGraph
    >>> g = UndirectedGraph.from_edges(2, [(0, 1)])
    >>> SybilFrame().fit(g, node_prior=[0.9, 0.5], edge_prior=[0.9]).beliefs_.round(2)
    array([0.9 , 0.82])
    """

    def __init__(self, max_iter=DEFAULT_ITERATIONS, eps=EPS, n_jobs=1, log_domain=False, tol=None):
        self.max_iter = max_iter
        self.eps = eps
        self.n_jobs = n_jobs
        self.log_domain = log_domain
        self.tol = tol

    def fit(self, graph, node_prior=None, edge_prior=None, benign_seeds=(), sybil_seeds=()):
        """Run inference. Seeds override ``node_prior`` with 0.9 / 0.1."""
        node_prior, edge_prior = default_priors(
            graph, benign_seeds, sybil_seeds, node_prior, edge_prior
        )
        mrf = PairwiseMRF(graph, node_prior, edge_prior, max_iter=self.max_iter)
        bel, _, n_iter = run_lbp(
            mrf,
            n_jobs=self.n_jobs,
            log_domain=self.log_domain,
            tol=self.tol,
            eps=self.eps,
            return_state=True,
        )
        self.beliefs_ = bel
        self.n_iter_ = n_iter
        self.n_nodes_ = graph.n_nodes
        return self

    def decision_function(self, nodes=None):
        """Posterior benign probability, for all nodes or the given ones."""
        self._check_fitted()
        return self.beliefs_ if nodes is None else self.beliefs_[np.asarray(nodes)]

    def predict(self, nodes=None):
        return classify(self.decision_function(nodes))

    def fit_predict(self, graph, **fit_params):
        return self.fit(graph, **fit_params).predict()

    def rank(self):
        """Nodes ordered most-suspicious first."""
        self._check_fitted()
        return rank(self.beliefs_)

    def _check_fitted(self):
        if not hasattr(self, "beliefs_"):
            raise NotFittedError("call fit() before using the detector")


def save_beliefs(bel, path, node_ids=None):
    ids = np.arange(len(bel)) if node_ids is None else node_ids
    with open(path, "w") as fh:
        for i, b in enumerate(bel):
            fh.write(f"{ids[i]} {b:.12g}\n")


def save_ranking(scores, path, node_ids=None, order=None):
    """``rank,node_id,score`` CSV, rank 1 = most suspicious."""
    scores = np.asarray(scores)
    ids = np.arange(len(scores)) if node_ids is None else node_ids
    order = rank(scores) if order is None else order
    with open(path, "w") as fh:
        fh.write("rank,node_id,score\n")
        for r, v in enumerate(order, start=1):
            fh.write(f"{r},{ids[v]},{scores[v]:.12g}\n")
