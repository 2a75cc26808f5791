"""Node and edge priors: synthetic noise generators, structural features,
similarity-based edge scores and classifier-derived priors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Label, clustering_coefficient, clustering_coefficients

EPS = 1e-3
SEED_BENIGN = 0.9
SEED_SYBIL = 0.1
HOMOPHILY = 0.9
UNINFORMATIVE = 0.5


@dataclass
class NoiseModel:
    """Error rates of a simulated external classifier."""

    fpr: float = 0.0
    fnr: float = 0.0

    def __post_init__(self):
        for name in ("fpr", "fnr"):
            val = getattr(self, name)
            if not 0.0 <= val <= 0.5:
                raise ValueError(f"{name} must be in [0, 0.5], got {val}")


@dataclass
class PriorAssignment:
    node_prior: np.ndarray
    edge_prior: np.ndarray

    def clamped(self, eps=EPS):
        return PriorAssignment(clamp(self.node_prior, eps), clamp(self.edge_prior, eps))


def clamp(p, eps=EPS):
    return np.clip(np.asarray(p, dtype=float), eps, 1.0 - eps)


def _rng(rng):
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def synth_node_priors(truth, benign_seeds, sybil_seeds, noise, rng=None):
    """Node priors that mimic a classifier with the given FPR/FNR.

    Seeds get 0.9 / 0.1. Other benign nodes land in [0.1, 0.5) with
    probability FPR, else [0.5, 0.9); Sybils land in [0.5, 0.9) with
    probability FNR, else [0.1, 0.5).
    """
    rng = _rng(rng)
    truth = np.asarray(truth)
    n = len(truth)
    benign = truth == Label.BENIGN
    # one draw pair per node in node order keeps runs reproducible
    i = rng.random(n)
    u = rng.random(n)
    err = np.where(benign, noise.fpr, noise.fnr)
    wrong = i < err
    says_benign = benign != wrong
    prior = np.where(says_benign, 0.5 + 0.4 * u, 0.1 + 0.4 * u)
    prior[np.asarray(benign_seeds, dtype=np.int64)] = SEED_BENIGN
    prior[np.asarray(sybil_seeds, dtype=np.int64)] = SEED_SYBIL
    return prior


def _seed_labels(n, benign_seeds, sybil_seeds):
    lab = np.zeros(n, dtype=np.int8)
    lab[np.asarray(benign_seeds, dtype=np.int64)] = Label.BENIGN
    lab[np.asarray(sybil_seeds, dtype=np.int64)] = Label.SYBIL
    return lab


def synth_edge_priors(graph, truth, benign_seeds, sybil_seeds, noise, rng=None):
    """Edge priors that mimic an attack-edge classifier with the given FPR/FNR.

    Seed-seed edges get 0.1 across labels and 0.9 within. Other attack edges
    land in [0.5, 0.9) with probability FNR, else [0.1, 0.5); other same-label
    edges land in [0.1, 0.5) with probability FPR, else [0.5, 0.9).
    """
    rng = _rng(rng)
    truth = np.asarray(truth)
    u, v = graph.edges[:, 0], graph.edges[:, 1]
    cross = truth[u] != truth[v]
    m = graph.n_edges
    i = rng.random(m)
    r = rng.random(m)
    err = np.where(cross, noise.fnr, noise.fpr)
    wrong = i < err
    says_same = cross == wrong
    prior = np.where(says_same, 0.5 + 0.4 * r, 0.1 + 0.4 * r)
    seeds = _seed_labels(graph.n_nodes, benign_seeds, sybil_seeds)
    both = (seeds[u] != 0) & (seeds[v] != 0)
    prior[both] = np.where(seeds[u[both]] != seeds[v[both]], SEED_SYBIL, SEED_BENIGN)
    return prior


# ---------------------------------------------------------------------------
# Structural features


@dataclass
class NodeFeatureVector:
    req_in: float
    req_out: float
    clustering: float


@dataclass
class EdgeFeatureVector:
    common_neighbors: int
    cosine: float
    jaccard: float
    adamic_adar: float


def _ratios(directed):
    """(Req_in, Req_out) for every node of a directed graph."""
    n = directed.n_nodes
    arcs = directed.arcs
    key = arcs[:, 0] * n + arcs[:, 1]
    rkey = arcs[:, 1] * n + arcs[:, 0]
    mutual = np.isin(key, rkey, assume_unique=True)
    both = np.bincount(arcs[mutual, 0], minlength=n).astype(float)
    out_deg = np.diff(directed.out_indptr).astype(float)
    in_deg = np.diff(directed.in_indptr).astype(float)
    req_in = np.divide(both, in_deg, out=np.zeros(n), where=in_deg > 0)
    req_out = np.divide(both, out_deg, out=np.zeros(n), where=out_deg > 0)
    return req_in, req_out


def node_feature_matrix(directed, undirected, mapping=None):
    """``(n_undirected, 3)`` matrix of ``[req_in, req_out, clustering]``.

    ``mapping[i]`` is the directed-graph node behind undirected node ``i``
    (e.g. the index array returned by ``largest_connected_component``).
    """
    req_in, req_out = _ratios(directed)
    if mapping is None:
        mapping = np.arange(undirected.n_nodes)
    mapping = np.asarray(mapping, dtype=np.int64)
    return np.column_stack([req_in[mapping], req_out[mapping], clustering_coefficients(undirected)])


def node_features(directed, undirected, v, directed_v=None):
    """Feature vector of one node; ``directed_v`` defaults to ``v``."""
    dv = v if directed_v is None else directed_v
    inn = set(directed.predecessors(dv).tolist())
    out = set(directed.successors(dv).tolist())
    both = len(inn & out)
    return NodeFeatureVector(
        req_in=both / len(inn) if inn else 0.0,
        req_out=both / len(out) if out else 0.0,
        clustering=clustering_coefficient(undirected, v),
    )


def edge_features(g, u, v, log_adamic_adar=False):
    """Similarity indices of edge ``(u, v)`` over the plain neighbour sets."""
    nu, nv = g.neighbors(u), g.neighbors(v)
    common = np.intersect1d(nu, nv, assume_unique=True)
    union = len(nu) + len(nv) - len(common)
    ku, kv = g.degree(u), g.degree(v)
    ks = g.degrees[common].astype(float)
    if log_adamic_adar:
        aa = float(np.sum(1.0 / np.log(ks))) if len(common) else 0.0
    else:
        aa = float(np.sum(1.0 / ks)) if len(common) else 0.0
    return EdgeFeatureVector(
        common_neighbors=len(common),
        cosine=len(common) / np.sqrt(ku * kv) if ku and kv else 0.0,
        jaccard=len(common) / union if union else 0.0,
        adamic_adar=aa,
    )


def edge_feature_matrix(g, log_adamic_adar=False):
    """``(m, 4)`` matrix ``[common, cosine, jaccard, adamic_adar]`` for every edge."""
    from scipy.sparse import csr_matrix, diags

    n = g.n_nodes
    adj = csr_matrix((np.ones(len(g.indices)), g.indices, g.indptr), shape=(n, n))
    u, v = g.edges[:, 0], g.edges[:, 1]
    deg = g.degrees.astype(float)
    common = np.asarray((adj[u].multiply(adj[v])).sum(axis=1)).ravel()
    if log_adamic_adar:
        with np.errstate(divide="ignore"):
            w = np.where(deg > 1, 1.0 / np.log(np.maximum(deg, 2.0)), 0.0)
    else:
        w = np.divide(1.0, deg, out=np.zeros(n), where=deg > 0)
    aa = np.asarray((adj[u] @ diags(w)).multiply(adj[v]).sum(axis=1)).ravel()
    union = deg[u] + deg[v] - common
    jac = np.divide(common, union, out=np.zeros(len(u)), where=union > 0)
    cos = common / np.sqrt(deg[u] * deg[v]) if len(u) else np.zeros(0)
    return np.column_stack([common, cos, jac, aa])


def jaccard_edge_priors(g, benign_seeds, sybil_seeds, low=0.1, high=0.9):
    """Jaccard similarity of every edge min-max scaled into ``[low, high]``.

    Edges joining two seeds get ``low`` across labels and ``high`` within.
    The scaling range is taken over the remaining edges; a constant index
    maps to the midpoint.
    """
    jac = edge_feature_matrix(g)[:, 2]
    seeds = _seed_labels(g.n_nodes, benign_seeds, sybil_seeds)
    u, v = g.edges[:, 0], g.edges[:, 1]
    both = (seeds[u] != 0) & (seeds[v] != 0)
    prior = scale_scores(jac, ~both, low, high)
    prior[both] = np.where(seeds[u[both]] != seeds[v[both]], low, high)
    return prior


def scale_scores(scores, mask=None, low=0.1, high=0.9):
    """Linear min-max map of ``scores`` into ``[low, high]`` using the range over ``mask``."""
    scores = np.asarray(scores, dtype=float)
    mask = np.ones(len(scores), dtype=bool) if mask is None else mask
    out = np.full(len(scores), (low + high) / 2.0)
    if not mask.any():
        return out
    lo, hi = scores[mask].min(), scores[mask].max()
    if hi > lo:
        out = low + (high - low) * (scores - lo) / (hi - lo)
    return np.clip(out, low, high)


# ---------------------------------------------------------------------------
# Classifier-derived priors


def classify_to_node_priors(clf, features, unknown=None, eps=EPS):
    """P(benign) from a fitted classifier, clamped; ``unknown`` nodes get 0.5."""
    features = np.asarray(features, dtype=float)
    benign_col = list(clf.classes_).index(Label.BENIGN)
    prior = clamp(clf.predict_proba(features)[:, benign_col], eps)
    if unknown is not None:
        prior[np.asarray(unknown, dtype=np.int64)] = UNINFORMATIVE
    return prior


def node_priors_to_edge_priors(node_prior, graph, low=0.1, high=HOMOPHILY):
    """``low`` when endpoint priors sit on opposite sides of 0.5, else ``high``.

    A prior of exactly 0.5 counts as the benign side.
    """
    side = np.asarray(node_prior) >= 0.5
    u, v = graph.edges[:, 0], graph.edges[:, 1]
    return np.where(side[u] != side[v], low, high)


# ---------------------------------------------------------------------------
# Serialisation


def save_node_priors(prior, path, node_ids=None):
    ids = np.arange(len(prior)) if node_ids is None else node_ids
    with open(path, "w") as fh:
        for i, p in enumerate(prior):
            fh.write(f"{ids[i]} {p:.10g}\n")


def save_edge_priors(graph, prior, path, original_ids=True):
    ids = graph.node_ids if original_ids else np.arange(graph.n_nodes)
    with open(path, "w") as fh:
        for (u, v), p in zip(graph.edges, prior):
            fh.write(f"{ids[u]} {ids[v]} {p:.10g}\n")


def load_node_priors(path, graph):
    """Read ``node_id prior`` lines keyed by original id; missing nodes get 0.5."""
    pos = {int(o): i for i, o in enumerate(graph.node_ids)}
    prior = np.full(graph.n_nodes, UNINFORMATIVE)
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            node = int(parts[0])
            if node in pos:
                prior[pos[node]] = float(parts[1])
    return prior


def load_edge_priors(path, graph, default=HOMOPHILY):
    """Read ``u v prior`` lines keyed by original ids; missing edges get ``default``."""
    pos = {int(o): i for i, o in enumerate(graph.node_ids)}
    prior = np.full(graph.n_edges, default)
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            u, v = pos.get(int(parts[0])), pos.get(int(parts[1]))
            if u is None or v is None:
                continue
            try:
                prior[graph.edge_id(u, v)] = float(parts[2])
            except KeyError:
                continue
    return prior


def save_feature_csv(matrix, path, header, node_ids=None):
    ids = np.arange(len(matrix)) if node_ids is None else node_ids
    with open(path, "w") as fh:
        fh.write("node_id," + ",".join(header) + "\n")
        for i, row in enumerate(matrix):
            fh.write(f"{ids[i]}," + ",".join(f"{x:.10g}" for x in row) + "\n")
