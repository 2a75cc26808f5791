"""Graph storage, edge-list I/O and structural statistics.

Graphs are immutable, array-backed (CSR) and indexed by dense ids ``0..n-1``.
Original ids from input files are kept in ``node_ids`` for reporting.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

logger = logging.getLogger(__name__)


class GraphFormatError(ValueError):
    """Raised for malformed edge-list or label files."""


class Label(IntEnum):
    SYBIL = -1
    UNKNOWN = 0
    BENIGN = 1


_LABEL_NAMES = {"benign": Label.BENIGN, "sybil": Label.SYBIL, "unknown": Label.UNKNOWN}


def _csr(n, src, dst):
    """Sorted CSR arrays (indptr, indices) for arcs ``src -> dst``."""
    order = np.lexsort((dst, src))
    indices = dst[order].astype(np.int64)
    counts = np.bincount(src, minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, indices


def _unique_pairs(n, a, b):
    """Drop duplicate pairs; returns sorted unique (a, b)."""
    if len(a) == 0:
        return a.astype(np.int64), b.astype(np.int64)
    key = np.unique(a.astype(np.int64) * n + b.astype(np.int64))
    return key // n, key % n


@dataclass(frozen=True, eq=False)
class UndirectedGraph:
    """Simple undirected graph.

    ``edges`` is an ``(m, 2)`` array with ``u < v`` sorted lexicographically;
    edge ``i`` is the row ``edges[i]``. Adjacency is CSR with ascending
    neighbour lists, and ``edge_index[p]`` maps CSR slot ``p`` to its edge id.
    """

    n_nodes: int
    edges: np.ndarray
    indptr: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)
    edge_index: np.ndarray = field(repr=False)
    node_ids: np.ndarray = field(repr=False)

    @classmethod
    def from_edges(cls, n_nodes, edges, node_ids=None):
        """Build from any iterable of pairs; self-loops and duplicates are dropped."""
        arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if arr.size and (arr.min() < 0 or arr.max() >= n_nodes):
            raise ValueError("edge endpoint out of range")
        arr = arr[arr[:, 0] != arr[:, 1]]
        lo = np.minimum(arr[:, 0], arr[:, 1])
        hi = np.maximum(arr[:, 0], arr[:, 1])
        lo, hi = _unique_pairs(n_nodes, lo, hi)
        edges = np.column_stack([lo, hi]).astype(np.int64)
        m = len(edges)
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        eid = np.concatenate([np.arange(m), np.arange(m)])
        order = np.lexsort((dst, src))
        counts = np.bincount(src, minlength=n_nodes)
        indptr = np.zeros(n_nodes + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        if node_ids is None:
            node_ids = np.arange(n_nodes, dtype=np.int64)
        return cls(
            n_nodes=int(n_nodes),
            edges=edges,
            indptr=indptr,
            indices=dst[order].astype(np.int64),
            edge_index=eid[order].astype(np.int64),
            node_ids=np.asarray(node_ids, dtype=np.int64),
        )

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def degrees(self):
        return np.diff(self.indptr)

    def degree(self, v):
        return int(self.indptr[v + 1] - self.indptr[v])

    def neighbors(self, v):
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def has_edge(self, u, v):
        nb = self.neighbors(u)
        i = np.searchsorted(nb, v)
        return bool(i < len(nb) and nb[i] == v)

    def edge_id(self, u, v):
        """Edge id of ``(u, v)``; raises ``KeyError`` if absent."""
        start = self.indptr[u]
        nb = self.indices[start : self.indptr[u + 1]]
        i = np.searchsorted(nb, v)
        if i >= len(nb) or nb[i] != v:
            raise KeyError((u, v))
        return int(self.edge_index[start + i])

    def csr_sources(self):
        """Source node of every CSR slot (directed edge ``u -> indices[p]``)."""
        return np.repeat(np.arange(self.n_nodes, dtype=np.int64), self.degrees)

    def reverse_slots(self):
        """For CSR slot ``p`` holding ``u -> v``, the slot holding ``v -> u``."""
        # Slot k is the k-th smallest (src, dst) key. The arc set is symmetric,
        # so the k-th smallest (dst, src) key belongs to the reverse of slot k.
        return np.lexsort((self.csr_sources(), self.indices))

    def subgraph(self, nodes):
        """Induced subgraph on ``nodes`` (re-indexed in the given order)."""
        nodes = np.asarray(nodes, dtype=np.int64)
        remap = np.full(self.n_nodes, -1, dtype=np.int64)
        remap[nodes] = np.arange(len(nodes))
        a = remap[self.edges[:, 0]]
        b = remap[self.edges[:, 1]]
        keep = (a >= 0) & (b >= 0)
        return UndirectedGraph.from_edges(
            len(nodes), np.column_stack([a[keep], b[keep]]), node_ids=self.node_ids[nodes]
        )

    def edge_set(self):
        return {(int(u), int(v)) for u, v in self.edges}

    def __repr__(self):
        return f"UndirectedGraph(n_nodes={self.n_nodes}, n_edges={self.n_edges})"


@dataclass(frozen=True, eq=False)
class DirectedGraph:
    """Simple directed graph with out- and in-adjacency in CSR form."""

    n_nodes: int
    arcs: np.ndarray
    out_indptr: np.ndarray = field(repr=False)
    out_indices: np.ndarray = field(repr=False)
    in_indptr: np.ndarray = field(repr=False)
    in_indices: np.ndarray = field(repr=False)
    node_ids: np.ndarray = field(repr=False)

    @classmethod
    def from_arcs(cls, n_nodes, arcs, node_ids=None):
        arr = np.asarray(arcs, dtype=np.int64).reshape(-1, 2)
        if arr.size and (arr.min() < 0 or arr.max() >= n_nodes):
            raise ValueError("arc endpoint out of range")
        arr = arr[arr[:, 0] != arr[:, 1]]
        a, b = _unique_pairs(n_nodes, arr[:, 0], arr[:, 1])
        out_indptr, out_indices = _csr(n_nodes, a, b)
        in_indptr, in_indices = _csr(n_nodes, b, a)
        if node_ids is None:
            node_ids = np.arange(n_nodes, dtype=np.int64)
        return cls(
            n_nodes=int(n_nodes),
            arcs=np.column_stack([a, b]).astype(np.int64),
            out_indptr=out_indptr,
            out_indices=out_indices,
            in_indptr=in_indptr,
            in_indices=in_indices,
            node_ids=np.asarray(node_ids, dtype=np.int64),
        )

    @property
    def n_arcs(self):
        return len(self.arcs)

    def successors(self, v):
        return self.out_indices[self.out_indptr[v] : self.out_indptr[v + 1]]

    def predecessors(self, v):
        return self.in_indices[self.in_indptr[v] : self.in_indptr[v + 1]]

    def arc_set(self):
        return {(int(u), int(v)) for u, v in self.arcs}

    def __repr__(self):
        return f"DirectedGraph(n_nodes={self.n_nodes}, n_arcs={self.n_arcs})"


# ---------------------------------------------------------------------------
# I/O


def _read_pairs(path):
    """Parse an edge-list file into (pairs, declared node count, self-loop count)."""
    pairs = []
    declared = None
    self_loops = 0
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "nodes":
                    try:
                        declared = int(parts[1])
                    except ValueError:
                        raise GraphFormatError(f"{path}:{lineno}: bad #nodes header") from None
                continue
            parts = line.split()
            if len(parts) < 2:
                raise GraphFormatError(f"{path}:{lineno}: expected two node ids, got {line!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise GraphFormatError(f"{path}:{lineno}: non-integer node id in {line!r}") from None
            if u < 0 or v < 0:
                raise GraphFormatError(f"{path}:{lineno}: negative node id")
            if u == v:
                self_loops += 1
                continue
            pairs.append((u, v))
    return pairs, declared, self_loops


def load_edge_list(path, directed=False):
    """Read a whitespace-separated edge list.

    Ids are remapped to a dense range in ascending order of original id; the
    original ids are kept in ``graph.node_ids``. With a ``#nodes N`` header
    the original ids must lie in ``0..N-1`` and are kept as-is, so isolated
    nodes survive.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    pairs, declared, self_loops = _read_pairs(path)
    if self_loops:
        logger.warning("%s: skipped %d self-loop(s)", path, self_loops)
    arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if declared is not None:
        if arr.size and arr.max() >= declared:
            raise GraphFormatError(f"{path}: node id {arr.max()} exceeds #nodes {declared}")
        node_ids = np.arange(declared, dtype=np.int64)
        mapped = arr
    else:
        node_ids, inv = np.unique(arr.ravel(), return_inverse=True)
        mapped = inv.reshape(-1, 2)
    n = len(node_ids)
    if directed:
        g = DirectedGraph.from_arcs(n, mapped, node_ids=node_ids)
    else:
        g = UndirectedGraph.from_edges(n, mapped, node_ids=node_ids)
    return g


def save_edge_list(graph, path, original_ids=True):
    """Write a graph in the edge-list format read by :func:`load_edge_list`."""
    pairs = graph.arcs if isinstance(graph, DirectedGraph) else graph.edges
    ids = graph.node_ids if original_ids else np.arange(graph.n_nodes)
    with open(path, "w") as fh:
        if not original_ids:
            fh.write(f"#nodes {graph.n_nodes}\n")
        for u, v in pairs:
            fh.write(f"{ids[u]} {ids[v]}\n")


def load_labels(path, graph=None):
    """Read ``node_id label`` lines.

    With ``graph`` given, ids are interpreted as original ids and mapped to
    the graph's dense ids; nodes absent from the file are ``UNKNOWN``.
    Returns an int8 array of :class:`Label` values.
    """
    raw = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) < 2:
                raise GraphFormatError(f"{path}:{lineno}: expected 'node_id label'")
            try:
                node = int(parts[0])
                label = _LABEL_NAMES[parts[1].lower()]
            except (ValueError, KeyError):
                raise GraphFormatError(f"{path}:{lineno}: bad label line {line!r}") from None
            raw[node] = label
    if graph is None:
        n = max(raw) + 1 if raw else 0
        labels = np.zeros(n, dtype=np.int8)
        for node, label in raw.items():
            labels[node] = label
        return labels
    labels = np.zeros(graph.n_nodes, dtype=np.int8)
    pos = {int(orig): i for i, orig in enumerate(graph.node_ids)}
    for node, label in raw.items():
        if node in pos:
            labels[pos[node]] = label
    return labels


def save_labels(labels, path, node_ids=None):
    names = {int(v): k for k, v in _LABEL_NAMES.items()}
    ids = np.arange(len(labels)) if node_ids is None else node_ids
    with open(path, "w") as fh:
        for i, lab in enumerate(labels):
            fh.write(f"{ids[i]} {names[int(lab)]}\n")


# ---------------------------------------------------------------------------
# Transformations


def mutualize(g):
    """Keep an undirected edge ``{u, v}`` only when both arcs exist."""
    arcs = g.arcs
    n = g.n_nodes
    key = arcs[:, 0] * n + arcs[:, 1]
    rkey = arcs[:, 1] * n + arcs[:, 0]
    mutual = np.isin(key, rkey, assume_unique=True) & (arcs[:, 0] < arcs[:, 1])
    return UndirectedGraph.from_edges(n, arcs[mutual], node_ids=g.node_ids)


def connected_components(g):
    """Component label per node (labels ordered by smallest member)."""
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import connected_components as _cc

    n = g.n_nodes
    if n == 0:
        return 0, np.zeros(0, dtype=np.int64)
    mat = csr_matrix((np.ones(len(g.indices)), g.indices, g.indptr), shape=(n, n))
    k, labels = _cc(mat, directed=False)
    return k, labels.astype(np.int64)


def largest_connected_component(g):
    """Induced subgraph on the largest component and the kept node indices.

    Ties go to the component holding the smallest original id.
    """
    if g.n_nodes == 0:
        return g, np.zeros(0, dtype=np.int64)
    k, comp = connected_components(g)
    sizes = np.bincount(comp, minlength=k)
    min_orig = np.full(k, np.iinfo(np.int64).max)
    np.minimum.at(min_orig, comp, g.node_ids)
    best = np.lexsort((min_orig, -sizes))[0]
    nodes = np.flatnonzero(comp == best)
    return g.subgraph(nodes), nodes


# ---------------------------------------------------------------------------
# Statistics


def clustering_coefficient(g, v):
    """Local clustering coefficient of ``v``; 0 when ``deg(v) < 2``."""
    nb = g.neighbors(v)
    k = len(nb)
    if k < 2:
        return 0.0
    links = 0
    for a in nb:
        links += len(np.intersect1d(g.neighbors(a), nb, assume_unique=True))
    # every neighbour edge was counted from both ends
    return links / (k * (k - 1))


def clustering_coefficients(g):
    """Vectorised local clustering coefficient for every node."""
    from scipy.sparse import csr_matrix

    n = g.n_nodes
    adj = csr_matrix((np.ones(len(g.indices)), g.indices, g.indptr), shape=(n, n))
    tri2 = np.asarray((adj @ adj).multiply(adj).sum(axis=1)).ravel()
    k = g.degrees.astype(float)
    out = np.zeros(n)
    ok = k >= 2
    out[ok] = tri2[ok] / (k[ok] * (k[ok] - 1))
    return out


def modularity(g, partition):
    """Newman modularity of a node partition (any hashable community labels).

    ``Q = sum_c (e_cc / m - (d_c / 2m)^2)``.
    """
    m = g.n_edges
    if m == 0:
        raise ValueError("modularity is undefined on a graph without edges")
    part = np.asarray(partition)
    if len(part) != g.n_nodes:
        raise ValueError("partition must cover every node")
    _, comm = np.unique(part, return_inverse=True)
    k = comm.max() + 1
    same = comm[g.edges[:, 0]] == comm[g.edges[:, 1]]
    intra = np.bincount(comm[g.edges[same, 0]], minlength=k)
    deg = np.bincount(comm, weights=g.degrees, minlength=k)
    return float(np.sum(intra / m - (deg / (2.0 * m)) ** 2))
