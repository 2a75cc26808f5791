import numpy as np
import pytest

from sybilframe.graph import (
    DirectedGraph,
    GraphFormatError,
    Label,
    UndirectedGraph,
    clustering_coefficient,
    clustering_coefficients,
    connected_components,
    largest_connected_component,
    load_edge_list,
    load_labels,
    modularity,
    mutualize,
    save_edge_list,
    save_labels,
)

from oracles import modularity_oracle


def write(tmp_path, text, name="g.txt"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestLoadEdgeList:
    def test_simple_path(self, tmp_path):
        g = load_edge_list(write(tmp_path, "0 1\n1 2"))
        assert (g.n_nodes, g.n_edges) == (3, 2)

    def test_duplicate_dropped(self, tmp_path):
        g = load_edge_list(write(tmp_path, "0 1\n0 1"))
        assert (g.n_nodes, g.n_edges) == (2, 1)

    def test_reverse_duplicate_dropped(self, tmp_path):
        g = load_edge_list(write(tmp_path, "0 1\n1 0\n"))
        assert g.n_edges == 1

    def test_ids_remapped(self, tmp_path):
        g = load_edge_list(write(tmp_path, "5 7\n7 9"))
        assert g.n_nodes == 3
        assert g.n_edges == 2
        assert g.node_ids.tolist() == [5, 7, 9]
        assert g.edges.tolist() == [[0, 1], [1, 2]]

    def test_comments_and_blank_lines(self, tmp_path):
        g = load_edge_list(write(tmp_path, "# header\n\n0 1\n# mid\n1 2\n"))
        assert g.n_edges == 2

    def test_nodes_header_keeps_isolated(self, tmp_path):
        g = load_edge_list(write(tmp_path, "#nodes 5\n0 1\n"))
        assert g.n_nodes == 5
        assert g.degrees.tolist() == [1, 1, 0, 0, 0]

    def test_self_loop_skipped(self, tmp_path):
        g = load_edge_list(write(tmp_path, "0 0\n0 1\n"))
        assert g.n_edges == 1

    def test_malformed_line_reports_line_number(self, tmp_path):
        with pytest.raises(GraphFormatError, match=":2:"):
            load_edge_list(write(tmp_path, "0 1\nfoo bar\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_edge_list(tmp_path / "absent.txt")

    def test_directed(self, tmp_path):
        g = load_edge_list(write(tmp_path, "0 1\n1 0\n1 2\n"), directed=True)
        assert isinstance(g, DirectedGraph)
        assert g.n_arcs == 3
        assert g.successors(1).tolist() == [0, 2]
        assert g.predecessors(1).tolist() == [0]

    def test_round_trip(self, tmp_path):
        g = load_edge_list(write(tmp_path, "10 20\n20 30\n30 10\n40 10\n"))
        out = tmp_path / "out.txt"
        save_edge_list(g, out)
        h = load_edge_list(out)
        as_orig = lambda x: {tuple(sorted(x.node_ids[e])) for e in x.edges.tolist()}
        assert as_orig(g) == as_orig(h)


class TestAdjacencyInvariants:
    def test_sorted_symmetric(self, rng):
        edges = rng.integers(0, 30, size=(120, 2))
        g = UndirectedGraph.from_edges(30, edges)
        for v in range(30):
            nb = g.neighbors(v)
            assert np.all(np.diff(nb) > 0)
            assert v not in nb
            for u in nb:
                assert g.has_edge(u, v)
            assert g.degree(v) == len(nb)

    def test_edge_index_matches_slots(self, rng):
        g = UndirectedGraph.from_edges(20, rng.integers(0, 20, size=(60, 2)))
        src = g.csr_sources()
        for p in range(len(g.indices)):
            u, v = sorted((src[p], g.indices[p]))
            assert g.edges[g.edge_index[p]].tolist() == [u, v]

    def test_reverse_slots(self, rng):
        g = UndirectedGraph.from_edges(25, rng.integers(0, 25, size=(80, 2)))
        rev = g.reverse_slots()
        src = g.csr_sources()
        assert np.array_equal(src[rev], g.indices)
        assert np.array_equal(g.indices[rev], src)

    def test_edge_id_missing(self, triangle):
        g = UndirectedGraph.from_edges(4, [(0, 1)])
        with pytest.raises(KeyError):
            g.edge_id(2, 3)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            UndirectedGraph.from_edges(2, [(0, 5)])


class TestMutualize:
    @pytest.mark.parametrize(
        "arcs, expected",
        [
            ([(0, 1), (1, 0), (1, 2)], [(0, 1)]),
            ([], []),
            ([(0, 1), (1, 0), (2, 1), (1, 2)], [(0, 1), (1, 2)]),
        ],
    )
    def test_examples(self, arcs, expected):
        g = mutualize(DirectedGraph.from_arcs(3, arcs))
        assert g.edge_set() == set(expected)

    def test_keeps_node_count(self):
        g = mutualize(DirectedGraph.from_arcs(4, [(0, 1)]))
        assert g.n_nodes == 4 and g.n_edges == 0


class TestLargestComponent:
    def test_three_vs_two(self):
        g = UndirectedGraph.from_edges(5, [(0, 1), (3, 4), (1, 2)])
        sub, kept = largest_connected_component(g)
        assert kept.tolist() == [0, 1, 2]
        assert sub.n_nodes == 3 and sub.n_edges == 2

    def test_connected_identity(self, k4):
        sub, kept = largest_connected_component(k4)
        assert kept.tolist() == [0, 1, 2, 3]
        assert sub.edge_set() == k4.edge_set()

    def test_tie_goes_to_smallest_original_id(self):
        # dense ids 0,1 hold originals 8,9; dense 2,3 hold 0,5
        g = UndirectedGraph.from_edges(4, [(0, 1), (2, 3)], node_ids=[8, 9, 0, 5])
        sub, kept = largest_connected_component(g)
        assert sorted(sub.node_ids.tolist()) == [0, 5]

    def test_idempotent(self, rng):
        g = UndirectedGraph.from_edges(60, rng.integers(0, 60, size=(50, 2)))
        a, _ = largest_connected_component(g)
        b, _ = largest_connected_component(a)
        assert a.edge_set() == b.edge_set()
        assert np.array_equal(a.node_ids, b.node_ids)

    def test_components_count(self):
        g = UndirectedGraph.from_edges(6, [(0, 1), (2, 3)])
        k, labels = connected_components(g)
        assert k == 4
        assert labels[0] == labels[1] != labels[2]


class TestClustering:
    def test_triangle(self, triangle):
        assert all(clustering_coefficient(triangle, v) == 1.0 for v in range(3))

    def test_star_center(self):
        g = UndirectedGraph.from_edges(4, [(0, 1), (0, 2), (0, 3)])
        assert clustering_coefficient(g, 0) == 0.0

    def test_one_neighbour_edge(self):
        g = UndirectedGraph.from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2)])
        assert clustering_coefficient(g, 0) == pytest.approx(1 / 3)

    def test_low_degree_is_zero(self):
        g = UndirectedGraph.from_edges(3, [(0, 1)])
        assert clustering_coefficient(g, 0) == 0.0
        assert clustering_coefficient(g, 2) == 0.0

    def test_vectorised_matches_per_node(self, rng):
        g = UndirectedGraph.from_edges(40, rng.integers(0, 40, size=(150, 2)))
        vec = clustering_coefficients(g)
        assert np.allclose(vec, [clustering_coefficient(g, v) for v in range(40)], atol=1e-15)


class TestModularity:
    def test_two_triangles(self):
        g = UndirectedGraph.from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
        assert modularity(g, [0, 0, 0, 1, 1, 1]) == pytest.approx(0.5, abs=1e-12)

    def test_single_community(self, k4):
        assert modularity(k4, [7, 7, 7, 7]) == 0.0

    def test_k4_random_labels(self, k4, rng):
        edges = k4.edges.tolist()
        for _ in range(20):
            part = rng.integers(0, 3, size=4)
            q = modularity(k4, part)
            assert q <= 1e-12
            assert q == pytest.approx(modularity_oracle(4, edges, part), abs=1e-12)

    def test_no_edges(self):
        with pytest.raises(ValueError):
            modularity(UndirectedGraph.from_edges(3, []), [0, 0, 1])

    def test_string_labels(self):
        g = UndirectedGraph.from_edges(4, [(0, 1), (2, 3)])
        assert modularity(g, ["a", "a", "b", "b"]) == pytest.approx(0.5)


class TestLabels:
    def test_round_trip(self, tmp_path):
        labels = np.array([Label.BENIGN, Label.SYBIL, Label.UNKNOWN], dtype=np.int8)
        p = tmp_path / "l.txt"
        save_labels(labels, p)
        assert load_labels(p).tolist() == labels.tolist()

    def test_mapped_to_graph(self, tmp_path):
        g = load_edge_list(write(tmp_path, "5 7\n7 9"))
        p = write(tmp_path, "9 sybil\n5 benign\n", "l.txt")
        assert load_labels(p, g).tolist() == [1, 0, -1]

    def test_bad_label(self, tmp_path):
        with pytest.raises(GraphFormatError):
            load_labels(write(tmp_path, "1 maybe\n", "l.txt"))

