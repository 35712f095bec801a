from itertools import combinations

import numpy as np
import pytest

from oracles import best_partition_modularity, weighted_modularity
from trendnets.corpus import VocabularyIndex
from trendnets.decomp import DecompositionResult, SolverConfig
from trendnets.errors import ConfigurationError
from trendnets.graph import (
    FORMATS,
    BurstGraph,
    cluster,
    export_graph,
    export_periods,
    extract_graph,
    load_graph,
    louvain,
    modularity,
)

TRIANGLES = {
    (0, 1): 1.0, (0, 2): 1.0, (1, 2): 1.0,
    (3, 4): 1.0, (3, 5): 1.0, (4, 5): 1.0,
    (2, 3): 0.1,
}


def make_result(S, pairs):
    S = np.asarray(S, dtype=np.float64)
    return DecompositionResult(
        S=S,
        pairs=np.asarray(pairs, dtype=np.int64),
        iterations=1,
        objective=0.0,
        kkt_residual=0.0,
        converged=True,
        config=SolverConfig(lam=0.1),
    )


class TestModularity:
    def test_single_edge_values(self):
        edges = {(0, 1): 1.0}
        assert modularity(edges, {0: 0, 1: 0}) == pytest.approx(0.0)
        assert modularity(edges, {0: 0, 1: 1}) == pytest.approx(-0.5)

    def test_matches_independent_formula(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = int(rng.integers(3, 8))
            edges = {
                (i, j): float(rng.uniform(0.1, 2.0))
                for i, j in combinations(range(n), 2)
                if rng.random() < 0.6
            }
            if not edges:
                continue
            partition = {k: int(rng.integers(0, 3)) for k in range(n)}
            assert modularity(edges, partition) == pytest.approx(
                weighted_modularity(edges, partition), abs=1e-12
            )


class TestLouvain:
    def test_two_triangles_two_communities(self):
        result = louvain(TRIANGLES)
        communities = result.communities
        assert len(set(communities.values())) == 2
        assert communities[0] == communities[1] == communities[2]
        assert communities[3] == communities[4] == communities[5]
        assert result.modularity == pytest.approx(
            best_partition_modularity(TRIANGLES), abs=1e-12
        )

    def test_single_edge_single_community(self):
        result = louvain({(0, 1): 2.0})
        assert result.communities == {0: 0, 1: 0}

    def test_disconnected_components_never_merge(self):
        edges = {(0, 1): 1.0, (1, 2): 1.0, (5, 6): 1.0, (6, 7): 1.0}
        c = louvain(edges).communities
        assert c[0] == c[1] == c[2]
        assert c[5] == c[6] == c[7]
        assert c[0] != c[5]

    def test_matches_exhaustive_optimum_on_structured_graphs(self):
        cases = []
        for k in range(3, 9):  # cliques
            cases.append({(i, j): 1.0 for i, j in combinations(range(k), 2)})
        for k in range(3, 9):  # stars
            cases.append({(0, i): 1.0 for i in range(1, k)})
        for k in range(2, 5):  # short paths
            cases.append({(i, i + 1): 1.0 for i in range(k)})
        for w in (0.05, 0.2, 0.5, 1.0):  # bridged triangles
            e = dict(TRIANGLES)
            e[(2, 3)] = w
            cases.append(e)
        for edges in cases:
            got = louvain(edges).modularity
            best = best_partition_modularity(edges)
            assert got == pytest.approx(best, abs=1e-12), edges

    def test_matches_exhaustive_optimum_on_planted_graphs(self):
        rng = np.random.default_rng(123)
        checked = 0
        while checked < 25:
            n = int(rng.integers(4, 9))
            split = int(rng.integers(2, n - 1))
            groups = [range(split), range(split, n)]
            edges = {}
            for g in groups:
                for i, j in combinations(g, 2):
                    if rng.random() < 0.9:
                        edges[(i, j)] = float(np.round(rng.uniform(1.0, 3.0), 3))
            for i in groups[0]:
                for j in groups[1]:
                    if rng.random() < 0.25:
                        edges[(i, j)] = float(np.round(rng.uniform(0.05, 0.5), 3))
            if len(edges) < 2:
                continue
            checked += 1
            assert louvain(edges).modularity == pytest.approx(
                best_partition_modularity(edges), abs=1e-12
            )

    def test_deterministic_under_fixed_seed(self):
        a = louvain(TRIANGLES, seed=7)
        b = louvain(TRIANGLES, seed=7)
        assert a.communities == b.communities
        assert a.modularity == b.modularity

    def test_modularity_trace_non_decreasing(self):
        result = louvain(TRIANGLES)
        trace = result.pass_modularities
        assert all(b >= a - 1e-15 for a, b in zip(trace, trace[1:]))
        singleton = modularity(TRIANGLES, {n: n for n in range(6)})
        assert result.modularity >= singleton

    def test_empty_graph(self):
        result = louvain({})
        assert result.communities == {} and result.modularity == 0.0

    def test_nonpositive_weight_rejected(self):
        with pytest.raises(ConfigurationError):
            louvain({(0, 1): 0.0})


class TestExtractGraph:
    def test_positive_entries_only(self):
        result = make_result(
            [[0.2, 0.0], [-0.1, 0.0], [0.0, 0.0]],
            [[0, 1], [0, 2], [1, 2]],
        )
        graph = extract_graph(result, 1)
        assert graph.edges == {(0, 1): 0.2}
        assert graph.declines == {(0, 2): -0.1}
        assert set(graph.nodes) == {0, 1}
        assert set(graph.communities) == {0, 1}

    def test_empty_period(self):
        result = make_result([[0.2, 0.0]], [[0, 1]])
        graph = extract_graph(result, 2)
        assert graph.num_edges == 0 and graph.num_nodes == 0
        assert graph.communities == {}

    def test_labels_from_vocabulary(self):
        vocab = VocabularyIndex(
            word_to_id={"advers": 0, "learn": 1},
            id_to_word=["advers", "learn"],
            counts=[3, 5],
            label_map={0: "adversarial"},
        )
        result = make_result([[0.3]], [[0, 1]])
        result.S = np.array([[0.3, 0.0]])
        graph = extract_graph(result, 1, vocab=vocab)
        assert graph.nodes == {0: "adversarial", 1: "learn"}

    def test_explicit_labels_win(self):
        result = make_result([[0.3, 0.0]], [[0, 1]])
        graph = extract_graph(result, 1, labels={0: "alpha", 1: "beta"})
        assert graph.nodes == {0: "alpha", 1: "beta"}

    def test_period_bounds_checked(self):
        result = make_result([[0.1, 0.2]], [[0, 1]])
        with pytest.raises(ConfigurationError):
            extract_graph(result, 0)
        with pytest.raises(ConfigurationError):
            extract_graph(result, 3)

    def test_every_node_has_an_edge(self):
        rng = np.random.default_rng(1)
        S = rng.normal(0, 0.3, size=(10, 4))
        pairs = [[i, j] for i, j in combinations(range(5), 2)]
        result = make_result(S, pairs)
        for t in range(1, 5):
            graph = extract_graph(result, t)
            touched = {n for e in graph.edges for n in e}
            assert set(graph.nodes) == touched


def graph_fixture():
    graph = BurstGraph(
        period=3,
        nodes={1: "speech", 4: "neural networks", 7: 'quo"ted'},
        edges={(1, 4): 0.25, (4, 7): 1 / 3},
        declines={(1, 7): -0.125},
    )
    return cluster(graph, seed=0)


class TestExport:
    @pytest.mark.parametrize("format", FORMATS)
    def test_round_trip(self, tmp_path, format):
        graph = graph_fixture()
        path = export_graph(graph, tmp_path / f"g.{format}", format)
        loaded = load_graph(path)
        assert loaded.period == graph.period
        assert loaded.nodes == graph.nodes
        assert loaded.edges == graph.edges  # exact weights
        assert loaded.communities == graph.communities
        assert loaded.modularity == graph.modularity
        if format == "json":
            assert loaded.declines == graph.declines
        else:
            assert loaded.declines == {}

    def test_single_edge_graphml_well_formed(self, tmp_path):
        import xml.etree.ElementTree as ET

        graph = cluster(BurstGraph(period=1, nodes={0: "a", 1: "b"}, edges={(0, 1): 0.5}))
        path = export_graph(graph, tmp_path / "g.graphml", "graphml")
        root = ET.parse(path).getroot()
        ns = {"g": "http://graphml.graphdrawing.org/xmlns"}
        assert len(root.find("g:graph", ns).findall("g:node", ns)) == 2

    def test_every_exported_node_has_community(self, tmp_path):
        graph = graph_fixture()
        loaded = load_graph(export_graph(graph, tmp_path / "g.json", "json"))
        assert set(loaded.communities) == set(loaded.nodes)

    def test_exported_edge_weights_positive(self, tmp_path):
        graph = graph_fixture()
        for format in FORMATS:
            loaded = load_graph(export_graph(graph, tmp_path / f"g.{format}", format))
            assert all(w > 0 for w in loaded.edges.values())

    def test_unknown_format_rejected(self, tmp_path):
        with pytest.raises(ConfigurationError):
            export_graph(graph_fixture(), tmp_path / "g.xml", "gexf")

    def test_period_file_naming(self, tmp_path):
        graphs = [
            cluster(BurstGraph(period=t, nodes={0: "a", 1: "b"}, edges={(0, 1): 0.5}))
            for t in (1, 4)
        ]
        paths = export_periods(graphs, tmp_path, "dot")
        assert [p.name for p in paths] == ["trendnets_1.dot", "trendnets_4.dot"]
