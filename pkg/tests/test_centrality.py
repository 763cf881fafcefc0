import itertools

import numpy as np
import pytest

from softmesh.centrality import Orientation, betweenness, top_k_conduits
from softmesh.graph import DiGraph

from conftest import node, snapshot
from oracles import bruteforce_betweenness, random_digraph


def digraph(nodes, edges):
    return DiGraph.from_edges(nodes, edges)


class TestBetweenness:
    def test_directed_path(self):
        g = digraph("ABC", [("A", "B"), ("B", "C")])
        res = betweenness(g)
        assert res.scores == {"A": 0.0, "B": 1.0, "C": 0.0}

    def test_complete_bidirectional_graph_is_flat(self):
        nodes = "ABCD"
        edges = [(a, b) for a in nodes for b in nodes if a != b]
        assert all(v == 0.0 for v in betweenness(digraph(nodes, edges)).scores.values())

    def test_two_disconnected_edges(self):
        g = digraph("ABCD", [("A", "B"), ("C", "D")])
        assert all(v == 0.0 for v in betweenness(g).scores.values())

    def test_empty_graph(self):
        assert betweenness(digraph("", [])).scores == {}

    def test_normalization_divides_by_pairs(self):
        g = digraph("ABC", [("A", "B"), ("B", "C")])
        res = betweenness(g, normalized=True)
        assert res.scores["B"] == pytest.approx(1.0 / 2.0)
        assert res.normalized

    def test_isolated_node_changes_nothing(self):
        rng = np.random.default_rng(5)
        nodes, edges = random_digraph(rng, 6, 0.4)
        base = betweenness(digraph(nodes, edges)).scores
        with_iso = betweenness(digraph(nodes + ["zz"], edges)).scores
        assert with_iso.pop("zz") == 0.0
        assert with_iso == base

    def test_thread_count_does_not_change_result(self):
        rng = np.random.default_rng(17)
        nodes, edges = random_digraph(rng, 40, 0.15)
        g = digraph(nodes, edges)
        serial = betweenness(g, threads=1).scores
        for threads in (2, 4, 8):
            assert betweenness(g, threads=threads).scores == serial


class TestOracleEquivalence:
    def test_exhaustive_three_node_digraphs(self):
        nodes = ["a", "b", "c"]
        pairs = [(u, v) for u in nodes for v in nodes if u != v]
        for bits in itertools.product([0, 1], repeat=len(pairs)):
            edges = [p for p, b in zip(pairs, bits) if b]
            got = betweenness(digraph(nodes, edges)).scores
            want = bruteforce_betweenness(nodes, edges)
            for v in nodes:
                assert got[v] == pytest.approx(want[v], abs=1e-9)

    @pytest.mark.parametrize("n,p,count,seed", [(4, 0.4, 60, 1), (5, 0.35, 60, 2), (6, 0.3, 40, 3), (7, 0.25, 40, 4)])
    def test_random_digraphs_match_oracle(self, n, p, count, seed):
        rng = np.random.default_rng(seed)
        for _ in range(count):
            nodes, edges = random_digraph(rng, n, p)
            got = betweenness(digraph(nodes, edges)).scores
            want = bruteforce_betweenness(nodes, edges)
            for v in nodes:
                assert got[v] == pytest.approx(want[v], abs=1e-9)


def star_snapshot():
    """Center bridges every leaf pair (links both ways -> flow both ways)."""
    leaves = [node(f"l{i}", "pro") for i in range(5)]
    links = [("hub", f"l{i}") for i in range(5)] + [(f"l{i}", "hub") for i in range(5)]
    return snapshot("star", [node("hub")] + leaves, links)


class TestTopKConduits:
    def test_default_k_is_20(self):
        nodes = [node(f"n{i:02d}") for i in range(30)]
        links = [(f"n{i:02d}", f"n{(i + 1) % 30:02d}") for i in range(30)]
        top = top_k_conduits(snapshot("ring", nodes, links))
        assert len(top.ranking) == 20

    def test_star_center_wins(self):
        top = top_k_conduits(star_snapshot(), k=1)
        assert top.ranking[0][0] == "hub"
        want = bruteforce_betweenness(
            ["hub"] + [f"l{i}" for i in range(5)],
            [("hub", f"l{i}") for i in range(5)] + [(f"l{i}", "hub") for i in range(5)],
        )
        assert top.ranking[0][1] == pytest.approx(want["hub"], abs=1e-9)

    def test_all_zero_ties_break_by_ascending_id(self):
        s = snapshot("flat", [node(x) for x in "dcba"])
        top = top_k_conduits(s, k=3)
        assert [v for v, _ in top.ranking] == ["a", "b", "c"]

    def test_returns_induced_subnetwork(self):
        top = top_k_conduits(star_snapshot(), k=2)
        assert set(top.subnetwork.ids) == {v for v, _ in top.ranking}

    def test_rerun_is_identical(self):
        a = top_k_conduits(star_snapshot())
        b = top_k_conduits(star_snapshot())
        assert a.ranking == b.ranking

    def test_k_must_be_positive(self):
        with pytest.raises(ValueError):
            top_k_conduits(star_snapshot(), k=0)

    def test_orientation_flag(self):
        s = snapshot("t", [node("A"), node("B", "pro"), node("C", "neutral")], [("A", "B"), ("B", "C")])
        flow = top_k_conduits(s, orientation=Orientation.CONTENT_FLOW)
        follow = top_k_conduits(s, orientation=Orientation.FOLLOW)
        assert flow.result.scores["B"] == follow.result.scores["B"] == 1.0
        assert flow.result.orientation is Orientation.CONTENT_FLOW
        assert follow.result.orientation is Orientation.FOLLOW
