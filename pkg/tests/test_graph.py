import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from softmesh.graph import (
    Category,
    DanglingLinkWarning,
    DanglingPolicy,
    DuplicateLinkWarning,
    FollowLink,
    NodeRecord,
    SnapshotError,
    Status,
    content_flow_graph,
    induced_subgraph,
    load_snapshot,
    save_snapshot,
    snapshot_from_dict,
)

from conftest import node, snapshot, write_snapshot_file

VALID_FILE = {
    "label": "t0",
    "nodes": [
        {"id": "A", "category": "anti", "user_count": 10, "status": "active", "messaged": False},
        {"id": "B", "category": "pro", "user_count": 20, "status": "active", "messaged": True},
        {"id": "C", "category": "neutral", "subtype": "parenting", "user_count": 0, "status": "private", "messaged": False},
    ],
    "links": [
        {"source": "A", "target": "B"},
        {"source": "B", "target": "C"},
    ],
}


class TestLoadSnapshot:
    def test_valid_file(self, tmp_path):
        s = load_snapshot(write_snapshot_file(tmp_path, VALID_FILE))
        assert len(s.nodes) == 3
        assert len(s.links) == 2
        assert s.label == "t0"
        assert s.node("C").subtype == "parenting"

    def test_dangling_reject_names_the_id(self, tmp_path):
        data = dict(VALID_FILE, links=VALID_FILE["links"] + [{"source": "A", "target": "ghost"}])
        path = write_snapshot_file(tmp_path, data)
        with pytest.raises(SnapshotError, match="ghost"):
            load_snapshot(path)

    def test_dangling_prune_drops_and_warns(self, tmp_path):
        data = dict(VALID_FILE, links=VALID_FILE["links"] + [{"source": "A", "target": "ghost"}])
        path = write_snapshot_file(tmp_path, data)
        with pytest.warns(DanglingLinkWarning) as rec:
            s = load_snapshot(path, DanglingPolicy.PRUNE)
        assert len(s.links) == 2
        assert len(rec.list[0].message.links) == 1

    def test_parse_failure(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(SnapshotError, match="invalid JSON"):
            load_snapshot(path)

    def test_duplicate_node_id(self, tmp_path):
        data = dict(VALID_FILE, nodes=VALID_FILE["nodes"] + [{"id": "A", "category": "pro"}])
        with pytest.raises(SnapshotError, match="duplicate"):
            load_snapshot(write_snapshot_file(tmp_path, data))

    def test_negative_user_count(self, tmp_path):
        data = dict(VALID_FILE, nodes=[{"id": "A", "category": "anti", "user_count": -1}])
        with pytest.raises(SnapshotError, match="negative"):
            load_snapshot(write_snapshot_file(tmp_path, data))

    def test_multi_edges_collapse_with_warning(self, tmp_path):
        data = dict(VALID_FILE, links=VALID_FILE["links"] + [{"source": "A", "target": "B"}])
        with pytest.warns(DuplicateLinkWarning) as rec:
            s = load_snapshot(write_snapshot_file(tmp_path, data))
        assert len(s.links) == 2
        assert rec.list[0].message.count == 1

    def test_self_loop_rejected(self, tmp_path):
        data = dict(VALID_FILE, links=[{"source": "A", "target": "A"}])
        with pytest.raises(SnapshotError, match="self-loop"):
            load_snapshot(write_snapshot_file(tmp_path, data))

    def test_neutral_requires_subtype(self):
        with pytest.raises(SnapshotError, match="subtype"):
            NodeRecord("N", Category.NEUTRAL)

    def test_subtype_only_for_neutral(self):
        with pytest.raises(SnapshotError, match="subtype"):
            NodeRecord("A", Category.ANTI, subtype="x")


class TestContentFlow:
    def test_flow_reverses_follow_direction(self):
        s = snapshot("t", [node("A"), node("B", "pro")], [("A", "B")])
        g = content_flow_graph(s)
        assert g.edges == (("B", "A"),)

    def test_empty_snapshot(self):
        g = content_flow_graph(snapshot("t", []))
        assert g.nodes == () and g.edges == ()

    def test_removed_nodes_carry_no_edges(self):
        s = snapshot("t", [node("A"), node("B", "pro", status="removed")], [("A", "B")])
        assert content_flow_graph(s).edges == ()

    def test_edge_count_equals_active_link_count(self, tiny_snapshot):
        g = content_flow_graph(tiny_snapshot)
        active = set(tiny_snapshot.active_ids)
        expected = sum(1 for ln in tiny_snapshot.links if ln.source in active and ln.target in active)
        assert len(g.edges) == expected


class TestInducedSubgraph:
    def test_identity(self, tiny_snapshot):
        assert induced_subgraph(tiny_snapshot, tiny_snapshot.ids) == tiny_snapshot

    def test_single_node(self, tiny_snapshot):
        sub = induced_subgraph(tiny_snapshot, {"A"})
        assert len(sub.nodes) == 1 and len(sub.links) == 0

    def test_triangle_keeps_inner_link(self):
        s = snapshot(
            "t",
            [node("A"), node("B", "pro"), node("C", "neutral")],
            [("A", "B"), ("B", "C"), ("C", "A")],
        )
        sub = induced_subgraph(s, {"A", "B"})
        assert [(ln.source, ln.target) for ln in sub.links] == [("A", "B")]

    def test_unknown_id(self, tiny_snapshot):
        with pytest.raises(SnapshotError, match="unknown"):
            induced_subgraph(tiny_snapshot, {"nope"})


# -- property tests -----------------------------------------------------------

categories = st.sampled_from(["anti", "pro", "neutral"])
statuses = st.sampled_from(["active", "removed", "private"])
node_ids = st.text(alphabet="abcdefgh", min_size=1, max_size=3)


@st.composite
def snapshots(draw):
    ids = draw(st.lists(node_ids, min_size=1, max_size=8, unique=True))
    nodes = [
        node(
            i,
            draw(categories),
            user_count=draw(st.integers(0, 5000)),
            status=draw(statuses),
            messaged=draw(st.booleans()),
        )
        for i in ids
    ]
    pairs = [(a, b) for a in ids for b in ids if a != b]
    links = draw(st.lists(st.sampled_from(pairs), max_size=20, unique=True)) if pairs else []
    return snapshot(draw(st.text(max_size=5)), nodes, links)


@settings(max_examples=200)
@given(snapshots())
def test_save_load_round_trip(tmp_path_factory, s):
    path = tmp_path_factory.mktemp("rt") / "s.json"
    save_snapshot(s, path)
    assert load_snapshot(path) == s


@settings(max_examples=100)
@given(snapshots(), st.data())
def test_induced_links_are_subset(s, data):
    ids = data.draw(st.lists(st.sampled_from(sorted(s.ids)), unique=True))
    sub = induced_subgraph(s, ids)
    assert set(sub.links) <= set(s.links)


@settings(max_examples=100)
@given(snapshots())
def test_flow_edges_match_active_links(s):
    g = content_flow_graph(s)
    active = set(s.active_ids)
    assert len(g.edges) == sum(
        1 for ln in s.links if ln.source in active and ln.target in active
    )
