import json

import pytest

from softmesh.graph import (
    Category,
    FollowLink,
    GraphSnapshot,
    NodeRecord,
    Status,
)


def node(
    node_id,
    category="anti",
    user_count=100,
    status="active",
    messaged=False,
    subtype=None,
):
    if category == "neutral" and subtype is None:
        subtype = "parenting"
    return NodeRecord(
        id=node_id,
        category=Category(category),
        user_count=user_count,
        status=Status(status),
        messaged=messaged,
        subtype=subtype,
    )


def snapshot(label, nodes, links=()):
    return GraphSnapshot.build(label, nodes, [FollowLink(a, b) for a, b in links])


def write_snapshot_file(tmp_path, data, name="snap.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


@pytest.fixture
def tiny_snapshot():
    """Three communities, A follows B, B follows C."""
    return snapshot(
        "2019-11",
        [node("A", "anti"), node("B", "pro"), node("C", "neutral")],
        [("A", "B"), ("B", "C")],
    )
