"""Community-graph snapshots: data model, ingestion, validation.

A snapshot is a dated set of community nodes plus directed follow links.
A follow link (A, B) means community A follows community B, so content
flows from B to A; analysis code that cares about information transport
should use :func:`content_flow_graph`, whose edges point along content flow.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Iterable, Union

__all__ = [
    "Category",
    "Status",
    "DanglingPolicy",
    "SnapshotError",
    "IngestWarning",
    "DanglingLinkWarning",
    "DuplicateLinkWarning",
    "NodeRecord",
    "FollowLink",
    "GraphSnapshot",
    "DiGraph",
    "load_snapshot",
    "save_snapshot",
    "snapshot_from_dict",
    "snapshot_to_dict",
    "content_flow_graph",
    "follow_graph",
    "induced_subgraph",
]


class Category(str, Enum):
    ANTI = "anti"
    PRO = "pro"
    NEUTRAL = "neutral"


class Status(str, Enum):
    ACTIVE = "active"
    REMOVED = "removed"
    PRIVATE = "private"


class DanglingPolicy(str, Enum):
    """What to do with links whose endpoints are not in the node set."""

    REJECT = "reject"
    PRUNE = "prune"


class SnapshotError(ValueError):
    """Raised for malformed or inconsistent snapshot data."""


class IngestWarning(UserWarning):
    """Base class for non-fatal ingestion findings."""


class DanglingLinkWarning(IngestWarning):
    """Links dropped under DanglingPolicy.PRUNE; ``links`` holds the pairs."""

    def __init__(self, links: list[tuple[str, str]]):
        self.links = list(links)
        super().__init__(f"pruned {len(self.links)} dangling link(s): {self.links}")


class DuplicateLinkWarning(IngestWarning):
    """Repeated (source, target) pairs collapsed to one; ``count`` collapsed."""

    def __init__(self, count: int):
        self.count = count
        super().__init__(f"collapsed {count} duplicate link(s)")


@dataclass(frozen=True, order=True)
class NodeRecord:
    """One community: a platform in-built structure holding many users."""

    id: str
    category: Category
    user_count: int = 0
    status: Status = Status.ACTIVE
    messaged: bool = False
    subtype: str | None = None

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise SnapshotError(f"node id must be a nonempty string, got {self.id!r}")
        if isinstance(self.user_count, bool) or not isinstance(self.user_count, int):
            raise SnapshotError(f"node {self.id!r}: user_count must be an integer")
        if self.user_count < 0:
            raise SnapshotError(f"node {self.id!r}: negative user_count {self.user_count}")
        if self.category is Category.NEUTRAL:
            if not self.subtype:
                raise SnapshotError(f"node {self.id!r}: neutral nodes need a nonempty subtype")
        elif self.subtype is not None:
            raise SnapshotError(f"node {self.id!r}: subtype only applies to neutral nodes")


@dataclass(frozen=True, order=True)
class FollowLink:
    """Directed follow relation: ``source`` follows ``target``."""

    source: str
    target: str

    def __post_init__(self):
        if self.source == self.target:
            raise SnapshotError(f"self-loop on {self.source!r}")


@dataclass(frozen=True)
class GraphSnapshot:
    """Immutable dated snapshot of the community ecology.

    Nodes and links are kept sorted so equal snapshots compare equal and
    serialization is canonical.
    """

    label: str
    nodes: tuple[NodeRecord, ...]
    links: tuple[FollowLink, ...]

    @classmethod
    def build(cls, label: str, nodes: Iterable[NodeRecord], links: Iterable[FollowLink]) -> "GraphSnapshot":
        """Validate and canonicalize; raises SnapshotError on bad input."""
        nodes = tuple(sorted(nodes))
        links = tuple(sorted(set(links)))
        idset = {n.id for n in nodes}
        if len(idset) != len(nodes):
            raise SnapshotError(f"duplicate node id(s): {_duplicates(n.id for n in nodes)}")
        for ln in links:
            for endpoint in (ln.source, ln.target):
                if endpoint not in idset:
                    raise SnapshotError(f"link ({ln.source!r} -> {ln.target!r}) references unknown node {endpoint!r}")
        return cls(label=label, nodes=nodes, links=links)

    @cached_property
    def by_id(self) -> dict[str, NodeRecord]:
        return {n.id: n for n in self.nodes}

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes)

    @cached_property
    def active_ids(self) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes if n.status is Status.ACTIVE)

    def node(self, node_id: str) -> NodeRecord:
        try:
            return self.by_id[node_id]
        except KeyError:
            raise SnapshotError(f"unknown node id {node_id!r}") from None

    def summary(self) -> dict:
        return {"label": self.label, "nodes": len(self.nodes), "links": len(self.links)}

    def with_statuses(self, status_map: dict[str, Status]) -> "GraphSnapshot":
        """Copy with the given nodes' statuses replaced (ids must exist)."""
        for node_id in status_map:
            self.node(node_id)
        nodes = tuple(
            NodeRecord(n.id, n.category, n.user_count, status_map.get(n.id, n.status), n.messaged, n.subtype)
            for n in self.nodes
        )
        return GraphSnapshot(self.label, nodes, self.links)


@dataclass(frozen=True)
class DiGraph:
    """Minimal directed graph over string node ids, in fixed sorted order."""

    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]

    @cached_property
    def index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.nodes)}

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        """Successor lists as node indices, each sorted ascending."""
        succ: list[list[int]] = [[] for _ in self.nodes]
        idx = self.index
        for u, v in self.edges:
            succ[idx[u]].append(idx[v])
        return tuple(tuple(sorted(s)) for s in succ)

    @classmethod
    def from_edges(cls, nodes: Iterable[str], edges: Iterable[tuple[str, str]]) -> "DiGraph":
        return cls(tuple(sorted(nodes)), tuple(sorted(set(edges))))


def _duplicates(ids: Iterable[str]) -> list[str]:
    seen: set[str] = set()
    dupes: set[str] = set()
    for i in ids:
        (dupes if i in seen else seen).add(i)
    return sorted(dupes)


def _parse_node(raw: dict) -> NodeRecord:
    if not isinstance(raw, dict):
        raise SnapshotError(f"node entry must be an object, got {type(raw).__name__}")
    unknown = set(raw) - {"id", "category", "subtype", "user_count", "status", "messaged"}
    if unknown:
        raise SnapshotError(f"node {raw.get('id')!r}: unknown field(s) {sorted(unknown)}")
    try:
        category = Category(raw["category"])
    except KeyError:
        raise SnapshotError(f"node {raw.get('id')!r}: missing category") from None
    except ValueError:
        raise SnapshotError(
            f"node {raw.get('id')!r}: bad category {raw['category']!r} "
            f"(expected one of {[c.value for c in Category]})"
        ) from None
    status_raw = raw.get("status", Status.ACTIVE.value)
    try:
        status = Status(status_raw)
    except ValueError:
        raise SnapshotError(f"node {raw.get('id')!r}: bad status {status_raw!r}") from None
    return NodeRecord(
        id=raw.get("id"),
        category=category,
        user_count=raw.get("user_count", 0),
        status=status,
        messaged=bool(raw.get("messaged", False)),
        subtype=raw.get("subtype"),
    )


def snapshot_from_dict(data: dict, dangling_policy: DanglingPolicy = DanglingPolicy.REJECT) -> GraphSnapshot:
    """Build a validated snapshot from decoded JSON data.

    Duplicate links collapse to one with a DuplicateLinkWarning. Dangling
    links raise under REJECT (naming the missing id) and are dropped with a
    DanglingLinkWarning under PRUNE.
    """
    if not isinstance(data, dict):
        raise SnapshotError("snapshot file must contain a JSON object")
    label = data.get("label")
    if not isinstance(label, str):
        raise SnapshotError("snapshot needs a string 'label'")
    nodes = [_parse_node(raw) for raw in data.get("nodes", [])]
    idset = {n.id for n in nodes}
    if len(idset) != len(nodes):
        raise SnapshotError(f"duplicate node id(s): {_duplicates(n.id for n in nodes)}")

    links: list[FollowLink] = []
    dangling: list[tuple[str, str]] = []
    seen_pairs: set[tuple[str, str]] = set()
    duplicates = 0
    for raw in data.get("links", []):
        if not isinstance(raw, dict) or "source" not in raw or "target" not in raw:
            raise SnapshotError(f"link entry must have 'source' and 'target': {raw!r}")
        src, dst = raw["source"], raw["target"]
        link = FollowLink(src, dst)
        missing = [e for e in (src, dst) if e not in idset]
        if missing:
            if dangling_policy is DanglingPolicy.REJECT:
                raise SnapshotError(f"link ({src!r} -> {dst!r}) references unknown node {missing[0]!r}")
            dangling.append((src, dst))
            continue
        if (src, dst) in seen_pairs:
            duplicates += 1
            continue
        seen_pairs.add((src, dst))
        links.append(link)

    if dangling:
        warnings.warn(DanglingLinkWarning(dangling), stacklevel=2)
    if duplicates:
        warnings.warn(DuplicateLinkWarning(duplicates), stacklevel=2)
    return GraphSnapshot.build(label, nodes, links)


def snapshot_to_dict(s: GraphSnapshot) -> dict:
    nodes = []
    for n in s.nodes:
        entry = {
            "id": n.id,
            "category": n.category.value,
            "user_count": n.user_count,
            "status": n.status.value,
            "messaged": n.messaged,
        }
        if n.subtype is not None:
            entry["subtype"] = n.subtype
        nodes.append(entry)
    return {
        "label": s.label,
        "nodes": nodes,
        "links": [{"source": ln.source, "target": ln.target} for ln in s.links],
    }


def load_snapshot(
    path: Union[str, Path], dangling_policy: DanglingPolicy = DanglingPolicy.REJECT
) -> GraphSnapshot:
    """Load and validate a snapshot JSON file."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SnapshotError(f"{path}: invalid JSON ({exc})") from exc
    return snapshot_from_dict(data, dangling_policy)


def save_snapshot(s: GraphSnapshot, path: Union[str, Path]) -> None:
    """Write the canonical JSON form; load_snapshot(save_snapshot(s)) == s."""
    Path(path).write_text(json.dumps(snapshot_to_dict(s), indent=2) + "\n")


def _active_link_pairs(s: GraphSnapshot) -> list[tuple[str, str]]:
    active = set(s.active_ids)
    return [(ln.source, ln.target) for ln in s.links if ln.source in active and ln.target in active]


def content_flow_graph(s: GraphSnapshot) -> DiGraph:
    """Digraph over Active nodes with edges along content flow.

    A follow link (A, B) contributes the flow edge B -> A: whatever B posts
    reaches A's audience.
    """
    return DiGraph.from_edges(s.active_ids, [(b, a) for a, b in _active_link_pairs(s)])


def follow_graph(s: GraphSnapshot) -> DiGraph:
    """Digraph over Active nodes with edges along the raw follow direction."""
    return DiGraph.from_edges(s.active_ids, _active_link_pairs(s))


def induced_subgraph(s: GraphSnapshot, ids: Iterable[str]) -> GraphSnapshot:
    """Snapshot restricted to ``ids`` and the links among them."""
    keep = set(ids)
    unknown = keep - set(s.ids)
    if unknown:
        raise SnapshotError(f"unknown node id(s): {sorted(unknown)}")
    nodes = [n for n in s.nodes if n.id in keep]
    links = [ln for ln in s.links if ln.source in keep and ln.target in keep]
    return GraphSnapshot.build(s.label, nodes, links)
