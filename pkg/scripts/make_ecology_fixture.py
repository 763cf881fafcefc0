#!/usr/bin/env python3
"""Build the committed example ecologies.

ecology_a.json / ecology_b.json: a 100-node community graph (40 anti, 40
neutral, 20 pro) in which 20 anti nodes are pure conduits, each bridging
two neutral sources to two pro sinks in the content-flow direction. The
"after" snapshot removes half of the top conduits and wires ten spare
anti nodes into exactly the vacated positions, so the high-betweenness
core keeps its category mix: the self-repair story in miniature.

sim_ecology.json: 40 communities of 250 users each (10,000 agents at
scale 1.0) with cross-category follow links, sized for the softening
simulation's documented defaults.

Deterministic; safe to re-run.
"""

from __future__ import annotations

import argparse
from pathlib import Path

from softmesh.graph import (
    Category,
    FollowLink,
    GraphSnapshot,
    NodeRecord,
    Status,
    save_snapshot,
)
from softmesh.rng import stream

SUBTYPES = ("parenting", "pets", "food", "fitness", "local-news")

N_CONDUITS = 20
N_SPARES = 20
N_REMOVED = 10


def conduit_wiring(red: str, i: int) -> list[FollowLink]:
    """Flow neutral -> red -> pro: red follows its neutrals, pros follow red."""
    return [
        FollowLink(red, f"n{i:02d}a"),
        FollowLink(red, f"n{i:02d}b"),
        FollowLink(f"b{2 * i % 20:02d}", red),
        FollowLink(f"b{(2 * i + 1) % 20:02d}", red),
    ]


def build_pair() -> tuple[GraphSnapshot, GraphSnapshot]:
    rng = stream(20260825)
    users = lambda lo, hi: int(rng.integers(lo, hi))

    nodes = []
    for i in range(N_CONDUITS + N_SPARES):
        nodes.append(
            NodeRecord(f"r{i:02d}", Category.ANTI, users(2_000, 60_000), messaged=i >= N_CONDUITS)
        )
    for i in range(N_CONDUITS):
        for suffix in "ab":
            nodes.append(
                NodeRecord(
                    f"n{i:02d}{suffix}",
                    Category.NEUTRAL,
                    users(50_000, 400_000),
                    messaged=True,
                    subtype=SUBTYPES[i % len(SUBTYPES)],
                )
            )
    for i in range(20):
        nodes.append(NodeRecord(f"b{i:02d}", Category.PRO, users(5_000, 80_000), messaged=True))

    links = [ln for i in range(N_CONDUITS) for ln in conduit_wiring(f"r{i:02d}", i)]
    # Spare anti nodes keep each other company; mutual links carry no
    # intermediate paths, so their betweenness stays zero.
    for i in range(N_CONDUITS, N_CONDUITS + N_SPARES, 2):
        links.append(FollowLink(f"r{i:02d}", f"r{i + 1:02d}"))
        links.append(FollowLink(f"r{i + 1:02d}", f"r{i:02d}"))
    before = GraphSnapshot.build("ecology-before", nodes, links)

    gone = {f"r{i:02d}" for i in range(N_REMOVED)}
    nodes_b = [
        NodeRecord(n.id, n.category, n.user_count, Status.REMOVED, n.messaged, n.subtype)
        if n.id in gone
        else n
        for n in nodes
    ]
    links_b = list(links)
    for i in range(N_REMOVED):
        links_b += conduit_wiring(f"r{N_CONDUITS + i:02d}", i)
    # A little red-red tightening between surviving conduits.
    for left, right in ((10, 11), (12, 13), (14, 15)):
        links_b.append(FollowLink(f"r{left:02d}", f"r{right:02d}"))
    after = GraphSnapshot.build("ecology-after", nodes_b, links_b)
    return before, after


def build_sim_ecology() -> GraphSnapshot:
    nodes = []
    links = []
    for i in range(15):
        nodes.append(NodeRecord(f"a{i:02d}", Category.ANTI, 250))
        links.append(FollowLink(f"a{i:02d}", f"n{i % 15:02d}"))
        links.append(FollowLink(f"a{i:02d}", f"n{(i + 3) % 15:02d}"))
    for i in range(10):
        nodes.append(NodeRecord(f"p{i:02d}", Category.PRO, 250))
        links.append(FollowLink(f"p{i:02d}", f"n{i % 15:02d}"))
        links.append(FollowLink(f"p{i:02d}", f"n{(i + 5) % 15:02d}"))
    for i in range(15):
        nodes.append(
            NodeRecord(f"n{i:02d}", Category.NEUTRAL, 250, subtype=SUBTYPES[i % len(SUBTYPES)])
        )
        links.append(FollowLink(f"n{i:02d}", f"n{(i + 1) % 15:02d}"))
    return GraphSnapshot.build("sim-ecology", nodes, links)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="fixtures")
    args = parser.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    before, after = build_pair()
    save_snapshot(before, out / "ecology_a.json")
    save_snapshot(after, out / "ecology_b.json")
    save_snapshot(build_sim_ecology(), out / "sim_ecology.json")
    for name in ("ecology_a.json", "ecology_b.json", "sim_ecology.json"):
        print(f"wrote {out / name}")


if __name__ == "__main__":
    main()
