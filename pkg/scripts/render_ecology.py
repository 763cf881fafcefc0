#!/usr/bin/env python3
"""Render before/after ecology maps on a shared coordinate scale.

Lays out both snapshots, unions their bounding boxes so the two SVGs are
directly comparable, and sizes each node by its betweenness rank.
"""

from __future__ import annotations

import argparse
from pathlib import Path

from softmesh.centrality import betweenness
from softmesh.graph import content_flow_graph, load_snapshot
from softmesh.layout import LayoutParams, force_layout, positions_bounds, render_svg


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--before", default="fixtures/ecology_a.json")
    parser.add_argument("--after", default="fixtures/ecology_b.json")
    parser.add_argument("--out-dir", default="maps")
    parser.add_argument("--iterations", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    params = LayoutParams(iterations=args.iterations, seed=args.seed)
    snapshots = [load_snapshot(args.before), load_snapshot(args.after)]
    layouts = [force_layout(s, params) for s in snapshots]
    boxes = [positions_bounds(p) for p in layouts]
    shared = (
        min(b[0] for b in boxes),
        min(b[1] for b in boxes),
        max(b[2] for b in boxes),
        max(b[3] for b in boxes),
    )

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for s, pos, name in zip(snapshots, layouts, ("before.svg", "after.svg")):
        scores = betweenness(content_flow_graph(s))
        (out / name).write_text(render_svg(s, pos, scores, bounds=shared))
        print(f"wrote {out / name}")


if __name__ == "__main__":
    main()
