#!/usr/bin/env python3
"""Softening campaign over many seeds: how fast do extremes thin out?

Runs the default four-week campaign on an ecology fixture across seeds and
reports, per seed, the initial and final share of agents with |view| above
the extreme band plus the first hour where that share halves. Averages go
to stdout; per-seed rows optionally to CSV.
"""

from __future__ import annotations

import argparse
import csv
import statistics
from pathlib import Path

from softmesh.graph import load_snapshot
from softmesh.sim import SimConfig, estimate_time_to_softening, run_simulation


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--snapshot", default="fixtures/sim_ecology.json")
    parser.add_argument("--seeds", type=int, default=20)
    parser.add_argument("--horizon-hours", type=float, default=672.0)
    parser.add_argument("--uptake", type=float, default=0.2)
    parser.add_argument("--out", help="optional per-seed CSV")
    args = parser.parse_args()

    ecology = load_snapshot(args.snapshot)
    rows = []
    for seed in range(args.seeds):
        config = SimConfig(seed=seed, horizon_hours=args.horizon_hours, uptake=args.uptake)
        series = run_simulation(ecology, config)
        first, last = series.rows[0], series.rows[-1]
        rows.append(
            {
                "seed": seed,
                "initial_extreme": first.fraction_extreme,
                "final_extreme": last.fraction_extreme,
                "final_mean_abs": last.mean_abs_view,
                "halved_at_hour": estimate_time_to_softening(series),
                "flips": len(series.flips),
            }
        )
        print(
            f"seed {seed:2d}: extreme {first.fraction_extreme:.3f} -> {last.fraction_extreme:.3f}"
            f"  halved at {rows[-1]['halved_at_hour']} h, {rows[-1]['flips']} flips"
        )

    halved = [r["halved_at_hour"] for r in rows if r["halved_at_hour"] is not None]
    print(f"\n{len(halved)}/{len(rows)} seeds halved the extreme share")
    if halved:
        print(f"mean halving time: {statistics.mean(halved):.1f} h")
    print(f"mean final extreme share: {statistics.mean(r['final_extreme'] for r in rows):.4f}")

    if args.out:
        path = Path(args.out)
        with path.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
