"""Command-line entry point wiring ingest, analysis, layout, and simulation.

Every subcommand that writes files takes --out and writes only inside it,
plus a manifest recording inputs, resolved config, seed, and output hashes.
Commands with small results print JSON to stdout when --out is omitted.
Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
import warnings
from collections import Counter
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from .centrality import DEFAULT_TOP_K, betweenness, top_k_conduits
from .cohort import heterogeneity_softening_relation, load_cohort, softening_stats
from .graph import (
    Category,
    SnapshotError,
    content_flow_graph,
    load_snapshot,
    snapshot_to_dict,
)
from .layout import LayoutParams, force_layout, positions_bounds, render_svg
from .manifest import RunManifest, load_manifest, sha256_file
from .resilience import (
    NEW_PAIR,
    DegenerateNullError,
    core_mesh_persistence,
    diff_snapshots,
    mesh_density_excess,
    messaging_coverage,
    removal_replay,
    tightening_metrics,
)
from .sim import SimConfig, config_from_dict, config_to_dict, estimate_time_to_softening, run_simulation


def _write_csv(path: Path, rows: list[list]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in rows:
            writer.writerow(row)


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _print_json(payload) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _fmt(value) -> str:
    """CSV cell: repr for floats (round-trip exact), empty for None."""
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _out_dir(args) -> Path | None:
    if args.out is None:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _ids_arg(raw: str) -> set[str]:
    ids = {part.strip() for part in raw.split(",") if part.strip()}
    if not ids:
        raise ValueError("empty id list")
    return ids


def _pair_key(pair) -> str:
    return f"{pair[0].value}->{pair[1].value}"


def _emit(args, command: str, payload: dict, tables: dict[str, list[list]], inputs: list, config: dict | None = None, extra_files: dict[str, str] | None = None) -> int:
    """Write JSON + CSV tables + manifest under --out, or JSON to stdout."""
    out = _out_dir(args)
    if out is None:
        _print_json(payload)
        return 0
    manifest = RunManifest.begin(out, command, _recorded_argv(args), inputs, config, getattr(args, "seed", None))
    written = []
    json_path = out / f"{command}.json"
    _write_json(json_path, payload)
    written.append(json_path)
    for name, rows in tables.items():
        path = out / name
        _write_csv(path, rows)
        written.append(path)
    for name, text in (extra_files or {}).items():
        path = out / name
        path.write_text(text)
        written.append(path)
    manifest.finish(out, written)
    return 0


def _recorded_argv(args) -> list[str]:
    return list(args._argv)


# ---------------------------------------------------------------- validate

def cmd_validate(args) -> int:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        s = load_snapshot(args.snapshot_path)
    by_category = Counter(n.category.value for n in s.nodes)
    by_status = Counter(n.status.value for n in s.nodes)
    payload = {
        "label": s.label,
        "nodes": len(s.nodes),
        "links": len(s.links),
        "by_category": dict(sorted(by_category.items())),
        "by_status": dict(sorted(by_status.items())),
        "warnings": [str(w.message) for w in caught],
    }
    _print_json(payload)
    return 0


# -------------------------------------------------------------- centrality

def cmd_centrality(args) -> int:
    s = load_snapshot(args.snapshot)
    top = top_k_conduits(s, k=args.k, threads=args.threads)
    rows = [["node_id", "category", "user_count", "betweenness", "rank"]]
    ranking_json = []
    for rank, (node_id, score) in enumerate(top.ranking, start=1):
        node = s.by_id[node_id]
        rows.append([node_id, node.category.value, node.user_count, _fmt(score), rank])
        ranking_json.append(
            {
                "node_id": node_id,
                "category": node.category.value,
                "user_count": node.user_count,
                "betweenness": score,
                "rank": rank,
            }
        )
    out = _out_dir(args)
    if out is None:
        if args.format == "json":
            _print_json({"ranking": ranking_json})
        else:
            writer = csv.writer(sys.stdout, lineterminator="\n")
            writer.writerows(rows)
        return 0
    manifest = RunManifest.begin(out, "centrality", _recorded_argv(args), [args.snapshot], {"k": args.k}, args.seed)
    written = []
    if args.format == "json":
        path = out / "centrality.json"
        _write_json(path, {"ranking": ranking_json})
        written.append(path)
    else:
        path = out / "centrality.csv"
        _write_csv(path, rows)
        written.append(path)
    manifest.finish(out, written)
    return 0


# ---------------------------------------------------- snapshot-pair reports

def cmd_diff(args) -> int:
    a = load_snapshot(args.snapshot)
    b = load_snapshot(args.snapshot_b)
    d = diff_snapshots(a, b)
    payload = {
        "removed": sorted(d.removed),
        "self_removed": sorted(d.self_removed),
        "added": sorted(d.added),
        "link_delta": {_pair_key(pair): n for pair, n in sorted(d.link_delta.items())},
    }
    table = [["source_category", "target_category", "delta"]]
    for (c1, c2), n in sorted(d.link_delta.items()):
        table.append([c1.value, c2.value, n])
    return _emit(args, "diff", payload, {"link_delta.csv": table}, [args.snapshot, args.snapshot_b])


def _mesh_payload(report) -> dict:
    return {
        "top_k_before": list(report.top_k_before),
        "top_k_after": list(report.top_k_after),
        "membership_overlap": report.membership_overlap,
        "category_share_before": {c.value: v for c, v in sorted(report.category_share_before.items())},
        "category_share_after": {c.value: v for c, v in sorted(report.category_share_after.items())},
        "replacements": [[gone, came, cat.value] for gone, came, cat in report.replacements],
    }


def _mesh_table(report) -> list[list]:
    rows = [["rank", "before_id", "after_id"]]
    for i in range(max(len(report.top_k_before), len(report.top_k_after))):
        before = report.top_k_before[i] if i < len(report.top_k_before) else None
        after = report.top_k_after[i] if i < len(report.top_k_after) else None
        rows.append([i + 1, _fmt(before), _fmt(after)])
    return rows


def cmd_mesh(args) -> int:
    a = load_snapshot(args.snapshot)
    b = load_snapshot(args.snapshot_b)
    report = core_mesh_persistence(a, b, k=args.k, threads=args.threads)
    return _emit(
        args, "mesh", _mesh_payload(report), {"mesh.csv": _mesh_table(report)},
        [args.snapshot, args.snapshot_b], {"k": args.k},
    )


def cmd_density(args) -> int:
    s = load_snapshot(args.snapshot)
    if args.ids:
        ids = _ids_arg(args.ids)
    else:
        ids = {node_id for node_id, _ in top_k_conduits(s, k=args.k).ranking}
    seed = args.seed if args.seed is not None else 0
    result = mesh_density_excess(s, ids, trials=args.trials, seed=seed, workers=args.threads)
    payload = dict(dataclasses.asdict(result), target_ids=sorted(ids))
    table = [
        ["observed_internal_links", "null_mean", "null_std", "z_score", "trials"],
        [result.observed_internal_links, _fmt(result.null_mean), _fmt(result.null_std), _fmt(result.z_score), result.trials],
    ]
    config = {"trials": args.trials, "target_ids": sorted(ids)}
    return _emit(args, "density", payload, {"density.csv": table}, [args.snapshot], config)


def cmd_replay(args) -> int:
    s = load_snapshot(args.snapshot)
    removal = _ids_arg(args.ids)
    result = removal_replay(s, removal, k=args.k, threads=args.threads)
    payload = {
        "mesh": _mesh_payload(result.mesh),
        "rank_correlation": result.rank_correlation,
        "removed": sorted(removal),
    }
    post_text = json.dumps(snapshot_to_dict(result.post), indent=2) + "\n"
    return _emit(
        args, "replay", payload, {"replay.csv": _mesh_table(result.mesh)},
        [args.snapshot], {"k": args.k}, extra_files={"post_snapshot.json": post_text},
    )


def cmd_tighten(args) -> int:
    a = load_snapshot(args.snapshot)
    b = load_snapshot(args.snapshot_b)
    report = tightening_metrics(a, b)
    payload = {}
    table = [["source_category", "target_category", "density_a", "density_b", "delta"]]
    for pair in sorted(report.density_a):
        key = _pair_key(pair)
        payload[key] = {
            "density_a": report.density_a[pair],
            "density_b": report.density_b[pair],
            "delta": report.delta[pair],
        }
        table.append(
            [pair[0].value, pair[1].value, _fmt(report.density_a[pair]), _fmt(report.density_b[pair]), _fmt(report.delta[pair])]
        )
    return _emit(args, "tighten", payload, {"tighten.csv": table}, [args.snapshot, args.snapshot_b])


def cmd_coverage(args) -> int:
    s = load_snapshot(args.snapshot)
    report = messaging_coverage(s)
    payload = {
        "coverage_by_category": {c.value: v for c, v in sorted(report.coverage_by_category.items())},
        "overall_coverage": report.overall_coverage,
        "missed_neutral_adjacent": sorted(report.missed_neutral_adjacent),
    }
    table = [["category", "coverage"]]
    for c, v in sorted(report.coverage_by_category.items()):
        table.append([c.value, _fmt(v)])
    table.append(["overall", _fmt(report.overall_coverage)])
    return _emit(args, "coverage", payload, {"coverage.csv": table}, [args.snapshot])


# ------------------------------------------------------------------ layout

def cmd_layout(args) -> int:
    out = _out_dir(args)
    if out is None:
        print("usage error: layout writes files and requires --out", file=sys.stderr)
        return 2
    s = load_snapshot(args.snapshot)
    params = LayoutParams(
        repulsion_scale=args.repulsion_scale,
        gravity=args.gravity,
        iterations=args.iterations,
        seed=args.seed if args.seed is not None else 0,
        jitter_tolerance=args.jitter_tolerance,
    )
    inputs = [args.snapshot]
    pos = force_layout(s, params, threads=args.threads)
    bounds = positions_bounds(pos)
    if args.shared_scale_with:
        inputs.append(args.shared_scale_with)
        other = load_snapshot(args.shared_scale_with)
        other_pos = force_layout(other, params, threads=args.threads)
        ob = positions_bounds(other_pos)
        bounds = (min(bounds[0], ob[0]), min(bounds[1], ob[1]), max(bounds[2], ob[2]), max(bounds[3], ob[3]))
    config = dict(dataclasses.asdict(params), shared_scale_with=args.shared_scale_with)
    manifest = RunManifest.begin(out, "layout", _recorded_argv(args), inputs, config, params.seed)
    scores = betweenness(content_flow_graph(s), threads=args.threads)
    rows = [["node_id", "x", "y"]]
    for node_id in sorted(pos):
        x, y = pos[node_id]
        rows.append([node_id, _fmt(x), _fmt(y)])
    positions_path = out / "positions.csv"
    _write_csv(positions_path, rows)
    svg_path = out / "map.svg"
    svg_path.write_text(render_svg(s, pos, scores, bounds=bounds))
    manifest.finish(out, [positions_path, svg_path])
    return 0


# ---------------------------------------------------------------- simulate

def cmd_simulate(args) -> int:
    out = _out_dir(args)
    if out is None:
        print("usage error: simulate writes files and requires --out", file=sys.stderr)
        return 2
    s = load_snapshot(args.snapshot)
    if args.config:
        with open(args.config, "rb") as fh:
            config = config_from_dict(tomllib.load(fh))
    else:
        config = SimConfig()
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    inputs = [args.snapshot] + ([args.config] if args.config else [])
    manifest = RunManifest.begin(out, "simulate", _recorded_argv(args), inputs, config_to_dict(config), config.seed)

    ts = run_simulation(s, config)
    softening_hours = estimate_time_to_softening(ts)

    series_rows = [["hour", "mean_view", "mean_abs_view", "fraction_extreme", "anti_communities", "pro_communities", "neutral_communities"]]
    for row in ts.rows:
        series_rows.append(
            [
                _fmt(row.hour),
                _fmt(row.mean_view),
                _fmt(row.mean_abs_view),
                _fmt(row.fraction_extreme),
                row.community_counts[Category.ANTI],
                row.community_counts[Category.PRO],
                row.community_counts[Category.NEUTRAL],
            ]
        )
    flip_rows = [["hour", "community", "from_category", "moderated_fraction"]]
    for flip in ts.flips:
        flip_rows.append([_fmt(flip.hour), flip.community, flip.from_category.value, _fmt(flip.moderated_fraction)])
    hist_rows = [["hour", "bin_lo", "bin_hi", "count"]]
    edges = [round(-1.0 + i * 0.1, 1) for i in range(21)]
    for row in ts.rows:
        for i, count in enumerate(row.histogram):
            hist_rows.append([_fmt(row.hour), _fmt(edges[i]), _fmt(edges[i + 1]), count])

    written = []
    for name, rows in (
        ("timeseries.csv", series_rows),
        ("flips.csv", flip_rows),
        ("histograms.csv", hist_rows),
    ):
        path = out / name
        _write_csv(path, rows)
        written.append(path)
    summary = {
        "population": ts.population,
        "rounds": len(ts.rows) - 1,
        "flips": len(ts.flips),
        "time_to_softening_hours": softening_hours,
        "initial_fraction_extreme": ts.rows[0].fraction_extreme,
        "final_fraction_extreme": ts.rows[-1].fraction_extreme,
        "final_mean_abs_view": ts.rows[-1].mean_abs_view,
    }
    summary_path = out / "summary.json"
    _write_json(summary_path, summary)
    written.append(summary_path)
    manifest.finish(out, written)
    return 0


# ----------------------------------------------------------- cohort-report

def _bars_svg(counts, y_off: float, color: str, label: str, peak: int) -> list[str]:
    width, height, x_off = 38.0, 150.0, 20.0
    parts = [
        f'<text x="{x_off:.0f}" y="{y_off - 6:.2f}" font-size="14" fill="#333">{label}</text>'
    ]
    for i, count in enumerate(counts):
        h = height * count / peak if peak else 0.0
        x = x_off + i * (width + 2)
        parts.append(
            f'<rect x="{x:.2f}" y="{y_off + height - h:.2f}" width="{width:.2f}" '
            f'height="{h:.2f}" fill="{color}"/>'
        )
    return parts


def _histogram_pair_svg(pre: tuple[int, ...], post: tuple[int, ...]) -> str:
    peak = max(max(pre), max(post), 1)
    parts = ['<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 840 420">',
             '<rect width="840" height="420" fill="#ffffff"/>']
    parts += _bars_svg(pre, 30.0, "#d62728", "pre", peak)
    parts += _bars_svg(post, 240.0, "#1f77b4", "post", peak)
    for frac, tick in ((0.0, "-1"), (0.5, "0"), (1.0, "+1")):
        x = 20 + frac * (20 * 40 - 2)
        parts.append(f'<text x="{x:.2f}" y="412" font-size="12" fill="#333">{tick}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_cohort_report(args) -> int:
    cohort = load_cohort(args.cohort_path)
    stats = softening_stats(cohort)
    relation = None
    if len(stats.groups) >= 2:
        rel = heterogeneity_softening_relation(cohort)
        relation = {
            "points": [list(p) for p in rel.points],
            "pearson_r": rel.pearson_r,
            "spearman_rho": rel.spearman_rho,
        }

    def group_payload(g):
        return {
            "group": g.group,
            "n": g.n,
            "delta_mean_abs": g.delta_mean_abs,
            "extremes_delta": g.extremes_delta,
            "heterogeneity": g.heterogeneity,
        }

    payload = {
        "overall": group_payload(stats.overall),
        "groups": [group_payload(g) for g in stats.groups],
        "heterogeneity_relation": relation,
    }
    groups_table = [["group", "n", "delta_mean_abs", "extremes_delta", "heterogeneity"]]
    for g in (stats.overall, *stats.groups):
        groups_table.append([g.group, g.n, _fmt(g.delta_mean_abs), _fmt(g.extremes_delta), _fmt(g.heterogeneity)])
    hist_table = [["scope", "bin_lo", "bin_hi", "pre_count", "post_count"]]
    edges = [round(-1.0 + i * 0.1, 1) for i in range(21)]
    for g in (stats.overall, *stats.groups):
        for i in range(20):
            hist_table.append([g.group, _fmt(edges[i]), _fmt(edges[i + 1]), g.pre_histogram[i], g.post_histogram[i]])
    svg = _histogram_pair_svg(stats.overall.pre_histogram, stats.overall.post_histogram)
    return _emit(
        args,
        "cohort-report",
        payload,
        {"groups.csv": groups_table, "histograms.csv": hist_table},
        [args.cohort_path],
        extra_files={"histogram_pair.svg": svg},
    )


# ------------------------------------------------------------------- rerun

def cmd_rerun(args) -> int:
    manifest = load_manifest(args.manifest_path)
    for path, digest in manifest["inputs"].items():
        if sha256_file(path) != digest:
            raise ValueError(f"input {path} no longer matches its recorded hash")
    rc = main(manifest["argv"])
    if rc != 0:
        return rc
    mismatched = []
    out_dir = Path(args.manifest_path).parent
    for name, digest in manifest["outputs"].items():
        if sha256_file(out_dir / name) != digest:
            mismatched.append(name)
    if mismatched:
        print(f"error: outputs changed on rerun: {mismatched}", file=sys.stderr)
        return 1
    print(f"reproduced {len(manifest['outputs'])} output file(s) bit-exactly")
    return 0


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="softmesh", description=__doc__)
    parser.add_argument("--version", action="version", version=f"softmesh {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory; all files go inside it")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=1, help="workers; never changes results")

    def add(name, func, **kwargs):
        p = sub.add_parser(name, parents=[common], **kwargs)
        p.set_defaults(func=func)
        return p

    p = add("validate", cmd_validate, help="parse and summarize a snapshot file")
    p.add_argument("snapshot_path")

    p = add("centrality", cmd_centrality, help="rank conduits by betweenness")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--k", type=int, default=DEFAULT_TOP_K)
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = add("diff", cmd_diff, help="node and link changes between two snapshots")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--snapshot-b", required=True)

    p = add("mesh", cmd_mesh, help="top-k conduit persistence between two snapshots")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--snapshot-b", required=True)
    p.add_argument("--k", type=int, default=DEFAULT_TOP_K)

    p = add("density", cmd_density, help="internal-link excess vs degree-preserving null")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--ids", help="comma-separated target node ids (default: top-k conduits)")
    p.add_argument("--k", type=int, default=DEFAULT_TOP_K)
    p.add_argument("--trials", type=int, default=200)

    p = add("replay", cmd_replay, help="replay a removal intervention")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--ids", required=True, help="comma-separated node ids to remove")
    p.add_argument("--k", type=int, default=DEFAULT_TOP_K)

    p = add("tighten", cmd_tighten, help="per category pair link densities and deltas")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--snapshot-b", required=True)

    p = add("coverage", cmd_coverage, help="messaging coverage report")
    p.add_argument("--snapshot", required=True)

    p = add("layout", cmd_layout, help="force-directed map (positions CSV + SVG)")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--gravity", type=float, default=1.0)
    p.add_argument("--repulsion-scale", type=float, default=2.0)
    p.add_argument("--jitter-tolerance", type=float, default=1.0)
    p.add_argument("--shared-scale-with", help="second snapshot; render both on a shared scale")

    p = add("simulate", cmd_simulate, help="run the softening simulation")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--config", help="TOML file mirroring the simulation config fields")

    p = add("cohort-report", cmd_cohort_report, help="analyze a deliberation cohort CSV")
    p.add_argument("cohort_path")

    p = add("rerun", cmd_rerun, help="re-execute a manifest and verify output hashes")
    p.add_argument("manifest_path")

    return parser


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args._argv = list(argv)
    try:
        return args.func(args)
    except (SnapshotError, DegenerateNullError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
