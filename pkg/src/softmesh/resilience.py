"""Snapshot comparison, core-mesh persistence, and link-density null models.

Answers two structural questions about a pair of ecology snapshots: what
did an intervention remove, and did the high-betweenness core survive it.
Also quantifies whether a node set is more densely linked than its degrees
alone would predict, via a degree-preserving rewiring null model.
"""

from __future__ import annotations

import itertools
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy import stats

from .centrality import DEFAULT_TOP_K, betweenness, top_k_conduits
from .graph import Category, GraphSnapshot, SnapshotError, Status, content_flow_graph
from .rng import stream

# Delta marker for a category pair that has no density in the first
# snapshot but gains one in the second.
NEW_PAIR = "new"

_CATEGORIES = (Category.ANTI, Category.PRO, Category.NEUTRAL)

CategoryPair = tuple[Category, Category]


class DegenerateNullError(RuntimeError):
    """Every null trial produced the same count, so the z-score is undefined."""


@dataclass(frozen=True)
class SnapshotDiff:
    """Node-level and link-level changes from snapshot A to snapshot B."""

    removed: frozenset[str]
    self_removed: frozenset[str]
    added: frozenset[str]
    link_delta: dict[CategoryPair, int]


@dataclass(frozen=True)
class MeshReport:
    """Before/after comparison of the top-k conduit subnetwork."""

    top_k_before: tuple[str, ...]
    top_k_after: tuple[str, ...]
    membership_overlap: float
    category_share_before: dict[Category, float]
    category_share_after: dict[Category, float]
    replacements: tuple[tuple[str, str, Category], ...]


@dataclass(frozen=True)
class DensityExcess:
    """Observed internal link count against a degree-preserving null."""

    observed_internal_links: int
    null_mean: float
    null_std: float
    z_score: float
    trials: int


@dataclass(frozen=True)
class ReplayResult:
    """Outcome of replaying a removal intervention on one snapshot."""

    post: GraphSnapshot
    mesh: MeshReport
    rank_correlation: float | None


@dataclass(frozen=True)
class TighteningReport:
    """Per ordered category pair: link density in each snapshot and the change.

    A pair with no possible link slots has density None; a delta from None
    to a real density is marked NEW_PAIR, and a delta to None is None.
    """

    density_a: dict[CategoryPair, float | None]
    density_b: dict[CategoryPair, float | None]
    delta: dict[CategoryPair, float | str | None]


@dataclass(frozen=True)
class CoverageReport:
    """How far a per-node messaging campaign reached."""

    coverage_by_category: dict[Category, float]
    overall_coverage: float
    missed_neutral_adjacent: frozenset[str]


def diff_snapshots(a: GraphSnapshot, b: GraphSnapshot) -> SnapshotDiff:
    """Set algebra on ids plus link-count deltas per ordered category pair.

    removed: Active in A but absent from B or Removed in B.
    self_removed: Active in A but Private in B (turned private themselves).
    added: present in B only. link_delta counts links in B minus links in A,
    keyed by the (source category, target category) of each link's own
    snapshot.
    """
    removed = set()
    self_removed = set()
    for node_id in a.active_ids:
        after = b.by_id.get(node_id)
        if after is None or after.status is Status.REMOVED:
            removed.add(node_id)
        elif after.status is Status.PRIVATE:
            self_removed.add(node_id)
    added = set(b.ids) - set(a.ids)
    link_delta = {pair: 0 for pair in itertools.product(_CATEGORIES, repeat=2)}
    for snap, sign in ((a, -1), (b, 1)):
        for ln in snap.links:
            pair = (snap.by_id[ln.source].category, snap.by_id[ln.target].category)
            link_delta[pair] += sign
    return SnapshotDiff(frozenset(removed), frozenset(self_removed), frozenset(added), link_delta)


def _category_share(s: GraphSnapshot, ids: tuple[str, ...]) -> dict[Category, float]:
    if not ids:
        return {}
    counts = Counter(s.by_id[v].category for v in ids)
    return {c: counts[c] / len(ids) for c in _CATEGORIES}


def core_mesh_persistence(
    a: GraphSnapshot, b: GraphSnapshot, k: int = DEFAULT_TOP_K, threads: int = 1
) -> MeshReport:
    """Compare the top-k conduit sets of two snapshots.

    Overlap is |intersection| / max(list lengths). Departed nodes are paired
    with arrived nodes by rank position; this is a reporting heuristic, not
    a claim about which node causally replaced which.
    """
    if k > len(a.nodes) and k > len(b.nodes):
        raise ValueError(f"k={k} exceeds both snapshots' node counts ({len(a.nodes)}, {len(b.nodes)})")
    before = top_k_conduits(a, k=k, threads=threads)
    after = top_k_conduits(b, k=k, threads=threads)
    ids_before = tuple(v for v, _ in before.ranking)
    ids_after = tuple(v for v, _ in after.ranking)
    before_set, after_set = set(ids_before), set(ids_after)
    denom = max(len(ids_before), len(ids_after))
    overlap = len(before_set & after_set) / denom if denom else 1.0
    departed = [v for v in ids_before if v not in after_set]
    arrived = [v for v in ids_after if v not in before_set]
    replacements = tuple(
        (gone, came, b.by_id[came].category) for gone, came in zip(departed, arrived)
    )
    return MeshReport(
        top_k_before=ids_before,
        top_k_after=ids_after,
        membership_overlap=overlap,
        category_share_before=_category_share(a, ids_before),
        category_share_after=_category_share(b, ids_after),
        replacements=replacements,
    )


def _double_edge_swap(
    edges: list[tuple[str, str]], rng: np.random.Generator, target: int
) -> list[tuple[str, str]]:
    """Rewire by swapping the targets of edge pairs, preserving all degrees.

    Swaps that would create a self-loop or duplicate edge are rejected.
    A fixed attempt budget keeps graphs with no valid swap (for example a
    complete digraph) from spinning forever; such graphs simply come back
    unchanged and surface later as a degenerate null.
    """
    edges = list(edges)
    m = len(edges)
    if m < 2 or target <= 0:
        return edges
    present = set(edges)
    done = 0
    budget = max(10_000, 100 * target)
    draws = rng.integers(0, m, size=2 * target + 64).tolist()
    pos = 0
    while done < target and budget > 0:
        if pos + 2 > len(draws):
            draws = rng.integers(0, m, size=8192).tolist()
            pos = 0
        i, j = draws[pos], draws[pos + 1]
        pos += 2
        budget -= 1
        if i == j:
            continue
        a, b = edges[i]
        c, d = edges[j]
        if a == d or c == b or (a, d) in present or (c, b) in present:
            continue
        present.remove((a, b))
        present.remove((c, d))
        present.add((a, d))
        present.add((c, b))
        edges[i] = (a, d)
        edges[j] = (c, b)
        done += 1
    return edges


def _assert_degrees_preserved(before: list[tuple[str, str]], after: list[tuple[str, str]]) -> None:
    assert Counter(s for s, _ in before) == Counter(s for s, _ in after)
    assert Counter(t for _, t in before) == Counter(t for _, t in after)


def _internal_count(edges: list[tuple[str, str]], ids: frozenset[str]) -> int:
    return sum(1 for s, t in edges if s in ids and t in ids)


def _density_trial(
    trial: int, edges: list[tuple[str, str]], ids: frozenset[str], seed: int, swaps: int
) -> int:
    rng = stream(seed, trial)
    rewired = _double_edge_swap(edges, rng, swaps)
    _assert_degrees_preserved(edges, rewired)
    return _internal_count(rewired, ids)


def mesh_density_excess(
    s: GraphSnapshot,
    ids: frozenset[str] | set[str],
    trials: int,
    seed: int,
    workers: int = 1,
) -> DensityExcess:
    """Score how over-linked a node set is relative to a degree-matched null.

    Each trial rewires the whole link set with at least 10x|links| double
    edge swaps and re-counts links internal to `ids`. Trial t draws from an
    RNG stream keyed (seed, t), so results are identical for any worker
    count. The null standard deviation uses ddof=1.
    """
    ids = frozenset(ids)
    unknown = ids - set(s.ids)
    if unknown:
        raise SnapshotError(f"unknown node id(s) in target set: {sorted(unknown)}")
    if len(ids) < 2:
        raise ValueError("target set must contain at least 2 nodes")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    edges = [(ln.source, ln.target) for ln in s.links]
    observed = _internal_count(edges, ids)
    swaps = 10 * len(edges)
    run = partial(_density_trial, edges=edges, ids=ids, seed=seed, swaps=swaps)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(run, range(trials), chunksize=max(1, trials // (4 * workers))))
    else:
        counts = [run(t) for t in range(trials)]
    arr = np.asarray(counts, dtype=float)
    null_mean = float(arr.mean())
    null_std = float(arr.std(ddof=1)) if trials > 1 else 0.0
    if not null_std > 0.0:
        raise DegenerateNullError(
            f"all {trials} null trials gave internal count {counts[0]}; z-score undefined"
        )
    return DensityExcess(
        observed_internal_links=observed,
        null_mean=null_mean,
        null_std=null_std,
        z_score=(observed - null_mean) / null_std,
        trials=trials,
    )


def _spearman(x: list[float], y: list[float]) -> float | None:
    """Rank correlation; 1.0 for identical vectors, None when undefined."""
    if list(x) == list(y):
        return 1.0
    if len(x) < 2 or len(set(x)) < 2 or len(set(y)) < 2:
        return None
    return float(stats.spearmanr(x, y).statistic)


def removal_replay(
    s: GraphSnapshot,
    removal_ids: frozenset[str] | set[str],
    k: int = DEFAULT_TOP_K,
    threads: int = 1,
) -> ReplayResult:
    """Mark the given nodes Removed and measure the effect on the core mesh.

    rank_correlation is the Spearman correlation of surviving nodes'
    betweenness before vs after; surviving means still Active afterwards.
    """
    removal_ids = set(removal_ids)
    unknown = removal_ids - set(s.ids)
    if unknown:
        raise SnapshotError(f"unknown node id(s) in removal set: {sorted(unknown)}")
    post = s.with_statuses({node_id: Status.REMOVED for node_id in removal_ids})
    mesh = core_mesh_persistence(s, post, k=k, threads=threads)
    pre_scores = betweenness(content_flow_graph(s), threads=threads).scores
    post_scores = betweenness(content_flow_graph(post), threads=threads).scores
    survivors = sorted(post.active_ids)
    rho = _spearman([pre_scores[v] for v in survivors], [post_scores[v] for v in survivors])
    return ReplayResult(post=post, mesh=mesh, rank_correlation=rho)


def _pair_densities(s: GraphSnapshot) -> dict[CategoryPair, float | None]:
    node_counts = Counter(n.category for n in s.nodes)
    link_counts = Counter(
        (s.by_id[ln.source].category, s.by_id[ln.target].category) for ln in s.links
    )
    out: dict[CategoryPair, float | None] = {}
    for c1, c2 in itertools.product(_CATEGORIES, repeat=2):
        n1, n2 = node_counts[c1], node_counts[c2]
        slots = n1 * (n1 - 1) if c1 == c2 else n1 * n2
        out[(c1, c2)] = link_counts[(c1, c2)] / slots if slots else None
    return out


def tightening_metrics(a: GraphSnapshot, b: GraphSnapshot) -> TighteningReport:
    """Directed link density per ordered category pair, and B minus A deltas.

    Density for pair (c1, c2) is links(c1 -> c2) divided by the number of
    possible ordered endpoints (n1*n2, or n*(n-1) for a same-category pair).
    """
    density_a = _pair_densities(a)
    density_b = _pair_densities(b)
    delta: dict[CategoryPair, float | str | None] = {}
    for pair in density_a:
        x, y = density_a[pair], density_b[pair]
        if x is None and y is not None:
            delta[pair] = NEW_PAIR
        elif x is None or y is None:
            delta[pair] = None
        else:
            delta[pair] = y - x
    return TighteningReport(density_a=density_a, density_b=density_b, delta=delta)


def messaging_coverage(s: GraphSnapshot) -> CoverageReport:
    """Messaged fractions per category plus the unmessaged Anti nodes that
    sit one link (either direction) from a Neutral node."""
    by_category: dict[Category, float] = {}
    for c in _CATEGORIES:
        group = [n for n in s.nodes if n.category is c]
        if group:
            by_category[c] = sum(n.messaged for n in group) / len(group)
    overall = sum(n.messaged for n in s.nodes) / len(s.nodes) if s.nodes else 0.0
    neutral_ids = {n.id for n in s.nodes if n.category is Category.NEUTRAL}
    neutral_adjacent: set[str] = set()
    for ln in s.links:
        if ln.source in neutral_ids:
            neutral_adjacent.add(ln.target)
        if ln.target in neutral_ids:
            neutral_adjacent.add(ln.source)
    missed = frozenset(
        n.id
        for n in s.nodes
        if n.category is Category.ANTI and not n.messaged and n.id in neutral_adjacent
    )
    return CoverageReport(
        coverage_by_category=by_category,
        overall_coverage=overall,
        missed_neutral_adjacent=missed,
    )
