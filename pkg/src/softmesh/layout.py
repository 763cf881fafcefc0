"""Force-directed ecology maps: node placement plus static SVG rendering.

The placement rule follows the classic ForceAtlas2 recipe: every node pair
repels with strength (deg+1)(deg+1)/distance, every link pulls its
endpoints together proportionally to distance, and an optional gravity
term keeps disconnected pieces on canvas. Step sizes adapt per node via
the swinging/traction heuristic. Repulsion is exact over all pairs; the
ecologies this targets are ~1000 nodes, so no Barnes-Hut approximation
is needed and determinism stays trivial.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .centrality import CentralityResult
from .graph import Category, GraphSnapshot
from .rng import stream

NodePositions = dict[str, tuple[float, float]]

_REPULSION_BLOCK = 256

CANVAS_SIZE = 2000.0
CANVAS_MARGIN = 60.0
MIN_RADIUS = 3.0
MAX_RADIUS = 40.0

CATEGORY_FILL = {Category.ANTI: "#d62728", Category.PRO: "#1f77b4"}
NEUTRAL_PALETTE = (
    "#2ca02c", "#98df8a", "#bcbd22", "#17becf",
    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
)


@dataclass(frozen=True)
class LayoutParams:
    repulsion_scale: float = 2.0
    gravity: float = 1.0
    iterations: int = 100
    seed: int = 0
    jitter_tolerance: float = 1.0

    def __post_init__(self):
        if self.repulsion_scale <= 0:
            raise ValueError("repulsion_scale must be positive")
        if self.gravity < 0:
            raise ValueError("gravity must be nonnegative")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.jitter_tolerance <= 0:
            raise ValueError("jitter_tolerance must be positive")


def _active_layout_inputs(s: GraphSnapshot) -> tuple[list[str], list[tuple[int, int]]]:
    names = sorted(s.active_ids)
    index = {v: i for i, v in enumerate(names)}
    edges = [
        (index[ln.source], index[ln.target])
        for ln in s.links
        if ln.source in index and ln.target in index
    ]
    return names, edges


def _separate_coincident(pos: np.ndarray, rng: np.random.Generator) -> None:
    # Repulsion vanishes at zero distance, so exactly stacked nodes would
    # never separate; nudge them apart before iterating.
    for _ in range(100):
        _, first_idx, counts = np.unique(
            pos, axis=0, return_index=True, return_counts=True
        )
        if not (counts > 1).any():
            return
        stacked = np.ones(len(pos), dtype=bool)
        stacked[first_idx] = False
        pos[stacked] += rng.uniform(-1e-6, 1e-6, size=(int(stacked.sum()), 2))


def _repulsion_rows(pos: np.ndarray, mass: np.ndarray, lo: int, hi: int, k_r: float) -> np.ndarray:
    diff = pos[lo:hi, None, :] - pos[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.maximum(d2, 1e-18, out=d2)
    # Self-pairs have diff exactly 0, so their (huge) weight contributes nothing.
    weight = (k_r * mass[lo:hi, None] * mass[None, :]) / d2
    return np.einsum("ij,ijk->ik", weight, diff)


def force_layout(
    s: GraphSnapshot,
    params: LayoutParams = LayoutParams(),
    threads: int = 1,
    initial_positions: NodePositions | None = None,
) -> NodePositions:
    """Place all Active nodes; deterministic for a given seed and params.

    initial_positions overrides the seeded random start (ids must cover all
    Active nodes); with it the result is independent of the seed.
    """
    names, edges = _active_layout_inputs(s)
    n = len(names)
    if n == 0:
        return {}
    if initial_positions is None:
        rng = stream(params.seed)
        pos = rng.uniform(-1.0, 1.0, size=(n, 2)) * np.sqrt(n)
    else:
        missing = [v for v in names if v not in initial_positions]
        if missing:
            raise ValueError(f"initial_positions missing node(s): {missing[:5]}")
        pos = np.array([initial_positions[v] for v in names], dtype=float)
    _separate_coincident(pos, stream(params.seed, 1))

    degree = np.zeros(n)
    for u, v in edges:
        degree[u] += 1
        degree[v] += 1
    mass = degree + 1.0
    src = np.array([u for u, _ in edges], dtype=int)
    dst = np.array([v for _, v in edges], dtype=int)

    speed = 1.0
    speed_efficiency = 1.0
    prev_force = np.zeros((n, 2))
    blocks = [(lo, min(lo + _REPULSION_BLOCK, n)) for lo in range(0, n, _REPULSION_BLOCK)]

    for _ in range(params.iterations):
        force = np.empty((n, 2))
        if threads > 1 and len(blocks) > 1:
            # Each block fills a disjoint row slice; per-row summation order
            # is fixed, so the thread count cannot change the result.
            with ThreadPoolExecutor(max_workers=threads) as pool:
                futures = [
                    pool.submit(_repulsion_rows, pos, mass, lo, hi, params.repulsion_scale)
                    for lo, hi in blocks
                ]
                for (lo, hi), fut in zip(blocks, futures):
                    force[lo:hi] = fut.result()
        else:
            for lo, hi in blocks:
                force[lo:hi] = _repulsion_rows(pos, mass, lo, hi, params.repulsion_scale)

        if len(src):
            pull = pos[dst] - pos[src]
            np.add.at(force, src, pull)
            np.add.at(force, dst, -pull)

        if params.gravity > 0:
            radius = np.sqrt(np.einsum("ij,ij->i", pos, pos))
            np.maximum(radius, 1e-18, out=radius)
            force -= pos / radius[:, None] * (params.gravity * mass)[:, None]

        swinging = mass * np.linalg.norm(force - prev_force, axis=1)
        traction = 0.5 * mass * np.linalg.norm(force + prev_force, axis=1)
        total_swinging = max(float(swinging.sum()), 1e-12)
        total_traction = max(float(traction.sum()), 1e-12)

        optimal_jitter = 0.05 * np.sqrt(n)
        jitter = params.jitter_tolerance * max(
            np.sqrt(optimal_jitter),
            min(10.0, optimal_jitter * total_traction / n**2),
        )
        if total_swinging / total_traction > 2.0:
            speed_efficiency = max(0.05, speed_efficiency * 0.5)
            jitter = max(jitter, params.jitter_tolerance)
        target_speed = jitter * speed_efficiency * total_traction / total_swinging
        if total_swinging > jitter * total_traction:
            speed_efficiency = max(0.05, speed_efficiency * 0.7)
        elif speed < 1000.0:
            speed_efficiency *= 1.3
        speed = speed + min(target_speed - speed, 0.5 * speed)

        factor = speed / (1.0 + np.sqrt(speed * swinging))
        pos = pos + force * factor[:, None]
        prev_force = force

    return {v: (float(pos[i, 0]), float(pos[i, 1])) for i, v in enumerate(names)}


Bounds = tuple[float, float, float, float]


def positions_bounds(pos: NodePositions) -> Bounds:
    xs = [p[0] for p in pos.values()]
    ys = [p[1] for p in pos.values()]
    if not xs:
        return (0.0, 0.0, 1.0, 1.0)
    return (min(xs), min(ys), max(xs), max(ys))


def _canvas_transform(bounds: Bounds):
    xmin, ymin, xmax, ymax = bounds
    inner = CANVAS_SIZE - 2 * CANVAS_MARGIN

    def scale(value: float, lo: float, hi: float) -> float:
        if hi <= lo:
            return CANVAS_SIZE / 2
        return CANVAS_MARGIN + (value - lo) / (hi - lo) * inner

    return lambda x, y: (scale(x, xmin, xmax), scale(y, ymin, ymax))


def _neutral_fill(s: GraphSnapshot) -> dict[str, str]:
    subtypes = sorted({n.subtype for n in s.nodes if n.category is Category.NEUTRAL})
    return {
        sub: NEUTRAL_PALETTE[i % len(NEUTRAL_PALETTE)] for i, sub in enumerate(subtypes)
    }


def render_svg(
    s: GraphSnapshot,
    pos: NodePositions,
    centrality: CentralityResult,
    bounds: Bounds | None = None,
) -> str:
    """Draw Active nodes and their links; deterministic byte-for-byte.

    Radius grows with the square root of betweenness between fixed clamps;
    anti is red, pro is blue, neutral subtypes cycle a fixed palette.
    Passing explicit bounds puts two snapshots on a shared scale.
    """
    active = sorted(s.active_ids)
    missing = [v for v in active if v not in pos]
    if missing:
        raise ValueError(f"no position for node(s): {missing[:5]}")
    to_canvas = _canvas_transform(bounds if bounds is not None else positions_bounds(pos))
    neutral_fill = _neutral_fill(s)
    top_score = max((centrality.scores.get(v, 0.0) for v in active), default=0.0)

    def radius(v: str) -> float:
        if top_score <= 0:
            return MIN_RADIUS
        frac = np.sqrt(centrality.scores.get(v, 0.0) / top_score)
        return MIN_RADIUS + (MAX_RADIUS - MIN_RADIUS) * float(frac)

    def fill(v: str) -> str:
        node = s.by_id[v]
        if node.category is Category.NEUTRAL:
            return neutral_fill[node.subtype]
        return CATEGORY_FILL[node.category]

    active_set = set(active)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {CANVAS_SIZE:.0f} {CANVAS_SIZE:.0f}">',
        f'<rect width="{CANVAS_SIZE:.0f}" height="{CANVAS_SIZE:.0f}" fill="#ffffff"/>',
    ]
    for ln in s.links:
        if ln.source in active_set and ln.target in active_set:
            x1, y1 = to_canvas(*pos[ln.source])
            x2, y2 = to_canvas(*pos[ln.target])
            lines.append(
                f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
                f'stroke="#bbbbbb" stroke-width="0.5"/>'
            )
    for v in active:
        x, y = to_canvas(*pos[v])
        lines.append(
            f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{radius(v):.2f}" '
            f'fill="{fill(v)}" fill-opacity="0.85"><title>{v}</title></circle>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
