"""Agent-based simulation of repeated anonymous heterogeneous-group rounds.

Each round recruits a fraction of the agent population, sorts recruits
into small groups spanning the view spectrum, and contracts every group's
views by a stochastic factor. Communities whose members drift toward the
middle can tip to Neutral. The engine is a struct-of-arrays design: agent
views live in one numpy array, communities are contiguous slices of it.

All randomness flows through named streams keyed off the config seed:
population init uses (seed, 0); round r uses (seed, 1, r, phase) with
phase 0=recruit, 1=grouping, 2=kernel. Groups within a round are disjoint
and their contraction factors are indexed by group position, so no
execution order or worker count can change a result.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import ndtr, ndtri

from .cohort import DISBANDED, CohortRecord
from .graph import Category, GraphSnapshot
from .rng import stream

HISTOGRAM_EDGES = np.linspace(-1.0, 1.0, 21)

# Subtype given to communities that tip to Neutral.
FLIPPED_SUBTYPE = "flipped"

_INIT_STREAM = 0
_ROUND_STREAM = 1
_PHASE_RECRUIT, _PHASE_GROUPING, _PHASE_KERNEL = 0, 1, 2


class KernelKind(str, Enum):
    MEAN_CONTRACTION = "mean-contraction"
    CENTER_CONTRACTION = "center-contraction"


class GroupingPolicy(str, Enum):
    MAX_HETEROGENEITY = "max-heterogeneity"
    RANDOM = "random"
    LINK_PAIRED = "link-paired"


@dataclass(frozen=True)
class SofteningKernel:
    kind: KernelKind = KernelKind.MEAN_CONTRACTION
    lambda_mean: float = 0.9
    lambda_sd: float = 0.05

    def __post_init__(self):
        if not 0.0 <= self.lambda_mean <= 1.0:
            raise ValueError("lambda_mean must be in [0, 1]")
        if self.lambda_sd < 0:
            raise ValueError("lambda_sd must be nonnegative")


@dataclass(frozen=True)
class SimConfig:
    group_size: int = 5
    min_active: int = 3
    uptake: float = 0.2
    round_hours: float = 1.0
    horizon_hours: float = 672.0
    grouping: GroupingPolicy = GroupingPolicy.MAX_HETEROGENEITY
    tipping_threshold: float = 0.25
    moderate_band: float = 0.33
    seed: int = 0
    population_scale: float = 1.0
    kernel: SofteningKernel = SofteningKernel()
    extreme_band: float = 0.8

    def __post_init__(self):
        if self.group_size < 1:
            raise ValueError("group_size must be >= 1")
        if not 1 <= self.min_active <= self.group_size:
            raise ValueError("min_active must be in [1, group_size]")
        if not 0.0 < self.uptake <= 1.0:
            raise ValueError("uptake must be in (0, 1]")
        if self.round_hours <= 0 or self.horizon_hours <= 0:
            raise ValueError("round_hours and horizon_hours must be positive")
        for name in ("tipping_threshold", "moderate_band", "extreme_band"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ValueError(f"{name} must be in (0, 1)")
        if not 0.0 < self.population_scale <= 1.0:
            raise ValueError("population_scale must be in (0, 1]")


def config_from_dict(data: dict) -> SimConfig:
    """Build a SimConfig from a parsed config file (field names match 1:1)."""
    data = dict(data)
    kwargs: dict = {}
    kernel_raw = data.pop("kernel", None)
    if kernel_raw is not None:
        kernel_raw = dict(kernel_raw)
        kind = kernel_raw.pop("kind", KernelKind.MEAN_CONTRACTION)
        try:
            kind = KernelKind(kind)
        except ValueError:
            raise ValueError(
                f"unknown kernel kind {kind!r}; expected one of {[k.value for k in KernelKind]}"
            ) from None
        kwargs["kernel"] = SofteningKernel(kind=kind, **kernel_raw)
    if "grouping" in data:
        raw = data.pop("grouping")
        try:
            kwargs["grouping"] = GroupingPolicy(raw)
        except ValueError:
            raise ValueError(
                f"unknown grouping {raw!r}; expected one of {[g.value for g in GroupingPolicy]}"
            ) from None
    known = set(SimConfig.__dataclass_fields__) - {"kernel", "grouping"}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config field(s): {sorted(unknown)}")
    return SimConfig(**data, **kwargs)


def config_to_dict(config: SimConfig) -> dict:
    return {
        "group_size": config.group_size,
        "min_active": config.min_active,
        "uptake": config.uptake,
        "round_hours": config.round_hours,
        "horizon_hours": config.horizon_hours,
        "grouping": config.grouping.value,
        "tipping_threshold": config.tipping_threshold,
        "moderate_band": config.moderate_band,
        "seed": config.seed,
        "population_scale": config.population_scale,
        "kernel": {
            "kind": config.kernel.kind.value,
            "lambda_mean": config.kernel.lambda_mean,
            "lambda_sd": config.kernel.lambda_sd,
        },
        "extreme_band": config.extreme_band,
    }


@dataclass(frozen=True)
class Agent:
    id: int
    view: float
    community: str

    def __post_init__(self):
        if not -1.0 <= self.view <= 1.0:
            raise ValueError(f"agent {self.id}: view {self.view} outside [-1, 1]")


@dataclass
class CommunityState:
    id: str
    category: Category
    subtype: str | None


DEFAULT_VIEW_SAMPLERS = {
    Category.ANTI: lambda rng, size: rng.uniform(-1.0, -0.5, size),
    Category.PRO: lambda rng, size: rng.uniform(0.5, 1.0, size),
    Category.NEUTRAL: lambda rng, size: rng.triangular(-0.5, 0.0, 0.5, size),
}


class Population:
    """Agent views in one array; each community owns a contiguous slice."""

    def __init__(
        self,
        views: np.ndarray,
        communities: list[CommunityState],
        spans: list[tuple[int, int]],
        cross_pairs: tuple[tuple[int, int], ...],
    ):
        self.views = views
        self.communities = communities
        self.spans = spans
        self.cross_pairs = cross_pairs
        self._starts = [lo for lo, _ in spans]

    @property
    def size(self) -> int:
        return len(self.views)

    def community_index_of(self, agent_id: int) -> int:
        return bisect_right(self._starts, agent_id) - 1

    def agent(self, agent_id: int) -> Agent:
        community = self.communities[self.community_index_of(agent_id)]
        return Agent(agent_id, float(self.views[agent_id]), community.id)

    def agents(self):
        return (self.agent(i) for i in range(self.size))

    def category_counts(self) -> dict[Category, int]:
        counts = Counter(c.category for c in self.communities)
        return {c: counts.get(c, 0) for c in Category}


def init_population(
    s: GraphSnapshot, scale: float, seed: int, view_samplers: dict | None = None
) -> Population:
    """Spawn round(scale * user_count) agents per Active node.

    Views are drawn from the node's category distribution: Anti uniform on
    [-1, -0.5], Pro uniform on [0.5, 1], Neutral triangular on [-0.5, 0.5]
    peaked at 0 (override via view_samplers).
    """
    if not 0.0 < scale <= 1.0:
        raise ValueError("scale must be in (0, 1]")
    samplers = dict(DEFAULT_VIEW_SAMPLERS)
    if view_samplers:
        samplers.update(view_samplers)
    rng = stream(seed, _INIT_STREAM)
    active = sorted(s.active_ids)
    chunks = []
    communities = []
    spans = []
    cursor = 0
    for node_id in active:
        node = s.by_id[node_id]
        count = math.floor(scale * node.user_count + 0.5)
        chunks.append(np.clip(samplers[node.category](rng, count), -1.0, 1.0))
        communities.append(CommunityState(node.id, node.category, node.subtype))
        spans.append((cursor, cursor + count))
        cursor += count
    if cursor == 0:
        raise ValueError("population is empty: scale * user_count rounds to 0 everywhere")
    index = {c.id: i for i, c in enumerate(communities)}
    pairs = set()
    for ln in s.links:
        if ln.source in index and ln.target in index:
            ci, cj = index[ln.source], index[ln.target]
            if communities[ci].category is not communities[cj].category:
                pairs.add((min(ci, cj), max(ci, cj)))
    return Population(np.concatenate(chunks), communities, spans, tuple(sorted(pairs)))


def recruit(pop: Population, config: SimConfig, round_rng: np.random.Generator) -> np.ndarray:
    """Agent indices invited this round.

    Most policies recruit each agent independently with probability uptake.
    LinkPaired first samples cross-category linked community pairs (each
    kept with probability 1/2) and recruits only from the sampled pairs.
    """
    if config.grouping is GroupingPolicy.LINK_PAIRED:
        kept = round_rng.random(len(pop.cross_pairs)) < 0.5
        eligible = np.zeros(pop.size, dtype=bool)
        for (ci, cj), take in zip(pop.cross_pairs, kept):
            if take:
                for c in (ci, cj):
                    lo, hi = pop.spans[c]
                    eligible[lo:hi] = True
        mask = (round_rng.random(pop.size) < config.uptake) & eligible
    else:
        mask = round_rng.random(pop.size) < config.uptake
    return np.flatnonzero(mask)


def form_groups(
    participants: np.ndarray,
    views: np.ndarray,
    config: SimConfig,
    round_rng: np.random.Generator,
) -> list[np.ndarray]:
    """Partition participants into groups; undersized leftovers are disbanded.

    MaxHeterogeneity sorts by view, cuts the order into group_size quantile
    strata, shuffles within each stratum, and builds group j from the j-th
    member of every stratum, so each group spans the spectrum. Random just
    shuffles and chunks. Groups below min_active are dropped (their members
    keep their views this round).
    """
    participants = np.asarray(participants, dtype=int)
    if len(participants) == 0:
        return []
    g = config.group_size
    groups: list[np.ndarray] = []
    if config.grouping is GroupingPolicy.RANDOM:
        order = participants.copy()
        round_rng.shuffle(order)
        for lo in range(0, len(order), g):
            chunk = order[lo : lo + g]
            if len(chunk) >= config.min_active:
                groups.append(chunk)
        return groups
    # LinkPaired recruits differently but builds groups the same way.
    ranked = participants[np.lexsort((participants, views[participants]))]
    base, rem = divmod(len(ranked), g)
    strata = []
    start = 0
    for s_i in range(g):
        size = base + (1 if s_i < rem else 0)
        stratum = ranked[start : start + size].copy()
        round_rng.shuffle(stratum)
        strata.append(stratum)
        start += size
    for j in range(base + (1 if rem else 0)):
        members = np.array([st[j] for st in strata if len(st) > j], dtype=int)
        if len(members) >= config.min_active:
            groups.append(members)
    return groups


def sample_lambda(u, kernel: SofteningKernel) -> np.ndarray:
    """Map uniforms to Normal(lambda_mean, lambda_sd) truncated to [0, 1]."""
    u = np.asarray(u, dtype=float)
    if kernel.lambda_sd == 0:
        lam = np.full(u.shape, float(kernel.lambda_mean))
    else:
        lo = ndtr((0.0 - kernel.lambda_mean) / kernel.lambda_sd)
        hi = ndtr((1.0 - kernel.lambda_mean) / kernel.lambda_sd)
        with np.errstate(divide="ignore"):
            lam = kernel.lambda_mean + kernel.lambda_sd * ndtri(lo + u * (hi - lo))
    return np.clip(lam, 0.0, 1.0)


def _contract(pre: np.ndarray, kind: KernelKind, lam: float) -> np.ndarray:
    if lam == 1.0:
        # Exact identity; m + lam*(x - m) would reintroduce rounding.
        return pre.copy()
    if kind is KernelKind.MEAN_CONTRACTION:
        mean = pre.mean()
        post = mean + lam * (pre - mean)
    else:
        post = lam * pre
    return np.clip(post, -1.0, 1.0)


def apply_group_softening(
    group_views: np.ndarray, kernel: SofteningKernel, group_rng: np.random.Generator
) -> np.ndarray:
    """One deliberation round for one group: contract views by a drawn factor."""
    lam = float(sample_lambda(group_rng.random(), kernel))
    return _contract(np.asarray(group_views, dtype=float), kernel.kind, lam)


def _soften_groups(
    views: np.ndarray,
    groups: list[np.ndarray],
    kernel: SofteningKernel,
    kernel_rng: np.random.Generator,
) -> None:
    """Apply the kernel to every group at once; factor i belongs to group i."""
    if not groups:
        return
    lams = sample_lambda(kernel_rng.random(len(groups)), kernel)
    idx = np.concatenate(groups)
    gid = np.repeat(np.arange(len(groups)), [len(g) for g in groups])
    pre = views[idx]
    if kernel.kind is KernelKind.MEAN_CONTRACTION:
        means = np.bincount(gid, weights=pre) / np.bincount(gid)
        post = means[gid] + lams[gid] * (pre - means[gid])
    else:
        post = lams[gid] * pre
    views[idx] = np.where(lams[gid] == 1.0, pre, np.clip(post, -1.0, 1.0))


def check_tipping(views: np.ndarray, category: Category, config: SimConfig) -> float | None:
    """Moderated fraction if this community should flip to Neutral, else None.

    Only Anti and Pro communities can flip, and only once.
    """
    if category is Category.NEUTRAL or len(views) == 0:
        return None
    fraction = float(np.mean(np.abs(views) < config.moderate_band))
    return fraction if fraction >= config.tipping_threshold else None


@dataclass(frozen=True)
class FlipEvent:
    hour: float
    community: str
    from_category: Category
    moderated_fraction: float


@dataclass(frozen=True)
class SimRound:
    hour: float
    histogram: tuple[int, ...]
    mean_view: float
    mean_abs_view: float
    fraction_extreme: float
    community_counts: dict[Category, int]


@dataclass(frozen=True)
class SimTimeSeries:
    rows: tuple[SimRound, ...]
    flips: tuple[FlipEvent, ...]
    population: int


@dataclass
class SimState:
    population: Population
    hour: float = 0.0
    round_index: int = 0
    rows: list[SimRound] = field(default_factory=list)
    flips: list[FlipEvent] = field(default_factory=list)

    @classmethod
    def start(cls, s: GraphSnapshot, config: SimConfig) -> "SimState":
        state = cls(init_population(s, config.population_scale, config.seed))
        state.rows.append(_row(state, config))
        return state


def _row(state: SimState, config: SimConfig) -> SimRound:
    views = state.population.views
    counts, _ = np.histogram(views, bins=HISTOGRAM_EDGES)
    return SimRound(
        hour=state.hour,
        histogram=tuple(int(c) for c in counts),
        mean_view=float(views.mean()),
        mean_abs_view=float(np.abs(views).mean()),
        fraction_extreme=float(np.mean(np.abs(views) > config.extreme_band)),
        community_counts=state.population.category_counts(),
    )


def step_round(state: SimState, config: SimConfig) -> SimState:
    """Advance one round: recruit, group, soften, tip, record."""
    r = state.round_index
    pop = state.population
    participants = recruit(pop, config, stream(config.seed, _ROUND_STREAM, r, _PHASE_RECRUIT))
    groups = form_groups(
        participants, pop.views, config, stream(config.seed, _ROUND_STREAM, r, _PHASE_GROUPING)
    )
    _soften_groups(pop.views, groups, config.kernel, stream(config.seed, _ROUND_STREAM, r, _PHASE_KERNEL))
    state.hour = (r + 1) * config.round_hours
    for ci, community in enumerate(pop.communities):
        lo, hi = pop.spans[ci]
        fraction = check_tipping(pop.views[lo:hi], community.category, config)
        if fraction is not None:
            state.flips.append(FlipEvent(state.hour, community.id, community.category, fraction))
            community.category = Category.NEUTRAL
            community.subtype = FLIPPED_SUBTYPE
    state.rows.append(_row(state, config))
    state.round_index += 1
    return state


def run_simulation(s: GraphSnapshot, config: SimConfig) -> SimTimeSeries:
    """floor(horizon/round) rounds from a fresh population; fully seeded."""
    if config.horizon_hours < config.round_hours:
        raise ValueError("horizon_hours must be at least one round long")
    state = SimState.start(s, config)
    rounds = int(math.floor(config.horizon_hours / config.round_hours + 1e-9))
    for _ in range(rounds):
        step_round(state, config)
    return SimTimeSeries(
        rows=tuple(state.rows), flips=tuple(state.flips), population=state.population.size
    )


_TIME_METRICS = ("fraction_extreme", "mean_abs_view", "mean_view")


def estimate_time_to_softening(
    ts: SimTimeSeries, metric: str = "fraction_extreme", factor: float = 0.5
) -> float | None:
    """First hour at which metric <= factor * its initial value; None if never."""
    if metric not in _TIME_METRICS:
        raise ValueError(f"metric must be one of {_TIME_METRICS}")
    if not ts.rows:
        raise ValueError("empty time series")
    target = factor * getattr(ts.rows[0], metric)
    for row in ts.rows:
        if getattr(row, metric) <= target:
            return row.hour
    return None


def run_round_as_cohort(
    pop: Population, config: SimConfig, round_index: int = 0
) -> list[CohortRecord]:
    """Export one round's deliberation as cohort records, without mutating pop.

    Recruited agents who never reached a quorate group appear as disbanded
    rows with post equal to pre.
    """
    r = round_index
    views = pop.views.copy()
    participants = recruit(pop, config, stream(config.seed, _ROUND_STREAM, r, _PHASE_RECRUIT))
    groups = form_groups(
        participants, views, config, stream(config.seed, _ROUND_STREAM, r, _PHASE_GROUPING)
    )
    post = views.copy()
    _soften_groups(post, groups, config.kernel, stream(config.seed, _ROUND_STREAM, r, _PHASE_KERNEL))
    records = []
    grouped = set()
    for j, members in enumerate(groups):
        for i in members:
            grouped.add(int(i))
            records.append(
                CohortRecord(f"a{int(i):06d}", f"g{j:04d}", float(views[i]), float(post[i]))
            )
    for i in participants:
        if int(i) not in grouped:
            records.append(CohortRecord(f"a{int(i):06d}", DISBANDED, float(views[i]), float(views[i])))
    return records
