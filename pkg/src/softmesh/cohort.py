"""Analyzer for deliberation-cohort records: pre/post views per participant.

A cohort file is one row per participant with the group they sat in (or
"disbanded" if their group never reached quorum) and their view on the
[-1, 1] spectrum before and after the round. All statistics here treat
softening as a drop in mean |view|.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from scipy.stats import spearmanr

DISBANDED = "disbanded"
EXTREME_BAND = 0.8

_COLUMNS = ("participant_id", "group_id", "pre", "post")

HISTOGRAM_EDGES = np.linspace(-1.0, 1.0, 21)


class CohortError(ValueError):
    """A cohort file or record violates the format contract."""


@dataclass(frozen=True)
class CohortRecord:
    participant: str
    group: str
    pre: float
    post: float

    def __post_init__(self):
        if not self.participant:
            raise CohortError("participant id must be nonempty")
        for label, value in (("pre", self.pre), ("post", self.post)):
            if not -1.0 <= value <= 1.0:
                raise CohortError(
                    f"participant {self.participant!r}: {label}={value} outside [-1, 1]"
                )
        if self.group == DISBANDED and self.post != self.pre:
            raise CohortError(
                f"participant {self.participant!r}: disbanded but post != pre"
            )


@dataclass(frozen=True)
class GroupStats:
    group: str
    n: int
    pre_histogram: tuple[int, ...]
    post_histogram: tuple[int, ...]
    delta_mean_abs: float
    extremes_delta: float | None
    heterogeneity: float


@dataclass(frozen=True)
class SofteningStats:
    overall: GroupStats
    groups: tuple[GroupStats, ...]


@dataclass(frozen=True)
class HeterogeneityRelation:
    points: tuple[tuple[float, float], ...]
    pearson_r: float | None
    spearman_rho: float | None


def load_cohort(path: Union[str, Path]) -> list[CohortRecord]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = tuple(reader.fieldnames or ())
        if sorted(header) != sorted(_COLUMNS):
            raise CohortError(
                f"{path.name}: expected columns {list(_COLUMNS)}, found {list(header)}"
            )
        records = []
        for lineno, row in enumerate(reader, start=2):
            try:
                pre, post = float(row["pre"]), float(row["post"])
            except (TypeError, ValueError):
                raise CohortError(f"{path.name} line {lineno}: non-numeric score") from None
            try:
                records.append(
                    CohortRecord(row["participant_id"] or "", row["group_id"] or "", pre, post)
                )
            except CohortError as exc:
                raise CohortError(f"{path.name} line {lineno}: {exc}") from None
    return records


def save_cohort(records: list[CohortRecord], path: Union[str, Path]) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_COLUMNS)
        for r in records:
            writer.writerow([r.participant, r.group, repr(r.pre), repr(r.post)])


def _histogram(values: np.ndarray) -> tuple[int, ...]:
    counts, _ = np.histogram(values, bins=HISTOGRAM_EDGES)
    return tuple(int(c) for c in counts)


def _stats_for(label: str, pre: np.ndarray, post: np.ndarray) -> GroupStats:
    # np.std([x, x, x]) leaks rounding noise; identical views are exactly flat.
    heterogeneity = 0.0 if np.ptp(pre) == 0 else float(np.std(pre))
    delta = float(np.mean(np.abs(pre)) - np.mean(np.abs(post)))
    at_extremes = np.abs(pre) >= EXTREME_BAND
    extremes_delta = None
    if at_extremes.any():
        extremes_delta = float(
            np.mean(np.abs(pre[at_extremes])) - np.mean(np.abs(post[at_extremes]))
        )
    return GroupStats(
        group=label,
        n=len(pre),
        pre_histogram=_histogram(pre),
        post_histogram=_histogram(post),
        delta_mean_abs=delta,
        extremes_delta=extremes_delta,
        heterogeneity=heterogeneity,
    )


def softening_stats(cohort: list[CohortRecord]) -> SofteningStats:
    """Per-group plus pooled softening. Disbanded rows join the pool only."""
    if not cohort:
        raise CohortError("empty cohort")
    pre = np.array([r.pre for r in cohort])
    post = np.array([r.post for r in cohort])
    overall = _stats_for("overall", pre, post)
    groups = []
    for gid in sorted({r.group for r in cohort if r.group != DISBANDED}):
        members = [r for r in cohort if r.group == gid]
        groups.append(
            _stats_for(gid, np.array([r.pre for r in members]), np.array([r.post for r in members]))
        )
    return SofteningStats(overall=overall, groups=tuple(groups))


def heterogeneity_softening_relation(cohort: list[CohortRecord]) -> HeterogeneityRelation:
    """One (heterogeneity, softening) point per full group, with correlations.

    Correlations are absent (None) when either axis has zero variance.
    """
    stats = softening_stats(cohort)
    if len(stats.groups) < 2:
        raise CohortError("need at least 2 non-disbanded groups")
    points = tuple((g.heterogeneity, g.delta_mean_abs) for g in stats.groups)
    xs = np.array([p[0] for p in points])
    ys = np.array([p[1] for p in points])
    if np.ptp(xs) == 0 or np.ptp(ys) == 0:
        return HeterogeneityRelation(points, None, None)
    pearson = float(np.corrcoef(xs, ys)[0, 1])
    spearman = float(spearmanr(xs, ys).statistic)
    return HeterogeneityRelation(points, pearson, spearman)
