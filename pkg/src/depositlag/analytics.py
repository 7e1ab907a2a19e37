"""Deposit time lag, compliance categories and aggregate statistics.

Lag is ``deposit - published`` in days, so a negative lag means the work was
deposited before it was published. Under ``Scope.ANY`` a publication's lag
uses its earliest deposit in any repository; under ``Scope.SINGLE`` it uses
the deposit in the repository (or country) being grouped on.
"""

from __future__ import annotations

import enum
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from depositlag.model import (
    NO_COUNTRY,
    LinkedPublication,
    RegistryRecord,
    RepositoryInfo,
    date_diff_days,
)

DEFAULT_CUTOFF_DAYS = 90
NO_PANEL = "n/a"


class Scope(str, enum.Enum):
    ANY = "ANY"
    SINGLE = "SINGLE"


class GroupBy(str, enum.Enum):
    COUNTRY = "COUNTRY"
    REPOSITORY = "REPOSITORY"
    SUBJECT = "SUBJECT"
    PANEL = "PANEL"


class Metric(str, enum.Enum):
    LAG = "LAG"
    COMPLIANCE = "COMPLIANCE"


class ComplianceCategory(str, enum.Enum):
    LIKELY_COMPLIANT = "LIKELY_COMPLIANT"
    DEFINITELY_NON_COMPLIANT = "DEFINITELY_NON_COMPLIANT"
    NOT_APPLICABLE_NO_ISSN = "NOT_APPLICABLE_NO_ISSN"


def deposit_lag(publication: LinkedPublication, repo_id: Optional[str] = None) -> int:
    """Lag in days to the earliest deposit, anywhere or in ``repo_id`` only."""
    if repo_id is None:
        dates = [d.deposit_date for d in publication.deposits]
    else:
        dates = [d.deposit_date for d in publication.deposits if d.repo_id == repo_id]
        if not dates:
            raise LookupError(f"{publication.doi} has no deposit in repository {repo_id}")
    return date_diff_days(publication.published, min(dates))


def classify_compliance(lag: int, has_issn: bool, cutoff_days: int = DEFAULT_CUTOFF_DAYS) -> ComplianceCategory:
    if not has_issn:
        return ComplianceCategory.NOT_APPLICABLE_NO_ISSN
    if lag <= cutoff_days:
        return ComplianceCategory.LIKELY_COMPLIANT
    return ComplianceCategory.DEFINITELY_NON_COMPLIANT


@dataclass(frozen=True)
class _Obs:
    group: str
    year: int
    lag: int
    weight: float
    has_issn: bool


def _observations(
    publications: Iterable[LinkedPublication],
    group_by: GroupBy,
    scope: Scope,
    repositories: Optional[Mapping[str, RepositoryInfo]] = None,
) -> Iterator[_Obs]:
    group_by, scope = GroupBy(group_by), Scope(scope)
    if scope is Scope.SINGLE and group_by in (GroupBy.SUBJECT, GroupBy.PANEL):
        raise ValueError(f"SINGLE scope is not defined for {group_by.value} grouping")
    if scope is Scope.SINGLE and group_by is GroupBy.COUNTRY and repositories is None:
        raise ValueError("SINGLE scope by country needs the repository registry")
    for pub in publications:
        year, issn = pub.year, pub.has_issn
        any_lag = deposit_lag(pub)
        if group_by is GroupBy.COUNTRY:
            if scope is Scope.ANY:
                for c in pub.countries or {NO_COUNTRY}:
                    yield _Obs(c, year, any_lag, 1.0, issn)
            else:
                first: dict[str, object] = {}
                for d in pub.deposits:
                    info = repositories.get(d.repo_id)
                    c = (info.country if info else None) or NO_COUNTRY
                    if c not in first or d.deposit_date < first[c]:
                        first[c] = d.deposit_date
                for c, when in first.items():
                    yield _Obs(c, year, date_diff_days(pub.published, when), 1.0, issn)
        elif group_by is GroupBy.REPOSITORY:
            for repo_id in sorted({d.repo_id for d in pub.deposits}):
                lag = any_lag if scope is Scope.ANY else deposit_lag(pub, repo_id)
                yield _Obs(repo_id, year, lag, 1.0, issn)
        elif group_by is GroupBy.SUBJECT:
            if pub.subjects:
                w = 1.0 / len(pub.subjects)
                for s in pub.subjects:
                    yield _Obs(s, year, any_lag, w, issn)
        else:
            for p in pub.panels or ():
                if p != NO_PANEL:
                    yield _Obs(p, year, any_lag, 1.0, issn)


@dataclass(frozen=True)
class LagAggregate:
    group_key: str
    year: Optional[int]
    count: float
    mean_lag_days: float
    stddev_days: float
    min_days: int
    max_days: int


def _weighted_stats(values: Sequence[tuple[int, float]], ddof: int) -> tuple[float, float, float]:
    total = math.fsum(w for _, w in values)
    mean = math.fsum(x * w for x, w in values) / total
    denom = total - ddof
    var = math.fsum(w * (x - mean) ** 2 for x, w in values) / denom if denom > 0 else 0.0
    return total, mean, math.sqrt(var)


def aggregate_lag(
    publications: Iterable[LinkedPublication],
    group_by: GroupBy | str = GroupBy.COUNTRY,
    per_year: bool = True,
    cap_days: Optional[int] = None,
    scope: Scope | str = Scope.ANY,
    *,
    repositories: Optional[Mapping[str, RepositoryInfo]] = None,
    ddof: int = 0,
) -> list[LagAggregate]:
    """Mean, spread and range of lag per group (and per publication year).

    With ``cap_days`` set, observations with lag above the cap are dropped
    before aggregating. Countries and panels count a publication fully in
    each of its groups; subjects count it ``1/k`` in each of its ``k`` tags.
    ``ddof=0`` gives the population standard deviation.
    """
    cells: dict[tuple[str, Optional[int]], list[tuple[int, float]]] = defaultdict(list)
    for obs in _observations(publications, group_by, scope, repositories):
        if cap_days is not None and obs.lag > cap_days:
            continue
        cells[(obs.group, obs.year if per_year else None)].append((obs.lag, obs.weight))
    out = []
    for (key, year), values in sorted(cells.items(), key=lambda kv: (kv[0][0], kv[0][1] or 0)):
        count, mean, sd = _weighted_stats(values, ddof)
        lags = [x for x, _ in values]
        out.append(LagAggregate(key, year, count, mean, sd, min(lags), max(lags)))
    return out


@dataclass(frozen=True)
class ComplianceShare:
    group_key: str
    year: Optional[int]
    count: float
    likely_fraction: float
    non_compliant_fraction: float
    excluded_no_issn: float


@dataclass
class ComplianceResult:
    rows: list[ComplianceShare]
    # covers every group seen, including those omitted from ``rows``
    excluded_no_issn: dict[tuple[str, Optional[int]], float]


def compliance_proportions(
    publications: Iterable[LinkedPublication],
    group_by: GroupBy | str = GroupBy.COUNTRY,
    per_year: bool = True,
    scope: Scope | str = Scope.ANY,
    *,
    cutoff_days: int = DEFAULT_CUTOFF_DAYS,
    repositories: Optional[Mapping[str, RepositoryInfo]] = None,
) -> ComplianceResult:
    """Likely-compliant and non-compliant shares among ISSN-bearing publications."""
    likely: dict = defaultdict(float)
    non: dict = defaultdict(float)
    excluded: dict = defaultdict(float)
    for obs in _observations(publications, group_by, scope, repositories):
        cell = (obs.group, obs.year if per_year else None)
        cat = classify_compliance(obs.lag, obs.has_issn, cutoff_days)
        if cat is ComplianceCategory.NOT_APPLICABLE_NO_ISSN:
            excluded[cell] += obs.weight
        elif cat is ComplianceCategory.LIKELY_COMPLIANT:
            likely[cell] += obs.weight
        else:
            non[cell] += obs.weight
    rows = []
    for cell in sorted(set(likely) | set(non), key=lambda c: (c[0], c[1] or 0)):
        n = likely[cell] + non[cell]
        if n <= 0:
            continue
        rows.append(
            ComplianceShare(cell[0], cell[1], n, likely[cell] / n, non[cell] / n, excluded.get(cell, 0.0))
        )
    cells = set(likely) | set(non) | set(excluded)
    return ComplianceResult(rows, {c: excluded.get(c, 0.0) for c in sorted(cells, key=lambda c: (c[0], c[1] or 0))})


@dataclass(frozen=True)
class RepoProfile:
    repo_id: str
    count: int
    single_value: float
    any_value: float


def repo_profiles(
    publications: Iterable[LinkedPublication],
    year: Optional[int],
    min_count: int = 100,
    metric: Metric | str = Metric.LAG,
    *,
    cutoff_days: int = DEFAULT_CUTOFF_DAYS,
) -> list[RepoProfile]:
    """Per-repository "single" vs "any" lag or compliance for one publication year.

    Only repositories with strictly more than ``min_count`` publications in
    the year qualify. For compliance, only ISSN-bearing publications count.
    Sorted ascending by single-repository lag, or descending by
    single-repository compliance.
    """
    metric = Metric(metric)
    single: dict[str, list[int]] = defaultdict(list)
    anywhere: dict[str, list[int]] = defaultdict(list)
    for pub in publications:
        if year is not None and pub.year != year:
            continue
        if metric is Metric.COMPLIANCE and not pub.has_issn:
            continue
        any_lag = deposit_lag(pub)
        for repo_id in {d.repo_id for d in pub.deposits}:
            single[repo_id].append(deposit_lag(pub, repo_id))
            anywhere[repo_id].append(any_lag)

    def summarize(lags: list[int]) -> float:
        if metric is Metric.LAG:
            return math.fsum(lags) / len(lags)
        return sum(1 for x in lags if x <= cutoff_days) / len(lags)

    out = [
        RepoProfile(r, len(single[r]), summarize(single[r]), summarize(anywhere[r]))
        for r in single
        if len(single[r]) > min_count
    ]
    if metric is Metric.LAG:
        out.sort(key=lambda p: (p.single_value, p.repo_id))
    else:
        out.sort(key=lambda p: (-p.single_value, p.repo_id))
    return out


@dataclass(frozen=True)
class Dispersion:
    n: int
    range_days: float
    stddev_days: float


def dispersion(values: Iterable[float], ddof: int = 0) -> Dispersion:
    """Range and standard deviation (population by default) across groups."""
    vals = list(values)
    if len(vals) < 2:
        raise ValueError("dispersion needs at least two values")
    mean = math.fsum(vals) / len(vals)
    var = math.fsum((v - mean) ** 2 for v in vals) / (len(vals) - ddof)
    return Dispersion(len(vals), max(vals) - min(vals), math.sqrt(var))


@dataclass(frozen=True)
class Bin:
    lower_inclusive: int
    upper_exclusive: int
    count: int


@dataclass(frozen=True)
class Histogram:
    bin_width_days: int
    bins: tuple[Bin, ...]

    @property
    def total(self) -> int:
        return sum(b.count for b in self.bins)


def lag_histogram(lags: Iterable[int], bin_width_days: int = 30) -> Histogram:
    """Histogram with a bin edge at lag 0; bins run contiguously from the lowest to highest lag."""
    if bin_width_days <= 0:
        raise ValueError("bin width must be positive")
    counts: dict[int, int] = defaultdict(int)
    for lag in lags:
        counts[lag // bin_width_days] += 1
    if not counts:
        return Histogram(bin_width_days, ())
    lo, hi = min(counts), max(counts)
    bins = tuple(
        Bin(i * bin_width_days, (i + 1) * bin_width_days, counts.get(i, 0)) for i in range(lo, hi + 1)
    )
    return Histogram(bin_width_days, bins)


@dataclass(frozen=True)
class AcceptanceAudit:
    populated: int
    equal_to_published: int
    later_than_published: int
    earlier_than_published: int

    @property
    def equal_share(self) -> float:
        return self.equal_to_published / self.populated if self.populated else math.nan

    @property
    def later_share(self) -> float:
        return self.later_than_published / self.populated if self.populated else math.nan


def audit_acceptance_dates(records: Iterable[RegistryRecord]) -> AcceptanceAudit:
    """Compare the registry's acceptance date, where present, with the publication date."""
    populated = equal = later = earlier = 0
    for rec in records:
        if rec.accepted is None:
            continue
        populated += 1
        if rec.accepted == rec.published:
            equal += 1
        elif rec.accepted > rec.published:
            later += 1
        else:
            earlier += 1
    return AcceptanceAudit(populated, equal, later, earlier)
