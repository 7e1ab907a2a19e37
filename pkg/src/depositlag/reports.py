"""Plot-ready CSV tables built from linked publications."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from depositlag import analytics as an
from depositlag.dataio import csv_text
from depositlag.model import LinkedPublication, RepositoryInfo

LAG_HEADER = ("group_key", "year", "count", "mean_lag_days", "stddev_days", "min_days", "max_days")
COMPLIANCE_HEADER = ("group_key", "year", "likely_fraction", "non_compliant_fraction", "excluded_no_issn")
HISTOGRAM_HEADER = ("bin_lower", "bin_upper", "count")


def fmt_count(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else f"{x:.4f}"


def fmt_days(x: float) -> str:
    return f"{x:.2f}"


def fmt_fraction(x: float) -> str:
    return f"{x:.4f}"


def _year(y: Optional[int]) -> str:
    return "" if y is None else str(y)


def lag_table(rows: Iterable[an.LagAggregate]) -> str:
    return csv_text(
        LAG_HEADER,
        (
            (r.group_key, _year(r.year), fmt_count(r.count), fmt_days(r.mean_lag_days), fmt_days(r.stddev_days), r.min_days, r.max_days)
            for r in rows
        ),
    )


def compliance_table(result: an.ComplianceResult) -> str:
    return csv_text(
        COMPLIANCE_HEADER,
        (
            (r.group_key, _year(r.year), fmt_fraction(r.likely_fraction), fmt_fraction(r.non_compliant_fraction), fmt_count(r.excluded_no_issn))
            for r in result.rows
        ),
    )


def histogram_table(hist: an.Histogram) -> str:
    return csv_text(HISTOGRAM_HEADER, ((b.lower_inclusive, b.upper_exclusive, b.count) for b in hist.bins))


@dataclass
class ReportOptions:
    cutoff_days: int = an.DEFAULT_CUTOFF_DAYS
    caps: Sequence[int] = (365, 730)
    min_repo_count: int = 100
    excluded_years: Sequence[int] = ()
    histogram_widths: Sequence[int] = (7, 30)
    ddof: int = 0
    repositories: Mapping[str, RepositoryInfo] = field(default_factory=dict)


def build_reports(publications: Sequence[LinkedPublication], opts: ReportOptions) -> dict[str, str]:
    """Every analytics table, keyed by output file name.

    ``excluded_years`` only applies to the capped tables: years without a
    full observation window would bias a capped mean.
    """
    pubs = list(publications)
    excluded = set(opts.excluded_years)
    capped_pubs = [p for p in pubs if p.year not in excluded]
    out: dict[str, str] = {}

    out["lag_country.csv"] = lag_table(an.aggregate_lag(pubs, an.GroupBy.COUNTRY, True, ddof=opts.ddof))
    for cap in opts.caps:
        out[f"lag_country_cap{cap}.csv"] = lag_table(
            an.aggregate_lag(capped_pubs, an.GroupBy.COUNTRY, True, cap_days=cap, ddof=opts.ddof)
        )
    out["compliance_country.csv"] = compliance_table(
        an.compliance_proportions(pubs, an.GroupBy.COUNTRY, True, cutoff_days=opts.cutoff_days)
    )
    for scope in an.Scope:
        out[f"lag_repository_{scope.value.lower()}.csv"] = lag_table(
            an.aggregate_lag(pubs, an.GroupBy.REPOSITORY, True, scope=scope, ddof=opts.ddof)
        )
        out[f"compliance_repository_{scope.value.lower()}.csv"] = compliance_table(
            an.compliance_proportions(pubs, an.GroupBy.REPOSITORY, True, scope=scope, cutoff_days=opts.cutoff_days)
        )

    years = sorted({p.year for p in pubs})
    lag_profiles, comp_profiles, disp_rows = [], [], []
    for year in years:
        lp = an.repo_profiles(pubs, year, opts.min_repo_count, an.Metric.LAG, cutoff_days=opts.cutoff_days)
        cp = an.repo_profiles(pubs, year, opts.min_repo_count, an.Metric.COMPLIANCE, cutoff_days=opts.cutoff_days)
        lag_profiles += [(p.repo_id, year, p.count, fmt_days(p.single_value), fmt_days(p.any_value)) for p in lp]
        comp_profiles += [(p.repo_id, year, p.count, fmt_fraction(p.single_value), fmt_fraction(p.any_value)) for p in cp]
        for label, values in (("single", [p.single_value for p in lp]), ("any", [p.any_value for p in lp])):
            if len(values) >= 2:
                d = an.dispersion(values, opts.ddof)
                disp_rows.append(("repository_" + label, year, d.n, fmt_days(d.range_days), fmt_days(d.stddev_days)))
    header = ("repo_id", "year", "count", "single_value", "any_value")
    out["repo_profiles_lag.csv"] = csv_text(header, lag_profiles)
    out["repo_profiles_compliance.csv"] = csv_text(header, comp_profiles)

    tagged = [p for p in pubs if p.subjects]
    subject_rows = an.aggregate_lag(tagged, an.GroupBy.SUBJECT, True, ddof=opts.ddof)
    out["lag_subject.csv"] = lag_table(subject_rows)
    by_year = defaultdict(list)
    for r in subject_rows:
        if r.count > opts.min_repo_count:
            by_year[r.year].append(r.mean_lag_days)
    for year in sorted(by_year):
        if len(by_year[year]) >= 2:
            d = an.dispersion(by_year[year], opts.ddof)
            disp_rows.append(("subject", year, d.n, fmt_days(d.range_days), fmt_days(d.stddev_days)))
    out["dispersion.csv"] = csv_text(("grouping", "year", "n_groups", "range_days", "stddev_days"), disp_rows)
    out["compliance_panel.csv"] = compliance_table(
        an.compliance_proportions(tagged, an.GroupBy.PANEL, True, cutoff_days=opts.cutoff_days)
    )

    lags = [an.deposit_lag(p) for p in pubs]
    for width in opts.histogram_widths:
        out[f"histogram_w{width}.csv"] = histogram_table(an.lag_histogram(lags, width))
    return out
