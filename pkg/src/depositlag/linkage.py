"""Filtering, exact-key linkage, DOI grouping and DOI-based accuracy estimation."""

from __future__ import annotations

import enum
import math
import zlib
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from depositlag.model import (
    NO_COUNTRY,
    AuthorName,
    Deposit,
    LinkedPublication,
    RegistryRecord,
    RepositoryInfo,
    RepositoryRecord,
    parse_date,
)
from depositlag.normalize import (
    InvalidDateError,
    MatchKey,
    NormalizationError,
    build_match_key,
    impute_publication_date,
    normalize_doi,
)

MIN_YEAR = 2013


class Reason(str, enum.Enum):
    MISSING_DOI = "MISSING_DOI"
    MISSING_TITLE = "MISSING_TITLE"
    MISSING_AUTHORS = "MISSING_AUTHORS"
    MISSING_YEAR = "MISSING_YEAR"
    MISSING_MONTH = "MISSING_MONTH"
    INVALID_DATE = "INVALID_DATE"
    PRE_2013 = "PRE_2013"
    DUPLICATE_DOI = "DUPLICATE_DOI"
    DUPLICATE_RECORD_ID = "DUPLICATE_RECORD_ID"
    UNKNOWN_REPOSITORY = "UNKNOWN_REPOSITORY"
    MISSING_FAMILY = "MISSING_FAMILY"
    EMPTY_TITLE_KEY = "EMPTY_TITLE_KEY"
    EMPTY_FAMILY_KEY = "EMPTY_FAMILY_KEY"
    EMPTY_DOI = "EMPTY_DOI"


@dataclass(frozen=True)
class Rejection:
    source: str
    ref: str
    reason: Reason
    detail: str = ""


def _authors(raw) -> tuple[AuthorName, ...]:
    return tuple(AuthorName.from_json(a) for a in (raw or ()))


def _date_parts(raw) -> tuple[Optional[int], Optional[int], Optional[int]]:
    if raw is None:
        return None, None, None
    if isinstance(raw, str):
        parts = [int(p) for p in raw.strip().split("T")[0].split("-") if p]
        parts += [None] * (3 - len(parts))
        return parts[0], parts[1], parts[2]
    if isinstance(raw, (list, tuple)):
        parts = list(raw) + [None] * (3 - len(raw))
        return parts[0], parts[1], parts[2]
    return raw.get("year"), raw.get("month"), raw.get("day")


def _key_reason(exc: NormalizationError) -> Reason:
    return Reason(exc.reason)


def filter_registry(records: Iterable[dict]) -> tuple[list[RegistryRecord], list[Rejection]]:
    """Keep registry records with a title, authors, a month-precision date from 2013 on.

    Records whose match key would be empty, or whose DOI repeats an earlier
    record's, are rejected too.
    """
    kept: list[RegistryRecord] = []
    rejected: list[Rejection] = []
    seen: set[str] = set()
    for i, raw in enumerate(records):
        ref = str(raw.get("doi") or f"#{i}")

        def reject(reason: Reason, detail: str = "") -> None:
            rejected.append(Rejection("registry", ref, reason, detail))

        try:
            doi = normalize_doi(raw.get("doi") or "")
        except NormalizationError:
            reject(Reason.MISSING_DOI)
            continue
        title = (raw.get("title") or "").strip()
        if not title:
            reject(Reason.MISSING_TITLE)
            continue
        authors = _authors(raw.get("authors"))
        if not authors:
            reject(Reason.MISSING_AUTHORS)
            continue
        try:
            year, month, day = _date_parts(raw.get("published"))
        except (TypeError, ValueError) as exc:
            reject(Reason.INVALID_DATE, str(exc))
            continue
        if year is None:
            reject(Reason.MISSING_YEAR)
            continue
        try:
            published = impute_publication_date(year, month, day)
        except NormalizationError as exc:
            reject(_key_reason(exc), str(exc))
            continue
        if published.year < MIN_YEAR:
            reject(Reason.PRE_2013, published.isoformat())
            continue
        try:
            build_match_key(title, published.year, authors)
        except NormalizationError as exc:
            reject(_key_reason(exc), str(exc))
            continue
        accepted = None
        if raw.get("accepted"):
            try:
                accepted = impute_publication_date(*_date_parts(raw["accepted"]))
            except (NormalizationError, TypeError, ValueError):
                accepted = None
        if doi in seen:
            reject(Reason.DUPLICATE_DOI)
            continue
        seen.add(doi)
        kept.append(
            RegistryRecord(
                doi=doi,
                title=title,
                authors=authors,
                published=published,
                issn=tuple(s for s in (raw.get("issn") or ()) if s),
                accepted=accepted,
                affiliation_countries=tuple(raw.get("affiliation_countries") or ()),
            )
        )
    return kept, rejected


def filter_repository(
    records: Iterable[dict], repositories: Mapping[str, RepositoryInfo]
) -> tuple[list[RepositoryRecord], list[Rejection]]:
    """Keep repository records with a title, authors and a year from 2013 on."""
    kept: list[RepositoryRecord] = []
    rejected: list[Rejection] = []
    seen: set[str] = set()
    for i, raw in enumerate(records):
        ref = str(raw.get("record_id") or f"#{i}")

        def reject(reason: Reason, detail: str = "") -> None:
            rejected.append(Rejection("repository", ref, reason, detail))

        title = (raw.get("title") or "").strip()
        if not title:
            reject(Reason.MISSING_TITLE)
            continue
        authors = _authors(raw.get("authors"))
        if not authors:
            reject(Reason.MISSING_AUTHORS)
            continue
        year = raw.get("year")
        if year is None or year == "":
            reject(Reason.MISSING_YEAR)
            continue
        try:
            year = int(year)
        except (TypeError, ValueError):
            reject(Reason.INVALID_DATE, f"year {year!r}")
            continue
        if year < MIN_YEAR:
            reject(Reason.PRE_2013, str(year))
            continue
        try:
            build_match_key(title, year, authors)
        except NormalizationError as exc:
            reject(_key_reason(exc), str(exc))
            continue
        repo = repositories.get(str(raw.get("repo_id")))
        if repo is None:
            reject(Reason.UNKNOWN_REPOSITORY, str(raw.get("repo_id")))
            continue
        deposit_date = None
        if raw.get("deposit_date"):
            try:
                deposit_date = parse_date(raw["deposit_date"])
            except ValueError as exc:
                reject(Reason.INVALID_DATE, str(exc))
                continue
        if ref in seen:
            reject(Reason.DUPLICATE_RECORD_ID)
            continue
        seen.add(ref)
        doi = raw.get("doi") or None
        kept.append(RepositoryRecord(ref, repo, title, authors, year, doi, deposit_date))
    return kept, rejected


@dataclass(frozen=True, order=True)
class LinkPair:
    registry_doi: str
    repository_record_id: str
    key: MatchKey = field(compare=False)
    repository_doi: Optional[str] = field(default=None, compare=False)


@dataclass(frozen=True)
class AmbiguousKey:
    key: MatchKey
    dois: tuple[str, ...]


@dataclass
class LinkResult:
    pairs: list[LinkPair]
    ambiguous: list[AmbiguousKey]
    unmatched_repository: int


def _partition(key: MatchKey, n: int) -> int:
    return zlib.crc32(f"{key.norm_title}\x1f{key.year}\x1f{key.norm_family}".encode()) % n


def _link_partition(
    registry: Sequence[tuple[MatchKey, RegistryRecord]],
    repository: Sequence[tuple[MatchKey, RepositoryRecord]],
) -> LinkResult:
    by_key: dict[MatchKey, list[str]] = defaultdict(list)
    for key, rec in registry:
        by_key[key].append(rec.doi)
    ambiguous = [AmbiguousKey(k, tuple(sorted(d))) for k, d in by_key.items() if len(d) > 1]
    pairs = []
    unmatched = 0
    for key, rec in repository:
        dois = by_key.get(key)
        if not dois:
            unmatched += 1
            continue
        if len(dois) > 1:
            continue
        pairs.append(LinkPair(dois[0], rec.record_id, key, _repo_doi(rec.doi)))
    return LinkResult(pairs, ambiguous, unmatched)


def _repo_doi(raw: Optional[str]) -> Optional[str]:
    if not raw:
        return None
    try:
        return normalize_doi(raw)
    except NormalizationError:
        return None


def link(
    registry: Iterable[RegistryRecord], repository: Iterable[RepositoryRecord], jobs: int = 1
) -> LinkResult:
    """Join repository records to registry records on exact :class:`MatchKey`.

    Keys shared by more than one registry record are not linked; they are
    reported in ``ambiguous``. Repository-side duplicates are fine, since one
    article can sit in several repositories. The result does not depend on
    input order or on ``jobs``.
    """
    jobs = max(1, int(jobs))
    reg_parts: list[list] = [[] for _ in range(jobs)]
    repo_parts: list[list] = [[] for _ in range(jobs)]
    for rec in registry:
        key = build_match_key(rec.title, rec.published.year, rec.authors)
        reg_parts[_partition(key, jobs)].append((key, rec))
    for rec in repository:
        key = build_match_key(rec.title, rec.year, rec.authors)
        repo_parts[_partition(key, jobs)].append((key, rec))
    if jobs == 1:
        results = [_link_partition(reg_parts[0], repo_parts[0])]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_link_partition, reg_parts, repo_parts))
    pairs = sorted({p for r in results for p in r.pairs})
    ambiguous = sorted((a for r in results for a in r.ambiguous), key=lambda a: (a.key, a.dois))
    return LinkResult(pairs, ambiguous, sum(r.unmatched_repository for r in results))


def _index(items, attr: str) -> dict:
    if isinstance(items, Mapping):
        return dict(items)
    return {getattr(x, attr): x for x in items}


def group_by_doi(
    pairs: Iterable[LinkPair],
    registry: Mapping[str, RegistryRecord] | Iterable[RegistryRecord],
    repository: Mapping[str, RepositoryRecord] | Iterable[RepositoryRecord],
) -> list[LinkedPublication]:
    """Collapse link pairs into one publication per registry DOI.

    Every repository record in a pair must already carry a deposit date.
    """
    reg = _index(registry, "doi")
    repo = _index(repository, "record_id")
    grouped: dict[str, set[Deposit]] = defaultdict(set)
    countries: dict[str, set[str]] = defaultdict(set)
    for pair in pairs:
        rec = repo[pair.repository_record_id]
        if rec.deposit_date is None:
            raise ValueError(f"repository record {rec.record_id} has no deposit date")
        grouped[pair.registry_doi].add(Deposit(rec.repository.repo_id, rec.record_id, rec.deposit_date))
        countries[pair.registry_doi].add(rec.repository.country or NO_COUNTRY)
    return [
        LinkedPublication(
            doi=doi,
            registry=reg[doi],
            deposits=sorted(grouped[doi]),
            countries=frozenset(countries[doi]),
        )
        for doi in sorted(grouped)
    ]


class DOIAgreement(str, enum.Enum):
    NO_REPO_DOI = "NO_REPO_DOI"
    EXACT = "EXACT"
    SUBSTRING = "SUBSTRING"
    MISMATCH = "MISMATCH"


def compare_dois(registry_doi: str, repository_doi: Optional[str]) -> DOIAgreement:
    """Compare a registry DOI with the DOI a repository reports for the same link.

    The substring test is one-directional: extra characters on the repository
    side are tolerated, missing ones are not, because a truncated DOI can
    prefix several different registry DOIs.
    """
    repo = _repo_doi(repository_doi)
    if repo is None:
        return DOIAgreement.NO_REPO_DOI
    reg = normalize_doi(registry_doi)
    if reg == repo:
        return DOIAgreement.EXACT
    if reg in repo:
        return DOIAgreement.SUBSTRING
    return DOIAgreement.MISMATCH


@dataclass(frozen=True)
class MatchingAccuracyReport:
    total_pairs: int
    no_repo_doi: int
    both_doi: int
    exact_match: int
    substring_match: int
    mismatch: int

    @property
    def accuracy(self) -> float:
        if self.both_doi == 0:
            return math.nan
        return (self.exact_match + self.substring_match) / self.both_doi

    @property
    def no_doi_share(self) -> float:
        return self.no_repo_doi / self.total_pairs if self.total_pairs else math.nan

    @property
    def exact_share(self) -> float:
        return self.exact_match / self.both_doi if self.both_doi else math.nan

    @property
    def non_match_share(self) -> float:
        """Share of both-DOI pairs whose DOIs are not byte-equal."""
        return (self.substring_match + self.mismatch) / self.both_doi if self.both_doi else math.nan

    @property
    def substring_of_non_match_share(self) -> float:
        non_match = self.substring_match + self.mismatch
        return self.substring_match / non_match if non_match else math.nan

    def to_json(self) -> dict:
        def val(x: float):
            return None if math.isnan(x) else round(x, 6)

        return {
            "total_pairs": self.total_pairs,
            "no_repo_doi": self.no_repo_doi,
            "both_doi": self.both_doi,
            "exact_match": self.exact_match,
            "substring_match": self.substring_match,
            "mismatch": self.mismatch,
            "accuracy": val(self.accuracy),
            "no_doi_share": val(self.no_doi_share),
            "exact_share": val(self.exact_share),
            "non_match_share": val(self.non_match_share),
            "substring_of_non_match_share": val(self.substring_of_non_match_share),
        }


def validate_links_by_doi(pairs: Iterable[LinkPair]) -> MatchingAccuracyReport:
    counts = dict.fromkeys(DOIAgreement, 0)
    for pair in pairs:
        counts[compare_dois(pair.registry_doi, pair.repository_doi)] += 1
    both = counts[DOIAgreement.EXACT] + counts[DOIAgreement.SUBSTRING] + counts[DOIAgreement.MISMATCH]
    return MatchingAccuracyReport(
        total_pairs=both + counts[DOIAgreement.NO_REPO_DOI],
        no_repo_doi=counts[DOIAgreement.NO_REPO_DOI],
        both_doi=both,
        exact_match=counts[DOIAgreement.EXACT],
        substring_match=counts[DOIAgreement.SUBSTRING],
        mismatch=counts[DOIAgreement.MISMATCH],
    )
