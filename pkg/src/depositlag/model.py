"""Shared domain types.

Calendar dates are plain :class:`datetime.date` values: they are immutable,
always valid Gregorian dates, totally ordered, and subtract to whole days.
Source timestamps are truncated to their date component on the way in.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from datetime import date, datetime
from typing import Optional

NO_COUNTRY = "n/a"

_ISO_DATE = re.compile(r"^\s*(\d{4})-(\d{1,2})-(\d{1,2})")


def date_diff_days(a: date, b: date) -> int:
    """Return ``b - a`` in whole calendar days (exclusive count)."""
    return (b - a).days


def parse_date(value: str | date | datetime) -> date:
    """Parse an ISO-8601 date or timestamp, dropping any time component."""
    if isinstance(value, datetime):
        return value.date()
    if isinstance(value, date):
        return value
    m = _ISO_DATE.match(value)
    if not m:
        raise ValueError(f"not an ISO date: {value!r}")
    return date(int(m.group(1)), int(m.group(2)), int(m.group(3)))


class Platform(str, enum.Enum):
    DSPACE = "DSPACE"
    EPRINTS = "EPRINTS"
    INVENIO = "INVENIO"
    ARXIV = "ARXIV"
    ZENODO = "ZENODO"
    OTHER = "OTHER"

    @classmethod
    def parse(cls, value: str | None) -> "Platform":
        if not value:
            return cls.OTHER
        try:
            return cls(value.strip().upper())
        except ValueError:
            return cls.OTHER


@dataclass(frozen=True)
class AuthorName:
    given: Optional[str] = None
    family: Optional[str] = None
    raw: Optional[str] = None

    @classmethod
    def from_json(cls, obj: dict | str) -> "AuthorName":
        if isinstance(obj, str):
            return cls(raw=obj)
        return cls(given=obj.get("given"), family=obj.get("family"), raw=obj.get("raw"))

    def to_json(self) -> dict:
        return {k: v for k, v in (("given", self.given), ("family", self.family), ("raw", self.raw)) if v is not None}


@dataclass(frozen=True)
class RegistryRecord:
    """Publisher-side metadata; carries the authoritative publication date."""

    doi: str
    title: str
    authors: tuple[AuthorName, ...]
    published: date
    issn: tuple[str, ...] = ()
    accepted: Optional[date] = None
    affiliation_countries: tuple[str, ...] = ()

    @property
    def has_issn(self) -> bool:
        return any(s.strip() for s in self.issn)

    def to_json(self) -> dict:
        out = {
            "doi": self.doi,
            "title": self.title,
            "authors": [a.to_json() for a in self.authors],
            "published": self.published.isoformat(),
            "issn": list(self.issn),
        }
        if self.accepted is not None:
            out["accepted"] = self.accepted.isoformat()
        if self.affiliation_countries:
            out["affiliation_countries"] = list(self.affiliation_countries)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "RegistryRecord":
        accepted = obj.get("accepted")
        return cls(
            doi=obj["doi"],
            title=obj["title"],
            authors=tuple(AuthorName.from_json(a) for a in obj.get("authors", [])),
            published=parse_date(obj["published"]),
            issn=tuple(obj.get("issn") or ()),
            accepted=parse_date(accepted) if accepted else None,
            affiliation_countries=tuple(obj.get("affiliation_countries") or ()),
        )


@dataclass(frozen=True)
class RepositoryInfo:
    repo_id: str
    name: str
    country: Optional[str] = None
    platform: Platform = Platform.OTHER

    @classmethod
    def from_json(cls, obj: dict) -> "RepositoryInfo":
        return cls(
            repo_id=str(obj["repo_id"]),
            name=obj.get("name") or str(obj["repo_id"]),
            country=obj.get("country") or None,
            platform=Platform.parse(obj.get("platform")),
        )

    def to_json(self) -> dict:
        return {"repo_id": self.repo_id, "name": self.name, "country": self.country, "platform": self.platform.value}


@dataclass(frozen=True)
class RepositoryRecord:
    """Repository-side metadata.

    ``deposit_date`` is optional at ingestion time; the harvest stage fills it
    from the ledger or a scraped page when the record itself has none.
    """

    record_id: str
    repository: RepositoryInfo
    title: str
    authors: tuple[AuthorName, ...]
    year: int
    doi: Optional[str] = None
    deposit_date: Optional[date] = None


@dataclass(frozen=True, order=True)
class Deposit:
    repo_id: str
    record_id: str
    deposit_date: date


@dataclass
class LinkedPublication:
    """A registry record joined with every repository deposit matched to it."""

    doi: str
    registry: RegistryRecord
    deposits: list[Deposit]
    countries: frozenset[str] = frozenset()
    subjects: Optional[frozenset[str]] = None
    panels: Optional[frozenset[str]] = None

    @property
    def published(self) -> date:
        return self.registry.published

    @property
    def year(self) -> int:
        return self.registry.published.year

    @property
    def has_issn(self) -> bool:
        return self.registry.has_issn

    def first_deposit(self) -> date:
        return min(d.deposit_date for d in self.deposits)

    def to_json(self) -> dict:
        out = {
            "doi": self.doi,
            "registry": self.registry.to_json(),
            "deposits": [
                {"repo_id": d.repo_id, "record_id": d.record_id, "deposit_date": d.deposit_date.isoformat()}
                for d in self.deposits
            ],
            "countries": sorted(self.countries),
        }
        if self.subjects is not None:
            out["subjects"] = sorted(self.subjects)
        if self.panels is not None:
            out["panels"] = sorted(self.panels)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "LinkedPublication":
        subjects = obj.get("subjects")
        panels = obj.get("panels")
        return cls(
            doi=obj["doi"],
            registry=RegistryRecord.from_json(obj["registry"]),
            deposits=[
                Deposit(d["repo_id"], d["record_id"], parse_date(d["deposit_date"])) for d in obj["deposits"]
            ],
            countries=frozenset(obj.get("countries") or ()),
            subjects=frozenset(subjects) if subjects is not None else None,
            panels=frozenset(panels) if panels is not None else None,
        )
