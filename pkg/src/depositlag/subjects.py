"""Subject tagging from reader counts, fractional counting, and panel mapping."""

from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Optional

import requests

from depositlag.model import LinkedPublication
from depositlag.normalize import normalize_doi

PANELS = ("A", "B", "C", "D", "n/a")


@dataclass(frozen=True)
class SubjectProfile:
    doi: str
    reader_counts: Mapping[str, int] = field(default_factory=dict)


def tag_subjects(profile: Optional[SubjectProfile]) -> frozenset[str]:
    """Subjects with the most readers; all of them on a tie. Empty when nothing can be tagged."""
    if profile is None or not profile.reader_counts:
        return frozenset()
    top = max(profile.reader_counts.values())
    if top <= 0:
        return frozenset()
    return frozenset(s for s, n in profile.reader_counts.items() if n == top)


def fractional_counts(tag_sets: Iterable[Iterable[str]]) -> dict[str, float]:
    """Each publication contributes ``1/k`` to each of its ``k`` subjects."""
    totals: dict[str, float] = defaultdict(float)
    for tags in tag_sets:
        tags = set(tags)
        if not tags:
            raise ValueError("publication has no subject tags")
        share = 1.0 / len(tags)
        for t in tags:
            totals[t] += share
    return dict(sorted(totals.items()))


class UnknownSubjectError(KeyError):
    def __init__(self, label: str):
        super().__init__(label)
        self.label = label

    def __str__(self) -> str:
        return f"no panel mapping for subject {self.label!r}"


class PanelMapping:
    """Subject label to REF main panel (A-D, or ``n/a``)."""

    def __init__(self, table: Mapping[str, str]):
        bad = {s: p for s, p in table.items() if p not in PANELS}
        if bad:
            raise ValueError(f"unknown panels in mapping: {bad}")
        self.table = dict(table)

    def __len__(self) -> int:
        return len(self.table)

    def __call__(self, label: str) -> str:
        return self.map(label)

    def map(self, label: str) -> str:
        try:
            return self.table[label]
        except KeyError:
            raise UnknownSubjectError(label) from None

    def panels_for(self, subjects: Iterable[str]) -> frozenset[str]:
        return frozenset(self.map(s) for s in subjects)

    @classmethod
    def from_csv(cls, text: str) -> "PanelMapping":
        rows = csv.DictReader(io.StringIO(text))
        return cls({r["subject"].strip(): r["panel"].strip() for r in rows})

    @classmethod
    def load(cls, path: str | Path | None = None) -> "PanelMapping":
        if path is None:
            text = resources.files("depositlag").joinpath("data/ref2021_panels.csv").read_text(encoding="utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        return cls.from_csv(text)


def map_to_panel(label: str, mapping: Optional[PanelMapping] = None) -> str:
    return (mapping or PanelMapping.load()).map(label)


def load_profiles(path: str | Path) -> dict[str, SubjectProfile]:
    """Read ``{"doi": ..., "counts": {label: n}}`` lines keyed by normalized DOI."""
    out: dict[str, SubjectProfile] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            doi = normalize_doi(obj["doi"])
            out[doi] = SubjectProfile(doi, {k: int(v) for k, v in (obj.get("counts") or {}).items()})
    return out


@dataclass
class TaggingSummary:
    tagged: int
    no_profile: int
    untaggable: int


def tag_publications(
    publications: Iterable[LinkedPublication],
    profiles: Mapping[str, SubjectProfile],
    mapping: PanelMapping,
) -> TaggingSummary:
    """Set ``subjects`` and ``panels`` in place; untagged publications keep ``None``."""
    summary = TaggingSummary(0, 0, 0)
    for pub in publications:
        profile = profiles.get(pub.doi)
        if profile is None:
            summary.no_profile += 1
            continue
        tags = tag_subjects(profile)
        if not tags:
            summary.untaggable += 1
            continue
        pub.subjects = tags
        pub.panels = mapping.panels_for(tags)
        summary.tagged += 1
    return summary


class ReaderProfileClient:
    """Fetches reader counts from a catalog endpoint shaped like Mendeley's.

    ``GET {base_url}/catalog?doi=<doi>&view=stats`` returns a JSON list of
    documents, each with ``reader_count_by_subject_area``.
    """

    def __init__(self, base_url: str, session: Optional[requests.Session] = None, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.session = session or requests.Session()
        self.timeout = timeout

    def fetch(self, doi: str) -> Optional[SubjectProfile]:
        doi = normalize_doi(doi)
        resp = self.session.get(
            f"{self.base_url}/catalog", params={"doi": doi, "view": "stats"}, timeout=self.timeout
        )
        if resp.status_code == 404:
            return None
        resp.raise_for_status()
        docs = resp.json()
        if not docs:
            return None
        counts = docs[0].get("reader_count_by_subject_area") or {}
        return SubjectProfile(doi, {k: int(v) for k, v in counts.items()})

    def fetch_all(self, dois: Iterable[str]) -> dict[str, SubjectProfile]:
        out = {}
        for doi in dois:
            profile = self.fetch(doi)
            if profile is not None:
                out[profile.doi] = profile
        return out


def dump_profiles(profiles: Iterable[SubjectProfile]) -> str:
    return "".join(
        json.dumps({"doi": p.doi, "counts": dict(sorted(p.reader_counts.items()))}, sort_keys=True) + "\n"
        for p in sorted(profiles, key=lambda p: p.doi)
    )


__all__ = [
    "PanelMapping",
    "ReaderProfileClient",
    "SubjectProfile",
    "TaggingSummary",
    "UnknownSubjectError",
    "dump_profiles",
    "fractional_counts",
    "load_profiles",
    "map_to_panel",
    "tag_publications",
    "tag_subjects",
]
