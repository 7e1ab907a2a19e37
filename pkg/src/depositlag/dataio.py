"""Reading and writing the line-delimited JSON and CSV file formats."""

from __future__ import annotations

import csv
import io
import json
from datetime import date
from pathlib import Path
from typing import Iterable, Iterator

from depositlag.linkage import AmbiguousKey, LinkPair, Rejection
from depositlag.model import LinkedPublication, RepositoryInfo, parse_date
from depositlag.normalize import MatchKey


def iter_jsonl(path: str | Path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc


def jsonl_text(rows: Iterable[dict]) -> str:
    return "".join(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n" for r in rows)


def csv_text(header: Iterable[str], rows: Iterable[Iterable]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(header))
    w.writerows(rows)
    return buf.getvalue()


def load_repositories(path: str | Path) -> dict[str, RepositoryInfo]:
    """Repository registry: a JSON list of objects, or an object keyed by repo_id."""
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(obj, dict):
        obj = [{"repo_id": k, **v} for k, v in obj.items()]
    repos = {}
    for item in obj:
        info = RepositoryInfo.from_json(item)
        if info.repo_id in repos:
            raise ValueError(f"duplicate repo_id {info.repo_id!r} in {path}")
        repos[info.repo_id] = info
    return repos


def load_scraped(path: str | Path) -> dict[str, date]:
    """Scraped deposit dates as CSV with ``record_id,deposit_date`` columns."""
    with open(path, encoding="utf-8", newline="") as fh:
        return {row["record_id"]: parse_date(row["deposit_date"]) for row in csv.DictReader(fh)}


def load_linked(path: str | Path) -> list[LinkedPublication]:
    return [LinkedPublication.from_json(obj) for obj in iter_jsonl(path)]


def rejections_csv(rejections: Iterable[Rejection]) -> str:
    return csv_text(
        ("source", "ref", "reason", "detail"),
        ((r.source, r.ref, r.reason.value, r.detail) for r in rejections),
    )


def ambiguous_csv(ambiguous: Iterable[AmbiguousKey]) -> str:
    return csv_text(
        ("norm_title", "year", "norm_family", "reason", "dois"),
        ((a.key.norm_title, a.key.year, a.key.norm_family, "AMBIGUOUS_KEY", ";".join(a.dois)) for a in ambiguous),
    )


def links_csv(pairs: Iterable[LinkPair]) -> str:
    return csv_text(
        ("registry_doi", "repository_record_id", "repository_doi", "norm_title", "year", "norm_family"),
        (
            (p.registry_doi, p.repository_record_id, p.repository_doi or "", p.key.norm_title, p.key.year, p.key.norm_family)
            for p in pairs
        ),
    )


def load_links(path: str | Path) -> list[LinkPair]:
    with open(path, encoding="utf-8", newline="") as fh:
        return [
            LinkPair(
                row["registry_doi"],
                row["repository_record_id"],
                MatchKey(row.get("norm_title", ""), int(row.get("year") or 0), row.get("norm_family", "")),
                row.get("repository_doi") or None,
            )
            for row in csv.DictReader(fh)
        ]
