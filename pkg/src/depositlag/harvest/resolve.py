"""Pick the authoritative deposit date for each repository record."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from datetime import date
from typing import Iterable, Mapping, Optional

from depositlag.harvest.ledger import HarvestLedger
from depositlag.model import RepositoryRecord


class Provenance(str, enum.Enum):
    SCRAPED = "SCRAPED"
    LEDGER = "LEDGER"
    SELF = "SELF"


@dataclass
class ResolvedDates:
    records: list[RepositoryRecord]
    provenance: dict[str, Provenance]
    dropped: list[str]


def resolve_deposit_dates(
    records: Iterable[RepositoryRecord],
    ledger: Optional[HarvestLedger] = None,
    scraped: Optional[Mapping[str, date]] = None,
) -> ResolvedDates:
    """Apply the precedence scraped page > ledger first-seen > record's own field.

    Scraped dates win because the ledger can be contaminated by metadata
    updates that happened before it started recording. Records with no
    candidate date at all are dropped.
    """
    scraped = scraped or {}
    out: list[RepositoryRecord] = []
    provenance: dict[str, Provenance] = {}
    dropped: list[str] = []
    for rec in records:
        if rec.record_id in scraped:
            chosen, source = scraped[rec.record_id], Provenance.SCRAPED
        elif ledger is not None and rec.record_id in ledger:
            chosen, source = ledger.first_seen(rec.record_id), Provenance.LEDGER
        elif rec.deposit_date is not None:
            chosen, source = rec.deposit_date, Provenance.SELF
        else:
            dropped.append(rec.record_id)
            continue
        out.append(replace(rec, deposit_date=chosen))
        provenance[rec.record_id] = source
    return ResolvedDates(out, provenance, dropped)
