"""First-seen datestamp ledger.

OAI-PMH headers only carry a last-modified datestamp, so the earliest
datestamp ever observed for a record stands in for its deposit date. Later
datestamps are kept as updates.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Iterable, Iterator

from depositlag.model import parse_date


@dataclass
class LedgerEntry:
    first_seen: date
    updates: list[date] = field(default_factory=list)


class HarvestLedger:
    """Map of record id to first-seen datestamp plus later update datestamps.

    ``observe`` is serialized by a lock so several harvest workers can share
    one ledger.
    """

    def __init__(self, entries: dict[str, LedgerEntry] | None = None):
        self._entries: dict[str, LedgerEntry] = dict(entries or {})
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, record_id: str) -> bool:
        return record_id in self._entries

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._entries))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, HarvestLedger) and self._entries == other._entries

    def get(self, record_id: str) -> LedgerEntry | None:
        return self._entries.get(record_id)

    def first_seen(self, record_id: str) -> date | None:
        entry = self._entries.get(record_id)
        return entry.first_seen if entry else None

    def observe(self, record_id: str, datestamp: date) -> "HarvestLedger":
        with self._lock:
            entry = self._entries.get(record_id)
            if entry is None:
                self._entries[record_id] = LedgerEntry(datestamp)
            elif datestamp < entry.first_seen:
                entry.updates = sorted(set(entry.updates) | {entry.first_seen})
                entry.first_seen = datestamp
            elif datestamp > entry.first_seen and datestamp not in entry.updates:
                entry.updates = sorted(set(entry.updates) | {datestamp})
        return self

    def observe_all(self, observations: Iterable[tuple[str, date]]) -> "HarvestLedger":
        for record_id, datestamp in observations:
            self.observe(record_id, datestamp)
        return self

    def snapshot(self) -> dict[str, LedgerEntry]:
        with self._lock:
            return {k: LedgerEntry(v.first_seen, list(v.updates)) for k, v in self._entries.items()}

    def dumps(self) -> str:
        lines = []
        for record_id, entry in sorted(self.snapshot().items()):
            lines.append(
                json.dumps(
                    {
                        "record_id": record_id,
                        "first_seen": entry.first_seen.isoformat(),
                        "updates": [d.isoformat() for d in entry.updates],
                    },
                    sort_keys=True,
                )
            )
        return "".join(line + "\n" for line in lines)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def loads(cls, text: str) -> "HarvestLedger":
        ledger = cls()
        for line in text.splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            ledger.observe(obj["record_id"], parse_date(obj["first_seen"]))
            for d in obj.get("updates", ()):
                ledger.observe(obj["record_id"], parse_date(d))
        return ledger

    @classmethod
    def load(cls, path: str | Path) -> "HarvestLedger":
        p = Path(path)
        if not p.exists():
            return cls()
        return cls.loads(p.read_text(encoding="utf-8"))
