"""Deposit-date extraction from repository record pages.

Each platform parser targets one named marker and ignores the rest of the
page layout:

- EPrints: the "Deposited On" metadata row (``15 Mar 2016``)
- DSpace: the ``dc.date.accessioned`` cell of the full item record
- Invenio, Zenodo: the ``created`` / ``dateCreated`` field of the JSON-LD block
- arXiv: the ``[v1]`` line of the submission history
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from datetime import date, datetime
from html.parser import HTMLParser

from depositlag.model import Platform, parse_date


class ExtractionError(ValueError):
    def __init__(self, platform: Platform, marker: str):
        super().__init__(f"{platform.value}: marker {marker!r} not found")
        self.platform = platform
        self.marker = marker


@dataclass(frozen=True)
class ScrapedDate:
    value: date
    candidates: tuple[date, ...]

    @property
    def flagged(self) -> bool:
        """True when the page offered more than one distinct date."""
        return len(set(self.candidates)) > 1


class _PageText(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.chunks: list[str] = []
        self.json_ld: list[str] = []
        self._in_ld = False
        self._skip = 0

    def handle_starttag(self, tag, attrs):
        if tag == "script":
            if dict(attrs).get("type", "").lower() == "application/ld+json":
                self._in_ld = True
                self.json_ld.append("")
            else:
                self._skip += 1
        elif tag == "style":
            self._skip += 1

    def handle_endtag(self, tag):
        if tag == "script" and self._in_ld:
            self._in_ld = False
        elif tag in ("script", "style") and self._skip:
            self._skip -= 1

    def handle_data(self, data):
        if self._in_ld:
            self.json_ld[-1] += data
        elif not self._skip:
            self.chunks.append(data)

    @property
    def text(self) -> str:
        return re.sub(r"\s+", " ", " ".join(self.chunks))


def _read(html: bytes | str) -> _PageText:
    if isinstance(html, bytes):
        html = html.decode("utf-8", errors="replace")
    page = _PageText()
    page.feed(html)
    page.close()
    return page


def _day_month_year(s: str) -> date:
    return datetime.strptime(" ".join(s.split()).title(), "%d %b %Y").date()


_EPRINTS = re.compile(r"Deposited(?:\s+On)?\s*:\s*(\d{1,2}\s+[A-Za-z]{3})[A-Za-z]*\s+(\d{4})", re.IGNORECASE)
_DSPACE = re.compile(r"dc\.date\.accessioned\s*:?\s*(\d{4}-\d{2}-\d{2})")
_ARXIV = re.compile(r"\[v1\]\s*(?:[A-Za-z]{3},?\s+)?(\d{1,2}\s+[A-Za-z]{3}\s+\d{4})")
_LD_KEYS = ("created", "dateCreated")


def _eprints(page: _PageText) -> list[date]:
    return [_day_month_year(f"{dm} {y}") for dm, y in _EPRINTS.findall(page.text)]


def _dspace(page: _PageText) -> list[date]:
    return [parse_date(s) for s in _DSPACE.findall(page.text)]


def _arxiv(page: _PageText) -> list[date]:
    return [_day_month_year(s) for s in _ARXIV.findall(page.text)]


def _walk_ld(obj, out: list[date]) -> None:
    if isinstance(obj, list):
        for item in obj:
            _walk_ld(item, out)
    elif isinstance(obj, dict):
        for key in _LD_KEYS:
            if isinstance(obj.get(key), str):
                try:
                    out.append(parse_date(obj[key]))
                except ValueError:
                    pass
        if "@graph" in obj:
            _walk_ld(obj["@graph"], out)


def _json_ld(page: _PageText) -> list[date]:
    out: list[date] = []
    for block in page.json_ld:
        try:
            _walk_ld(json.loads(block), out)
        except json.JSONDecodeError:
            continue
    return out


_PARSERS = {
    Platform.EPRINTS: (_eprints, "Deposited On"),
    Platform.DSPACE: (_dspace, "dc.date.accessioned"),
    Platform.INVENIO: (_json_ld, "JSON-LD created"),
    Platform.ZENODO: (_json_ld, "JSON-LD created"),
    Platform.ARXIV: (_arxiv, "[v1]"),
}


def scrape_deposit_date(html: bytes | str, platform: Platform | str) -> ScrapedDate:
    """Return the deposit date shown on a record page; the earliest wins if several appear."""
    platform = Platform(platform) if not isinstance(platform, Platform) else platform
    if platform not in _PARSERS:
        raise ExtractionError(platform, "supported platform")
    parser, marker = _PARSERS[platform]
    candidates = parser(_read(html))
    if not candidates:
        raise ExtractionError(platform, marker)
    return ScrapedDate(min(candidates), tuple(candidates))
