"""OAI-PMH ``ListRecords`` client feeding a :class:`HarvestLedger`."""

from __future__ import annotations

import logging
import time
import xml.etree.ElementTree as ET
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date
from typing import Optional, Sequence

import requests

from depositlag.harvest.ledger import HarvestLedger
from depositlag.model import parse_date

log = logging.getLogger(__name__)

OAI_NS = "http://www.openarchives.org/OAI/2.0/"
DC_NS = "http://purl.org/dc/elements/1.1/"
NS = {"oai": OAI_NS, "dc": DC_NS}
DC_FIELDS = ("title", "creator", "date", "identifier")


class OaiParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class OaiProtocolError(RuntimeError):
    def __init__(self, code: str, message: str = ""):
        super().__init__(f"{code}: {message}".rstrip(": "))
        self.code = code


@dataclass
class OaiRecord:
    identifier: str
    datestamp: date
    metadata: dict[str, list[str]] = field(default_factory=dict)
    deleted: bool = False


@dataclass
class OaiPage:
    records: list[OaiRecord]
    resumption_token: Optional[str] = None
    errors: list[str] = field(default_factory=list)
    error_code: Optional[str] = None


def _byte_offset(data: bytes, line: int, column: int) -> int:
    lines = data.split(b"\n")
    return sum(len(x) + 1 for x in lines[: max(line - 1, 0)]) + column


def parse_oai_response(data: bytes | str) -> OaiPage:
    """Parse a ``ListRecords`` response.

    A record without a header datestamp is skipped and noted in
    ``OaiPage.errors``. ``noRecordsMatch`` yields an empty page; any other
    protocol error is reported in ``error_code``.
    """
    if isinstance(data, str):
        data = data.encode("utf-8")
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        line, column = exc.position
        raise OaiParseError(f"malformed OAI-PMH response: {exc}", _byte_offset(data, line, column)) from exc

    error = root.find("oai:error", NS)
    if error is not None:
        code = error.get("code", "")
        if code == "noRecordsMatch":
            return OaiPage([])
        return OaiPage([], error_code=code, errors=[f"{code}: {(error.text or '').strip()}"])

    page = OaiPage([])
    seen: set[str] = set()
    for rec in root.iterfind("oai:ListRecords/oai:record", NS):
        header = rec.find("oai:header", NS)
        identifier = (header.findtext("oai:identifier", "", NS) if header is not None else "").strip()
        stamp = (header.findtext("oai:datestamp", "", NS) if header is not None else "").strip()
        if not identifier:
            page.errors.append("record without identifier")
            continue
        if not stamp:
            page.errors.append(f"{identifier}: missing datestamp")
            continue
        try:
            datestamp = parse_date(stamp)
        except ValueError:
            page.errors.append(f"{identifier}: bad datestamp {stamp!r}")
            continue
        if identifier in seen:
            page.errors.append(f"{identifier}: duplicate identifier in page")
            continue
        seen.add(identifier)
        metadata: dict[str, list[str]] = {}
        for name in DC_FIELDS:
            values = [(el.text or "").strip() for el in rec.iterfind(f"oai:metadata//dc:{name}", NS)]
            values = [v for v in values if v]
            if values:
                metadata[name] = values
        page.records.append(
            OaiRecord(identifier, datestamp, metadata, deleted=header.get("status") == "deleted")
        )

    token = root.find("oai:ListRecords/oai:resumptionToken", NS)
    if token is not None and (token.text or "").strip():
        page.resumption_token = token.text.strip()
    return page


@dataclass
class HarvestReport:
    base_url: str
    pages: int = 0
    records: int = 0
    errors: list[str] = field(default_factory=list)
    retries: int = 0
    restarts: int = 0
    completed: bool = False
    network_failure: bool = False

    def to_json(self) -> dict:
        return {
            "base_url": self.base_url,
            "pages": self.pages,
            "records": self.records,
            "errors": list(self.errors),
            "retries": self.retries,
            "restarts": self.restarts,
            "completed": self.completed,
            "network_failure": self.network_failure,
        }


class _NetworkError(RuntimeError):
    pass


def _fetch(session, url, params, report, attempts, backoff, timeout) -> bytes:
    last = None
    for attempt in range(attempts):
        if attempt:
            report.retries += 1
            time.sleep(backoff * 2 ** (attempt - 1))
        try:
            resp = session.get(url, params=params, timeout=timeout)
        except requests.RequestException as exc:
            last = str(exc)
            log.warning("request failed", extra={"url": url, "attempt": attempt + 1, "error": last})
            continue
        if resp.status_code >= 500 or resp.status_code == 429:
            last = f"HTTP {resp.status_code}"
            log.warning("server error", extra={"url": url, "attempt": attempt + 1, "status": resp.status_code})
            continue
        if resp.status_code >= 400:
            raise _NetworkError(f"HTTP {resp.status_code}")
        return resp.content
    raise _NetworkError(f"gave up after {attempts} attempts: {last}")


def harvest_endpoint(
    base_url: str,
    ledger: HarvestLedger,
    set_spec: Optional[str] = None,
    from_date: Optional[str] = None,
    *,
    session: Optional[requests.Session] = None,
    metadata_prefix: str = "oai_dc",
    polite_delay: float = 0.0,
    attempts: int = 3,
    backoff: float = 0.5,
    timeout: float = 30.0,
) -> HarvestReport:
    """Follow one endpoint's resumption-token chain, feeding each header datestamp to ``ledger``.

    Network failures are retried with exponential backoff; once ``attempts``
    are used up the chain stops and the report marks ``network_failure``.
    A ``badResumptionToken`` restarts the chain from the beginning once.
    """
    session = session or requests.Session()
    report = HarvestReport(base_url)
    initial = {"verb": "ListRecords", "metadataPrefix": metadata_prefix}
    if set_spec:
        initial["set"] = set_spec
    if from_date:
        initial["from"] = from_date
    params = dict(initial)
    first = True
    while True:
        if not first and polite_delay > 0:
            time.sleep(polite_delay)
        first = False
        try:
            body = _fetch(session, base_url, params, report, attempts, backoff, timeout)
        except _NetworkError as exc:
            report.network_failure = True
            report.errors.append(str(exc))
            return report
        try:
            page = parse_oai_response(body)
        except OaiParseError as exc:
            report.errors.append(str(exc))
            return report
        if page.error_code == "badResumptionToken":
            if report.restarts >= 1:
                report.errors.extend(page.errors)
                return report
            report.restarts += 1
            params = dict(initial)
            continue
        if page.error_code:
            report.errors.extend(page.errors)
            return report
        report.pages += 1
        report.errors.extend(page.errors)
        for rec in page.records:
            ledger.observe(rec.identifier, rec.datestamp)
            report.records += 1
        if not page.resumption_token:
            report.completed = True
            return report
        params = {"verb": "ListRecords", "resumptionToken": page.resumption_token}


def harvest_endpoints(
    base_urls: Sequence[str], ledger: HarvestLedger, *, jobs: int = 4, **kwargs
) -> list[HarvestReport]:
    """Harvest several endpoints concurrently into one ledger."""
    if not base_urls:
        return []
    with ThreadPoolExecutor(max_workers=max(1, min(jobs, len(base_urls)))) as pool:
        futures = [pool.submit(harvest_endpoint, url, ledger, **kwargs) for url in base_urls]
        return [f.result() for f in futures]
