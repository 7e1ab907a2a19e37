"""Deposit-date acquisition: OAI-PMH harvesting, first-seen ledger, page scrapers."""

from depositlag.harvest.ledger import HarvestLedger, LedgerEntry
from depositlag.harvest.oai import (
    HarvestReport,
    OaiPage,
    OaiParseError,
    OaiRecord,
    harvest_endpoint,
    harvest_endpoints,
    parse_oai_response,
)
from depositlag.harvest.resolve import Provenance, ResolvedDates, resolve_deposit_dates
from depositlag.harvest.scrape import ExtractionError, ScrapedDate, scrape_deposit_date

__all__ = [
    "ExtractionError",
    "HarvestLedger",
    "HarvestReport",
    "LedgerEntry",
    "OaiPage",
    "OaiParseError",
    "OaiRecord",
    "Provenance",
    "ResolvedDates",
    "ScrapedDate",
    "harvest_endpoint",
    "harvest_endpoints",
    "parse_oai_response",
    "resolve_deposit_dates",
    "scrape_deposit_date",
]
