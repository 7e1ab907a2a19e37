"""Normalization of titles, author names, DOIs and partial dates before matching."""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from datetime import date
from typing import Optional, Sequence

from depositlag.model import AuthorName

# Letters that do not decompose under NFKD.
_SPECIAL_LETTERS = {
    "ß": "ss", "ẞ": "SS",
    "ø": "o", "Ø": "O",
    "æ": "ae", "Æ": "AE",
    "œ": "oe", "Œ": "OE",
    "ł": "l", "Ł": "L",
    "đ": "d", "Đ": "D",
    "ð": "d", "Ð": "D",
    "þ": "th", "Þ": "TH",
    "ı": "i",
    "ħ": "h", "Ħ": "H",
    "ŀ": "l", "Ŀ": "L",
    "ŋ": "n", "Ŋ": "N",
    "ĸ": "k",
}
_SPECIAL_TABLE = str.maketrans(_SPECIAL_LETTERS)
_NOT_KEY_CHAR = re.compile(r"[^a-z0-9_]+")
_DOI_PREFIX = re.compile(
    r"^(?:https?://(?:dx\.)?doi\.org/|doi:\s*|info:doi/)", re.IGNORECASE
)


class NormalizationError(ValueError):
    """Base class for records that cannot be normalized."""

    reason = "NORMALIZATION_ERROR"


class EmptyDOIError(NormalizationError):
    reason = "EMPTY_DOI"


class MissingMonthError(NormalizationError):
    reason = "MISSING_MONTH"


class InvalidDateError(NormalizationError):
    reason = "INVALID_DATE"


class MissingFamilyError(NormalizationError):
    reason = "MISSING_FAMILY"


class EmptyTitleKeyError(NormalizationError):
    reason = "EMPTY_TITLE_KEY"


class EmptyFamilyKeyError(NormalizationError):
    reason = "EMPTY_FAMILY_KEY"


def transliterate(s: str) -> str:
    """Fold accented and special Latin letters to ASCII; other characters pass through."""
    s = s.translate(_SPECIAL_TABLE)
    decomposed = unicodedata.normalize("NFKD", s)
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch))


def normalize_text(s: str) -> str:
    """Transliterate, lowercase, and keep only ``[a-z0-9_]``.

    >>> normalize_text("François")
    'francois'
    >>> normalize_text("Deep-Learning: A Survey!")
    'deeplearningasurvey'
    """
    if not s:
        return ""
    return _NOT_KEY_CHAR.sub("", transliterate(s).lower())


def normalize_doi(s: str) -> str:
    """Strip resolver prefixes and whitespace, and lowercase.

    Trailing path segments such as ``/abstract`` are kept; whether they matter
    is decided by DOI comparison, not here.
    """
    out = (s or "").strip()
    # prefixes may be stacked ("doi: https://doi.org/...")
    while True:
        stripped = _DOI_PREFIX.sub("", out, count=1).strip()
        if stripped == out:
            break
        out = stripped
    out = out.lower()
    if not out:
        raise EmptyDOIError(f"empty DOI after normalization: {s!r}")
    return out


def impute_publication_date(year: int, month: Optional[int] = None, day: Optional[int] = None) -> date:
    """Build a publication date, using the first of the month when the day is missing.

    Year-only dates are rejected: the month cannot be invented.
    """
    if month is None:
        raise MissingMonthError(f"publication date {year} has no month")
    try:
        return date(int(year), int(month), int(day) if day is not None else 1)
    except (TypeError, ValueError) as exc:
        raise InvalidDateError(f"invalid date {year}-{month}-{day}: {exc}") from exc


def first_author_family(authors: Sequence[AuthorName]) -> str:
    """Family name of the first author: explicit field, else last token of the raw name."""
    if not authors:
        raise MissingFamilyError("author list is empty")
    first = authors[0]
    if first.family and first.family.strip():
        return first.family.strip()
    tokens = (first.raw or "").split()
    if not tokens:
        raise MissingFamilyError("first author has neither family nor raw name")
    return tokens[-1]


@dataclass(frozen=True, order=True)
class MatchKey:
    norm_title: str
    year: int
    norm_family: str


def build_match_key(title: str, year: int, authors: Sequence[AuthorName]) -> MatchKey:
    norm_title = normalize_text(title)
    if not norm_title:
        raise EmptyTitleKeyError(f"title {title!r} normalizes to nothing")
    norm_family = normalize_text(first_author_family(authors))
    if not norm_family:
        raise EmptyFamilyKeyError("first-author family name normalizes to nothing")
    return MatchKey(norm_title, int(year), norm_family)
