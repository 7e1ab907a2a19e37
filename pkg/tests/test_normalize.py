import pytest
from hypothesis import given
from hypothesis import strategies as st

from depositlag.model import AuthorName
from depositlag.normalize import (
    EmptyDOIError,
    EmptyTitleKeyError,
    InvalidDateError,
    MatchKey,
    MissingFamilyError,
    MissingMonthError,
    build_match_key,
    first_author_family,
    impute_publication_date,
    normalize_doi,
    normalize_text,
)
from datetime import date
import re

KEY_ALPHABET = re.compile(r"^[a-z0-9_]*$")


@pytest.mark.parametrize(
    "raw,expected",
    [
        ("François", "francois"),
        ("", ""),
        ("Deep-Learning: A Survey!", "deeplearningasurvey"),
        ("snake_case 42", "snake_case42"),
        ("Straße", "strasse"),
        ("Søren Ørsted", "sorenorsted"),
        ("Æbelø", "aebelo"),
        ("Łukasiewicz", "lukasiewicz"),
        ("Dvořák Černý", "dvorakcerny"),
        ("数据 data", "data"),
    ],
)
def test_normalize_text(raw, expected):
    assert normalize_text(raw) == expected


@given(st.text())
def test_normalize_text_alphabet_and_idempotence(s):
    out = normalize_text(s)
    assert KEY_ALPHABET.match(out)
    assert normalize_text(out) == out


@pytest.mark.parametrize(
    "raw,expected",
    [
        ("https://doi.org/10.1002/2016JD026252", "10.1002/2016jd026252"),
        ("10.1002/2016jd026252/abstract", "10.1002/2016jd026252/abstract"),
        ("   doi:10.1088/0031-8949 ", "10.1088/0031-8949"),
        ("http://dx.doi.org/10.1/ABC", "10.1/abc"),
    ],
)
def test_normalize_doi(raw, expected):
    assert normalize_doi(raw) == expected


@pytest.mark.parametrize("raw", ["", "   ", "https://doi.org/", "doi: "])
def test_normalize_doi_rejects_empty(raw):
    with pytest.raises(EmptyDOIError):
        normalize_doi(raw)


@given(st.text(min_size=1))
def test_normalize_doi_idempotent(s):
    try:
        once = normalize_doi(s)
    except EmptyDOIError:
        return
    assert normalize_doi(once) == once


def test_impute_publication_date():
    assert impute_publication_date(2017, 9) == date(2017, 9, 1)
    assert impute_publication_date(2017, 9, 14) == date(2017, 9, 14)
    with pytest.raises(MissingMonthError):
        impute_publication_date(2017)
    with pytest.raises(InvalidDateError):
        impute_publication_date(2017, 2, 30)
    with pytest.raises(InvalidDateError):
        impute_publication_date(2017, 13)


@given(st.integers(1, 9999), st.integers(1, 12), st.one_of(st.none(), st.integers(1, 28)))
def test_impute_never_invents_month(year, month, day):
    assert impute_publication_date(year, month, day).month == month


@pytest.mark.parametrize(
    "authors,expected",
    [
        ([AuthorName(given="Lars", family="Sorensen")], "Sorensen"),
        ([AuthorName(raw="Jana Novakova")], "Novakova"),
        ([AuthorName(raw="  Ada   Lovelace  ")], "Lovelace"),
        ([AuthorName(raw="Ada Lovelace"), AuthorName(family="Babbage")], "Lovelace"),
    ],
)
def test_first_author_family(authors, expected):
    assert first_author_family(authors) == expected


def test_first_author_family_errors():
    with pytest.raises(MissingFamilyError):
        first_author_family([])
    with pytest.raises(MissingFamilyError):
        first_author_family([AuthorName(given="Only")])


def test_build_match_key():
    assert build_match_key("François & Co.", 2017, [AuthorName(family="Müller")]) == MatchKey(
        "francoisco", 2017, "muller"
    )
    assert build_match_key("A", 2013, [AuthorName(family="B")]) == MatchKey("a", 2013, "b")
    with pytest.raises(EmptyTitleKeyError):
        build_match_key("!!!", 2015, [AuthorName(family="Ng")])


def test_hyphenated_surname_survives_tokenization():
    assert build_match_key("T", 2015, [AuthorName(raw="Anna Smith-Jones")]).norm_family == "smithjones"
