"""Synthetic registry/repository corpora with known links.

Repository records are derived from registry records and perturbed in ways
normalization must undo (accents, casing, punctuation, spacing, resolver
prefixes), plus DOI noise that only affects the DOI-based accuracy estimate.
Everything is drawn from one seeded ``random.Random`` so output is
byte-identical for a given config.
"""

from __future__ import annotations

import csv
import io
import json
import math
import random
from dataclasses import asdict, dataclass, field, replace
from datetime import date, timedelta
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from depositlag.model import Platform
from depositlag.normalize import normalize_text, transliterate

SUBJECT_LABELS = (
    "Agricultural and Biological Sciences",
    "Arts and Humanities",
    "Biochemistry, Genetics and Molecular Biology",
    "Business, Management and Accounting",
    "Chemical Engineering",
    "Chemistry",
    "Computer Science",
    "Decision Sciences",
    "Design",
    "Earth and Planetary Sciences",
    "Economics, Econometrics and Finance",
    "Energy",
    "Engineering",
    "Environmental Science",
    "Immunology and Microbiology",
    "Linguistics",
    "Materials Science",
    "Mathematics",
    "Medicine and Dentistry",
    "Neuroscience",
    "Nursing and Health Professions",
    "Pharmacology, Toxicology and Pharmaceutical Science",
    "Philosophy",
    "Physics and Astronomy",
    "Psychology",
    "Social Sciences",
    "Sports and Recreations",
    "Unspecified",
    "Veterinary Science and Veterinary Medicine",
)

_COUNTRIES = ("GB", "GB", "GB", "US", "US", "IT", "IT", "CH", "NL", "NL", "DE", "FR", "ES", "SE", "AU", "CA")
_INSTITUTIONAL_PLATFORMS = (Platform.EPRINTS, Platform.DSPACE, Platform.DSPACE, Platform.INVENIO, Platform.OTHER)
_DOI_PREFIXES = ("10.1002", "10.1016", "10.1088", "10.1371", "10.1103", "10.3390")
_DOI_SUFFIXES = ("/abstract", "/full", "/pdf", ".x", "/epdf")
_ACCENTED = {"a": "áàâä", "e": "éèêë", "i": "íïî", "o": "óöô", "u": "úüû", "c": "ç", "n": "ñ"}


@dataclass(frozen=True)
class LagComponent:
    weight: float
    kind: str  # normal(a=mean, b=sd) | exponential(a=offset, b=mean) | uniform(a=low, b=high)
    a: float
    b: float


@dataclass(frozen=True)
class LagDistribution:
    name: str = "mixture"
    components: tuple[LagComponent, ...] = (
        LagComponent(0.30, "normal", -5.0, 20.0),
        LagComponent(0.45, "exponential", 0.0, 40.0),
        LagComponent(0.25, "uniform", 90.0, 1800.0),
    )

    def sample(self, rng: random.Random) -> int:
        weights = [c.weight for c in self.components]
        comp = rng.choices(self.components, weights=weights)[0]
        if comp.kind == "normal":
            x = rng.gauss(comp.a, comp.b)
        elif comp.kind == "exponential":
            x = comp.a + rng.expovariate(1.0 / comp.b)
        elif comp.kind == "uniform":
            x = rng.uniform(comp.a, comp.b)
        else:
            raise ValueError(f"unknown lag component kind {comp.kind!r}")
        return int(round(x))


class SynthConfigError(ValueError):
    pass


@dataclass
class SynthConfig:
    n_publications: int = 1000
    seed: int = 42
    p_missing_repo_doi: float = 0.36
    p_doi_suffix_noise: float = 0.01
    p_doi_truncation: float = 0.005
    p_accent_noise: float = 0.3
    multi_deposit_distribution: Mapping[int, float] = field(
        default_factory=lambda: {1: 0.87, 2: 0.10, 3: 0.02, 4: 0.01}
    )
    lag_distribution: LagDistribution = field(default_factory=LagDistribution)
    p_no_issn: float = 0.07
    p_missing_day: float = 0.1
    p_accepted: float = 0.01
    p_no_reader_profile: float = 0.18
    year_range: tuple[int, int] = (2013, 2018)
    n_repositories: int = 40

    def validate(self) -> None:
        for name in (
            "p_missing_repo_doi",
            "p_doi_suffix_noise",
            "p_doi_truncation",
            "p_accent_noise",
            "p_no_issn",
            "p_missing_day",
            "p_accepted",
            "p_no_reader_profile",
        ):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise SynthConfigError(f"{name}={p} is not a probability")
        if self.n_publications < 0:
            raise SynthConfigError("n_publications must be non-negative")
        if self.n_repositories < 3:
            raise SynthConfigError("need at least three repositories")
        dist = self.multi_deposit_distribution
        if not dist or any(int(k) < 1 or v < 0 for k, v in dist.items()):
            raise SynthConfigError("multi_deposit_distribution needs keys >= 1 and non-negative weights")
        if not math.isclose(sum(dist.values()), 1.0, abs_tol=1e-9):
            raise SynthConfigError("multi_deposit_distribution must sum to 1")
        if max(int(k) for k in dist) > self.n_repositories:
            raise SynthConfigError("more deposits per publication than repositories")
        comps = self.lag_distribution.components
        if not comps or any(c.weight < 0 for c in comps):
            raise SynthConfigError("lag distribution needs non-negative component weights")
        if not math.isclose(sum(c.weight for c in comps), 1.0, abs_tol=1e-9):
            raise SynthConfigError("lag distribution weights must sum to 1")
        lo, hi = self.year_range
        if lo > hi or lo < 1:
            raise SynthConfigError(f"bad year range {self.year_range}")

    def noiseless(self) -> "SynthConfig":
        """Copy with every perturbation that could hide or confuse a link switched off."""
        return replace(self, p_accent_noise=0.0, p_doi_suffix_noise=0.0, p_doi_truncation=0.0)


@dataclass
class GroundTruth:
    true_links: set[tuple[str, str]]
    true_lags: dict[tuple[str, str], int]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["registry_doi", "repository_record_id", "lag_days"])
        for link in sorted(self.true_links):
            w.writerow([link[0], link[1], self.true_lags[link]])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "GroundTruth":
        links, lags = set(), {}
        for row in csv.DictReader(io.StringIO(text)):
            key = (row["registry_doi"], row["repository_record_id"])
            links.add(key)
            lags[key] = int(row["lag_days"])
        return cls(links, lags)


@dataclass
class Corpus:
    registry: list[dict]
    repository: list[dict]
    repositories: list[dict]
    reader_profiles: list[dict]
    truth: GroundTruth

    def write(self, outdir: str | Path) -> dict[str, Path]:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "registry": out / "registry.jsonl",
            "repository": out / "repository.jsonl",
            "repositories": out / "repositories.json",
            "reader_profiles": out / "reader_profiles.jsonl",
            "ground_truth": out / "ground_truth.csv",
        }
        paths["registry"].write_text(_jsonl(self.registry), encoding="utf-8")
        paths["repository"].write_text(_jsonl(self.repository), encoding="utf-8")
        paths["repositories"].write_text(json.dumps(self.repositories, indent=1, sort_keys=True) + "\n", encoding="utf-8")
        paths["reader_profiles"].write_text(_jsonl(self.reader_profiles), encoding="utf-8")
        paths["ground_truth"].write_text(self.truth.to_csv(), encoding="utf-8")
        return paths


def _jsonl(rows: Iterable[dict]) -> str:
    return "".join(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n" for r in rows)


def _lines(name: str) -> list[str]:
    text = resources.files("depositlag").joinpath(f"data/{name}").read_text(encoding="utf-8")
    return [w.strip() for w in text.splitlines() if w.strip()]


def _accent(rng: random.Random, s: str) -> str:
    chars = list(s)
    for i, ch in enumerate(chars):
        low = ch.lower()
        if low in _ACCENTED and rng.random() < 0.15:
            rep = rng.choice(_ACCENTED[low])
            chars[i] = rep.upper() if ch.isupper() else rep
    return "".join(chars)


def _perturb_title(rng: random.Random, title: str) -> str:
    words = title.split(" ")
    choice = rng.randrange(5)
    if choice == 0:
        title = title.upper()
    elif choice == 1:
        title = title.lower()
    elif choice == 2 and len(words) > 3:
        title = " ".join(words[:3]) + ": " + " ".join(words[3:])
    elif choice == 3:
        title = "  ".join(words) + "."
    else:
        title = " ".join(w.capitalize() for w in words)
    return _accent(rng, title)


def _repositories(rng: random.Random, n: int) -> list[dict]:
    repos = [
        {"repo_id": "arxiv", "name": "ArXiv e-Print Archive", "country": None, "platform": Platform.ARXIV.value},
        {"repo_id": "zenodo", "name": "ZENODO", "country": None, "platform": Platform.ZENODO.value},
    ]
    for i in range(n - 2):
        country = rng.choice(_COUNTRIES)
        repos.append(
            {
                "repo_id": f"repo{i:03d}",
                "name": f"Institutional Repository {i:03d} ({country})",
                "country": country,
                "platform": rng.choice(_INSTITUTIONAL_PLATFORMS).value,
            }
        )
    return repos


def generate(config: SynthConfig) -> Corpus:
    """Build a corpus and its ground truth; the same config always gives the same bytes."""
    config.validate()
    rng = random.Random(config.seed)
    words, surnames, given = _lines("words.txt"), _lines("surnames.txt"), _lines("given_names.txt")
    repos = _repositories(rng, config.n_repositories)
    # heavier weight on a few large repositories, as in real aggregations
    repo_weights = [1.0 / (i + 1) ** 0.7 for i in range(len(repos))]
    k_values = sorted(int(k) for k in config.multi_deposit_distribution)
    k_weights = [config.multi_deposit_distribution[k] for k in k_values]

    registry, repository, profiles = [], [], []
    links: set[tuple[str, str]] = set()
    lags: dict[tuple[str, str], int] = {}
    seen_titles: set[str] = set()
    record_no = 0
    lo, hi = config.year_range
    for i in range(config.n_publications):
        while True:
            title_words = rng.sample(words, rng.randint(5, 10))
            title = " ".join(title_words).capitalize()
            norm = normalize_text(title)
            if norm not in seen_titles:
                seen_titles.add(norm)
                break
        doi = f"{rng.choice(_DOI_PREFIXES)}/synth.{config.seed}.{i:07d}"
        authors = [
            {"given": rng.choice(given), "family": rng.choice(surnames)} for _ in range(rng.randint(1, 5))
        ]
        year = rng.randint(lo, hi)
        month = rng.randint(1, 12)
        day = rng.randint(1, 28)
        missing_day = rng.random() < config.p_missing_day
        published = date(year, month, 1 if missing_day else day)
        pub_field = {"year": year, "month": month} if missing_day else {"year": year, "month": month, "day": day}
        issn = [] if rng.random() < config.p_no_issn else [f"{rng.randint(1000, 9999)}-{rng.randint(1000, 9999)}"]
        rec = {"doi": doi, "title": title, "authors": authors, "published": pub_field, "issn": issn}
        if rng.random() < config.p_accepted:
            acc = published + timedelta(days=rng.choice((0, 0, 0, 30)))
            rec["accepted"] = {"year": acc.year, "month": acc.month, "day": acc.day}
        registry.append(rec)

        if rng.random() >= config.p_no_reader_profile:
            n_subj = rng.choices((1, 2, 3), weights=(0.89, 0.08, 0.03))[0]
            chosen = rng.sample(SUBJECT_LABELS, n_subj + 2)
            top = rng.randint(3, 40)
            counts = {s: top for s in chosen[:n_subj]}
            for s in chosen[n_subj:]:
                counts[s] = rng.randint(0, top - 1)
            profiles.append({"doi": doi, "counts": counts})

        k = rng.choices(k_values, weights=k_weights)[0]
        chosen_repos: list[dict] = []
        while len(chosen_repos) < k:
            r = rng.choices(repos, weights=repo_weights)[0]
            if r not in chosen_repos:
                chosen_repos.append(r)
        for repo in chosen_repos:
            record_no += 1
            record_id = f"rec{config.seed}-{record_no:08d}"
            lag = config.lag_distribution.sample(rng)
            rtitle, rauthors = title, [dict(a) for a in authors]
            if rng.random() < config.p_accent_noise:
                rtitle = _perturb_title(rng, title)
                first = rauthors[0]
                if rng.random() < 0.5:
                    first["family"] = transliterate(first["family"])
                if " " not in first["family"] and rng.random() < 0.5:
                    rauthors[0] = {"raw": f"  {first['given']}   {first['family']} "}
            rdoi = None
            if rng.random() >= config.p_missing_repo_doi:
                rdoi = doi
                u = rng.random()
                if u < config.p_doi_truncation:
                    rdoi = doi.split("/")[0] + "/synth"
                elif u < config.p_doi_truncation + config.p_doi_suffix_noise:
                    rdoi = doi + rng.choice(_DOI_SUFFIXES)
                rdoi = rng.choice(("", "https://doi.org/", "doi:", "http://dx.doi.org/")) + (
                    rdoi.upper() if rng.random() < 0.2 else rdoi
                )
            repository.append(
                {
                    "record_id": record_id,
                    "repo_id": repo["repo_id"],
                    "title": rtitle,
                    "authors": rauthors,
                    "year": year,
                    "doi": rdoi,
                    "deposit_date": (published + timedelta(days=lag)).isoformat(),
                }
            )
            links.add((doi, record_id))
            lags[(doi, record_id)] = lag
    return Corpus(registry, repository, repos, profiles, GroundTruth(links, lags))


@dataclass(frozen=True)
class LinkageScores:
    precision: float
    recall: float
    f1: float
    true_positives: int
    predicted: int
    actual: int


def evaluate_linkage(predicted: Iterable[tuple[str, str]], truth: GroundTruth) -> LinkageScores:
    """Set-overlap precision/recall over ``(registry_doi, repository_record_id)`` pairs.

    Precision of an empty prediction is taken as 0.
    """
    if not truth.true_links:
        raise ValueError("ground truth has no links")
    pred = {(p.registry_doi, p.repository_record_id) if hasattr(p, "registry_doi") else tuple(p) for p in predicted}
    tp = len(pred & truth.true_links)
    precision = tp / len(pred) if pred else 0.0
    recall = tp / len(truth.true_links)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return LinkageScores(precision, recall, f1, tp, len(pred), len(truth.true_links))


def config_to_json(config: SynthConfig) -> dict:
    d = asdict(config)
    d["multi_deposit_distribution"] = {str(k): v for k, v in config.multi_deposit_distribution.items()}
    return d
