import math

import pytest

from depositlag.linkage import LinkPair
from depositlag.normalize import MatchKey
from depositlag.normalize import normalize_doi
from depositlag.synth import GroundTruth, SynthConfig, SynthConfigError, evaluate_linkage, generate
from tests.conftest import link_corpus


def test_same_seed_same_bytes(tmp_path):
    a = generate(SynthConfig(n_publications=100, seed=42)).write(tmp_path / "a")
    b = generate(SynthConfig(n_publications=100, seed=42)).write(tmp_path / "b")
    for name in a:
        assert a[name].read_bytes() == b[name].read_bytes()
    c = generate(SynthConfig(n_publications=100, seed=43)).write(tmp_path / "c")
    assert a["registry"].read_bytes() != c["registry"].read_bytes()


def test_all_repository_dois_missing():
    corpus = generate(SynthConfig(n_publications=200, p_missing_repo_doi=1.0))
    assert all(r["doi"] is None for r in corpus.repository)


def test_every_repository_record_in_one_true_link():
    corpus = generate(SynthConfig(n_publications=300, seed=3))
    ids = [r["record_id"] for r in corpus.repository]
    assert len(ids) == len(set(ids))
    assert sorted(rid for _, rid in corpus.truth.true_links) == sorted(ids)


def test_noiseless_corpus_recovers_every_link():
    corpus = generate(SynthConfig(n_publications=2000, seed=5).noiseless())
    _, _, result, rejected = link_corpus(corpus)
    assert rejected == []
    scores = evaluate_linkage(result.pairs, corpus.truth)
    assert scores.recall == 1.0 and scores.precision == 1.0


def test_noisy_corpus_still_links():
    corpus = generate(SynthConfig(n_publications=2000, seed=6, p_accent_noise=1.0))
    _, _, result, _ = link_corpus(corpus)
    assert evaluate_linkage(result.pairs, corpus.truth).precision >= 0.99


def test_true_lags_match_generated_dates():
    corpus = generate(SynthConfig(n_publications=200, seed=8))
    registry, repository, result, _ = link_corpus(corpus)
    published = {r.doi: r.published for r in registry}
    deposited = {r.record_id: r.deposit_date for r in repository}
    for doi, rid in corpus.truth.true_links:
        assert (deposited[rid] - published[normalize_doi(doi)]).days == corpus.truth.true_lags[(doi, rid)]


def test_no_doi_fraction_converges():
    p = 0.36
    corpus = generate(SynthConfig(n_publications=10_000, seed=11, p_missing_repo_doi=p))
    n = len(corpus.repository)
    share = sum(r["doi"] is None for r in corpus.repository) / n
    assert abs(share - p) <= 3 * math.sqrt(p * (1 - p) / n)


def test_ground_truth_csv_roundtrip():
    truth = generate(SynthConfig(n_publications=50)).truth
    assert GroundTruth.from_csv(truth.to_csv()) == truth


_TRUTH = GroundTruth({("d1", "r1"), ("d2", "r2"), ("d3", "r3"), ("d4", "r4")}, {})


def test_evaluate_identical():
    s = evaluate_linkage(_TRUTH.true_links, _TRUTH)
    assert (s.precision, s.recall, s.f1) == (1.0, 1.0, 1.0)


KEY = MatchKey("t", 2016, "f")


def test_evaluate_half():
    s = evaluate_linkage([LinkPair("d1", "r1", KEY), LinkPair("d2", "r2", KEY)], _TRUTH)
    assert (s.precision, s.recall) == (1.0, 0.5)
    assert s.f1 == pytest.approx(2 / 3)


def test_evaluate_disjoint():
    s = evaluate_linkage([("d1", "r2"), ("x", "y")], _TRUTH)
    assert (s.precision, s.recall, s.f1) == (0.0, 0.0, 0.0)


def test_evaluate_empty_truth_raises():
    with pytest.raises(ValueError):
        evaluate_linkage([("a", "b")], GroundTruth(set(), {}))


@pytest.mark.parametrize(
    "overrides",
    [
        {"p_missing_repo_doi": 1.5},
        {"p_accent_noise": -0.1},
        {"multi_deposit_distribution": {1: 0.5, 2: 0.4}},
        {"multi_deposit_distribution": {0: 1.0}},
        {"year_range": (2019, 2013)},
        {"n_publications": -1},
    ],
)
def test_invalid_config(overrides):
    with pytest.raises(SynthConfigError):
        generate(SynthConfig(**overrides))
