import math
import random

import pytest

from helpers import kendall_tau_ties, random_corpus, random_query_terms
from scopenorm.errors import ConfigError, DegenerateCollection
from scopenorm.index import DocView, PositionalIndex
from scopenorm.scope import ScopeMeasure
from scopenorm.scoring import (
    DirichletScorer,
    JelinekMercerScorer,
    MrfScorer,
    OkapiScorer,
    Query,
    ScoringConfig,
    make_scorer,
    search_topk,
)

UNIQ = ScopeMeasure.uniq_length()
ENTROPY = ScopeMeasure.entropy_power()
LP1 = ScopeMeasure.length_power(1.0)


def view(terms, measure=None):
    return DocView.from_terms(list(terms), measure)


# -- Dirichlet ----------------------------------------------------------------

def test_dp_worked_example(toy_index):
    scorer = DirichletScorer(toy_index.stats, mu=3.0)
    plan = scorer.prepare(Query.from_terms(("b",)))
    got = scorer.score(plan, toy_index.doc_view("d1", None))
    assert got == pytest.approx(math.log(2) + math.log(3 / 7), rel=1e-12)
    assert got == pytest.approx(-0.15415, abs=5e-6)


def test_dp_unknown_term_reported(toy_index):
    scorer = DirichletScorer(toy_index.stats, mu=3.0)
    plan = scorer.prepare(Query.from_terms(("z",)))
    assert plan.diagnostics.unknown_terms == ("z",)
    # only the length penalty remains, with |q| still counting the term
    got = scorer.score(plan, toy_index.doc_view("d1", None))
    assert got == pytest.approx(math.log(3 / 7), rel=1e-12)


def test_dp_empty_document(toy_index):
    scorer = DirichletScorer(toy_index.stats, mu=3.0)
    plan = scorer.prepare(Query.from_terms(("b",)))
    assert scorer.score(plan, view([])) == 0.0


def test_dp_query_multiplicity(toy_index):
    scorer = DirichletScorer(toy_index.stats, mu=3.0)
    single = scorer.prepare(Query.from_terms(("b",)))
    double = scorer.prepare(Query.from_terms(("b", "b")))
    d1 = toy_index.doc_view("d1", None)
    tf_part = math.log(2)
    len_part = math.log(3 / 7)
    assert scorer.score(single, d1) == pytest.approx(tf_part + len_part)
    assert scorer.score(double, d1) == pytest.approx(2 * tf_part + 2 * len_part)


def test_vn_dp_worked_example(toy_index):
    toy_index.ensure_scope_means(UNIQ)
    scorer = DirichletScorer(toy_index.stats, mu=3.0, measure=UNIQ)
    plan = scorer.prepare(Query.from_terms(("b",)))
    got = scorer.score(plan, toy_index.doc_view("d1", UNIQ))
    assert got == pytest.approx(math.log(1.75) - math.log(2), rel=1e-12)
    assert got == pytest.approx(-0.13353, abs=5e-6)


def test_vn_dp_lengthpower_one_equals_dp(toy_index):
    toy_index.ensure_scope_means(LP1)
    base = DirichletScorer(toy_index.stats, mu=3.0)
    normalized = DirichletScorer(toy_index.stats, mu=3.0, measure=LP1)
    for q in (("b",), ("a", "b"), ("a", "b", "c")):
        query = Query.from_terms(q)
        for doc_id in toy_index.doc_ids:
            assert (normalized.score(normalized.prepare(query),
                                     toy_index.doc_view(doc_id, LP1))
                    == pytest.approx(base.score(base.prepare(query),
                                                toy_index.doc_view(doc_id, None)),
                                     rel=1e-12))


def test_mu_must_be_positive(toy_index):
    with pytest.raises(ConfigError):
        DirichletScorer(toy_index.stats, mu=0.0)


# -- Jelinek-Mercer -------------------------------------------------------------

def test_jm_worked_example(toy_index):
    scorer = JelinekMercerScorer(toy_index.stats, lam=0.75)
    plan = scorer.prepare(Query.from_terms(("b",)))
    got = scorer.score(plan, toy_index.doc_view("d1", None))
    assert got == pytest.approx(math.log(1.25), rel=1e-12)


def test_jm_empty_document(toy_index):
    scorer = JelinekMercerScorer(toy_index.stats, lam=0.3)
    plan = scorer.prepare(Query.from_terms(("b",)))
    assert scorer.score(plan, view([])) == 0.0


def test_jm_lambda_range(toy_index):
    for lam in (0.0, 1.0, -0.5):
        with pytest.raises(ConfigError):
            JelinekMercerScorer(toy_index.stats, lam=lam)


def test_jm_matches_flat_scope_dirichlet_rankings():
    # a flat scope (lengthpower beta 0) turns the document-specific prior
    # into the fixed-weight mixture with lambda = mu / (1 + mu)
    rng = random.Random(99)
    lp0 = ScopeMeasure.length_power(0.0)
    for _ in range(20):
        docs, vocab = random_corpus(rng, max_docs=14, max_len=40, min_docs=3)
        index = PositionalIndex.from_documents(docs)
        index.ensure_scope_means(lp0)
        mu = 10 ** rng.uniform(-1, 3)
        query = Query.from_terms(random_query_terms(rng, vocab))
        vndp = ScoringConfig(model="dp", mu=mu, measure=lp0)
        jm = ScoringConfig(model="jm", lam=mu / (1 + mu))
        ranked_a = search_topk(index, query, vndp, k=1000)
        ranked_b = search_topk(index, query, jm, k=1000)
        assert [d for d, _ in ranked_a] == [d for d, _ in ranked_b]
        tau = kendall_tau_ties([s for _, s in ranked_a], [s for _, s in ranked_b])
        assert tau == 1.0
        offsets = [sa - sb for (_, sa), (_, sb) in zip(ranked_a, ranked_b)]
        assert max(offsets) - min(offsets) <= 1e-9


# -- Okapi ----------------------------------------------------------------------

def test_okapi_tf_component(toy_index):
    scorer = OkapiScorer(toy_index.stats, k1=1.2, b=0.75)
    got = scorer.tf_component("a", toy_index.doc_view("d1", None))
    assert got == pytest.approx(2.2 * 2 / 3.5, rel=1e-12)
    assert got == pytest.approx(1.25714, abs=5e-6)


def test_okapi_b_zero_ignores_length(toy_index):
    scorer = OkapiScorer(toy_index.stats, k1=1.2, b=0.0)
    short = view(["a"])
    long_ = view(["a"] + ["x"] * 50)
    assert (scorer.tf_component("a", short)
            == pytest.approx(scorer.tf_component("a", long_), rel=1e-12))


def test_okapi_idf_goes_negative_without_clamping(toy_index):
    # df("a") == N, so the idf term is ln(0.5 / 2.5) < 0
    scorer = OkapiScorer(toy_index.stats, k1=1.2, b=0.75)
    plan = scorer.prepare(Query.from_terms(("a",)))
    (term, qtf_factor, idf) = plan.terms[0]
    assert idf == pytest.approx(math.log(0.5 / 2.5), rel=1e-12)
    assert scorer.score(plan, toy_index.doc_view("d1", None)) < 0


def test_vn_okapi_lengthpower_one_equals_okapi(toy_index):
    toy_index.ensure_scope_means(LP1)
    base = OkapiScorer(toy_index.stats, k1=1.2, b=0.75)
    normalized = OkapiScorer(toy_index.stats, k1=1.2, b=0.75, measure=LP1)
    query = Query.from_terms(("a", "b"))
    for doc_id in toy_index.doc_ids:
        assert (normalized.score(normalized.prepare(query),
                                 toy_index.doc_view(doc_id, LP1))
                == pytest.approx(base.score(base.prepare(query),
                                            toy_index.doc_view(doc_id, None)),
                                 rel=1e-9))


def test_vn_okapi_tf_component(toy_index):
    toy_index.ensure_scope_means(UNIQ)
    scorer = OkapiScorer(toy_index.stats, k1=1.2, b=0.75, measure=UNIQ)
    got = scorer.tf_component("a", toy_index.doc_view("d1", UNIQ))
    # direct evaluation: (k1+1)c / (k1 |d| ((1-b)/s + b/avgs) + c)
    expected = 2.2 * 2 / (1.2 * 4 * (0.25 / 3 + 0.75 / 2.5) + 2)
    assert got == pytest.approx(expected, rel=1e-12)
    assert got == pytest.approx(1.1458333333, rel=1e-9)
    assert scorer.tf_component("z", toy_index.doc_view("d1", UNIQ)) == 0.0


def test_okapi_param_validation(toy_index):
    with pytest.raises(ConfigError):
        OkapiScorer(toy_index.stats, k1=0.0, b=0.5)
    with pytest.raises(ConfigError):
        OkapiScorer(toy_index.stats, k1=1.0, b=1.5)
    empty = PositionalIndex.from_documents([("d", [])])
    with pytest.raises(DegenerateCollection):
        OkapiScorer(empty.stats, k1=1.2, b=0.5)


# -- MRF --------------------------------------------------------------------------

def test_mrf_unigram_feature(toy_index):
    scorer = MrfScorer(toy_index, mu_term=3.0)
    got = scorer.feature("term", ("b",), toy_index.doc_view("d1", None))
    assert got == pytest.approx(math.log(2 / 7), rel=1e-12)


def test_mrf_unknown_gram_skipped(toy_index):
    scorer = MrfScorer(toy_index, lambdas=(0.8, 0.1, 0.1), mu_term=3.0)
    assert scorer.feature("term", ("zzz",), toy_index.doc_view("d1", None)) is None
    plan = scorer.prepare(Query.from_terms(("b", "zzz")))
    assert plan.diagnostics.unknown_terms == ("zzz",)
    assert plan.diagnostics.unknown_ordered == (("b", "zzz"),)
    assert plan.diagnostics.unknown_unordered == (("b", "zzz"),)
    assert plan.diagnostics.total == 3


def test_mrf_weight_collapse_is_unigram_sum(toy_index):
    scorer = MrfScorer(toy_index, lambdas=(1.0, 0.0, 0.0), mu_term=3.0)
    query = Query.from_terms(("a", "b"))
    plan = scorer.prepare(query)
    d1 = toy_index.doc_view("d1", None)
    expected = (scorer.feature("term", ("a",), d1)
                + scorer.feature("term", ("b",), d1))
    assert scorer.score(plan, d1) == pytest.approx(expected, rel=1e-12)


def test_mrf_two_term_composition(toy_index):
    lambdas = (0.8, 0.1, 0.1)
    scorer = MrfScorer(toy_index, lambdas=lambdas, mu_term=3.0)
    query = Query.from_terms(("a", "b"))
    d1 = toy_index.doc_view("d1", None)
    hand = (lambdas[0] * (scorer.feature("term", ("a",), d1)
                          + scorer.feature("term", ("b",), d1))
            + lambdas[1] * scorer.feature("ordered", ("a", "b"), d1)
            + lambdas[2] * scorer.feature("unordered", ("a", "b"), d1))
    assert scorer.score(scorer.prepare(query), d1) == pytest.approx(hand, rel=1e-12)


def test_vn_mrf_lengthpower_one_equals_mrf(toy_index):
    toy_index.ensure_scope_means(LP1)
    base = MrfScorer(toy_index, lambdas=(0.8, 0.1, 0.1), mu_term=3.0)
    normalized = MrfScorer(toy_index, lambdas=(0.8, 0.1, 0.1), mu_term=3.0,
                           measure=LP1)
    query = Query.from_terms(("a", "b"))
    for doc_id in toy_index.doc_ids:
        assert (normalized.score(normalized.prepare(query),
                                 toy_index.doc_view(doc_id, LP1))
                == pytest.approx(base.score(base.prepare(query),
                                            toy_index.doc_view(doc_id, None)),
                                 rel=1e-9))


def test_mrf_lambda_validation(toy_index):
    with pytest.raises(ConfigError):
        MrfScorer(toy_index, lambdas=(0.5, 0.5, 0.5))
    with pytest.raises(ConfigError):
        MrfScorer(toy_index, lambdas=(1.2, -0.1, -0.1))


def test_mrf_no_bigrams_across_segments():
    query = Query(segments=(("a", "b"), ("c",)), qtype="lv")
    assert query.bigrams() == [("a", "b")]
    assert query.length == 3
    assert query.counts() == {"a": 1, "b": 1, "c": 1}


# -- lower bounds -------------------------------------------------------------------

def test_dp_lower_bound_worked_example(toy_index):
    base = DirichletScorer(toy_index.stats, mu=3.0)
    bounded = DirichletScorer(toy_index.stats, mu=3.0, delta=0.1)
    query = Query.from_terms(("b",))
    d1 = toy_index.doc_view("d1", None)
    expected = base.score(base.prepare(query), d1) + math.log(1.1)
    got = bounded.score(bounded.prepare(query), d1)
    assert got == pytest.approx(expected, rel=1e-12)
    assert got == pytest.approx(-0.05884, abs=5e-6)


def test_okapi_lower_bound_is_additive_tf(toy_index):
    base = OkapiScorer(toy_index.stats, k1=1.2, b=0.75)
    bounded = OkapiScorer(toy_index.stats, k1=1.2, b=0.75, delta=0.5)
    d1 = toy_index.doc_view("d1", None)
    assert (bounded.tf_component("a", d1)
            == pytest.approx(base.tf_component("a", d1) + 0.5, rel=1e-12))
    assert bounded.tf_component("z", d1) == 0.0  # unmatched stays at zero


def test_delta_zero_identity_exact(toy_index):
    query = Query.from_terms(("a", "b"))
    pairs = [
        (DirichletScorer(toy_index.stats, mu=3.0),
         DirichletScorer(toy_index.stats, mu=3.0, delta=0.0)),
        (OkapiScorer(toy_index.stats, k1=1.2, b=0.75),
         OkapiScorer(toy_index.stats, k1=1.2, b=0.75, delta=0.0)),
    ]
    for base, bounded in pairs:
        for doc_id in toy_index.doc_ids:
            d = toy_index.doc_view(doc_id, None)
            assert (bounded.score(bounded.prepare(query), d)
                    == base.score(base.prepare(query), d))


def test_score_monotone_in_delta(toy_index):
    query = Query.from_terms(("b",))
    matched = toy_index.doc_view("d1", None)
    unmatched = view(["x", "y"])
    last_dp = -math.inf
    for delta in (0.0, 0.05, 0.1, 0.5):
        dp = DirichletScorer(toy_index.stats, mu=3.0, delta=delta)
        score = dp.score(dp.prepare(query), matched)
        assert score >= last_dp
        last_dp = score
        baseline = DirichletScorer(toy_index.stats, mu=3.0)
        assert (dp.score(dp.prepare(query), unmatched)
                == baseline.score(baseline.prepare(query), unmatched))


# -- ranked retrieval -----------------------------------------------------------------

def test_search_worked_example(toy_index):
    config = ScoringConfig(model="dp", mu=3.0)
    results = search_topk(toy_index, Query.from_terms(("b",)), config)
    assert [doc_id for doc_id, _ in results] == ["d2", "d1"]
    assert results[0][1] == pytest.approx(math.log(2) + math.log(3 / 5), rel=1e-12)
    assert results[1][1] == pytest.approx(math.log(2) + math.log(3 / 7), rel=1e-12)


def test_search_no_match_is_empty(toy_index):
    config = ScoringConfig(model="dp", mu=3.0)
    assert search_topk(toy_index, Query.from_terms(("zzz",)), config) == []


def test_search_tie_break_by_doc_id():
    index = PositionalIndex.from_documents([
        ("beta", ["a", "b"]),
        ("alfa", ["a", "b"]),
    ])
    config = ScoringConfig(model="dp", mu=5.0)
    results = search_topk(index, Query.from_terms(("a",)), config)
    assert [doc_id for doc_id, _ in results] == ["alfa", "beta"]


def test_search_k_limits_and_validation(toy_index):
    config = ScoringConfig(model="dp", mu=3.0)
    assert len(search_topk(toy_index, Query.from_terms(("a",)), config, k=1)) == 1
    with pytest.raises(ConfigError):
        search_topk(toy_index, Query.from_terms(("a",)), config, k=0)
    with pytest.raises(ConfigError):
        search_topk(toy_index, Query(segments=((),)), config)


def test_make_scorer_covers_all_models(toy_index):
    for config in (
        ScoringConfig(model="dp", mu=3.0),
        ScoringConfig(model="jm", lam=0.4),
        ScoringConfig(model="okapi", k1=1.2, b=0.5),
        ScoringConfig(model="mrf", mu=3.0),
        ScoringConfig(model="dp", mu=3.0, measure=UNIQ, delta=0.05),
        ScoringConfig(model="okapi", measure=ENTROPY),
        ScoringConfig(model="mrf", mu=3.0, measure=UNIQ),
    ):
        scorer = make_scorer(toy_index, config)
        plan = scorer.prepare(Query.from_terms(("a", "b")))
        assert isinstance(scorer.score(plan, scorer.doc_view(toy_index, "d1")), float)


def test_scoring_config_validation():
    with pytest.raises(ConfigError):
        ScoringConfig(model="bm42")
    with pytest.raises(ConfigError):
        ScoringConfig(model="jm", measure=UNIQ)
    with pytest.raises(ConfigError):
        ScoringConfig(model="jm", lam=1.0)
    with pytest.raises(ConfigError):
        ScoringConfig(model="mrf", delta=0.1)
    with pytest.raises(ConfigError):
        ScoringConfig(model="dp", delta=-0.1)
    with pytest.raises(ConfigError):
        ScoringConfig(model="mrf", lambdas=(0.9, 0.2, 0.1))
    with pytest.raises(ConfigError):
        ScoringConfig(model="dp", measure=UNIQ, k_policy="avgv_rescale")
    ScoringConfig(model="dp", measure=ScopeMeasure.length_power(0.5),
                  k_policy="avgv_rescale")


def test_avgv_rescale_through_make_scorer():
    # lengthpower 0.5 on uniform-length docs: verbosity = sqrt(len) everywhere
    index = PositionalIndex.from_documents(
        [(f"d{i}", ["a", "b", "c", "d"][: 4]) for i in range(3)])
    measure = ScopeMeasure.length_power(0.5)
    config = ScoringConfig(model="dp", mu=100.0, measure=measure,
                           k_policy="avgv_rescale")
    scorer = make_scorer(index, config)
    assert scorer.mu == pytest.approx(100.0 / 2.0)


# -- curve shape -------------------------------------------------------------------

def concavity_docs(c, length=40):
    # c copies of the query word plus a fixed filler set: the distinct-term
    # scope stays constant across the grid, isolating the frequency axis
    fillers = ["f1", "f2", "f3", "f4", "f5"]
    rest = [fillers[i % 5] for i in range(length - c)]
    return ["q"] * c + rest


def test_single_term_curves_increase_with_diminishing_gains():
    docs = [("bg%d" % i, ["f%d" % (i % 5 + 1), "other"] * 10) for i in range(6)]
    docs += [("src", concavity_docs(5))]
    index = PositionalIndex.from_documents(docs)
    index.ensure_scope_means(UNIQ)
    index.ensure_scope_means(ScopeMeasure.length_power(0.5))
    query = Query.from_terms(("q",))
    lp5 = ScopeMeasure.length_power(0.5)
    scorers = [
        DirichletScorer(index.stats, mu=30.0),
        DirichletScorer(index.stats, mu=30.0, measure=UNIQ),
        DirichletScorer(index.stats, mu=30.0, measure=lp5),
        DirichletScorer(index.stats, mu=30.0, delta=0.05),
        JelinekMercerScorer(index.stats, lam=0.6),
        OkapiScorer(index.stats, k1=1.2, b=0.4),
        OkapiScorer(index.stats, k1=1.2, b=0.4, measure=UNIQ),
        OkapiScorer(index.stats, k1=1.2, b=0.4, delta=0.3),
        MrfScorer(index, lambdas=(1.0, 0.0, 0.0), mu_term=30.0),
        MrfScorer(index, lambdas=(1.0, 0.0, 0.0), mu_term=30.0, measure=UNIQ),
    ]
    for scorer in scorers:
        plan = scorer.prepare(query)
        values = [scorer.score(plan, view(concavity_docs(c), scorer.measure))
                  for c in range(1, 12)]
        gains = [b - a for a, b in zip(values, values[1:])]
        assert all(g > 0 for g in gains), type(scorer).__name__
        assert all(g2 < g1 for g1, g2 in zip(gains, gains[1:])), type(scorer).__name__
