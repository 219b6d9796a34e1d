import math
import random

import pytest
import scipy.special
import scipy.stats

from helpers import brute_average_precision, brute_precision_at
from scopenorm.errors import ConfigError, FormatError, NoEvaluableQueries
from scopenorm.evaluation import (
    Qrels,
    Run,
    average_precision,
    compare_runs,
    mean_average_precision,
    paired_t_test,
    per_query_ap,
    precision_at,
    regularized_incomplete_beta,
    student_t_cdf,
    student_t_two_sided_p,
)


def test_ap_examples():
    # relevant at ranks 1 and 3, two relevant total
    assert average_precision(["r1", "x", "r2"], {"r1", "r2"}) == pytest.approx(
        (1 + 2 / 3) / 2)
    assert average_precision(["r1", "r2", "x"], {"r1", "r2"}) == 1.0
    assert average_precision(["x", "y"], {"r1", "r2"}) == 0.0
    assert average_precision(["x", "y"], set()) is None


def test_precision_at_examples():
    ranked = ["r1", "r2", "x", "r3", "y"]
    assert precision_at(ranked, {"r1", "r2", "r3"}, 5) == pytest.approx(0.6)
    # fixed denominator even when fewer than k retrieved
    assert precision_at(["r1", "r2"], {"r1", "r2"}, 5) == pytest.approx(0.4)
    assert precision_at([], {"r1"}, 5) == 0.0
    with pytest.raises(ConfigError):
        precision_at(ranked, {"r1"}, 0)


def _run(mapping, tag="t"):
    run = Run(tag=tag)
    for qid, docs in mapping.items():
        run.set_ranking(qid, [(d, float(-i)) for i, d in enumerate(docs)])
    return run


def _qrels(mapping):
    qrels = Qrels()
    for qid, pairs in mapping.items():
        for doc, grade in pairs:
            qrels.add(qid, doc, grade)
    return qrels


def test_map_mean_and_exclusion():
    qrels = _qrels({
        "q1": [("a", 1), ("b", 1)],
        "q2": [("c", 1), ("d", 1)],
        "q3": [("e", 0)],          # judged but nothing relevant: excluded
    })
    run = _run({"q1": ["a", "b"], "q2": ["x", "c"], "q3": ["e"]})
    per_query = per_query_ap(run, qrels)
    assert set(per_query) == {"q1", "q2"}
    assert per_query["q1"] == 1.0
    assert per_query["q2"] == pytest.approx(0.25)  # (1/2)/2
    assert mean_average_precision(run, qrels) == pytest.approx(0.625)


def test_map_covers_unretrieved_queries():
    qrels = _qrels({"q1": [("a", 1)], "q2": [("b", 1)]})
    run = _run({"q1": ["a"]})  # q2 retrieved nothing
    per_query = per_query_ap(run, qrels)
    assert per_query == {"q1": 1.0, "q2": 0.0}


def test_map_no_evaluable_queries():
    qrels = _qrels({"q1": [("a", 0)]})
    with pytest.raises(NoEvaluableQueries):
        mean_average_precision(_run({"q1": ["a"]}), qrels)


def test_metrics_match_bruteforce_random():
    rng = random.Random(17)
    for _ in range(150):
        docs = [f"d{i}" for i in range(rng.randint(1, 30))]
        ranked = rng.sample(docs, rng.randint(0, len(docs)))
        relevant = set(rng.sample(docs, rng.randint(1, len(docs))))
        assert average_precision(ranked, relevant) == brute_average_precision(
            ranked, relevant)
        k = rng.randint(1, 10)
        assert precision_at(ranked, relevant, k) == brute_precision_at(
            ranked, relevant, k)


# -- paired t-test ------------------------------------------------------------

def test_t_test_worked_example():
    result = paired_t_test([1.0, 2.0, 3.0], [0.0, 0.0, 0.0])
    assert result.t == pytest.approx(3.46410, abs=1e-5)
    assert result.df == 2
    assert result.p_two_sided == pytest.approx(0.07418, abs=1e-5)
    assert result.significant_95 is False
    assert not result.degenerate


def test_t_test_antisymmetry():
    a = [0.3, 0.1, 0.8, 0.45]
    b = [0.2, 0.4, 0.1, 0.6]
    fwd = paired_t_test(a, b)
    rev = paired_t_test(b, a)
    assert fwd.t == pytest.approx(-rev.t, rel=1e-12)
    assert fwd.p_two_sided == pytest.approx(rev.p_two_sided, rel=1e-12)


def test_t_test_degenerate_cases():
    same = paired_t_test([0.2, 0.4, 0.6], [0.2, 0.4, 0.6])
    assert same.degenerate and same.t is None and same.p_two_sided is None
    assert same.significant_95 is None
    shifted = paired_t_test([1.1, 2.1, 3.1], [1.0, 2.0, 3.0])
    assert shifted.degenerate  # constant nonzero difference: zero variance


def test_t_test_validation():
    with pytest.raises(ConfigError):
        paired_t_test([1.0], [0.5])
    with pytest.raises(ConfigError):
        paired_t_test([1.0, 2.0], [0.5])


def test_t_test_matches_scipy():
    rng = random.Random(4)
    for _ in range(50):
        n = rng.randint(2, 40)
        a = [rng.uniform(0, 1) for _ in range(n)]
        b = [rng.uniform(0, 1) for _ in range(n)]
        if len(set(round(x - y, 12) for x, y in zip(a, b))) == 1:
            continue
        ours = paired_t_test(a, b)
        ref = scipy.stats.ttest_rel(a, b)
        assert ours.t == pytest.approx(ref.statistic, rel=1e-9)
        assert ours.p_two_sided == pytest.approx(ref.pvalue, rel=1e-9)


# -- Student-t machinery ---------------------------------------------------------

def test_student_t_reference_values():
    # one-sided 0.75 at t=1, df=1
    assert student_t_cdf(1.0, 1) == pytest.approx(0.75, abs=1e-4)
    # the classic 95% two-sided critical value for df=1
    assert student_t_two_sided_p(12.706, 1) == pytest.approx(0.05, abs=1e-3)
    assert student_t_cdf(0.0, 5) == 0.5


def test_student_t_cdf_matches_scipy():
    for df in (1, 2, 3, 10, 30, 120):
        for t in (-6.0, -1.3, -0.2, 0.0, 0.7, 2.0, 12.7):
            assert student_t_cdf(t, df) == pytest.approx(
                scipy.stats.t.cdf(t, df), abs=1e-12)


def test_incomplete_beta_matches_scipy():
    for a in (0.5, 1.0, 2.0, 7.5):
        for b in (0.5, 1.5, 4.0):
            for x in (0.0, 0.01, 0.2, 0.5, 0.9, 0.999, 1.0):
                assert regularized_incomplete_beta(a, b, x) == pytest.approx(
                    scipy.special.betainc(a, b, x), abs=1e-12)
    with pytest.raises(ConfigError):
        regularized_incomplete_beta(-1.0, 1.0, 0.5)
    with pytest.raises(ConfigError):
        regularized_incomplete_beta(1.0, 1.0, 1.5)


# -- files -------------------------------------------------------------------------

def test_qrels_roundtrip_and_validation(tmp_path):
    path = tmp_path / "qrels.txt"
    path.write_text("q1 0 d1 1\nq1 0 d2 0\nq2 0 d1 2\n", encoding="utf-8")
    qrels = Qrels.load(path)
    assert qrels.is_relevant("q1", "d1")
    assert not qrels.is_relevant("q1", "d2")
    assert qrels.grade("q2", "d1") == 2
    out = tmp_path / "copy.txt"
    qrels.save(out)
    assert Qrels.load(out).relevant_docs("q2") == {"d1"}

    bad = tmp_path / "bad.txt"
    bad.write_text("q1 0 d1\n", encoding="utf-8")
    with pytest.raises(FormatError) as err:
        Qrels.load(bad)
    assert err.value.line == 1

    dup = tmp_path / "dup.txt"
    dup.write_text("q1 0 d1 1\nq1 0 d1 0\n", encoding="utf-8")
    with pytest.raises(FormatError):
        Qrels.load(dup)


def test_run_roundtrip_and_validation(tmp_path):
    run = Run(tag="mytag")
    run.set_ranking("q1", [("d2", 0.5), ("d1", -0.25)])
    path = tmp_path / "run.txt"
    run.save(path)
    text = path.read_text()
    assert "q1 Q0 d2 1 0.5 mytag" in text
    loaded = Run.load(path)
    assert loaded.ranked_docs("q1") == ["d2", "d1"]
    assert loaded.ranking("q1")[1][1] == -0.25
    assert loaded.tag == "mytag"

    with pytest.raises(ConfigError):
        run.set_ranking("q2", [("d1", 0.1), ("d1", 0.05)])
    with pytest.raises(ConfigError):
        run.set_ranking("q2", [("d1", 0.1), ("d2", 0.2)])

    bad = tmp_path / "bad_run.txt"
    bad.write_text("q1 Q0 d1 1 0.5\n", encoding="utf-8")
    with pytest.raises(FormatError) as err:
        Run.load(bad)
    assert err.value.line == 1

    gap = tmp_path / "gap.txt"
    gap.write_text("q1 Q0 d1 1 0.5 t\nq1 Q0 d2 3 0.4 t\n", encoding="utf-8")
    with pytest.raises(FormatError):
        Run.load(gap)


def test_compare_runs(tmp_path):
    qrels = _qrels({"q1": [("a", 1)], "q2": [("b", 1)], "q3": [("c", 1)]})
    run_a = _run({"q1": ["a"], "q2": ["b"], "q3": ["x", "c"]})
    run_b = _run({"q1": ["x", "a"], "q2": ["y", "b"], "q3": ["z", "c"]})
    result, detail = compare_runs(run_a, run_b, qrels, metric="map")
    assert detail["queries"] == ["q1", "q2", "q3"]
    assert result.t is not None

    run_c = _run({"q1": ["a"]})
    with pytest.raises(ConfigError):
        compare_runs(run_a, run_c, qrels)
