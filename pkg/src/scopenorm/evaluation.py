"""TREC-style effectiveness evaluation.

Average precision, MAP, precision at k, and the non-directional paired
t-test used for significance.  Conventions follow the standard
evaluation tool: queries with no relevant document are excluded from
MAP, queries with judgments but no retrieved documents score 0, and
precision at k always divides by k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import ConfigError, FormatError, NoEvaluableQueries


class Qrels:
    """Relevance judgments: (query_id, doc_id) -> integer grade >= 0."""

    def __init__(self):
        self._grades: dict[str, dict[str, int]] = {}

    def add(self, query_id: str, doc_id: str, grade: int):
        if grade < 0:
            raise ConfigError(f"relevance grade must be >= 0, got {grade}")
        per_query = self._grades.setdefault(query_id, {})
        if doc_id in per_query:
            raise ConfigError(f"duplicate judgment for ({query_id}, {doc_id})")
        per_query[doc_id] = grade

    def grade(self, query_id: str, doc_id: str) -> int:
        return self._grades.get(query_id, {}).get(doc_id, 0)

    def is_relevant(self, query_id: str, doc_id: str) -> bool:
        return self.grade(query_id, doc_id) > 0

    def relevant_docs(self, query_id: str) -> set[str]:
        return {d for d, g in self._grades.get(query_id, {}).items() if g > 0}

    def query_ids(self) -> list[str]:
        return sorted(self._grades)

    def evaluable_queries(self) -> list[str]:
        return sorted(q for q in self._grades if self.relevant_docs(q))

    @classmethod
    def load(cls, path) -> "Qrels":
        """TREC qrels format: `qid 0 docid rel`, whitespace separated."""
        qrels = cls()
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                parts = line.split()
                if len(parts) != 4:
                    raise FormatError("expected 'qid 0 docid rel'",
                                      path=path, line=lineno)
                qid, _, docid, rel = parts
                try:
                    grade = int(rel)
                except ValueError:
                    raise FormatError(f"bad relevance grade {rel!r}",
                                      path=path, line=lineno) from None
                try:
                    qrels.add(qid, docid, grade)
                except ConfigError as exc:
                    raise FormatError(str(exc), path=path, line=lineno) from None
        return qrels

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for qid in sorted(self._grades):
                for docid in sorted(self._grades[qid]):
                    fh.write(f"{qid} 0 {docid} {self._grades[qid][docid]}\n")


class Run:
    """Ranked results per query: lists of (doc_id, score), best first."""

    def __init__(self, tag: str = "run"):
        self.tag = tag
        self._results: dict[str, list[tuple[str, float]]] = {}

    def set_ranking(self, query_id: str, ranked: Sequence[tuple[str, float]]):
        seen = set()
        prev = math.inf
        for doc_id, score in ranked:
            if doc_id in seen:
                raise ConfigError(f"duplicate doc {doc_id!r} in query {query_id!r}")
            seen.add(doc_id)
            if score > prev:
                raise ConfigError(
                    f"scores increase with rank in query {query_id!r}")
            prev = score
        self._results[query_id] = list(ranked)

    def ranking(self, query_id: str) -> list[tuple[str, float]]:
        return self._results.get(query_id, [])

    def ranked_docs(self, query_id: str) -> list[str]:
        return [doc_id for doc_id, _ in self._results.get(query_id, [])]

    def query_ids(self) -> list[str]:
        return sorted(self._results)

    @classmethod
    def load(cls, path) -> "Run":
        """TREC run format: `qid Q0 docid rank score tag`."""
        run = cls()
        rows: dict[str, list[tuple[int, str, float]]] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                parts = line.split()
                if len(parts) != 6:
                    raise FormatError("expected 'qid Q0 docid rank score tag'",
                                      path=path, line=lineno)
                qid, _, docid, rank, score, tag = parts
                try:
                    rank = int(rank)
                    score = float(score)
                except ValueError:
                    raise FormatError("bad rank or score", path=path,
                                      line=lineno) from None
                rows.setdefault(qid, []).append((rank, docid, score))
                run.tag = tag
        for qid, entries in rows.items():
            entries.sort()
            ranks = [r for r, _, _ in entries]
            if ranks != list(range(1, len(entries) + 1)):
                raise FormatError(f"ranks for query {qid!r} are not 1..n",
                                  path=path)
            try:
                run.set_ranking(qid, [(d, s) for _, d, s in entries])
            except ConfigError as exc:
                raise FormatError(str(exc), path=path) from None
        return run

    def save(self, path):
        """Write in rank order; scores use shortest round-trip formatting,
        which always carries at least six significant digits."""
        with open(path, "w", encoding="utf-8") as fh:
            for qid in sorted(self._results):
                for rank, (docid, score) in enumerate(self._results[qid], start=1):
                    fh.write(f"{qid} Q0 {docid} {rank} {score!r} {self.tag}\n")


def average_precision(ranked_docs: Sequence[str], relevant: set[str]) -> float | None:
    """Mean of precision at each relevant retrieved rank, over the total
    number of relevant documents; None when nothing is relevant (the
    query is not evaluable)."""
    if not relevant:
        return None
    hits = 0
    total = 0.0
    for rank, doc_id in enumerate(ranked_docs, start=1):
        if doc_id in relevant:
            hits += 1
            total += hits / rank
    return total / len(relevant)


def precision_at(ranked_docs: Sequence[str], relevant: set[str], k: int = 5) -> float:
    """Relevant among the top k over k; the denominator stays k even when
    fewer than k documents were retrieved."""
    if k <= 0:
        raise ConfigError(f"precision cutoff must be >= 1, got {k}")
    return sum(1 for d in ranked_docs[:k] if d in relevant) / k


def per_query_ap(run: Run, qrels: Qrels) -> dict[str, float]:
    """AP for every evaluable query; unretrieved queries score 0."""
    out = {}
    for qid in qrels.evaluable_queries():
        ap = average_precision(run.ranked_docs(qid), qrels.relevant_docs(qid))
        out[qid] = ap if ap is not None else 0.0
    if not out:
        raise NoEvaluableQueries("no query has a relevant document")
    return out


def per_query_precision(run: Run, qrels: Qrels, k: int = 5) -> dict[str, float]:
    out = {}
    for qid in qrels.evaluable_queries():
        out[qid] = precision_at(run.ranked_docs(qid), qrels.relevant_docs(qid), k)
    if not out:
        raise NoEvaluableQueries("no query has a relevant document")
    return out


def mean_average_precision(run: Run, qrels: Qrels) -> float:
    scores = per_query_ap(run, qrels)
    return sum(scores.values()) / len(scores)


# -- Student-t machinery -------------------------------------------------
#
# The regularized incomplete beta function via the standard continued
# fraction (Lentz's method), which is all the t distribution needs.

_MAX_ITER = 300
_CF_EPS = 3e-16
_TINY = 1e-300


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    if a <= 0 or b <= 0:
        raise ConfigError("incomplete beta needs a > 0 and b > 0")
    if not 0.0 <= x <= 1.0:
        raise ConfigError(f"incomplete beta needs x in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    front = math.exp(math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                     + a * math.log(x) + b * math.log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def student_t_cdf(t: float, df: float) -> float:
    """P(T <= t) for Student's t with df degrees of freedom."""
    if df <= 0:
        raise ConfigError(f"degrees of freedom must be > 0, got {df}")
    if t == 0.0:
        return 0.5
    x = df / (df + t * t)
    tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x)
    return 1.0 - tail if t > 0 else tail


def student_t_two_sided_p(t: float, df: float) -> float:
    if df <= 0:
        raise ConfigError(f"degrees of freedom must be > 0, got {df}")
    if t == 0.0:
        return 1.0
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


@dataclass(frozen=True)
class TTestResult:
    """t statistic and two-sided p; all None when the difference vector is
    degenerate (constant), in which case the test is undefined."""

    n: int
    mean_diff: float
    t: float | None
    p_two_sided: float | None
    significant_95: bool | None
    degenerate: bool = False

    @property
    def df(self) -> int:
        return self.n - 1


def paired_t_test(per_query_a: Sequence[float],
                  per_query_b: Sequence[float]) -> TTestResult:
    """Non-directional paired t-test on per-query metric vectors.

    Uses the sample (n-1) standard deviation of the differences; the
    two-sided p comes from the Student-t CDF above.  Significance at the
    0.95 confidence level means p strictly below 0.05.
    """
    if len(per_query_a) != len(per_query_b):
        raise ConfigError("paired vectors must have equal length")
    n = len(per_query_a)
    if n < 2:
        raise ConfigError(f"paired t-test needs n >= 2, got {n}")
    diffs = [a - b for a, b in zip(per_query_a, per_query_b)]
    mean = sum(diffs) / n
    var = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    if var == 0.0:
        return TTestResult(n=n, mean_diff=mean, t=None, p_two_sided=None,
                           significant_95=None, degenerate=True)
    t = mean / math.sqrt(var / n)
    p = student_t_two_sided_p(t, n - 1)
    return TTestResult(n=n, mean_diff=mean, t=t, p_two_sided=p,
                       significant_95=p < 0.05)


def compare_runs(run_a: Run, run_b: Run, qrels: Qrels,
                 metric: str = "map", k: int = 5) -> tuple[TTestResult, dict]:
    """Paired t-test between two runs over the shared evaluable queries.

    Both runs must cover the same query ids; per-topic scores are paired
    by query id in sorted order.
    """
    if metric == "map":
        a = per_query_ap(run_a, qrels)
        b = per_query_ap(run_b, qrels)
    elif metric in ("p5", "p@5", "precision"):
        a = per_query_precision(run_a, qrels, k)
        b = per_query_precision(run_b, qrels, k)
    else:
        raise ConfigError(f"unknown metric: {metric!r}")
    if set(run_a.query_ids()) != set(run_b.query_ids()):
        raise ConfigError("runs cover different query sets")
    qids = sorted(a)
    result = paired_t_test([a[q] for q in qids], [b[q] for q in qids])
    detail = {"queries": qids, "a": [a[q] for q in qids], "b": [b[q] for q in qids]}
    return result, detail
