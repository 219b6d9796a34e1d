"""Scoring kernels and ranked retrieval.

Four base ranking models (Dirichlet-prior language model, Jelinek-Mercer
language model, Okapi BM25, and the sequential-dependence Markov random
field), each of which can be evaluated on a verbosity-normalized document
representation by supplying a scope measure: term frequencies are divided
by the document's verbosity, so the model's own length treatment then
normalizes scope instead of raw length.  The Dirichlet and Okapi families
also accept a lower-bound pseudo frequency `delta` that adds a
document-independent score gap for matched query terms.

Scores are computed in double precision with a fixed summation order
(query-term order) so repeated runs are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

from .errors import ConfigError, DegenerateCollection
from .index import CollectionStats, DocView, PositionalIndex
from .scope import ScopeMeasure

MODEL_DP = "dp"
MODEL_JM = "jm"
MODEL_OKAPI = "okapi"
MODEL_MRF = "mrf"

K_POLICY_UNIT = "unit"
K_POLICY_AVGV = "avgv_rescale"

QUERY_TYPES = ("sk", "sv", "lv")


@dataclass(frozen=True)
class Query:
    """A query as one term sequence per topic field.

    Keeping the segments separate matters only for the dependence model:
    adjacent-term pairs are never formed across field boundaries.
    """

    segments: tuple[tuple[str, ...], ...]
    qtype: str = "sk"

    def __post_init__(self):
        if self.qtype not in QUERY_TYPES:
            raise ConfigError(f"unknown query type: {self.qtype!r}")

    @classmethod
    def from_terms(cls, terms: Sequence[str], qtype: str = "sk") -> "Query":
        return cls(segments=(tuple(terms),), qtype=qtype)

    @property
    def length(self) -> int:
        return sum(len(seg) for seg in self.segments)

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for seg in self.segments:
            for term in seg:
                out[term] = out.get(term, 0) + 1
        return out

    def bigrams(self) -> list[tuple[str, str]]:
        """Adjacent in-segment term pairs, in query order."""
        pairs = []
        for seg in self.segments:
            pairs.extend(zip(seg, seg[1:]))
        return pairs


@dataclass(frozen=True)
class ScoringConfig:
    """Model selector plus every tunable parameter.

    A `measure` switches the model to its verbosity-normalized variant;
    `delta` > 0 switches the Dirichlet/Okapi families to their
    lower-bounded variants.  `k_policy` controls the verbosity scaling
    constant: `unit` keeps it at 1 (it is absorbed into mu or k1);
    `avgv_rescale` divides mu and k1 by the collection's average
    verbosity and is only meaningful for the lengthpower measure.
    """

    model: str = MODEL_DP
    measure: ScopeMeasure | None = None
    k_policy: str = K_POLICY_UNIT
    mu: float = 2000.0
    lam: float = 0.5
    k1: float = 1.2
    b: float = 0.75
    k3: float = 1000.0
    lambdas: tuple[float, float, float] = (0.85, 0.10, 0.05)
    mrf_mus: tuple[float, float, float] | None = None
    delta: float = 0.0

    def __post_init__(self):
        if self.model not in (MODEL_DP, MODEL_JM, MODEL_OKAPI, MODEL_MRF):
            raise ConfigError(f"unknown model: {self.model!r}")
        if self.k_policy not in (K_POLICY_UNIT, K_POLICY_AVGV):
            raise ConfigError(f"unknown k policy: {self.k_policy!r}")
        if self.model == MODEL_JM:
            if self.measure is not None:
                raise ConfigError("jm has no verbosity-normalized variant; "
                                  "use dp with lengthpower instead")
            if not 0.0 < self.lam < 1.0:
                raise ConfigError(f"jm lambda must lie in (0, 1), got {self.lam}")
        if self.delta < 0:
            raise ConfigError(f"delta must be >= 0, got {self.delta}")
        if self.delta > 0 and self.model in (MODEL_JM, MODEL_MRF):
            raise ConfigError(f"lower bounding is defined for dp and okapi only, "
                              f"not {self.model}")
        if self.model == MODEL_DP and self.mu <= 0:
            raise ConfigError(f"mu must be > 0, got {self.mu}")
        if self.model == MODEL_OKAPI:
            if self.k1 <= 0:
                raise ConfigError(f"k1 must be > 0, got {self.k1}")
            if not 0.0 <= self.b <= 1.0:
                raise ConfigError(f"b must lie in [0, 1], got {self.b}")
            if self.k3 < 0:
                raise ConfigError(f"k3 must be >= 0, got {self.k3}")
        if self.model == MODEL_MRF:
            if abs(sum(self.lambdas) - 1.0) > 1e-9:
                raise ConfigError(f"feature weights must sum to 1, got {self.lambdas}")
            if any(l < 0 for l in self.lambdas):
                raise ConfigError(f"feature weights must be >= 0, got {self.lambdas}")
            for m in self.mrf_mus or (self.mu,):
                if m <= 0:
                    raise ConfigError(f"mu must be > 0, got {m}")
        if self.k_policy == K_POLICY_AVGV:
            if self.measure is None or self.measure.kind != "lengthpower":
                raise ConfigError("avgv_rescale only combines with the "
                                  "lengthpower scope measure")


@dataclass
class QueryDiagnostics:
    """Query parts dropped because the collection has never seen them."""

    unknown_terms: tuple[str, ...] = ()
    unknown_ordered: tuple[tuple[str, str], ...] = ()
    unknown_unordered: tuple[tuple[str, str], ...] = ()

    @property
    def total(self) -> int:
        return (len(self.unknown_terms) + len(self.unknown_ordered)
                + len(self.unknown_unordered))


@dataclass
class QueryPlan:
    """Per-query constants precomputed once, shared across documents."""

    query: Query
    terms: list  # model-specific (term, weight, ...) tuples in query order
    qlen: int
    diagnostics: QueryDiagnostics
    bigrams: list = field(default_factory=list)


class Scorer:
    """Base of all models: prepare once per query, score per document."""

    measure: ScopeMeasure | None = None

    def prepare(self, query: Query) -> QueryPlan:
        raise NotImplementedError

    def score(self, plan: QueryPlan, doc: DocView) -> float:
        raise NotImplementedError

    def doc_view(self, index: PositionalIndex, doc_id: str) -> DocView:
        return index.doc_view(doc_id, self.measure)

    def view_terms(self, terms: Sequence[str]) -> DocView:
        return DocView.from_terms(terms, self.measure)


class DirichletScorer(Scorer):
    """Dirichlet-prior smoothed query likelihood.

    With a scope measure the smoothing prior becomes document specific
    (scaled by the document's verbosity), equivalently: term frequencies
    are divided by verbosity and the length penalty uses the scope.
    """

    def __init__(self, stats: CollectionStats, mu: float,
                 measure: ScopeMeasure | None = None, delta: float = 0.0):
        if mu <= 0:
            raise ConfigError(f"mu must be > 0, got {mu}")
        if delta < 0:
            raise ConfigError(f"delta must be >= 0, got {delta}")
        self.stats = stats
        self.mu = mu
        self.measure = measure
        self.delta = delta

    def prepare(self, query: Query) -> QueryPlan:
        terms = []
        unknown = []
        seen = set()
        counts = query.counts()
        for seg in query.segments:
            for term in seg:
                if term in seen:
                    continue
                seen.add(term)
                p = self.stats.collection_prob(term)
                if p == 0.0:
                    unknown.append(term)
                    continue
                terms.append((term, counts[term], p))
        return QueryPlan(query=query, terms=terms, qlen=query.length,
                         diagnostics=QueryDiagnostics(unknown_terms=tuple(unknown)))

    def score(self, plan: QueryPlan, doc: DocView) -> float:
        mu = self.mu
        total = 0.0
        if self.measure is None:
            length_norm = doc.length
            for term, qtf, p in plan.terms:
                tf = doc.tf(term)
                if tf == 0:
                    continue
                part = math.log(1.0 + tf / (mu * p))
                if self.delta > 0:
                    part += math.log(1.0 + self.delta / (mu * p))
                total += qtf * part
        else:
            length_norm = doc.scope
            ratio = doc.scope / doc.length if doc.length > 0 else 0.0
            for term, qtf, p in plan.terms:
                tf = doc.tf(term)
                if tf == 0:
                    continue
                part = math.log(1.0 + (tf / (mu * p)) * ratio)
                if self.delta > 0:
                    part += math.log(1.0 + self.delta / (mu * p))
                total += qtf * part
        total += plan.qlen * math.log(mu / (length_norm + mu))
        return total


class JelinekMercerScorer(Scorer):
    """Jelinek-Mercer smoothed query likelihood (fixed-weight mixture)."""

    def __init__(self, stats: CollectionStats, lam: float):
        if not 0.0 < lam < 1.0:
            raise ConfigError(f"lambda must lie in (0, 1), got {lam}")
        self.stats = stats
        self.lam = lam
        self.measure = None

    def prepare(self, query: Query) -> QueryPlan:
        terms = []
        unknown = []
        seen = set()
        counts = query.counts()
        for seg in query.segments:
            for term in seg:
                if term in seen:
                    continue
                seen.add(term)
                p = self.stats.collection_prob(term)
                if p == 0.0:
                    unknown.append(term)
                    continue
                terms.append((term, counts[term], p))
        return QueryPlan(query=query, terms=terms, qlen=query.length,
                         diagnostics=QueryDiagnostics(unknown_terms=tuple(unknown)))

    def score(self, plan: QueryPlan, doc: DocView) -> float:
        if doc.length == 0:
            return 0.0
        ratio = (1.0 - self.lam) / self.lam
        total = 0.0
        for term, qtf, p in plan.terms:
            tf = doc.tf(term)
            if tf == 0:
                continue
            total += qtf * math.log(1.0 + ratio * tf / (doc.length * p))
        return total


class OkapiScorer(Scorer):
    """Okapi BM25.

    The idf component is not floored at zero: a term in more than half
    the documents contributes negatively, exactly as the formula says.
    With a scope measure the term-frequency component normalizes by
    verbosity and pivots on average scope instead of average length.
    """

    def __init__(self, stats: CollectionStats, k1: float, b: float,
                 k3: float = 1000.0, measure: ScopeMeasure | None = None,
                 delta: float = 0.0):
        if k1 <= 0:
            raise ConfigError(f"k1 must be > 0, got {k1}")
        if not 0.0 <= b <= 1.0:
            raise ConfigError(f"b must lie in [0, 1], got {b}")
        if k3 < 0:
            raise ConfigError(f"k3 must be >= 0, got {k3}")
        if delta < 0:
            raise ConfigError(f"delta must be >= 0, got {delta}")
        if stats.n_docs < 1:
            raise DegenerateCollection("scoring needs at least one document")
        self.stats = stats
        self.k1 = k1
        self.b = b
        self.k3 = k3
        self.measure = measure
        self.delta = delta
        if measure is None:
            if stats.avgl <= 0:
                raise DegenerateCollection("average document length is zero")
            self.pivot = stats.avgl
        else:
            avgs = stats.avgs(measure)
            if avgs <= 0:
                raise DegenerateCollection("average scope is zero")
            self.pivot = avgs

    def prepare(self, query: Query) -> QueryPlan:
        terms = []
        unknown = []
        seen = set()
        counts = query.counts()
        n = self.stats.n_docs
        for seg in query.segments:
            for term in seg:
                if term in seen:
                    continue
                seen.add(term)
                df = self.stats.df.get(term, 0)
                if df == 0:
                    unknown.append(term)
                    continue
                qtf = counts[term]
                qtf_factor = (self.k3 + 1.0) * qtf / (self.k3 + qtf)
                idf = math.log((n - df + 0.5) / (df + 0.5))
                terms.append((term, qtf_factor, idf))
        return QueryPlan(query=query, terms=terms, qlen=query.length,
                         diagnostics=QueryDiagnostics(unknown_terms=tuple(unknown)))

    def tf_component(self, term: str, doc: DocView) -> float:
        """The saturating term-frequency factor, before idf weighting."""
        tf = doc.tf(term)
        if tf == 0:
            return 0.0
        if self.measure is None:
            denom = self.k1 * ((1.0 - self.b) + self.b * doc.length / self.pivot) + tf
        else:
            denom = self.k1 * doc.length * ((1.0 - self.b) / doc.scope
                                            + self.b / self.pivot) + tf
        value = (self.k1 + 1.0) * tf / denom
        if self.delta > 0:
            value += self.delta
        return value

    def score(self, plan: QueryPlan, doc: DocView) -> float:
        total = 0.0
        for term, qtf_factor, idf in plan.terms:
            component = self.tf_component(term, doc)
            if component == 0.0:
                continue
            total += qtf_factor * idf * component
        return total


FEATURE_TERM = "term"
FEATURE_ORDERED = "ordered"
FEATURE_UNORDERED = "unordered"

WINDOW_SPAN = 8


class MrfScorer(Scorer):
    """Sequential-dependence Markov random field.

    Three Dirichlet-smoothed log features: unigram, exact adjacent
    phrase, and unordered co-occurrence within an 8-slot window.  Grams
    the collection has never seen are skipped (they would hit log 0) and
    tallied in the query diagnostics.
    """

    def __init__(self, index: PositionalIndex,
                 lambdas: tuple[float, float, float] = (0.85, 0.10, 0.05),
                 mu_term: float = 2000.0, mu_ordered: float | None = None,
                 mu_unordered: float | None = None,
                 measure: ScopeMeasure | None = None):
        if abs(sum(lambdas) - 1.0) > 1e-9:
            raise ConfigError(f"feature weights must sum to 1, got {lambdas}")
        if any(l < 0 for l in lambdas):
            raise ConfigError(f"feature weights must be >= 0, got {lambdas}")
        self.index = index
        self.stats = index.stats
        self.lambdas = lambdas
        self.mu_term = mu_term
        self.mu_ordered = mu_term if mu_ordered is None else mu_ordered
        self.mu_unordered = mu_term if mu_unordered is None else mu_unordered
        for m in (self.mu_term, self.mu_ordered, self.mu_unordered):
            if m <= 0:
                raise ConfigError(f"mu must be > 0, got {m}")
        self.measure = measure
        if self.stats.total_length == 0:
            raise DegenerateCollection("zero-length collection has no language model")

    def prepare(self, query: Query) -> QueryPlan:
        counts = query.counts()
        total = self.stats.total_length
        terms = []
        unknown_terms = []
        seen = set()
        for seg in query.segments:
            for term in seg:
                if term in seen:
                    continue
                seen.add(term)
                cf = self.stats.cf.get(term, 0)
                if cf == 0:
                    unknown_terms.append(term)
                    continue
                terms.append((term, counts[term], cf / total))
        bigrams = []
        unknown_ordered = []
        unknown_unordered = []
        for w1, w2 in query.bigrams():
            ocf = self.index.ordered_bigram_collection_count(w1, w2)
            ucf = self.index.unordered_window_collection_count(w1, w2, WINDOW_SPAN)
            if ocf == 0:
                unknown_ordered.append((w1, w2))
            if ucf == 0:
                unknown_unordered.append((w1, w2))
            bigrams.append((w1, w2, ocf / total if ocf else None,
                            ucf / total if ucf else None))
        diag = QueryDiagnostics(unknown_terms=tuple(unknown_terms),
                                unknown_ordered=tuple(unknown_ordered),
                                unknown_unordered=tuple(unknown_unordered))
        return QueryPlan(query=query, terms=terms, qlen=query.length,
                         diagnostics=diag, bigrams=bigrams)

    def _feature(self, count: int, coll_prob: float, mu: float,
                 doc: DocView) -> float:
        if self.measure is None:
            return math.log((count + mu * coll_prob) / (doc.length + mu))
        return math.log((count / doc.verbosity + mu * coll_prob)
                        / (doc.scope + mu))

    def feature(self, kind: str, gram: tuple[str, ...], doc: DocView) -> float | None:
        """One feature value; None when the gram is unseen collection-wide."""
        if kind == FEATURE_TERM:
            (term,) = gram
            cf = self.stats.cf.get(term, 0)
            if cf == 0:
                return None
            return self._feature(doc.tf(term), cf / self.stats.total_length,
                                 self.mu_term, doc)
        w1, w2 = gram
        if kind == FEATURE_ORDERED:
            cf = self.index.ordered_bigram_collection_count(w1, w2)
            if cf == 0:
                return None
            return self._feature(doc.ordered_count(w1, w2),
                                 cf / self.stats.total_length,
                                 self.mu_ordered, doc)
        if kind == FEATURE_UNORDERED:
            cf = self.index.unordered_window_collection_count(w1, w2, WINDOW_SPAN)
            if cf == 0:
                return None
            return self._feature(doc.window_count(w1, w2, WINDOW_SPAN),
                                 cf / self.stats.total_length,
                                 self.mu_unordered, doc)
        raise ConfigError(f"unknown feature kind: {kind!r}")

    def score(self, plan: QueryPlan, doc: DocView) -> float:
        lt, lo, lu = self.lambdas
        term_sum = 0.0
        for term, qtf, p in plan.terms:
            term_sum += qtf * self._feature(doc.tf(term), p, self.mu_term, doc)
        ordered_sum = 0.0
        unordered_sum = 0.0
        for w1, w2, op, up in plan.bigrams:
            if op is not None:
                ordered_sum += self._feature(doc.ordered_count(w1, w2), op,
                                             self.mu_ordered, doc)
            if up is not None:
                unordered_sum += self._feature(doc.window_count(w1, w2, WINDOW_SPAN),
                                               up, self.mu_unordered, doc)
        return lt * term_sum + lo * ordered_sum + lu * unordered_sum


def apply_avgv_rescale(config: ScoringConfig, avgv: float) -> ScoringConfig:
    """Divide mu and k1 by average verbosity (lengthpower scaling fix)."""
    if avgv <= 0:
        raise ConfigError(f"average verbosity must be > 0, got {avgv}")
    return replace(config, mu=config.mu / avgv, k1=config.k1 / avgv,
                   k_policy=K_POLICY_UNIT)


def make_scorer(index: PositionalIndex, config: ScoringConfig) -> Scorer:
    """Build the scorer a config describes, resolving scope means."""
    if config.measure is not None:
        index.ensure_scope_means(config.measure)
    if config.k_policy == K_POLICY_AVGV:
        config = apply_avgv_rescale(config, index.stats.avgv(config.measure))
    if config.model == MODEL_DP:
        return DirichletScorer(index.stats, mu=config.mu, measure=config.measure,
                               delta=config.delta)
    if config.model == MODEL_JM:
        return JelinekMercerScorer(index.stats, lam=config.lam)
    if config.model == MODEL_OKAPI:
        return OkapiScorer(index.stats, k1=config.k1, b=config.b, k3=config.k3,
                           measure=config.measure, delta=config.delta)
    mus = config.mrf_mus or (config.mu, config.mu, config.mu)
    return MrfScorer(index, lambdas=config.lambdas, mu_term=mus[0],
                     mu_ordered=mus[1], mu_unordered=mus[2],
                     measure=config.measure)


def candidate_docs(index: PositionalIndex, query: Query) -> set[str]:
    """Documents containing at least one query unigram.

    Any document matching a dependence-model gram contains both of the
    gram's unigrams, so this one candidate rule serves every model.
    """
    docs: set[str] = set()
    for seg in query.segments:
        for term in seg:
            docs.update(index.postings(term).keys())
    return docs


def search_topk(index: PositionalIndex, query: Query, config: ScoringConfig,
                k: int = 1000) -> list[tuple[str, float]]:
    """Rank the matching documents, best first.

    Ties break on ascending document id, so results are deterministic.
    """
    if k <= 0:
        raise ConfigError(f"top-k must be >= 1, got {k}")
    if query.length < 1:
        raise ConfigError("cannot score an empty query")
    scorer = make_scorer(index, config)
    plan = scorer.prepare(query)
    scored = []
    for doc_id in candidate_docs(index, query):
        view = scorer.doc_view(index, doc_id)
        scored.append((doc_id, scorer.score(plan, view)))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored[:k]
