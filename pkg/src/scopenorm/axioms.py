"""Executable bench for length-normalization constraints.

Three perturbation operators build controlled document pairs: appending
noise terms, scaling the document while copying its query terms, and
appending one query term.  Each pair is classified by whether it raised
the document's verbosity or broadened its scope, condition predicates
gate the expected outcomes, and constraint checks score both documents
with a chosen model and test the required inequality.

Checks score the perturbed document against the *unchanged* collection
statistics; constraints describe how one document's score moves, not how
the collection drifts.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Sequence

from .errors import ConfigError
from .index import CollectionStats, PositionalIndex
from .scope import DocProfile, ScopeMeasure
from .scoring import (
    MODEL_DP,
    MODEL_OKAPI,
    Query,
    Scorer,
    ScoringConfig,
    make_scorer,
)

KIND_ADD_NOISE = "add_noise"
KIND_SCALE = "scale_length"
KIND_ADD_QUERY = "add_query_term"

# Normalization constraints. The first three are the classic ones; the
# last two are the score-level forms of the two heuristics the
# verbosity-normalized models are built to satisfy: a scope-broadened
# noisy document may be preferred, a verbosity-scaled document must not.
LNC1 = "lnc1"
LNC2 = "lnc2"
TF_LNC = "tf_lnc"
SCOPE_BONUS = "scope_bonus"
VERBOSITY_PENALTY = "verbosity_penalty"

_KIND_FOR_CONSTRAINT = {
    LNC1: KIND_ADD_NOISE,
    SCOPE_BONUS: KIND_ADD_NOISE,
    LNC2: KIND_SCALE,
    VERBOSITY_PENALTY: KIND_SCALE,
    TF_LNC: KIND_ADD_QUERY,
}

# Condition predicates gating the constraints.
COND_CONTENT_BEARING = "content_bearing"    # df <= N/2 and tf >= len * p(w|C)
COND_VERBOSITY_KEPT = "verbosity_kept"      # v(perturbed) >= v(original)
COND_SCOPE_KEPT = "scope_kept"              # s(perturbed) >= s(original)
COND_GROWTH_RATIO = "growth_ratio"          # K/c >= v(pert)/v(orig) - 1
COND_RARITY_SQUARE = "rarity_square"        # s <= (len/c)^2
COND_OKAPI_GATE = "okapi_gate"              # verbosity drop per noise word
COND_DIRICHLET_GATE = "dirichlet_gate"      # beats the model's slack
COND_DIRICHLET_GATE_APPROX = "dirichlet_gate_approx"  # crude: drop/K >= 1/mu

SCORE_EQ_TOL = 1e-12


@dataclass(frozen=True)
class PerturbationRecord:
    """One original/perturbed document pair plus the query it was built for."""

    kind: str
    k: int
    original: tuple[str, ...]
    perturbed: tuple[str, ...]
    query: Query
    target_term: str | None = None  # add_query_term only
    seed: int | None = None         # scale_length only

    def check_invariants(self):
        """Structural postconditions of the generating operator."""
        qterms = set(self.query.counts())
        counts_orig = _counts(self.original)
        counts_pert = _counts(self.perturbed)
        if self.kind == KIND_ADD_NOISE:
            assert len(self.perturbed) == len(self.original) + self.k
            for w in qterms:
                assert counts_pert.get(w, 0) == counts_orig.get(w, 0)
        elif self.kind == KIND_SCALE:
            assert len(self.perturbed) == self.k * len(self.original)
            for w in qterms:
                assert counts_pert.get(w, 0) == self.k * counts_orig.get(w, 0)
        elif self.kind == KIND_ADD_QUERY:
            assert self.target_term in qterms
            assert len(self.perturbed) == len(self.original) + self.k
            for w in counts_orig.keys() | counts_pert.keys():
                expected = counts_orig.get(w, 0) + (self.k if w == self.target_term else 0)
                assert counts_pert.get(w, 0) == expected
        else:
            raise ConfigError(f"unknown perturbation kind: {self.kind!r}")


@dataclass(frozen=True)
class PerturbationType:
    """verbosity_side: scope did not grow; scope_side: scope did not shrink.
    Both are set when the scope is unchanged."""

    verbosity_side: bool
    scope_side: bool


def _counts(terms: Sequence[str]) -> dict[str, int]:
    out: dict[str, int] = {}
    for t in terms:
        out[t] = out.get(t, 0) + 1
    return out


# -- operators -----------------------------------------------------------

def add_noise(doc: Sequence[str], query: Query, k: int,
              noise_source: Sequence[str]) -> PerturbationRecord:
    """Append k noise terms, drawn in order from noise_source.

    Noise terms must not be query terms; query-term counts are untouched.
    """
    if k < 1:
        raise ConfigError(f"noise count k must be >= 1, got {k}")
    if len(noise_source) < k:
        raise ConfigError(f"noise source exhausted: need {k}, have {len(noise_source)}")
    qterms = set(query.counts())
    noise = list(noise_source[:k])
    for term in noise:
        if term in qterms:
            raise ConfigError(f"noise term {term!r} is a query term")
    record = PerturbationRecord(kind=KIND_ADD_NOISE, k=k, original=tuple(doc),
                                perturbed=tuple(doc) + tuple(noise), query=query)
    record.check_invariants()
    return record


def scale_length(doc: Sequence[str], query: Query, k: int, *,
                 vocabulary: Sequence[str], seed: int) -> PerturbationRecord:
    """Concatenate the document k times, keep query terms, and replace every
    non-query position with a term drawn (seeded) from vocabulary minus the
    query terms.

    k >= 1 is accepted mechanically; the scaled-length constraint itself is
    only about k > 1.
    """
    if k < 1:
        raise ConfigError(f"scale factor k must be >= 1, got {k}")
    qterms = set(query.counts())
    pool = sorted(set(vocabulary) - qterms)
    needs_pool = any(t not in qterms for t in doc)
    if needs_pool and not pool:
        raise ConfigError("replacement vocabulary is empty")
    rng = random.Random(seed)
    out = []
    for _ in range(k):
        for term in doc:
            out.append(term if term in qterms else rng.choice(pool))
    record = PerturbationRecord(kind=KIND_SCALE, k=k, original=tuple(doc),
                                perturbed=tuple(out), query=query, seed=seed)
    record.check_invariants()
    return record


def scale_length_fresh(doc: Sequence[str], query: Query, k: int,
                       prefix: str = "fresh") -> PerturbationRecord:
    """Scale like `scale_length` but give every replaced position a brand-new
    distinct term, the deterministic recipe for scope-broadening scaling."""
    if k < 1:
        raise ConfigError(f"scale factor k must be >= 1, got {k}")
    qterms = set(query.counts())
    out = []
    fresh = 0
    for _ in range(k):
        for term in doc:
            if term in qterms:
                out.append(term)
            else:
                out.append(f"{prefix}{fresh}")
                fresh += 1
    record = PerturbationRecord(kind=KIND_SCALE, k=k, original=tuple(doc),
                                perturbed=tuple(out), query=query)
    record.check_invariants()
    return record


def add_query_term(doc: Sequence[str], query: Query, term: str,
                   k: int) -> PerturbationRecord:
    """Append one query term exactly k times."""
    if k < 1:
        raise ConfigError(f"append count k must be >= 1, got {k}")
    if term not in set(query.counts()):
        raise ConfigError(f"{term!r} is not a query term")
    record = PerturbationRecord(kind=KIND_ADD_QUERY, k=k, original=tuple(doc),
                                perturbed=tuple(doc) + (term,) * k, query=query,
                                target_term=term)
    record.check_invariants()
    return record


# -- classification and conditions ----------------------------------------

def classify(original: Sequence[str], perturbed: Sequence[str],
             measure: ScopeMeasure) -> PerturbationType:
    s_before = DocProfile.of(original, measure).scope
    s_after = DocProfile.of(perturbed, measure).scope
    return PerturbationType(verbosity_side=s_after <= s_before,
                            scope_side=s_after >= s_before)


def _profiles(record: PerturbationRecord, measure: ScopeMeasure):
    return (DocProfile.of(record.original, measure),
            DocProfile.of(record.perturbed, measure))


def eval_condition(condition: str, record: PerturbationRecord,
                   measure: ScopeMeasure, *, stats: CollectionStats = None,
                   mu: float = None, b: float = None,
                   term: str = None) -> bool | None:
    """Evaluate one gating predicate on a record.

    Returns True/False, or None for the Dirichlet gate when the query term
    is no more likely in the document than in the collection (the gate is
    then inapplicable, which is different from false).
    """
    if condition == COND_CONTENT_BEARING:
        if stats is None:
            raise ConfigError("content_bearing needs collection stats")
        half = stats.n_docs / 2.0
        for w in record.query.counts():
            if stats.df.get(w, 0) > half:
                return False
            p = stats.collection_prob(w)
            for terms in (record.original, record.perturbed):
                tf = sum(1 for t in terms if t == w)
                if tf < len(terms) * p:
                    return False
        return True
    orig, pert = _profiles(record, measure)
    if condition == COND_VERBOSITY_KEPT:
        return pert.verbosity >= orig.verbosity
    if condition == COND_SCOPE_KEPT:
        return pert.scope >= orig.scope
    if condition == COND_GROWTH_RATIO:
        w = term or record.target_term
        if w is None:
            raise ConfigError("growth_ratio needs the appended query term")
        c = sum(1 for t in record.original if t == w)
        if c == 0:
            return True
        return record.k / c >= pert.verbosity / orig.verbosity - 1.0
    if condition == COND_RARITY_SQUARE:
        w = term or record.target_term
        if w is None:
            raise ConfigError("rarity_square needs the appended query term")
        c = sum(1 for t in record.original if t == w)
        if c == 0:
            return True
        return orig.scope <= (orig.length / c) ** 2
    if condition == COND_OKAPI_GATE:
        if b is None or stats is None:
            raise ConfigError("okapi_gate needs b and collection stats")
        if b >= 1.0:
            return False
        drop = (orig.verbosity - pert.verbosity) / record.k
        return drop >= (b / (1.0 - b)) / stats.avgs(measure)
    if condition in (COND_DIRICHLET_GATE, COND_DIRICHLET_GATE_APPROX):
        if mu is None:
            raise ConfigError("dirichlet gates need mu")
        drop = (orig.verbosity - pert.verbosity) / record.k
        if condition == COND_DIRICHLET_GATE_APPROX:
            return drop >= 1.0 / mu
        if stats is None or term is None:
            raise ConfigError("dirichlet_gate needs collection stats and the query term")
        p = stats.collection_prob(term)
        tf = sum(1 for t in record.original if t == term)
        if orig.length == 0:
            return None
        p_ml = tf / orig.length
        if p_ml <= p:
            return None
        slack = (p + p_ml * orig.scope / mu) / (p_ml - p) / orig.scope
        return drop >= slack
    raise ConfigError(f"unknown condition: {condition!r}")


# -- constraint checks -----------------------------------------------------

@dataclass(frozen=True)
class ConstraintCheck:
    constraint: str
    holds: bool
    score_original: float
    score_perturbed: float

    @property
    def score_delta(self) -> float:
        """Perturbed-document score minus original-document score."""
        return self.score_perturbed - self.score_original


def check_constraint(constraint: str, scorer: Scorer,
                     record: PerturbationRecord,
                     tol: float = SCORE_EQ_TOL) -> ConstraintCheck:
    """Score both documents and test a constraint's inequality.

    Equality within tol counts as holding for the non-strict constraints;
    the appended-query-term constraint is strict.  The scope-bonus check
    requires a scope-side record and a single-term query (the gate
    predicates are derived for that case); the verbosity-penalty check
    requires a verbosity-side record and k > 1.
    """
    expected_kind = _KIND_FOR_CONSTRAINT.get(constraint)
    if expected_kind is None:
        raise ConfigError(f"unknown constraint: {constraint!r}")
    if record.kind != expected_kind:
        raise ConfigError(f"{constraint} needs a {expected_kind} record, "
                          f"got {record.kind}")
    if constraint in (LNC2, VERBOSITY_PENALTY) and record.k <= 1:
        raise ConfigError(f"{constraint} is defined for k > 1")
    if constraint in (SCOPE_BONUS, VERBOSITY_PENALTY):
        if scorer.measure is None:
            raise ConfigError(f"{constraint} applies to verbosity-normalized "
                              f"models only")
        side = classify(record.original, record.perturbed, scorer.measure)
        if constraint == SCOPE_BONUS and not side.scope_side:
            raise ConfigError("scope_bonus needs a scope-side record")
        if constraint == VERBOSITY_PENALTY and not side.verbosity_side:
            raise ConfigError("verbosity_penalty needs a verbosity-side record")
    if constraint == SCOPE_BONUS and len(record.query.counts()) != 1:
        raise ConfigError("scope_bonus is derived for single-term queries")

    plan = scorer.prepare(record.query)
    f_orig = scorer.score(plan, scorer.view_terms(record.original))
    f_pert = scorer.score(plan, scorer.view_terms(record.perturbed))
    delta = f_pert - f_orig
    if constraint == LNC1:
        holds = delta <= tol
    elif constraint == LNC2:
        holds = delta >= -tol
    elif constraint == TF_LNC:
        holds = delta > tol
    elif constraint == SCOPE_BONUS:
        holds = delta >= -tol
    else:  # VERBOSITY_PENALTY
        holds = delta <= tol
    return ConstraintCheck(constraint=constraint, holds=holds,
                           score_original=f_orig, score_perturbed=f_pert)


# -- coverage ---------------------------------------------------------------

@dataclass(frozen=True)
class CoverageReport:
    """How often the gating assumptions hold on real (query, document) pairs."""

    tf_pairs: int
    tf_satisfied: int
    df_terms: int
    df_satisfied: int
    rarity_pairs: int = 0
    rarity_satisfied: int = 0

    @property
    def tf_fraction(self) -> float:
        return self.tf_satisfied / self.tf_pairs if self.tf_pairs else 0.0

    @property
    def df_fraction(self) -> float:
        return self.df_satisfied / self.df_terms if self.df_terms else 0.0

    @property
    def rarity_fraction(self) -> float:
        return self.rarity_satisfied / self.rarity_pairs if self.rarity_pairs else 0.0


def a1_coverage(index: PositionalIndex, queries: Sequence[Query],
                measure: ScopeMeasure | None = None) -> CoverageReport:
    """Fractions of (query term, document) pairs satisfying the
    content-bearing bounds, over documents containing the term, plus the
    squared-rarity analogue when a measure is given."""
    if not queries:
        raise ConfigError("coverage needs at least one query")
    stats = index.stats
    half = stats.n_docs / 2.0
    tf_pairs = tf_ok = 0
    df_terms = df_ok = 0
    rarity_pairs = rarity_ok = 0
    for query in queries:
        for term in sorted(query.counts()):
            df_terms += 1
            if stats.df.get(term, 0) <= half:
                df_ok += 1
            p = stats.collection_prob(term)
            for doc_id, positions in sorted(index.postings(term).items()):
                tf = len(positions)
                length = index.document(doc_id).length
                tf_pairs += 1
                if tf >= length * p:
                    tf_ok += 1
                if measure is not None:
                    rarity_pairs += 1
                    scope = index.doc_profile(doc_id, measure).scope
                    if scope <= (length / tf) ** 2:
                        rarity_ok += 1
    return CoverageReport(tf_pairs=tf_pairs, tf_satisfied=tf_ok,
                          df_terms=df_terms, df_satisfied=df_ok,
                          rarity_pairs=rarity_pairs, rarity_satisfied=rarity_ok)


# -- synthetic collections and record sampling ------------------------------

@dataclass
class BenchRecord:
    """A perturbation record bound to the collection it was drawn from."""

    index: PositionalIndex
    record: PerturbationRecord

    def content_bearing(self) -> bool:
        return eval_condition(COND_CONTENT_BEARING, self.record,
                              ScopeMeasure.uniq_length(), stats=self.index.stats)

    def strict_margin(self) -> float:
        """Largest gap between a query term's in-document rate (original
        document) and its collection rate; the iff-style checks need this
        to be clearly positive."""
        best = -math.inf
        n = len(self.record.original)
        if n == 0:
            return -math.inf
        for w in self.record.query.counts():
            tf = sum(1 for t in self.record.original if t == w)
            best = max(best, tf / n - self.index.stats.collection_prob(w))
        return best


def synthetic_collection(rng: random.Random, n_docs: int = 8,
                         n_query_terms: int = 2) -> tuple[PositionalIndex, list[str]]:
    """A small collection with planted content-bearing query terms.

    Query terms appear often inside a minority of documents (strictly
    fewer than half) and nowhere else, so records drawn from the planted
    documents satisfy the content-bearing bounds with a wide margin.
    """
    if n_docs < 5:
        raise ConfigError("synthetic collection needs at least 5 documents")
    query_terms = [f"topic{i}" for i in range(n_query_terms)]
    fillers = [f"filler{i}" for i in range(12)]
    n_planted = max(2, min(3, (n_docs - 1) // 2))
    docs = []
    for d in range(n_docs):
        planted = d < n_planted
        pool = rng.sample(fillers, rng.randint(3, 6))
        length = rng.randint(24, 60) if planted else rng.randint(10, 40)
        terms = []
        for _ in range(length):
            if planted and rng.random() < 0.3:
                terms.append(rng.choice(query_terms))
            else:
                terms.append(rng.choice(pool))
        if planted:
            # every planted document carries every query term
            for w in query_terms:
                if w not in terms:
                    terms[rng.randrange(length)] = w
        docs.append((f"d{d:02d}", terms))
    return PositionalIndex.from_documents(docs), query_terms


class RecordSampler:
    """Seeded stream of perturbation records over synthetic collections.

    recipe is `verbosity` (extra material repeats what the document
    already says) or `scope` (extra material is brand new), matching the
    two sides every perturbation can fall on.
    """

    def __init__(self, seed: int, records_per_collection: int = 12):
        self.rng = random.Random(seed)
        self.records_per_collection = records_per_collection
        self._index = None
        self._query_terms = None
        self._left = 0

    def _collection(self) -> tuple[PositionalIndex, list[str]]:
        if self._left <= 0:
            self._index, self._query_terms = synthetic_collection(
                self.rng, n_docs=self.rng.randint(7, 10))
            self._left = self.records_per_collection
        self._left -= 1
        return self._index, self._query_terms

    def _pick_doc(self, index: PositionalIndex, query_terms: list[str]) -> tuple[str, ...]:
        planted = [doc_id for doc_id in index.doc_ids
                   if all(index.term_frequency(w, doc_id) > 0 for w in query_terms)]
        return index.document(self.rng.choice(planted)).terms

    def _query(self, query_terms: list[str], n_terms: int | None = None) -> Query:
        if n_terms is None:
            n_terms = self.rng.randint(1, len(query_terms))
        return Query.from_terms(tuple(self.rng.sample(query_terms, n_terms)))

    def noise_record(self, recipe: str) -> BenchRecord:
        index, query_terms = self._collection()
        doc = self._pick_doc(index, query_terms)
        query = self._query(query_terms)
        qset = set(query.counts())
        k = self.rng.randint(1, 5)
        if recipe == "verbosity":
            pool = [t for t in doc if t not in qset]
            noise = [self.rng.choice(pool) for _ in range(k)]
        elif recipe == "scope":
            noise = [f"novel{i}" for i in range(k)]
        else:
            raise ConfigError(f"unknown recipe: {recipe!r}")
        return BenchRecord(index, add_noise(doc, query, k, noise))

    def scale_record(self, recipe: str, k_min: int = 2) -> BenchRecord:
        index, query_terms = self._collection()
        doc = self._pick_doc(index, query_terms)
        query = self._query(query_terms)
        k = self.rng.randint(k_min, 4)
        if recipe == "verbosity":
            # Replacements come from a narrow slice of what the document
            # already says, so the rewrite concentrates rather than broadens.
            qset = set(query.counts())
            distinct = sorted({t for t in doc if t not in qset})
            pool = self.rng.sample(distinct, min(len(distinct),
                                                 self.rng.randint(1, 2))) or ["pad"]
            record = scale_length(doc, query, k, vocabulary=pool,
                                  seed=self.rng.getrandbits(32))
        elif recipe == "scope":
            record = scale_length_fresh(doc, query, k)
        else:
            raise ConfigError(f"unknown recipe: {recipe!r}")
        return BenchRecord(index, record)

    def grow_record(self) -> BenchRecord:
        index, query_terms = self._collection()
        doc = self._pick_doc(index, query_terms)
        query = self._query(query_terms, n_terms=1)
        term = next(iter(query.counts()))
        k = self.rng.randint(1, 4)
        return BenchRecord(index, add_query_term(doc, query, term, k))

    def records(self, kind: str, count: int, recipes: Sequence[str] = ("verbosity", "scope"),
                require_content_bearing: bool = True,
                max_attempts_factor: int = 20) -> list[BenchRecord]:
        """Draw `count` records of one kind, filtered to content-bearing ones."""
        out = []
        attempts = 0
        limit = count * max_attempts_factor
        while len(out) < count:
            attempts += 1
            if attempts > limit:
                raise ConfigError(f"could not draw {count} {kind} records "
                                  f"in {limit} attempts")
            recipe = recipes[attempts % len(recipes)]
            if kind == KIND_ADD_NOISE:
                rec = self.noise_record(recipe)
            elif kind == KIND_SCALE:
                rec = self.scale_record(recipe)
            elif kind == KIND_ADD_QUERY:
                rec = self.grow_record()
            else:
                raise ConfigError(f"unknown perturbation kind: {kind!r}")
            if require_content_bearing and not rec.content_bearing():
                continue
            out.append(rec)
        return out


# -- behavior matrix ---------------------------------------------------------

ROW_SCOPE_NOISE = "scope_noise"
ROW_VERBOSITY_NOISE = "verbosity_noise"
ROW_SCOPE_SCALE = "scope_scale"
ROW_VERBOSITY_SCALE = "verbosity_scale"

BEHAVIOR_ROWS = (ROW_SCOPE_NOISE, ROW_VERBOSITY_NOISE,
                 ROW_SCOPE_SCALE, ROW_VERBOSITY_SCALE)


@dataclass
class BehaviorCell:
    expected: str  # "original", "perturbed", or "gated"
    trials: int = 0
    agree: int = 0
    prefer_original: int = 0
    prefer_perturbed: int = 0
    ties: int = 0
    gate_true: int = 0
    gate_false: int = 0

    def to_dict(self) -> dict:
        return dict(expected=self.expected, trials=self.trials, agree=self.agree,
                    prefer_original=self.prefer_original,
                    prefer_perturbed=self.prefer_perturbed, ties=self.ties,
                    gate_true=self.gate_true, gate_false=self.gate_false)


def behavior_matrix(index: PositionalIndex, query: Query,
                    config: ScoringConfig, measure: ScopeMeasure,
                    trials: int = 100, seed: int = 0,
                    tol: float = SCORE_EQ_TOL) -> dict[str, dict[str, BehaviorCell]]:
    """Tally score movements of the original and the verbosity-normalized
    model over the four perturbation families.

    The query must be a single content-bearing term: the gate predicates
    deciding the scope-broadening noise row are derived for that case.
    Rows are keyed by family, columns by `original` / `normalized`.
    """
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    if config.model not in (MODEL_DP, MODEL_OKAPI):
        raise ConfigError("the behavior matrix is defined for the dp and okapi "
                          "families")
    if len(query.counts()) != 1:
        raise ConfigError("the behavior matrix needs a single-term query")
    term = next(iter(query.counts()))
    rng = random.Random(seed)
    index.ensure_scope_means(measure)
    base = make_scorer(index, config)
    normalized = make_scorer(index, ScoringConfig(
        model=config.model, measure=measure, mu=config.mu, k1=config.k1,
        b=config.b, k3=config.k3))
    gate = COND_DIRICHLET_GATE if config.model == MODEL_DP else COND_OKAPI_GATE

    matrix = {
        ROW_SCOPE_NOISE: {"original": BehaviorCell("original"),
                          "normalized": BehaviorCell("gated")},
        ROW_VERBOSITY_NOISE: {"original": BehaviorCell("original"),
                              "normalized": BehaviorCell("original")},
        ROW_SCOPE_SCALE: {"original": BehaviorCell("perturbed"),
                          "normalized": BehaviorCell("perturbed")},
        ROW_VERBOSITY_SCALE: {"original": BehaviorCell("perturbed"),
                              "normalized": BehaviorCell("original")},
    }

    candidates = [doc_id for doc_id in index.doc_ids
                  if index.term_frequency(term, doc_id) > 0]
    if not candidates:
        raise ConfigError(f"no document contains the query term {term!r}")

    made = {row: 0 for row in BEHAVIOR_ROWS}
    attempts = 0
    while min(made.values()) < trials and attempts < trials * 200:
        attempts += 1
        row = min(BEHAVIOR_ROWS, key=lambda r: made[r])
        doc = index.document(rng.choice(candidates)).terms
        qset = {term}
        try:
            if row == ROW_SCOPE_NOISE:
                k = rng.randint(1, 5)
                record = add_noise(doc, query, k, [f"novel{i}" for i in range(k)])
            elif row == ROW_VERBOSITY_NOISE:
                pool = [t for t in doc if t not in qset]
                if not pool:
                    continue
                k = rng.randint(1, 5)
                record = add_noise(doc, query, k,
                                   [rng.choice(pool) for _ in range(k)])
            elif row == ROW_SCOPE_SCALE:
                record = scale_length_fresh(doc, query, rng.randint(2, 4))
            else:
                pool = [t for t in doc if t not in qset]
                record = scale_length(doc, query, rng.randint(2, 4),
                                      vocabulary=pool or ["pad"],
                                      seed=rng.getrandbits(32))
        except ConfigError:
            continue
        side = classify(record.original, record.perturbed, measure)
        wanted_scope = row in (ROW_SCOPE_NOISE, ROW_SCOPE_SCALE)
        if wanted_scope and not side.scope_side:
            continue
        if not wanted_scope and not side.verbosity_side:
            continue
        bench = BenchRecord(index, record)
        if not bench.content_bearing():
            continue
        # The gate predicates assume the term is strictly more likely in
        # the document than in the collection; skip knife-edge draws.
        if bench.strict_margin() < 1e-6:
            continue
        made[row] += 1
        for name, scorer in (("original", base), ("normalized", normalized)):
            cell = matrix[row][name]
            plan = scorer.prepare(query)
            f_orig = scorer.score(plan, scorer.view_terms(record.original))
            f_pert = scorer.score(plan, scorer.view_terms(record.perturbed))
            delta = f_pert - f_orig
            cell.trials += 1
            if delta > tol:
                cell.prefer_perturbed += 1
            elif delta < -tol:
                cell.prefer_original += 1
            else:
                cell.ties += 1
            if cell.expected == "gated":
                gate_value = eval_condition(gate, record, measure,
                                            stats=index.stats, mu=config.mu,
                                            b=config.b, term=term)
                if gate_value:
                    cell.gate_true += 1
                    agree = delta >= -tol
                else:
                    cell.gate_false += 1
                    agree = delta <= tol
            elif cell.expected == "original":
                agree = delta <= tol
            else:
                agree = delta >= -tol
            if agree:
                cell.agree += 1
    if min(made.values()) < trials:
        raise ConfigError("could not build enough qualifying perturbations; "
                          "collection too small or query not content-bearing")
    return matrix
