"""Immutable positional inverted index with collection statistics.

Positions are 1-based. A window span of n means the two occurrences sit
within n consecutive slots (max - min + 1 <= n). Window counts count all
qualifying position pairs, not windows; for a pair of identical terms,
unordered pairs of distinct positions are counted once.
"""

from __future__ import annotations

import hashlib
import json
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .analysis import AnalyzerConfig, analyze
from .errors import (
    ConfigError,
    CorruptIndexFile,
    DegenerateCollection,
    DuplicateDocumentId,
    FormatError,
    IndexVersionError,
    UnknownDocumentId,
)
from .scope import DocProfile, ScopeMeasure, entropy_power

INDEX_MAGIC = "scopenorm-index"
INDEX_VERSION = 1


@dataclass(frozen=True)
class Document:
    doc_id: str
    terms: tuple[str, ...]

    @property
    def length(self) -> int:
        return len(self.terms)


@dataclass(frozen=True)
class StatSummary:
    """Mean and coefficient of variance (population std-dev over mean)."""

    mean: float
    coeff_var: float

    @classmethod
    def of(cls, values: Sequence[float]) -> "StatSummary":
        if not values:
            raise DegenerateCollection("no values to summarize")
        mean = sum(values) / len(values)
        if mean <= 0:
            raise DegenerateCollection("coefficient of variance needs mean > 0")
        var = sum((v - mean) ** 2 for v in values) / len(values)
        return cls(mean=mean, coeff_var=math.sqrt(var) / mean)


class CollectionStats:
    """Collection-level counts: N, total length, per-term collection and
    document frequencies, average length, and per-measure average scope
    and verbosity registered on demand."""

    def __init__(self, n_docs: int, total_length: int,
                 cf: Mapping[str, int], df: Mapping[str, int]):
        self.n_docs = n_docs
        self.total_length = total_length
        self.cf = dict(cf)
        self.df = dict(df)
        self._scope_means: dict[ScopeMeasure, tuple[float, float]] = {}

    @property
    def defined(self) -> bool:
        return self.n_docs > 0

    @property
    def avgl(self) -> float:
        if not self.defined:
            raise DegenerateCollection("empty collection has no average length")
        return self.total_length / self.n_docs

    def collection_prob(self, term: str) -> float:
        """Maximum-likelihood collection language model p(term|collection)."""
        if self.total_length == 0:
            raise DegenerateCollection("zero-length collection has no language model")
        return self.cf.get(term, 0) / self.total_length

    def register_scope_means(self, measure: ScopeMeasure, avgs: float, avgv: float):
        self._scope_means[measure] = (avgs, avgv)

    def has_scope_means(self, measure: ScopeMeasure) -> bool:
        return measure in self._scope_means

    def avgs(self, measure: ScopeMeasure) -> float:
        try:
            return self._scope_means[measure][0]
        except KeyError:
            raise ConfigError(f"scope means not registered for {measure}") from None

    def avgv(self, measure: ScopeMeasure) -> float:
        try:
            return self._scope_means[measure][1]
        except KeyError:
            raise ConfigError(f"scope means not registered for {measure}") from None


def ordered_pair_count(left: Sequence[int], right: Sequence[int]) -> int:
    """Adjacent-pair count: positions i in `left` with i+1 in `right`."""
    right_set = set(right)
    return sum(1 for i in left if i + 1 in right_set)


def window_pair_count(left: Sequence[int], right: Sequence[int], span: int,
                      same_term: bool) -> int:
    """Count position pairs within a window of `span` slots.

    Both lists must be ascending. For the same-term case the two lists are
    identical and each unordered pair of distinct positions counts once.
    """
    if span < 2:
        raise ConfigError(f"window span must be >= 2, got {span}")
    count = 0
    if same_term:
        for idx, pos in enumerate(left):
            count += bisect_right(left, pos + span - 1) - (idx + 1)
        return count
    for pos in left:
        lo = bisect_left(right, pos - span + 1)
        hi = bisect_right(right, pos + span - 1)
        count += hi - lo
    return count


class DocView:
    """Read-only term counts plus scope profile for one document.

    Backs the scoring kernels with a single code path whether the document
    lives in an index or is a free-standing term sequence (the constraint
    bench scores perturbed documents that are never indexed).
    """

    __slots__ = ("doc_id", "positions", "profile")

    def __init__(self, doc_id, positions, profile):
        self.doc_id = doc_id
        self.positions = positions  # term -> ascending position tuple
        self.profile = profile

    @classmethod
    def from_terms(cls, terms: Sequence[str], measure: ScopeMeasure | None,
                   doc_id: str | None = None) -> "DocView":
        positions = {}
        for i, term in enumerate(terms, start=1):
            positions.setdefault(term, []).append(i)
        profile = DocProfile.of(terms, measure) if measure is not None else None
        if profile is None:
            profile = DocProfile(length=len(terms), scope=float(len(terms)),
                                 verbosity=1.0, measure=None)
        return cls(doc_id, positions, profile)

    @property
    def length(self) -> int:
        return self.profile.length

    @property
    def scope(self) -> float:
        return self.profile.scope

    @property
    def verbosity(self) -> float:
        return self.profile.verbosity

    def tf(self, term: str) -> int:
        pos = self.positions.get(term)
        return len(pos) if pos else 0

    def ordered_count(self, w1: str, w2: str) -> int:
        p1 = self.positions.get(w1)
        p2 = self.positions.get(w2)
        if not p1 or not p2:
            return 0
        return ordered_pair_count(p1, p2)

    def window_count(self, w1: str, w2: str, span: int = 8) -> int:
        p1 = self.positions.get(w1)
        p2 = self.positions.get(w2)
        if not p1 or not p2:
            return 0
        return window_pair_count(p1, p2, span, same_term=(w1 == w2))


class PositionalIndex:
    """Postings with positions, a document store, and collection stats.

    Built once, then read-only; all query methods are safe for concurrent
    readers.
    """

    def __init__(self, documents: Sequence[Document],
                 analyzer: AnalyzerConfig | None = None):
        self._docs: dict[str, Document] = {}
        self._postings: dict[str, dict[str, tuple[int, ...]]] = {}
        self.analyzer = analyzer
        building: dict[str, dict[str, list[int]]] = {}
        for doc in documents:
            if doc.doc_id in self._docs:
                raise DuplicateDocumentId(doc.doc_id)
            self._docs[doc.doc_id] = doc
            for i, term in enumerate(doc.terms, start=1):
                building.setdefault(term, {}).setdefault(doc.doc_id, []).append(i)
        self._postings = {
            term: {doc_id: tuple(pos) for doc_id, pos in per_doc.items()}
            for term, per_doc in building.items()
        }
        cf = {t: sum(len(p) for p in d.values()) for t, d in self._postings.items()}
        df = {t: len(d) for t, d in self._postings.items()}
        self.stats = CollectionStats(
            n_docs=len(self._docs),
            total_length=sum(d.length for d in self._docs.values()),
            cf=cf,
            df=df,
        )
        self._profiles: dict[tuple[ScopeMeasure, str], DocProfile] = {}
        self._gram_cf: dict[tuple, int] = {}
        self._views: dict[tuple[ScopeMeasure | None, str], DocView] = {}

    # -- construction ----------------------------------------------------

    @classmethod
    def from_documents(cls, pairs: Iterable[tuple[str, Sequence[str]]],
                       analyzer: AnalyzerConfig | None = None) -> "PositionalIndex":
        docs = [Document(doc_id, tuple(terms)) for doc_id, terms in pairs]
        return cls(docs, analyzer=analyzer)

    # -- basic access ----------------------------------------------------

    @property
    def doc_ids(self) -> list[str]:
        return sorted(self._docs)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._docs

    def document(self, doc_id: str) -> Document:
        try:
            return self._docs[doc_id]
        except KeyError:
            raise UnknownDocumentId(doc_id) from None

    def postings(self, term: str) -> dict[str, tuple[int, ...]]:
        return self._postings.get(term, {})

    def vocabulary(self) -> list[str]:
        return sorted(self._postings)

    def positions(self, term: str, doc_id: str) -> tuple[int, ...]:
        self.document(doc_id)
        return self._postings.get(term, {}).get(doc_id, ())

    # -- counts ----------------------------------------------------------

    def term_frequency(self, term: str, doc_id: str) -> int:
        return len(self.positions(term, doc_id))

    def ordered_bigram_count(self, w1: str, w2: str, doc_id: str) -> int:
        p1 = self.positions(w1, doc_id)
        p2 = self.positions(w2, doc_id)
        if not p1 or not p2:
            return 0
        return ordered_pair_count(p1, p2)

    def unordered_window_count(self, w1: str, w2: str, doc_id: str,
                               span: int = 8) -> int:
        if span < 2:
            raise ConfigError(f"window span must be >= 2, got {span}")
        p1 = self.positions(w1, doc_id)
        p2 = self.positions(w2, doc_id)
        if not p1 or not p2:
            return 0
        return window_pair_count(p1, p2, span, same_term=(w1 == w2))

    def ordered_bigram_collection_count(self, w1: str, w2: str) -> int:
        key = ("o", w1, w2)
        if key not in self._gram_cf:
            d1 = self._postings.get(w1, {})
            d2 = self._postings.get(w2, {})
            docs = d1.keys() & d2.keys()
            self._gram_cf[key] = sum(
                ordered_pair_count(d1[doc], d2[doc]) for doc in docs)
        return self._gram_cf[key]

    def unordered_window_collection_count(self, w1: str, w2: str,
                                          span: int = 8) -> int:
        key = ("u", w1, w2, span)
        if key not in self._gram_cf:
            d1 = self._postings.get(w1, {})
            d2 = self._postings.get(w2, {})
            docs = d1.keys() & d2.keys()
            self._gram_cf[key] = sum(
                window_pair_count(d1[doc], d2[doc], span, same_term=(w1 == w2))
                for doc in docs)
        return self._gram_cf[key]

    # -- scope -----------------------------------------------------------

    def doc_profile(self, doc_id: str, measure: ScopeMeasure) -> DocProfile:
        key = (measure, doc_id)
        profile = self._profiles.get(key)
        if profile is None:
            profile = DocProfile.of(self.document(doc_id).terms, measure)
            self._profiles[key] = profile
        return profile

    def ensure_scope_means(self, measure: ScopeMeasure):
        """Compute and register avgs/avgv for a measure (idempotent)."""
        if self.stats.has_scope_means(measure):
            return
        if not self.stats.defined:
            raise DegenerateCollection("empty collection has no scope means")
        total_s = 0.0
        total_v = 0.0
        for doc_id in self._docs:
            profile = self.doc_profile(doc_id, measure)
            total_s += profile.scope
            total_v += profile.verbosity
        n = self.stats.n_docs
        self.stats.register_scope_means(measure, total_s / n, total_v / n)

    def doc_view(self, doc_id: str, measure: ScopeMeasure | None) -> DocView:
        key = (measure, doc_id)
        view = self._views.get(key)
        if view is not None:
            return view
        doc = self.document(doc_id)
        positions = {term: self._postings[term][doc_id] for term in set(doc.terms)}
        if measure is not None:
            profile = self.doc_profile(doc_id, measure)
        else:
            profile = DocProfile(length=doc.length, scope=float(doc.length),
                                 verbosity=1.0, measure=None)
        view = DocView(doc_id, positions, profile)
        self._views[key] = view
        return view

    # -- summaries ---------------------------------------------------------

    def collection_summary(self, measure: ScopeMeasure) -> dict[str, StatSummary]:
        """Mean and coefficient of variance of document length, entropy
        power, and verbosity (verbosity under the given measure)."""
        if not self.stats.defined:
            raise DegenerateCollection("no documents")
        lengths = []
        entropies = []
        verbosities = []
        for doc_id in self.doc_ids:
            doc = self._docs[doc_id]
            lengths.append(float(doc.length))
            entropies.append(entropy_power(doc.terms))
            verbosities.append(self.doc_profile(doc_id, measure).verbosity)
        return {
            "length": StatSummary.of(lengths),
            "entropy_power": StatSummary.of(entropies),
            "verbosity": StatSummary.of(verbosities),
        }

    # -- persistence -------------------------------------------------------

    def save(self, path):
        payload = {
            "analyzer": self.analyzer.to_dict() if self.analyzer else None,
            "docs": [[doc_id, list(self._docs[doc_id].terms)]
                     for doc_id in sorted(self._docs)],
        }
        body = json.dumps(payload, sort_keys=True, separators=(",", ":"),
                          ensure_ascii=True)
        envelope = {
            "magic": INDEX_MAGIC,
            "version": INDEX_VERSION,
            "sha256": hashlib.sha256(body.encode("utf-8")).hexdigest(),
            "payload": payload,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(envelope, fh, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "PositionalIndex":
        try:
            with open(path, encoding="utf-8") as fh:
                envelope = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CorruptIndexFile(f"{path}: not valid index JSON ({exc})") from None
        if not isinstance(envelope, dict) or envelope.get("magic") != INDEX_MAGIC:
            raise CorruptIndexFile(f"{path}: missing index magic header")
        if envelope.get("version") != INDEX_VERSION:
            raise IndexVersionError(
                f"{path}: index version {envelope.get('version')!r}, "
                f"expected {INDEX_VERSION}")
        payload = envelope.get("payload")
        body = json.dumps(payload, sort_keys=True, separators=(",", ":"),
                          ensure_ascii=True)
        digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
        if digest != envelope.get("sha256"):
            raise CorruptIndexFile(f"{path}: checksum mismatch")
        analyzer = None
        if payload.get("analyzer") is not None:
            analyzer = AnalyzerConfig.from_dict(payload["analyzer"])
        return cls.from_documents(
            ((doc_id, terms) for doc_id, terms in payload["docs"]),
            analyzer=analyzer)


def build_index(corpus: Iterable[tuple[str, str]],
                config: AnalyzerConfig) -> PositionalIndex:
    """Analyze raw (doc_id, text) pairs and build the index.

    Duplicate ids are rejected; empty documents are retained and counted
    in N and the averages.
    """
    docs = []
    for doc_id, text in corpus:
        docs.append(Document(str(doc_id), tuple(analyze(text, config))))
    return PositionalIndex(docs, analyzer=config)


def read_corpus_jsonl(path) -> list[tuple[str, str]]:
    """Corpus input: JSON lines with `id` and `text` fields."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"bad JSON ({exc.msg})", path=path, line=lineno) from None
            if not isinstance(obj, dict) or "id" not in obj or "text" not in obj:
                raise FormatError("corpus line needs 'id' and 'text' fields",
                                  path=path, line=lineno)
            pairs.append((str(obj["id"]), str(obj["text"])))
    return pairs
