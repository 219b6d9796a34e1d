"""Independent brute-force oracles and random-input builders.

Everything here is deliberately naive: definition-level loops with no
shared code paths into the package, so tests compare two genuinely
different computations.
"""

from __future__ import annotations

import random


# -- counting oracles --------------------------------------------------------

def brute_ordered_bigram(terms, w1, w2):
    """Adjacent-pair scan straight off the definition."""
    return sum(1 for i in range(len(terms) - 1)
               if terms[i] == w1 and terms[i + 1] == w2)


def brute_window_pairs(terms, w1, w2, span):
    """Exhaustive position-pair enumeration (1-based positions).

    Counts pairs (i, j) with terms[i]=w1, terms[j]=w2, i != j, and
    max-min+1 <= span; for w1 == w2 each unordered pair counts once.
    """
    p1 = [i for i, t in enumerate(terms, start=1) if t == w1]
    p2 = [i for i, t in enumerate(terms, start=1) if t == w2]
    if w1 == w2:
        return sum(1 for a in p1 for b in p2
                   if a < b and b - a + 1 <= span)
    return sum(1 for a in p1 for b in p2
               if a != b and max(a, b) - min(a, b) + 1 <= span)


# -- metric oracles ----------------------------------------------------------

def brute_average_precision(ranked, relevant):
    """Definition loop: precision at each relevant retrieved rank, over R."""
    if not relevant:
        return None
    seen = 0
    acc = 0.0
    for rank, doc in enumerate(ranked, start=1):
        if doc in relevant:
            seen += 1
            prec = sum(1 for d in ranked[:rank] if d in relevant) / rank
            acc += prec
    return acc / len(relevant)


def brute_precision_at(ranked, relevant, k):
    hits = 0
    for doc in ranked[:k]:
        if doc in relevant:
            hits += 1
    return hits / k


# -- rank agreement -----------------------------------------------------------

def kendall_tau_ties(scores_a, scores_b):
    """Kendall tau-b style agreement: 1.0 iff every document pair is ordered
    the same way by both score vectors (ties must match too)."""
    n = len(scores_a)
    assert n == len(scores_b)
    concordant = 0
    pairs = 0
    for i in range(n):
        for j in range(i + 1, n):
            pairs += 1
            da = scores_a[i] - scores_a[j]
            db = scores_b[i] - scores_b[j]
            if (da > 0 and db > 0) or (da < 0 and db < 0) or (da == 0 and db == 0):
                concordant += 1
    return concordant / pairs if pairs else 1.0


# -- random inputs ------------------------------------------------------------

def random_terms(rng: random.Random, length, vocab):
    return [rng.choice(vocab) for _ in range(length)]


def random_corpus(rng: random.Random, max_docs=50, max_len=200, min_docs=3):
    """(doc_id, terms) pairs over a small vocabulary; may include empty docs."""
    vocab = [f"w{i}" for i in range(rng.randint(4, 30))]
    n = rng.randint(min_docs, max_docs)
    docs = []
    for i in range(n):
        length = rng.randint(0, max_len)
        docs.append((f"doc{i:03d}", random_terms(rng, length, vocab)))
    return docs, vocab


def random_query_terms(rng: random.Random, vocab, max_terms=3):
    n = rng.randint(1, max_terms)
    return [rng.choice(vocab) for _ in range(n)]
