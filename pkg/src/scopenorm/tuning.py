"""Grid search with k-fold cross-validation by topic set.

Each fold's parameters are chosen on the union of the other folds'
queries and reported on the held-out fold.  Selection is deterministic:
on tied training scores the lexicographically smallest parameter tuple
wins, under the fixed order (mu, b, k1, delta, beta).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from .errors import ConfigError, FormatError
from .evaluation import Qrels, TTestResult, average_precision, paired_t_test, precision_at
from .index import PositionalIndex
from .scope import LENGTH_POWER
from .scoring import (
    MODEL_DP,
    MODEL_JM,
    MODEL_MRF,
    MODEL_OKAPI,
    Query,
    ScoringConfig,
    search_topk,
)

METRIC_MAP = "map"
METRIC_P5 = "p5"


def _steps(start: float, stop: float, step: float, scale: int) -> tuple[float, ...]:
    # integer arithmetic so grid values are exact decimals
    lo = round(start * scale)
    hi = round(stop * scale)
    inc = round(step * scale)
    return tuple(v / scale for v in range(lo, hi + 1, inc))


@dataclass(frozen=True)
class ParamGrid:
    """Search spaces for every tunable parameter."""

    mu: tuple[float, ...] = (100, 200, 300, 400, 500, 600, 800, 1000, 1500,
                             2000, 2500, 3000, 4000, 5000, 7000, 10000,
                             15000, 20000)
    b: tuple[float, ...] = (0, 0.001, 0.003, 0.005, 0.007, 0.01, 0.02, 0.03,
                            0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    k1: tuple[float, ...] = (0.25, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0, 1.2, 1.5,
                             1.8, 2.0, 2.5, 3.0)
    k3: float = 1000.0
    delta_dp: tuple[float, ...] = field(default_factory=lambda: _steps(0.0, 0.15, 0.01, 100))
    delta_okapi: tuple[float, ...] = field(default_factory=lambda: _steps(0.0, 1.5, 0.1, 10))
    beta: tuple[float, ...] = (0.25, 0.5, 0.75, 0.9)


@dataclass(frozen=True)
class GridPoint:
    """One concrete parameter assignment; the key orders ties."""

    config: ScoringConfig
    key: tuple[float, ...]


def grid_points(template: ScoringConfig, grid: ParamGrid,
                tune_delta: bool = False) -> list[GridPoint]:
    """Expand a config template over its family's search space.

    The language-model families sweep mu; the bm25 family sweeps (b, k1)
    with k3 pinned; lower-bounded variants additionally sweep delta.
    Points come back sorted by their tie-break key.
    """
    points = []
    if template.model in (MODEL_DP, MODEL_MRF):
        deltas = grid.delta_dp if tune_delta else (template.delta,)
        for mu in grid.mu:
            for delta in deltas:
                cfg = replace(template, mu=float(mu), delta=delta)
                points.append(GridPoint(cfg, (float(mu), 0.0, 0.0, delta, 0.0)))
    elif template.model == MODEL_OKAPI:
        deltas = grid.delta_okapi if tune_delta else (template.delta,)
        for b in grid.b:
            for k1 in grid.k1:
                for delta in deltas:
                    cfg = replace(template, b=float(b), k1=float(k1),
                                  k3=grid.k3, delta=delta)
                    points.append(GridPoint(cfg, (0.0, float(b), float(k1),
                                                  delta, 0.0)))
    elif template.model == MODEL_JM:
        raise ConfigError("no search space is defined for the jm model")
    if not points:
        raise ConfigError("empty parameter grid")
    points.sort(key=lambda p: p.key)
    return points


def scale_for_lengthpower(config: ScoringConfig, avgv: float) -> ScoringConfig:
    """Divide mu and k1 by average verbosity, the rescaling that keeps the
    lengthpower measure's useful parameter ranges aligned with the
    original models'.  A no-op (with a warning) for the other measures."""
    if config.measure is None or config.measure.kind != LENGTH_POWER:
        warnings.warn("average-verbosity rescaling only applies to the "
                      "lengthpower scope measure; parameters left unchanged")
        return config
    if avgv <= 0:
        raise ConfigError(f"average verbosity must be > 0, got {avgv}")
    return replace(config, mu=config.mu / avgv, k1=config.k1 / avgv)


class FoldPlan:
    """Named disjoint test sets of query ids; training is the complement."""

    def __init__(self, folds: Mapping[str, Sequence[str]]):
        self.folds = {name: list(qids) for name, qids in folds.items()}
        if not self.folds:
            raise ConfigError("fold plan is empty")
        seen = set()
        for name, qids in self.folds.items():
            if not qids:
                raise ConfigError(f"fold {name!r} is empty")
            for qid in qids:
                if qid in seen:
                    raise ConfigError(f"query {qid!r} appears in two folds")
                seen.add(qid)

    def query_ids(self) -> list[str]:
        return sorted(q for qids in self.folds.values() for q in qids)

    def training_for(self, fold_name: str) -> list[str]:
        train = [q for name, qids in self.folds.items()
                 if name != fold_name for q in qids]
        if not train:
            raise ConfigError(f"fold {fold_name!r} has no training queries "
                              f"(a plan needs at least two folds)")
        return sorted(train)

    @classmethod
    def load(cls, path) -> "FoldPlan":
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise FormatError(f"bad JSON ({exc.msg})", path=path,
                                  line=exc.lineno) from None
        if not isinstance(data, dict):
            raise FormatError("fold plan must map fold name -> query ids",
                              path=path)
        return cls(data)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.folds, fh, indent=2, sort_keys=True)
            fh.write("\n")


@dataclass
class FoldResult:
    fold: str
    params: tuple[float, ...]
    config: ScoringConfig
    train_score: float
    test_scores: dict[str, float]
    test_secondary: dict[str, float] = field(default_factory=dict)


@dataclass
class CrossValidation:
    metric: str
    folds: list[FoldResult]
    # fold name -> [(param key, training mean)] in key order, for plots
    curves: dict[str, list[tuple[tuple[float, ...], float]]] = field(default_factory=dict)

    def pooled(self) -> dict[str, float]:
        """All held-out per-topic scores, each query exactly once; this is
        the vector significance tests run on."""
        out: dict[str, float] = {}
        for fold in self.folds:
            out.update(fold.test_scores)
        return out

    def pooled_secondary(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for fold in self.folds:
            out.update(fold.test_secondary)
        return out

    def mean(self) -> float:
        pooled = self.pooled()
        return sum(pooled.values()) / len(pooled)


def _metric_for_query(metric: str, ranked_docs, relevant, k=5) -> float:
    if metric == METRIC_MAP:
        ap = average_precision(ranked_docs, relevant)
        return ap if ap is not None else 0.0
    if metric == METRIC_P5:
        return precision_at(ranked_docs, relevant, k)
    raise ConfigError(f"unknown metric: {metric!r}")


def cross_validate(index: PositionalIndex, topics: Mapping[str, Query],
                   qrels: Qrels, template: ScoringConfig, grid: ParamGrid,
                   folds: FoldPlan, metric: str = METRIC_MAP,
                   tune_delta: bool = False, topk: int = 1000,
                   secondary_metric: str | None = None) -> CrossValidation:
    """Select the best grid point per fold on its training queries and
    report held-out per-query scores.

    Every fold query must be present in the topics and have at least one
    relevant document.  When a secondary metric is given it is evaluated
    on the held-out fold with the primary-metric-optimized parameters
    (never tuned separately).
    """
    for qid in folds.query_ids():
        if qid not in topics:
            raise ConfigError(f"fold query {qid!r} has no topic")
        if not qrels.relevant_docs(qid):
            raise ConfigError(f"fold query {qid!r} has no relevant documents")

    points = grid_points(template, grid, tune_delta=tune_delta)
    # one search per (grid point, query), shared across folds
    per_point: list[dict[str, list[str]]] = []
    for point in points:
        ranked = {}
        for qid in folds.query_ids():
            results = search_topk(index, topics[qid], point.config, k=topk)
            ranked[qid] = [doc_id for doc_id, _ in results]
        per_point.append(ranked)

    scores: list[dict[str, float]] = []
    for ranked in per_point:
        scores.append({qid: _metric_for_query(metric, docs, qrels.relevant_docs(qid))
                       for qid, docs in ranked.items()})

    results = []
    curves: dict[str, list[tuple[tuple[float, ...], float]]] = {}
    for fold_name in sorted(folds.folds):
        train = folds.training_for(fold_name)
        best_idx = None
        best_score = -1.0
        curve = []
        for i, point_scores in enumerate(scores):
            train_mean = sum(point_scores[q] for q in train) / len(train)
            curve.append((points[i].key, train_mean))
            if train_mean > best_score + 1e-15:
                best_score = train_mean
                best_idx = i
        curves[fold_name] = curve
        point = points[best_idx]
        test = {qid: scores[best_idx][qid] for qid in folds.folds[fold_name]}
        secondary = {}
        if secondary_metric:
            secondary = {
                qid: _metric_for_query(secondary_metric, per_point[best_idx][qid],
                                       qrels.relevant_docs(qid))
                for qid in folds.folds[fold_name]
            }
        results.append(FoldResult(fold=fold_name, params=point.key,
                                  config=point.config, train_score=best_score,
                                  test_scores=test, test_secondary=secondary))
    return CrossValidation(metric=metric, folds=results, curves=curves)


def tune_report(result: CrossValidation,
                baseline: CrossValidation | None = None) -> dict:
    """Per-fold selections plus pooled per-topic scores, and, when a
    baseline is supplied, the paired t-test between the pooled vectors."""
    report = {
        "metric": result.metric,
        "folds": [
            {
                "fold": fold.fold,
                "params": {
                    "mu": fold.params[0], "b": fold.params[1],
                    "k1": fold.params[2], "delta": fold.params[3],
                    "beta": fold.params[4],
                },
                "train_score": fold.train_score,
                "test_mean": (sum(fold.test_scores.values())
                              / len(fold.test_scores)),
            }
            for fold in result.folds
        ],
        "pooled_mean": result.mean(),
        "per_topic": dict(sorted(result.pooled().items())),
    }
    if baseline is not None:
        ours = result.pooled()
        theirs = baseline.pooled()
        if set(ours) != set(theirs):
            raise ConfigError("pooled query sets differ between methods")
        qids = sorted(ours)
        test = paired_t_test([ours[q] for q in qids], [theirs[q] for q in qids])
        report["significance"] = ttest_to_dict(test)
    return report


def ttest_to_dict(test: TTestResult) -> dict:
    return {
        "n": test.n,
        "mean_diff": test.mean_diff,
        "t": test.t,
        "p_two_sided": test.p_two_sided,
        "significant_95": test.significant_95,
        "degenerate": test.degenerate,
    }
