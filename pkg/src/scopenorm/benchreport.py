"""Assembles the machine-readable constraint bench report.

Cells are keyed by constraint, model, scope measure, and the gating
condition that selected the records; each carries pass/total counts and
the first counterexample, if any.  Everything is driven by one seed.
"""

from __future__ import annotations

from . import axioms
from .axioms import (
    COND_CONTENT_BEARING,
    COND_DIRICHLET_GATE,
    COND_OKAPI_GATE,
    COND_RARITY_SQUARE,
    COND_SCOPE_KEPT,
    COND_VERBOSITY_KEPT,
    KIND_ADD_NOISE,
    KIND_ADD_QUERY,
    KIND_SCALE,
    LNC1,
    LNC2,
    SCOPE_BONUS,
    TF_LNC,
    VERBOSITY_PENALTY,
    BenchRecord,
    RecordSampler,
    behavior_matrix,
    check_constraint,
    classify,
    eval_condition,
    synthetic_collection,
)
from .errors import ConfigError
from .scope import ScopeMeasure
from .scoring import (
    MODEL_DP,
    MODEL_OKAPI,
    DirichletScorer,
    OkapiScorer,
    Query,
    ScoringConfig,
)


def _scorer(bench: BenchRecord, model: str, measure, mu, k1, b):
    stats = bench.index.stats
    if model == MODEL_DP:
        return DirichletScorer(stats, mu=mu, measure=measure)
    if measure is not None:
        bench.index.ensure_scope_means(measure)
    return OkapiScorer(stats, k1=k1, b=b, measure=measure)


def _summarize(record: axioms.PerturbationRecord, check) -> dict:
    return {
        "query": [list(seg) for seg in record.query.segments],
        "k": record.k,
        "original": list(record.original),
        "perturbed": list(record.perturbed),
        "score_original": check.score_original,
        "score_perturbed": check.score_perturbed,
    }


class _Cell:
    def __init__(self, label):
        self.label = label
        self.passed = 0
        self.total = 0
        self.counterexample = None

    def add(self, record, check, expect_holds=True):
        self.total += 1
        ok = check.holds if expect_holds else not check.holds
        if ok:
            self.passed += 1
        elif self.counterexample is None:
            self.counterexample = _summarize(record, check)

    def to_dict(self):
        return {"label": self.label, "passed": self.passed, "total": self.total,
                "counterexample": self.counterexample}


def run_constraint_bench(trials: int = 200, seed: int = 0,
                         measures: str = "uniqlength,entropypower",
                         mu: float = 1000.0, k1: float = 1.2,
                         b: float = 0.4) -> dict:
    """Run every bench cell with `trials` records each and return the report."""
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    parsed_measures = [ScopeMeasure.parse(m.strip())
                       for m in measures.split(",") if m.strip()]
    sampler = RecordSampler(seed)
    noise = sampler.records(KIND_ADD_NOISE, trials)
    scale = sampler.records(KIND_SCALE, trials)
    grow = sampler.records(KIND_ADD_QUERY, trials)

    cells = []

    # Original models: the three classic constraints on content-bearing records.
    for model in (MODEL_DP, MODEL_OKAPI):
        for constraint, pool in ((LNC1, noise), (LNC2, scale), (TF_LNC, grow)):
            cell = _Cell(f"{constraint}/{model}/original/{COND_CONTENT_BEARING}")
            for bench in pool:
                scorer = _scorer(bench, model, None, mu, k1, b)
                cell.add(bench.record,
                         check_constraint(constraint, scorer, bench.record))
            cells.append(cell)

    # Normalized models, per measure.
    for measure in parsed_measures:
        for model in (MODEL_DP, MODEL_OKAPI):
            tag = f"{model}/{measure}"

            cell = _Cell(f"{LNC1}/{tag}/{COND_VERBOSITY_KEPT}")
            for bench in noise:
                if not eval_condition(COND_VERBOSITY_KEPT, bench.record, measure):
                    continue
                scorer = _scorer(bench, model, measure, mu, k1, b)
                cell.add(bench.record,
                         check_constraint(LNC1, scorer, bench.record))
            cells.append(cell)

            cell = _Cell(f"{LNC2}/{tag}/{COND_SCOPE_KEPT}")
            for bench in scale:
                if not eval_condition(COND_SCOPE_KEPT, bench.record, measure):
                    continue
                scorer = _scorer(bench, model, measure, mu, k1, b)
                cell.add(bench.record,
                         check_constraint(LNC2, scorer, bench.record))
            cells.append(cell)

            cell = _Cell(f"{LNC2}/{tag}/not-{COND_SCOPE_KEPT}")
            for bench in scale:
                if eval_condition(COND_SCOPE_KEPT, bench.record, measure):
                    continue
                if bench.strict_margin() < 1e-6:
                    continue
                scorer = _scorer(bench, model, measure, mu, k1, b)
                cell.add(bench.record,
                         check_constraint(LNC2, scorer, bench.record),
                         expect_holds=False)
            cells.append(cell)

            if measure.kind == "entropypower":
                cell = _Cell(f"{TF_LNC}/{tag}/{COND_RARITY_SQUARE}")
                pool = [bench for bench in grow
                        if eval_condition(COND_RARITY_SQUARE, bench.record, measure)]
            else:
                cell = _Cell(f"{TF_LNC}/{tag}/all")
                pool = grow
            for bench in pool:
                scorer = _scorer(bench, model, measure, mu, k1, b)
                cell.add(bench.record,
                         check_constraint(TF_LNC, scorer, bench.record))
            cells.append(cell)

            cell = _Cell(f"{VERBOSITY_PENALTY}/{tag}/verbosity-side")
            for bench in scale:
                side = classify(bench.record.original, bench.record.perturbed,
                                measure)
                if not side.verbosity_side:
                    continue
                scorer = _scorer(bench, model, measure, mu, k1, b)
                cell.add(bench.record,
                         check_constraint(VERBOSITY_PENALTY, scorer, bench.record))
            cells.append(cell)

            gate = COND_DIRICHLET_GATE if model == MODEL_DP else COND_OKAPI_GATE
            cell = _Cell(f"{SCOPE_BONUS}/{tag}/{gate}")
            for bench in noise:
                record = bench.record
                if len(record.query.counts()) != 1:
                    continue
                side = classify(record.original, record.perturbed, measure)
                if not side.scope_side:
                    continue
                term = next(iter(record.query.counts()))
                value = eval_condition(gate, record, measure,
                                       stats=bench.index.stats, mu=mu, b=b,
                                       term=term)
                if not value:
                    continue
                scorer = _scorer(bench, model, measure, mu, k1, b)
                cell.add(record, check_constraint(SCOPE_BONUS, scorer, record))
            cells.append(cell)

    # Behavior matrix on a fresh synthetic collection, both model families.
    import random

    rng = random.Random(seed + 1)
    index, query_terms = synthetic_collection(rng, n_docs=9)
    query = Query.from_terms((query_terms[0],))
    behavior = {}
    agree = total = 0
    for model in (MODEL_DP, MODEL_OKAPI):
        config = ScoringConfig(model=model, mu=mu, k1=k1, b=b)
        for measure in parsed_measures:
            matrix = behavior_matrix(index, query, config, measure,
                                     trials=max(10, trials // 4),
                                     seed=seed + 2)
            key = f"{model}/{measure}"
            behavior[key] = {row: {name: cell.to_dict()
                                   for name, cell in columns.items()}
                             for row, columns in matrix.items()}
            for columns in matrix.values():
                for cell in columns.values():
                    agree += cell.agree
                    total += cell.trials

    return {
        "seed": seed,
        "trials": trials,
        "params": {"mu": mu, "k1": k1, "b": b},
        "cells": [cell.to_dict() for cell in cells],
        "behavior": {"matrices": behavior,
                     "agreement": {"agree": agree, "total": total}},
    }
