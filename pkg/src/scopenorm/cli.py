"""Batch command-line surface.

Subcommands: index, stats, search, evaluate, tune, axiom-check, compare.
Every run is deterministic given the same inputs, flags, and --seed; the
single seed drives all randomness (synthetic collections, replacement
draws).  With --report DIR the reporting commands write delimited tables
and JSON alongside rendered PNG figures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import axioms, report
from .analysis import AnalyzerConfig, bundled_stopwords, load_stopwords
from .errors import ConfigError, FormatError, ScopenormError
from .evaluation import (
    Qrels,
    Run,
    compare_runs,
    mean_average_precision,
    per_query_ap,
    per_query_precision,
)
from .index import PositionalIndex, build_index, read_corpus_jsonl
from .scope import ScopeMeasure
from .scoring import (
    MODEL_DP,
    MODEL_JM,
    MODEL_MRF,
    MODEL_OKAPI,
    Query,
    ScoringConfig,
    search_topk,
)
from .tuning import (
    FoldPlan,
    ParamGrid,
    cross_validate,
    tune_report,
    ttest_to_dict,
)


def _parse_measure(scope: str | None, beta: float | None) -> ScopeMeasure | None:
    if scope is None:
        if beta is not None:
            raise ConfigError("--beta needs --scope lengthpower")
        return None
    scope = scope.strip().lower()
    if ":" in scope:
        if beta is not None:
            raise ConfigError("give beta either inline or via --beta, not both")
        return ScopeMeasure.parse(scope)
    if scope == "lengthpower":
        if beta is None:
            raise ConfigError("lengthpower needs --beta")
        return ScopeMeasure.length_power(beta)
    return ScopeMeasure.parse(scope)


def _parse_lambdas(text: str) -> tuple[float, float, float]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise ConfigError("--lambdas needs three comma-separated weights")
    try:
        values = tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"bad --lambdas value: {text!r}") from None
    return values


def _scoring_config(args) -> ScoringConfig:
    measure = _parse_measure(args.scope, args.beta)
    return ScoringConfig(
        model=args.model,
        measure=measure,
        k_policy="avgv_rescale" if getattr(args, "avgv_rescale", False) else "unit",
        mu=args.mu,
        lam=getattr(args, "lam", 0.5),
        k1=args.k1,
        b=args.b,
        k3=args.k3,
        lambdas=_parse_lambdas(args.lambdas),
        delta=args.delta,
    )


def read_topics_jsonl(path) -> dict[str, dict]:
    topics = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"bad JSON ({exc.msg})", path=path,
                                  line=lineno) from None
            if not isinstance(obj, dict) or "id" not in obj:
                raise FormatError("topic line needs an 'id' field",
                                  path=path, line=lineno)
            if obj["id"] in topics:
                raise FormatError(f"duplicate topic id {obj['id']!r}",
                                  path=path, line=lineno)
            topics[str(obj["id"])] = obj
    return topics


QUERY_FIELDS = {
    "sk": ("title",),
    "sv": ("description",),
    "lv": ("title", "description", "narrative"),
}


def topic_to_query(topic: dict, qtype: str, analyzer: AnalyzerConfig) -> Query:
    from .analysis import analyze

    segments = []
    for field_name in QUERY_FIELDS[qtype]:
        terms = tuple(analyze(str(topic.get(field_name, "")), analyzer))
        if terms:
            segments.append(terms)
    return Query(segments=tuple(segments) or ((),), qtype=qtype)


def _load_index(path) -> PositionalIndex:
    if not Path(path).exists():
        raise ConfigError(f"index file not found: {path}")
    return PositionalIndex.load(path)


def _analyzer_from_args(args) -> AnalyzerConfig:
    if args.stopwords is None:
        stopwords = frozenset()
    elif args.stopwords == "builtin":
        stopwords = bundled_stopwords()
    else:
        stopwords = load_stopwords(args.stopwords)
    return AnalyzerConfig(lowercase=not args.no_lowercase,
                          stopwords=stopwords, stemmer=args.stemmer)


# -- subcommands -----------------------------------------------------------

def cmd_index(args) -> int:
    out = Path(args.index)
    if out.exists() and not args.force:
        raise ConfigError(f"refusing to overwrite {out} (use --force)")
    corpus = read_corpus_jsonl(args.corpus)
    index = build_index(corpus, _analyzer_from_args(args))
    index.save(out)
    stats = index.stats
    print(f"indexed {stats.n_docs} documents, {stats.total_length} tokens, "
          f"{len(stats.cf)} terms -> {out}")
    return 0


def cmd_stats(args) -> int:
    index = _load_index(args.index)
    measure = _parse_measure(args.scope, args.beta) or ScopeMeasure.entropy_power()
    summary = index.collection_summary(measure)
    index.ensure_scope_means(measure)
    rows = [
        ("num_docs", index.stats.n_docs, ""),
        ("num_tokens", index.stats.total_length, ""),
        ("vocabulary", len(index.stats.cf), ""),
        ("avg_length", f"{summary['length'].mean:.4f}",
         f"{summary['length'].coeff_var:.4f}"),
        ("avg_entropy_power", f"{summary['entropy_power'].mean:.4f}",
         f"{summary['entropy_power'].coeff_var:.4f}"),
        (f"avg_verbosity[{measure}]", f"{summary['verbosity'].mean:.4f}",
         f"{summary['verbosity'].coeff_var:.4f}"),
        (f"avg_scope[{measure}]", f"{index.stats.avgs(measure):.4f}", ""),
    ]
    print(f"{'statistic':<28}{'mean':>14}{'coeff_var':>12}")
    for name, mean, cv in rows:
        print(f"{name:<28}{mean:>14}{cv:>12}")
    if args.report:
        out = report.ensure_dir(args.report)
        report.write_tsv(out / "collection_stats.tsv",
                         ("statistic", "mean", "coeff_var"), rows)
        lengths = []
        scopes = []
        for doc_id in index.doc_ids:
            profile = index.doc_profile(doc_id, measure)
            lengths.append(profile.length)
            scopes.append(profile.scope)
        report.fig_length_scope_scatter(out, lengths, scopes, str(measure))
        print(f"report written to {out}")
    return 0


def cmd_search(args) -> int:
    index = _load_index(args.index)
    analyzer = index.analyzer or AnalyzerConfig(stopwords=frozenset())
    config = _scoring_config(args)
    topics = read_topics_jsonl(args.topics)
    run = Run(tag=args.run_tag)
    skipped = []
    for qid in sorted(topics):
        query = topic_to_query(topics[qid], args.query_type, analyzer)
        if query.length < 1:
            skipped.append(qid)
            continue
        run.set_ranking(qid, search_topk(index, query, config, k=args.topk))
    run.save(args.output)
    total = sum(len(run.ranking(q)) for q in run.query_ids())
    print(f"wrote {total} result lines for {len(run.query_ids())} queries "
          f"-> {args.output}")
    for qid in skipped:
        print(f"warning: query {qid} is empty after analysis; skipped",
              file=sys.stderr)
    return 0


def cmd_evaluate(args) -> int:
    run = Run.load(args.run)
    qrels = Qrels.load(args.qrels)
    ap = per_query_ap(run, qrels)
    p_at = per_query_precision(run, qrels, k=args.precision_k)
    map_score = mean_average_precision(run, qrels)
    mean_p = sum(p_at.values()) / len(p_at)
    print(f"{'query':<12}{'AP':>10}{'P@%d' % args.precision_k:>10}")
    for qid in sorted(ap):
        print(f"{qid:<12}{ap[qid]:>10.4f}{p_at[qid]:>10.4f}")
    print(f"{'MAP':<12}{map_score:>10.4f}")
    print(f"{'mean P@%d' % args.precision_k:<12}{mean_p:>10.4f}")
    if args.report:
        out = report.ensure_dir(args.report)
        report.write_tsv(out / "per_query_metrics.tsv",
                         ("query", "ap", f"p{args.precision_k}"),
                         [(q, repr(ap[q]), repr(p_at[q])) for q in sorted(ap)])
        report.write_json(out / "aggregate.json", {
            "map": map_score,
            f"mean_p{args.precision_k}": mean_p,
            "queries": len(ap),
        })
        report.fig_per_query_metric(out, ap, "AP", "ap_per_query.png")
        report.fig_per_query_metric(out, p_at, f"P@{args.precision_k}",
                                    f"p{args.precision_k}_per_query.png")
        print(f"report written to {out}")
    return 0


def cmd_tune(args) -> int:
    index = _load_index(args.index)
    analyzer = index.analyzer or AnalyzerConfig(stopwords=frozenset())
    topics_raw = read_topics_jsonl(args.topics)
    topics = {qid: topic_to_query(t, args.query_type, analyzer)
              for qid, t in topics_raw.items()}
    qrels = Qrels.load(args.qrels)
    folds = FoldPlan.load(args.folds)
    template = _scoring_config(args)
    grid = ParamGrid()
    if args.mu_grid:
        grid = ParamGrid(mu=tuple(float(v) for v in args.mu_grid.split(",")))
    if args.b_grid:
        grid = ParamGrid(mu=grid.mu,
                         b=tuple(float(v) for v in args.b_grid.split(",")))
    if args.k1_grid:
        grid = ParamGrid(mu=grid.mu, b=grid.b,
                         k1=tuple(float(v) for v in args.k1_grid.split(",")))
    result = cross_validate(index, topics, qrels, template, grid, folds,
                            metric=args.metric, tune_delta=args.tune_delta,
                            topk=args.topk,
                            secondary_metric=args.secondary_metric)
    rep = tune_report(result)
    print(f"{'fold':<12}{'train':>10}{'test':>10}  params")
    for fold in rep["folds"]:
        params = {k: v for k, v in fold["params"].items() if v}
        print(f"{fold['fold']:<12}{fold['train_score']:>10.4f}"
              f"{fold['test_mean']:>10.4f}  {params}")
    print(f"pooled {result.metric}: {rep['pooled_mean']:.4f}")
    if args.report:
        out = report.ensure_dir(args.report)
        report.write_json(out / "tuning.json", rep)
        report.write_tsv(out / "per_topic.tsv", ("query", result.metric),
                         [(q, repr(v)) for q, v in sorted(result.pooled().items())])
        if template.model in (MODEL_DP, MODEL_MRF):
            curves = {fold: [(key[0], score) for key, score in curve]
                      for fold, curve in result.curves.items()}
            param_name = "mu"
        else:
            curves = {fold: [(i, score) for i, (key, score) in enumerate(curve)]
                      for fold, curve in result.curves.items()}
            param_name = "grid point"
        report.fig_tuning_curve(out, curves, param_name, result.metric)
        print(f"report written to {out}")
    return 0


def cmd_axiom_check(args) -> int:
    from .benchreport import run_constraint_bench

    bench = run_constraint_bench(trials=args.trials, seed=args.seed,
                                 measures=args.scope or "uniqlength,entropypower",
                                 mu=args.mu, k1=args.k1, b=args.b)
    print(f"{'cell':<58}{'pass':>7}{'total':>7}")
    for cell in bench["cells"]:
        print(f"{cell['label']:<58}{cell['passed']:>7}{cell['total']:>7}")
    agreements = bench["behavior"]["agreement"]
    print(f"behavior matrix agreement: {agreements['agree']}/{agreements['total']}")
    if args.report:
        out = report.ensure_dir(args.report)
        report.write_json(out / "axiom_check.json", bench)
        report.fig_constraint_passrates(out, bench["cells"])
        print(f"report written to {out}")
    failures = [c for c in bench["cells"] if c["passed"] != c["total"]]
    return 0 if not failures else 1


def cmd_compare(args) -> int:
    run_a = Run.load(args.run_a)
    run_b = Run.load(args.run_b)
    qrels = Qrels.load(args.qrels)
    result, detail = compare_runs(run_a, run_b, qrels, metric=args.metric)
    mean_a = sum(detail["a"]) / len(detail["a"])
    mean_b = sum(detail["b"]) / len(detail["b"])
    print(f"mean {args.metric}: A={mean_a:.4f} B={mean_b:.4f}")
    if result.degenerate:
        print("paired t-test: degenerate (constant differences), p undefined")
    else:
        print(f"paired t-test: t={result.t:.5f} df={result.df} "
              f"p={result.p_two_sided:.5f} "
              f"significant@95%={'yes' if result.significant_95 else 'no'}")
    if args.report:
        out = report.ensure_dir(args.report)
        report.write_json(out / "comparison.json", {
            "metric": args.metric,
            "mean_a": mean_a,
            "mean_b": mean_b,
            "ttest": ttest_to_dict(result),
            "per_query_a": dict(zip(detail["queries"], detail["a"])),
            "per_query_b": dict(zip(detail["queries"], detail["b"])),
        })
        diffs = [a - b for a, b in zip(detail["a"], detail["b"])]
        report.fig_paired_differences(out, detail["queries"], diffs, args.metric)
        print(f"report written to {out}")
    return 0


# -- argument wiring ---------------------------------------------------------

def _add_model_flags(p: argparse.ArgumentParser):
    p.add_argument("--model", choices=(MODEL_DP, MODEL_JM, MODEL_OKAPI, MODEL_MRF),
                   default=MODEL_DP)
    p.add_argument("--scope", help="scope measure: uniqlength, entropypower, "
                                   "or lengthpower[:beta]")
    p.add_argument("--beta", type=float, help="lengthpower exponent in [0, 1]")
    p.add_argument("--mu", type=float, default=2000.0)
    p.add_argument("--lam", type=float, default=0.5, help="jm mixture weight")
    p.add_argument("--k1", type=float, default=1.2)
    p.add_argument("--b", type=float, default=0.75)
    p.add_argument("--k3", type=float, default=1000.0)
    p.add_argument("--delta", type=float, default=0.0,
                   help="lower-bound pseudo frequency (dp and okapi families)")
    p.add_argument("--lambdas", default="0.85,0.10,0.05",
                   help="mrf feature weights: term,ordered,unordered")
    p.add_argument("--avgv-rescale", action="store_true",
                   help="divide mu and k1 by average verbosity (lengthpower only)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scopenorm",
        description="retrieval engine and experiment bench with two-stage "
                    "(verbosity, then scope) document length normalization")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="build and persist a positional index")
    p.add_argument("--corpus", required=True, help="JSON-lines corpus (id, text)")
    p.add_argument("--index", required=True, help="output index path")
    p.add_argument("--no-lowercase", action="store_true")
    p.add_argument("--stopwords", help="stopword file path, or 'builtin'")
    p.add_argument("--stemmer", choices=("none", "porter"), default="none")
    p.add_argument("--force", action="store_true", help="overwrite existing index")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("stats", help="collection statistics")
    p.add_argument("--index", required=True)
    p.add_argument("--scope", default=None)
    p.add_argument("--beta", type=float)
    p.add_argument("--report")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("search", help="run queries, write a TREC run file")
    p.add_argument("--index", required=True)
    p.add_argument("--topics", required=True,
                   help="JSON-lines topics (id, title, description, narrative)")
    p.add_argument("--query-type", choices=("sk", "sv", "lv"), default="sk")
    p.add_argument("--topk", type=int, default=1000)
    p.add_argument("--output", required=True, help="run file to write")
    p.add_argument("--run-tag", default="scopenorm")
    p.add_argument("--seed", type=int, default=0)
    _add_model_flags(p)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("evaluate", help="MAP and P@k for a run file")
    p.add_argument("--run", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--precision-k", type=int, default=5)
    p.add_argument("--report")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("tune", help="grid search with cross-validation by topic set")
    p.add_argument("--index", required=True)
    p.add_argument("--topics", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--folds", required=True, help="JSON fold plan")
    p.add_argument("--query-type", choices=("sk", "sv", "lv"), default="sk")
    p.add_argument("--metric", choices=("map", "p5"), default="map")
    p.add_argument("--secondary-metric", choices=("map", "p5"))
    p.add_argument("--tune-delta", action="store_true")
    p.add_argument("--topk", type=int, default=1000)
    p.add_argument("--mu-grid", help="comma-separated mu values (default: full space)")
    p.add_argument("--b-grid", help="comma-separated b values")
    p.add_argument("--k1-grid", help="comma-separated k1 values")
    p.add_argument("--report")
    _add_model_flags(p)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("axiom-check",
                       help="randomized constraint bench on seeded synthetic "
                            "collections")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scope", help="comma-separated measures "
                                   "(default uniqlength,entropypower)")
    p.add_argument("--mu", type=float, default=1000.0)
    p.add_argument("--k1", type=float, default=1.2)
    p.add_argument("--b", type=float, default=0.4)
    p.add_argument("--report")
    p.set_defaults(func=cmd_axiom_check)

    p = sub.add_parser("compare", help="paired t-test between two run files")
    p.add_argument("--run-a", required=True)
    p.add_argument("--run-b", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--metric", choices=("map", "p5"), default="map")
    p.add_argument("--report")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScopenormError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
