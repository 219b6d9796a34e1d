"""Retrieval engine and experiment bench built around two-stage document
length normalization: divide term frequencies by the document's verbosity
first, then let the retrieval model's own pivoted/smoothed length
treatment normalize the remaining factor, the scope."""

from .analysis import AnalyzerConfig, analyze, load_stopwords
from .errors import ScopenormError
from .evaluation import (
    Qrels,
    Run,
    average_precision,
    mean_average_precision,
    paired_t_test,
    precision_at,
)
from .index import (
    CollectionStats,
    DocView,
    Document,
    PositionalIndex,
    StatSummary,
    build_index,
)
from .scope import DocProfile, ScopeMeasure, scope_value, verbosity, vn_term_frequency
from .scoring import (
    DirichletScorer,
    JelinekMercerScorer,
    MrfScorer,
    OkapiScorer,
    Query,
    ScoringConfig,
    search_topk,
)
from .tuning import FoldPlan, ParamGrid, cross_validate, tune_report

__version__ = "0.1.0"

__all__ = [
    "AnalyzerConfig",
    "CollectionStats",
    "DirichletScorer",
    "DocProfile",
    "DocView",
    "Document",
    "FoldPlan",
    "JelinekMercerScorer",
    "MrfScorer",
    "OkapiScorer",
    "ParamGrid",
    "PositionalIndex",
    "Qrels",
    "Query",
    "Run",
    "ScopenormError",
    "ScopeMeasure",
    "ScoringConfig",
    "StatSummary",
    "analyze",
    "average_precision",
    "build_index",
    "cross_validate",
    "load_stopwords",
    "mean_average_precision",
    "paired_t_test",
    "precision_at",
    "scope_value",
    "search_topk",
    "tune_report",
    "verbosity",
    "vn_term_frequency",
]
