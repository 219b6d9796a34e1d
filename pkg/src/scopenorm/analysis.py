"""Deterministic text-to-term pipeline.

Order of stages is fixed: tokenize, lowercase, remove stopwords, stem.
Stopword removal happens after lowercasing and before stemming, so a
stopword list is matched against lowercased surface forms, not stems.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources

from . import porter
from .errors import ConfigError

STEMMER_NONE = "none"
STEMMER_PORTER = "porter"

# Maximal runs of Unicode alphanumerics; underscore is a separator.
_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass(frozen=True)
class AnalyzerConfig:
    lowercase: bool = True
    stopwords: frozenset[str] = field(default_factory=frozenset)
    stemmer: str = STEMMER_NONE

    def __post_init__(self):
        if self.stemmer not in (STEMMER_NONE, STEMMER_PORTER):
            raise ConfigError(f"unknown stemmer: {self.stemmer!r}")
        object.__setattr__(self, "stopwords", frozenset(self.stopwords))

    def to_dict(self) -> dict:
        return {
            "lowercase": self.lowercase,
            "stopwords": sorted(self.stopwords),
            "stemmer": self.stemmer,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AnalyzerConfig":
        return cls(
            lowercase=bool(data.get("lowercase", True)),
            stopwords=frozenset(data.get("stopwords", ())),
            stemmer=data.get("stemmer", STEMMER_NONE),
        )


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text)


def analyze(text: str, config: AnalyzerConfig) -> list[str]:
    """Turn text into a term sequence, preserving token order.

    Empty text yields an empty list. Output terms are non-empty and never
    members of the stopword list.
    """
    tokens = tokenize(text)
    if config.lowercase:
        tokens = [t.lower() for t in tokens]
    if config.stopwords:
        tokens = [t for t in tokens if t not in config.stopwords]
    if config.stemmer == STEMMER_PORTER:
        tokens = [porter.stem(t) for t in tokens]
    return tokens


def load_stopwords(path) -> frozenset[str]:
    """Read a stopword file: one term per line, UTF-8, '#' starts a comment."""
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            term = line.split("#", 1)[0].strip()
            if term:
                words.add(term)
    return frozenset(words)


def bundled_stopwords() -> frozenset[str]:
    """The English stopword list shipped with the package."""
    text = resources.files("scopenorm").joinpath("data/stopwords_en.txt").read_text("utf-8")
    words = set()
    for line in text.splitlines():
        term = line.split("#", 1)[0].strip()
        if term:
            words.add(term)
    return frozenset(words)
