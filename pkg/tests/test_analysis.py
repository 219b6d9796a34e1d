import pytest
from hypothesis import given
from hypothesis import strategies as st

from scopenorm.analysis import (
    AnalyzerConfig,
    analyze,
    bundled_stopwords,
    load_stopwords,
    tokenize,
)
from scopenorm.errors import ConfigError

PLAIN = AnalyzerConfig(lowercase=True, stopwords=frozenset(), stemmer="none")


def test_empty_text():
    assert analyze("", PLAIN) == []


def test_stopword_removal():
    config = AnalyzerConfig(stopwords=frozenset({"the"}))
    assert analyze("The cat the hat", config) == ["cat", "hat"]


def test_case_folding():
    assert analyze("Cats CATS cats", PLAIN) == ["cats", "cats", "cats"]


def test_tokenizer_splits_on_non_alphanumerics():
    assert tokenize("re-index, v2.0; foo_bar") == ["re", "index", "v2", "0", "foo", "bar"]


def test_tokenizer_keeps_unicode_letters():
    assert analyze("Čapek naïve", PLAIN) == ["čapek", "naïve"]


def test_order_preserved():
    assert analyze("delta alpha charlie beta", PLAIN) == [
        "delta", "alpha", "charlie", "beta"]


def test_stopwords_matched_after_lowercasing():
    config = AnalyzerConfig(stopwords=frozenset({"the"}))
    assert analyze("THE THEME", config) == ["theme"]


def test_stopword_removal_precedes_stemming():
    # "running" in the list removes the surface form before it is stemmed;
    # listing the stem "run" does not touch it.
    surface = AnalyzerConfig(stopwords=frozenset({"running"}), stemmer="porter")
    assert analyze("running shoes", surface) == ["shoe"]
    stemmed = AnalyzerConfig(stopwords=frozenset({"run"}), stemmer="porter")
    assert analyze("running shoes", stemmed) == ["run", "shoe"]


def test_unknown_stemmer_rejected():
    with pytest.raises(ConfigError):
        AnalyzerConfig(stemmer="snowball")


@given(st.text(alphabet=st.sampled_from("abc XY.,;-7"), max_size=80))
def test_idempotent_without_stemming(text):
    config = AnalyzerConfig(stopwords=frozenset({"a"}))
    once = analyze(text, config)
    again = analyze(" ".join(once), config)
    assert once == again


@given(st.text(alphabet=st.sampled_from("abcd .!"), max_size=60))
def test_output_never_contains_stopwords(text):
    config = AnalyzerConfig(stopwords=frozenset({"a", "b"}))
    out = analyze(text, config)
    assert all(t and t not in config.stopwords for t in out)


def test_load_stopwords_with_comments(tmp_path):
    path = tmp_path / "stop.txt"
    path.write_text("# header\nthe\n  of  # inline\n\nand\n", encoding="utf-8")
    assert load_stopwords(path) == frozenset({"the", "of", "and"})


def test_bundled_stopwords_nonempty():
    words = bundled_stopwords()
    assert "the" in words and len(words) > 50
