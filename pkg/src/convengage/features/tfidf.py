"""TF-IDF weighted unigram and bigram features."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from ..text import ngrams


@dataclass(frozen=True)
class TfIdfVocabulary:
    terms: dict[tuple[str, ...], tuple[int, float]]  # term -> (index, idf)
    document_count: int
    min_df: int
    ngram_range: tuple[int, int] = (1, 2)

    def __len__(self) -> int:
        return len(self.terms)

    def names(self) -> list[str]:
        out = [""] * len(self.terms)
        for term, (i, _) in self.terms.items():
            out[i] = " ".join(term)
        return out

    def to_dict(self) -> dict:
        return {
            "document_count": self.document_count,
            "min_df": self.min_df,
            "ngram_range": list(self.ngram_range),
            "terms": [[" ".join(t), i, idf] for t, (i, idf) in sorted(self.terms.items(), key=lambda kv: kv[1][0])],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TfIdfVocabulary":
        terms = {tuple(name.split(" ")): (i, idf) for name, i, idf in d["terms"]}
        return cls(terms, d["document_count"], d["min_df"], tuple(d["ngram_range"]))


def doc_terms(tokens: list[str], ngram_range: tuple[int, int] = (1, 2)) -> list[tuple[str, ...]]:
    lo, hi = ngram_range
    out: list[tuple[str, ...]] = []
    for n in range(lo, hi + 1):
        out.extend(ngrams(tokens, n))
    return out


def fit_tfidf(
    documents: list[list[str]],
    min_df: int = 5,
    max_features: int = 50_000,
    ngram_range: tuple[int, int] = (1, 2),
) -> TfIdfVocabulary:
    """Keep terms with document frequency >= ``min_df``, at most
    ``max_features`` of them by descending df (ties broken by the term).

    idf(t) = ln((1 + D) / (1 + df(t))) + 1.
    """
    if not documents:
        raise ValueError("cannot fit TF-IDF on an empty corpus")
    df: Counter = Counter()
    for doc in documents:
        df.update(set(doc_terms(doc, ngram_range)))
    kept = [t for t, c in df.items() if c >= min_df]
    kept.sort(key=lambda t: (-df[t], t))
    kept = sorted(kept[:max_features])
    d = len(documents)
    terms = {t: (i, math.log((1 + d) / (1 + df[t])) + 1.0) for i, t in enumerate(kept)}
    return TfIdfVocabulary(terms, d, min_df, tuple(ngram_range))


def transform_tfidf(tokens: list[str], vocab: TfIdfVocabulary) -> dict[int, float]:
    """L2-normalized tf * idf over in-vocabulary terms, keyed by term index."""
    tf = Counter(t for t in doc_terms(tokens, vocab.ngram_range) if t in vocab.terms)
    raw = {}
    for term, count in tf.items():
        i, idf = vocab.terms[term]
        raw[i] = count * idf
    norm = math.sqrt(sum(v * v for v in raw.values()))
    if norm == 0:
        return {}
    return {i: raw[i] / norm for i in sorted(raw)}
