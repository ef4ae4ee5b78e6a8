"""Streaming n-gram counting."""

from __future__ import annotations

from collections import Counter, defaultdict
from typing import Iterable

from ..text import END, START

MAX_ORDER = 6


def padded(tokens: list[str]) -> list[str]:
    # a single sentence-start marker: contexts shrink near the start of a
    # sentence instead of being filled with repeated <s>
    return [START, *tokens, END]


class NGramCounts:
    """Raw n-gram counts for orders 1..order over padded sentences.

    ``counts[n]`` maps n-tuples of tokens to occurrence counts. Counts from
    separate shards can be combined with :meth:`merge`.
    """

    def __init__(self, order: int):
        if not 1 <= order <= MAX_ORDER:
            raise ValueError(f"order must be in [1, {MAX_ORDER}], got {order}")
        self.order = order
        self.counts: dict[int, Counter] = {n: Counter() for n in range(1, order + 1)}
        self.sentences = 0

    def add(self, tokens: list[str]) -> None:
        seq = padded(tokens)
        for n in range(1, self.order + 1):
            c = self.counts[n]
            for i in range(len(seq) - n + 1):
                c[tuple(seq[i : i + n])] += 1
        self.sentences += 1

    def merge(self, other: "NGramCounts") -> "NGramCounts":
        if other.order != self.order:
            raise ValueError("cannot merge counts of different order")
        for n in range(1, self.order + 1):
            self.counts[n].update(other.counts[n])
        self.sentences += other.sentences
        return self

    def total(self, n: int) -> int:
        return sum(self.counts[n].values())

    def counts_of_counts(self, n: int) -> dict[int, int]:
        """k -> number of distinct n-grams seen exactly k times."""
        return dict(sorted(Counter(self.counts[n].values()).items()))

    def continuation_counts(self, n: int) -> dict[tuple[str, ...], int]:
        """n-gram -> number of distinct words seen immediately to its left."""
        if n >= self.order:
            raise ValueError("continuation counts need the next-higher order")
        out: dict[tuple[str, ...], int] = defaultdict(int)
        for g in self.counts[n + 1]:
            out[g[1:]] += 1
        return dict(out)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, NGramCounts)
            and self.order == other.order
            and self.sentences == other.sentences
            and all(self.counts[n] == other.counts[n] for n in self.counts)
        )


def count_ngrams(sentences: Iterable[list[str]], order: int) -> NGramCounts:
    counts = NGramCounts(order)
    for tokens in sentences:
        counts.add(tokens)
    if counts.sentences == 0:
        raise ValueError("cannot estimate a language model from an empty corpus")
    return counts
