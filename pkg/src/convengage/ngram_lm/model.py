"""Interpolated modified Kneser-Ney estimation and scoring.

The estimated model is stored the way ARPA files store it: every n-gram
seen in training carries its interpolated log-probability, and every n-gram
that occurs as a context carries the log of its interpolation weight, which
acts as the backoff weight for words never seen after that context.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass

from ..text import END, START
from .counts import NGramCounts

log = logging.getLogger(__name__)

UNK = "<unk>"
SPECIALS = (UNK, START, END)
FALLBACK_DISCOUNT = 0.75
MLE_FLOOR = 1e-12


@dataclass(frozen=True)
class PerplexityScore:
    value: float
    token_count: int
    oov_count: int
    log_prob: float  # natural-log total over the scored tokens

    @property
    def log_value(self) -> float:
        return -self.log_prob / self.token_count


class KNModel:
    """An immutable back-off table of natural-log probabilities.

    ``entries[n]`` maps an n-tuple of vocabulary ids to ``(ln p, ln b)``.
    Id 0 is ``<unk>``, 1 is ``<s>``, 2 is ``</s>``.
    """

    def __init__(
        self,
        order: int,
        vocab: list[str],
        entries: dict[int, dict[tuple[int, ...], tuple[float, float]]],
        discounts: list[tuple[float, float, float]],
        mle: bool = False,
    ):
        if tuple(vocab[:3]) != SPECIALS:
            raise ValueError("vocabulary must start with <unk>, <s>, </s>")
        self.order = order
        self.vocab = vocab
        self.ids = {w: i for i, w in enumerate(vocab)}
        self.entries = entries
        self.discounts = discounts
        self.mle = mle

    # -- queries -----------------------------------------------------------

    def word_id(self, token: str) -> int:
        return self.ids.get(token, 0)

    @property
    def predictable_ids(self) -> list[int]:
        return [i for i in range(len(self.vocab)) if i != 1]

    def _log_prob_ids(self, context: tuple[int, ...], word: int) -> float:
        if word == 1:
            word = 0  # <s> is never predicted; score it as unknown
        context = context[-(self.order - 1) :] if self.order > 1 else ()
        acc = 0.0
        for start in range(len(context) + 1):
            h = context[start:]
            hit = self.entries[len(h) + 1].get(h + (word,))
            if hit is not None:
                lp = acc + hit[0]
                break
            if h:
                ctx = self.entries[len(h)].get(h)
                if ctx is not None:
                    acc += ctx[1]
        else:  # pragma: no cover - every predictable id has a unigram
            lp = -math.inf
        if self.mle:
            lp = max(lp, math.log(MLE_FLOOR))
        return lp

    def log_prob(self, context: tuple[str, ...] | list[str], word: str) -> float:
        """Natural-log P(word | context); unknown tokens are scored as <unk>."""
        return self._log_prob_ids(tuple(self.word_id(t) for t in context), self.word_id(word))

    def perplexity(self, tokens: list[str]) -> PerplexityScore:
        if not tokens:
            raise ValueError("cannot score an empty token sequence")
        ids = [self.word_id(t) for t in tokens]
        oov = sum(1 for t, i in zip(tokens, ids) if i == 0 and t != UNK)
        history = [1]
        total = 0.0
        for w in ids + [2]:
            total += self._log_prob_ids(tuple(history[-(self.order - 1) :]) if self.order > 1 else (), w)
            history.append(w)
        n = len(ids) + 1
        return PerplexityScore(math.exp(-total / n), n, oov, total)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, KNModel)
            and self.order == other.order
            and self.vocab == other.vocab
            and self.mle == other.mle
            and self.entries == other.entries
        )


def log_prob(model: KNModel, context, word: str) -> float:
    return model.log_prob(context, word)


def perplexity(model: KNModel, tokens: list[str]) -> PerplexityScore:
    return model.perplexity(tokens)


# ---------------------------------------------------------------------------
# estimation


def modified_kn_discounts(coc: dict[int, int], order: int | None = None) -> tuple[float, float, float]:
    """Discounts (D1, D2, D3+) from counts-of-counts.

    Falls back to a flat 0.75 when n1..n3 cannot support the estimate or a
    discount comes out non-positive (a zero discount would leave no mass for
    unseen words). Each D_k is capped at k - 0.001 so every seen n-gram
    keeps mass.
    """
    n1, n2, n3, n4 = (coc.get(k, 0) for k in (1, 2, 3, 4))
    raw = None
    if min(n1, n2, n3) > 0:
        y = n1 / (n1 + 2 * n2)
        raw = (1 - 2 * y * n2 / n1, 2 - 3 * y * n3 / n2, 3 - 4 * y * n4 / n3)
    if raw is None or min(raw) <= 0:
        log.warning(
            "degenerate counts-of-counts at order %s (n1=%d n2=%d n3=%d n4=%d); using discount %.2f",
            order, n1, n2, n3, n4, FALLBACK_DISCOUNT,
        )
        return (FALLBACK_DISCOUNT,) * 3
    return tuple(min(d, k - 0.001) for k, d in zip((1, 2, 3), raw))


def _remap(counts: NGramCounts, keep: set[str]) -> dict[int, dict[tuple[str, ...], int]]:
    out: dict[int, dict[tuple[str, ...], int]] = {}
    for n, table in counts.counts.items():
        m: dict[tuple[str, ...], int] = defaultdict(int)
        for g, c in table.items():
            m[tuple(w if w in keep else UNK for w in g)] += c
        out[n] = m
    return out


def estimate(counts: NGramCounts, min_count: int = 2, mle: bool = False) -> KNModel:
    """Estimate an interpolated modified Kneser-Ney model.

    Words whose unigram count is below ``min_count`` become ``<unk>``. The
    highest order uses raw counts; lower orders use continuation counts,
    except for n-grams that begin with ``<s>`` (nothing can precede them),
    which keep raw counts. With ``mle=True`` every order uses raw counts,
    discounts are zero and nothing backs off.
    """
    order = counts.order
    unigrams = counts.counts[1]
    words = sorted(g[0] for g, c in unigrams.items() if c >= min_count and g[0] not in SPECIALS)
    vocab = list(SPECIALS) + words
    keep = set(words) | set(SPECIALS)
    needs_remap = any(g[0] not in keep for g in unigrams)
    raw = _remap(counts, keep) if needs_remap else {n: dict(t) for n, t in counts.counts.items()}

    # adjusted counts
    adjusted: dict[int, dict[tuple[str, ...], int]] = {}
    for n in range(1, order + 1):
        if n == order or mle:
            adj = dict(raw[n])
        else:
            adj = {}
            for g in raw[n + 1]:
                tail = g[1:]
                adj[tail] = adj.get(tail, 0) + 1
            for g, c in raw[n].items():
                if g[0] == START:
                    adj[g] = c
        adj.pop((START,), None)
        adjusted[n] = adj

    discounts: list[tuple[float, float, float]] = []
    for n in range(1, order + 1):
        if mle:
            discounts.append((0.0, 0.0, 0.0))
            continue
        coc: dict[int, int] = defaultdict(int)
        for c in adjusted[n].values():
            coc[c] += 1
        discounts.append(modified_kn_discounts(coc, n))

    ids = {w: i for i, w in enumerate(vocab)}
    entries: dict[int, dict[tuple[int, ...], tuple[float, float]]] = {n: {} for n in range(1, order + 1)}

    # per-context totals and discount mass
    totals: dict[int, dict[tuple[str, ...], float]] = {}
    gammas: dict[int, dict[tuple[str, ...], float]] = {}
    for n in range(1, order + 1):
        d = discounts[n - 1]
        tot: dict[tuple[str, ...], float] = defaultdict(float)
        mass: dict[tuple[str, ...], float] = defaultdict(float)
        for g, a in adjusted[n].items():
            h = g[:-1]
            tot[h] += a
            mass[h] += d[min(a, 3) - 1]
        totals[n] = tot
        gammas[n] = {h: mass[h] / tot[h] for h in tot}

    def disc(n: int, a: int) -> float:
        return discounts[n - 1][min(a, 3) - 1]

    # unigrams, interpolated with the uniform distribution over predictable words
    n_pred = len(vocab) - 1
    t1 = totals[1].get((), 0.0)
    if t1 <= 0:
        raise ValueError("no unigram mass to estimate from")
    g1 = gammas[1][()]
    uni: dict[int, float] = {}
    for w in vocab:
        if w == START:
            continue
        a = adjusted[1].get((w,), 0)
        p = (a - disc(1, a)) / t1 if a > 0 else 0.0
        p += g1 / n_pred
        uni[ids[w]] = p

    model = KNModel(order, vocab, entries, discounts, mle=mle)

    def ln(x: float) -> float:
        return math.log(x) if x > 0 else -math.inf

    for w_id, p in uni.items():
        entries[1][(w_id,)] = (ln(p), 0.0)
    entries[1][(1,)] = (-math.inf, 0.0)

    for n in range(2, order + 1):
        for g, a in sorted(adjusted[n].items()):
            h = g[:-1]
            hid = tuple(ids[w] for w in h)
            lower = model._log_prob_ids(hid[1:], ids[g[-1]]) if not mle else -math.inf
            p = (a - disc(n, a)) / totals[n][h]
            gamma = gammas[n][h]
            if gamma > 0 and lower > -math.inf:
                p += gamma * math.exp(lower)
            entries[n][hid + (ids[g[-1]],)] = (ln(p), 0.0)
        # contexts of order n live at order n-1
        for h, gamma in gammas[n].items():
            hid = tuple(ids[w] for w in h)
            lp, _ = entries[n - 1][hid]
            entries[n - 1][hid] = (lp, ln(gamma))
    return model
