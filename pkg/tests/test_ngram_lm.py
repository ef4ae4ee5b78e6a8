import io
import itertools
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convengage.ngram_lm import (
    UNK,
    KNModel,
    ModelFormatError,
    NGramCounts,
    count_ngrams,
    dumps,
    estimate,
    load_model,
    loads,
    log_prob,
    modified_kn_discounts,
    perplexity,
    read_arpa,
    save_model,
    write_arpa,
)
from convengage.synthetic import generic_support_sentences
from convengage.text import prepare

from oracles import kn_oracle, oracle_perplexity, raw_counts

sentences_st = st.lists(
    st.lists(st.sampled_from("abcdef"), min_size=1, max_size=8), min_size=1, max_size=12
)


def support_corpus(n=400, seed=0):
    return [prepare(s) for s in generic_support_sentences(n, seed)]


def all_contexts(model, order):
    """Every context stored in the model plus the empty one."""
    out = {()}
    for n in range(1, order):
        out.update(model.entries[n])
    return out


# -- counting ---------------------------------------------------------------


def test_count_example():
    c = count_ngrams([["a", "b"], ["a", "c"]], 2)
    assert c.counts[1][("a",)] == 2
    assert c.counts[2][("<s>", "a")] == 2


@given(sentences_st, st.integers(1, 5))
def test_counts_of_counts_consistent(sents, order):
    c = count_ngrams(sents, order)
    for n in range(1, order + 1):
        assert sum(k * nk for k, nk in c.counts_of_counts(n).items()) == c.total(n)


def test_distinct_bigrams_match_naive_counter():
    sents = support_corpus(1000, seed=3)
    c = count_ngrams(sents, 3)
    naive = raw_counts(sents, 3)
    for n in (1, 2, 3):
        assert dict(c.counts[n]) == dict(naive[n])
    assert len(c.counts[2]) == len(naive[2])


@given(sentences_st, sentences_st, st.integers(1, 4))
def test_streaming_merge_equals_single_pass(a, b, order):
    merged = count_ngrams(a, order).merge(count_ngrams(b, order))
    assert merged == count_ngrams(a + b, order)


def test_empty_stream_rejected():
    with pytest.raises(ValueError):
        count_ngrams([], 3)


@pytest.mark.parametrize("order", [0, 7])
def test_order_range(order):
    with pytest.raises(ValueError):
        NGramCounts(order)


# -- discounts ----------------------------------------------------------------


def test_discount_formula():
    coc = {1: 10, 2: 5, 3: 3, 4: 2}
    y = 10 / (10 + 10)
    expected = (1 - 2 * y * 5 / 10, 2 - 3 * y * 3 / 5, 3 - 4 * y * 2 / 3)
    assert modified_kn_discounts(coc) == pytest.approx(expected, abs=1e-15)


def test_degenerate_discounts_fall_back(caplog):
    assert modified_kn_discounts({1: 3, 3: 1}) == (0.75, 0.75, 0.75)
    assert "degenerate" in caplog.text
    # many triples against few doubles drives the second discount negative
    assert modified_kn_discounts({1: 10, 2: 1, 3: 10, 4: 1}) == (0.75, 0.75, 0.75)


@given(st.dictionaries(st.integers(1, 6), st.integers(1, 50), min_size=1))
def test_discounts_keep_mass_for_seen_ngrams(coc):
    d1, d2, d3 = modified_kn_discounts(coc)
    assert 0 < d1 < 1 and 0 < d2 < 2 and 0 < d3 < 3


# -- estimation against the oracle -------------------------------------------


def test_unigram_hand_computation():
    # a:3 b:1 </s>:1; counts-of-counts has no 2s, so D = 0.75 everywhere.
    # gamma = 0.75*3/5 = 0.45 spread over 4 predictable words (<unk> </s> a b)
    m = estimate(count_ngrams([["a", "a", "a", "b"]], 1), min_count=1)
    assert math.exp(m.log_prob((), "a")) == pytest.approx(2.25 / 5 + 0.1125, abs=1e-12)
    assert math.exp(m.log_prob((), "b")) == pytest.approx(0.25 / 5 + 0.1125, abs=1e-12)
    assert math.exp(m.log_prob((), "</s>")) == pytest.approx(0.1625, abs=1e-12)
    assert math.exp(m.log_prob((), UNK)) == pytest.approx(0.1125, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(sentences_st, st.integers(1, 5), st.sampled_from([1, 2]))
def test_matches_recursive_oracle(sents, order, min_count):
    m = estimate(count_ngrams(sents, order), min_count=min_count)
    p = kn_oracle(sents, order, min_count)
    vocab = list("abcdefg") + ["</s>"]
    rng = random.Random(len(sents) * 31 + order)
    contexts = [tuple(rng.choice(vocab[:-1] + ["<s>"]) for _ in range(rng.randint(0, order))) for _ in range(15)]
    for ctx in contexts:
        for w in vocab:
            assert math.exp(m.log_prob(ctx, w)) == pytest.approx(p(ctx, w), rel=1e-12, abs=1e-15)


def test_oracle_perplexity_on_support_corpus():
    sents = support_corpus(300)
    m = estimate(count_ngrams(sents, 4), min_count=2)
    p = kn_oracle(sents, 4, 2)
    for s in sents[:20] + [["totally", "new", "words", "here"]]:
        assert m.perplexity(s).value == pytest.approx(oracle_perplexity(p, s, 4), rel=1e-10)


@pytest.mark.parametrize("order", [1, 2, 3, 4, 5])
def test_distributions_sum_to_one(order):
    sents = support_corpus(200)
    m = estimate(count_ngrams(sents, order), min_count=2)
    ids = m.predictable_ids
    rng = random.Random(order)
    contexts = list(all_contexts(m, order))
    words = list(range(len(m.vocab)))
    contexts += [tuple(rng.choice(words) for _ in range(order - 1)) for _ in range(50)]
    for h in contexts:
        total = math.fsum(math.exp(m._log_prob_ids(h, w)) for w in ids)
        assert total == pytest.approx(1.0, abs=1e-6)


def test_probabilities_in_unit_interval():
    sents = support_corpus(100)
    m = estimate(count_ngrams(sents, 3), min_count=2)
    for h in all_contexts(m, 3):
        for w in m.predictable_ids:
            assert 0.0 < math.exp(m._log_prob_ids(h, w)) <= 1.0


def test_unseen_context_backs_off():
    sents = support_corpus(100)
    m = estimate(count_ngrams(sents, 3), min_count=2)
    words = [w for w in m.vocab if w not in ("<s>", UNK)]
    unseen = [(a, b) for a in words for b in words if a != "</s>" and (m.word_id(a), m.word_id(b)) not in m.entries[2]]
    assert unseen
    for ctx in unseen[:50]:
        for w in ("please", "dm", "</s>", "help"):
            assert m.log_prob(ctx, w) == m.log_prob(ctx[1:], w)


def test_unseen_word_scores_as_unk():
    m = estimate(count_ngrams(support_corpus(100), 3), min_count=2)
    for ctx in [(), ("please",), ("please", "dm")]:
        assert log_prob(m, ctx, "xylophone") == log_prob(m, ctx, UNK)


def test_long_context_truncated():
    m = estimate(count_ngrams(support_corpus(100), 3), min_count=2)
    assert m.log_prob(("a", "b", "c", "please", "dm"), "us") == m.log_prob(("please", "dm"), "us")


def test_training_ngram_beats_backed_off_estimate():
    sents = support_corpus(400)
    m = estimate(count_ngrams(sents, 5), min_count=2)
    grams = sorted(m.entries[5])
    rng = random.Random(0)
    for g in rng.sample(grams, 100):
        h, w = g[:-1], g[-1]
        full = m._log_prob_ids(h, w)
        backoff = m.entries[4][h][1] + m._log_prob_ids(h[1:], w)
        assert full > backoff


# -- MLE mode -----------------------------------------------------------------


def test_mle_reproduces_count_ratios():
    sents = [["a", "b"], ["a", "c"], ["a", "b", "b"]]
    m = estimate(count_ngrams(sents, 2), min_count=1, mle=True)
    c = raw_counts(sents, 2)
    for (h, w), k in c[2].items():
        ctx_total = sum(v for g, v in c[2].items() if g[0] == h)
        assert math.exp(m.log_prob((h,), w)) == pytest.approx(k / ctx_total, abs=1e-15)


def test_mle_toy_perplexity():
    m = estimate(count_ngrams([["a", "b"], ["a", "c"]], 2), min_count=1, mle=True)
    score = perplexity(m, ["a", "b"])
    assert score.token_count == 3
    assert score.value == pytest.approx(2 ** (1 / 3), abs=1e-9)


def test_certain_sentence_has_perplexity_one():
    m = estimate(count_ngrams([["a"]], 2), min_count=1, mle=True)
    assert m.perplexity(["a"]).value == 1.0


def test_mle_floor_keeps_scores_finite():
    m = estimate(count_ngrams([["a", "b"]], 2), min_count=1, mle=True)
    assert math.isfinite(m.perplexity(["b", "a"]).value)


# -- perplexity ---------------------------------------------------------------


def test_empty_sequence_rejected():
    m = estimate(count_ngrams([["a"]], 2), min_count=1)
    with pytest.raises(ValueError):
        m.perplexity([])


def test_perplexity_counts_oov():
    m = estimate(count_ngrams(support_corpus(100), 3), min_count=2)
    s = m.perplexity(["please", "qwertyuiop", "dm", "asdfgh"])
    assert s.oov_count == 2 and s.token_count == 5
    assert s.value >= 1.0
    assert s.log_value == pytest.approx(math.log(s.value))


def test_shuffled_responses_are_more_perplexing():
    sents = support_corpus(600, seed=1)
    m = estimate(count_ngrams(sents, 5), min_count=2)
    rng = random.Random(5)
    held_in = [s for s in sents if len(s) >= 4][:100]
    shuffled = [rng.sample(s, len(s)) for s in held_in]
    mean = lambda xs: sum(m.perplexity(s).value for s in xs) / len(xs)  # noqa: E731
    assert mean(held_in) < mean(shuffled)


def test_oov_insertion_never_lowers_perplexity():
    # held-out replies from the same source; an unknown word costs more than
    # the average in-domain token, so the per-token cost can only rise
    m = estimate(count_ngrams(support_corpus(600, seed=2), 5), min_count=2)
    rng = random.Random(11)
    for s in support_corpus(1000, seed=99):
        i = rng.randint(0, len(s))
        t = s[:i] + ["never-seen-token"] + s[i:]
        assert m.perplexity(t).value >= m.perplexity(s).value


# -- serialization ------------------------------------------------------------


def test_binary_round_trip_bit_exact(tmp_path):
    sents = support_corpus(200)
    m = estimate(count_ngrams(sents, 5), min_count=2)
    path = tmp_path / "lm.enlm"
    save_model(m, str(path))
    again = load_model(str(path))
    assert again == m
    assert again.discounts == m.discounts
    for s in sents[:20]:
        assert again.perplexity(s).value == m.perplexity(s).value
    assert dumps(again) == path.read_bytes()


def test_model_file_deterministic():
    sents = support_corpus(200)
    a = dumps(estimate(count_ngrams(sents, 4), min_count=2))
    b = dumps(estimate(count_ngrams(list(sents), 4), min_count=2))
    assert a == b
    assert a[:4] == b"ENLM"


def test_file_object_round_trip():
    m = estimate(count_ngrams([["a", "b"], ["b", "a"]], 2), min_count=1)
    buf = io.BytesIO()
    save_model(m, buf)
    buf.seek(0)
    assert load_model(buf) == m


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda b: b"XXXX" + b[4:], "bad magic"),
        (lambda b: b[:4] + (9).to_bytes(2, "little") + b[6:], "version"),
        (lambda b: b[: len(b) // 2], "truncated"),
        (lambda b: b + b"\x00", "trailing"),
    ],
)
def test_corrupt_files_raise_structured_error(mutate, message):
    data = dumps(estimate(count_ngrams([["a", "b"], ["b", "c"]], 3), min_count=1))
    with pytest.raises(ModelFormatError) as err:
        loads(mutate(data))
    assert message in str(err.value)
    assert err.value.offset >= 0


def test_arpa_round_trip():
    sents = support_corpus(100)
    m = estimate(count_ngrams(sents, 3), min_count=2)
    buf = io.StringIO()
    write_arpa(m, buf)
    text = buf.getvalue()
    assert text.lstrip().startswith("\\data\\")
    again = read_arpa(io.StringIO(text))
    assert again.vocab == m.vocab
    for h in all_contexts(m, 3):
        for w in m.predictable_ids:
            assert again._log_prob_ids(h, w) == pytest.approx(m._log_prob_ids(h, w), abs=1e-9)


def test_arpa_counts_header():
    m = estimate(count_ngrams([["a", "b"], ["a", "c"]], 2), min_count=1)
    buf = io.StringIO()
    write_arpa(m, buf)
    lines = buf.getvalue().splitlines()
    assert f"ngram 1={len(m.entries[1])}" in lines
    assert f"ngram 2={len(m.entries[2])}" in lines
    with pytest.raises(ModelFormatError):
        read_arpa(io.StringIO(buf.getvalue().replace(f"ngram 2={len(m.entries[2])}", "ngram 2=99")))


def test_model_is_shareable_value():
    m = estimate(count_ngrams([["a", "b"]], 2), min_count=1)
    assert isinstance(m, KNModel)
    assert m.predictable_ids == [0, 2, 3, 4]
    assert list(itertools.islice(m.vocab, 3)) == ["<unk>", "<s>", "</s>"]
    assert np.isneginf(m.entries[1][(1,)][0])
