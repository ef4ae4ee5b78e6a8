import io
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from convengage.features import (
    SHIPPED_CATEGORIES,
    DialogueTag,
    Lexicon,
    fit_tfidf,
    load_external_scores,
    load_lexicon_dir,
    load_liwc_dic,
    score_empathy,
    score_lexicon,
    shipped_lexicons,
    summary_scores,
    tag_dialogue,
    transform_tfidf,
)
from convengage.text import prepare

from oracles import tfidf_oracle

LEX = shipped_lexicons()


def props(text):
    return score_lexicon(prepare(text), LEX)[0]


# -- lexicons -------------------------------------------------------------------


def test_shipped_categories_load():
    assert [lex.name for lex in LEX] == list(SHIPPED_CATEGORIES)
    assert all(lex.words or lex.prefixes for lex in LEX)


def test_future_focus_share():
    assert props("We will look into this")["focusfuture"] == pytest.approx(1 / 5)


def test_interrogation_share():
    assert props("what happened when you restarted")["interrogation"] == pytest.approx(2 / 5)


def test_empty_post():
    scores, wc = score_lexicon([], LEX)
    assert wc == 0 and set(scores.values()) == {0.0}


def test_punctuation_is_not_a_word():
    scores, wc = score_lexicon(prepare("will ?!"), LEX)
    assert wc == 1 and scores["focusfuture"] == 1.0


def test_prefix_entries():
    lex = Lexicon.from_entries("x", ["promis*", "Hope", "# comment", ""])
    assert lex.prefixes == {"promis"} and lex.words == {"hope"}
    assert lex.matches("promised") and lex.matches("PROMISE") and lex.matches("hope")
    assert not lex.matches("hopeful") and not lex.matches("prom")


def test_empty_lexicon_rejected():
    with pytest.raises(ValueError):
        Lexicon.from_entries("x", ["# only a comment"])


def test_lexicon_directory(tmp_path):
    (tmp_path / "alpha.txt").write_text("one\ntwo*\n", encoding="utf-8")
    (tmp_path / "beta.txt").write_text("three\n", encoding="utf-8")
    lexicons = load_lexicon_dir(tmp_path)
    assert [lex.name for lex in lexicons] == ["alpha", "beta"]
    assert score_lexicon(["twofold", "three", "x", "one"], lexicons)[0] == {"alpha": 0.5, "beta": 0.25}


def test_liwc_dictionary(tmp_path):
    path = tmp_path / "mini.dic"
    path.write_text("%\n1\tposemo\n2\tnegemo\n%\ngood\t1\nbad*\t2\nmeh\t1\t2\n", encoding="utf-8")
    lexicons = load_liwc_dic(path)
    assert [lex.name for lex in lexicons] == ["negemo", "posemo"]
    scores = score_lexicon(["good", "badly", "meh", "ok"], lexicons)[0]
    assert scores == {"negemo": 0.5, "posemo": 0.5}
    (tmp_path / "bad.dic").write_text("no header\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_liwc_dic(tmp_path / "bad.dic")


@given(st.lists(st.sampled_from(["we", "will", "i", "not", "sorry", "great", "?", "help", "yesterday", "maybe"]),
                max_size=15), st.randoms())
def test_proportions_ignore_order(tokens, rnd):
    shuffled = list(tokens)
    rnd.shuffle(shuffled)
    a, b = score_lexicon(tokens, LEX), score_lexicon(shuffled, LEX)
    assert a[1] == b[1]
    for k in a[0]:
        assert a[0][k] == pytest.approx(b[0][k])
        assert 0.0 <= a[0][k] <= 1.0


def test_summary_zero():
    assert summary_scores({}) == (0.0, 0.0)
    assert summary_scores({k: 0.0 for k in SHIPPED_CATEGORIES}) == (0.0, 0.0)


def test_clout_positive_for_we_language():
    p = props("we can help you together")
    assert p["we"] == pytest.approx(0.2) and p["social"] > 0 and p["i"] == p["negate"] == 0
    assert summary_scores(p)[1] > 0


def test_clout_negative_for_i_and_negation():
    p = props("i will not accept this")
    assert p["i"] == pytest.approx(0.2) and p["negate"] == pytest.approx(0.2) and p["we"] == 0
    assert summary_scores(p)[1] < 0


def test_tone_proxy():
    tone, _ = summary_scores({"posemo": 0.3, "negemo": 0.1})
    assert tone == pytest.approx(0.2)


# -- tf-idf -------------------------------------------------------------------


def test_idf_of_term_in_every_document():
    vocab = fit_tfidf([["a", "x"], ["a", "y"]], min_df=1)
    assert vocab.terms[("a",)][1] == 1.0


def test_rare_terms_dropped():
    vocab = fit_tfidf([["a", "x"], ["a", "y"]], min_df=2)
    assert set(vocab.terms) == {("a",)}


def test_two_document_hand_computation():
    vocab = fit_tfidf([["good", "phone"], ["bad", "phone"]], min_df=1, ngram_range=(1, 1))
    assert vocab.terms[("good",)][1] == pytest.approx(math.log(1.5) + 1)
    w = {vocab.names()[i]: v for i, v in transform_tfidf(["good", "phone"], vocab).items()}
    assert w["good"] == pytest.approx(0.815, abs=5e-4)
    assert w["phone"] == pytest.approx(0.580, abs=5e-4)


DOCS = [
    "my phone keeps crashing",
    "my phone will not turn on",
    "the app keeps crashing again",
    "order never arrived my order",
    "phone app crashing",
]


@pytest.mark.parametrize("min_df", [1, 2])
def test_idf_matches_scanning_oracle(min_df):
    docs = [d.split() for d in DOCS]
    vocab = fit_tfidf(docs, min_df=min_df)
    idf, weights = tfidf_oracle(docs, min_df=min_df)
    assert {" ".join(t): v[1] for t, v in vocab.terms.items()} == pytest.approx(idf)
    names = vocab.names()
    for d in docs:
        got = {names[i]: v for i, v in transform_tfidf(d, vocab).items()}
        assert got == pytest.approx(weights(d))


def test_max_features_keeps_most_frequent():
    docs = [d.split() for d in DOCS]
    vocab = fit_tfidf(docs, min_df=1, max_features=2)
    # crashing, my and phone all have df 3; ties go to the lexically smaller term
    assert {" ".join(t) for t in vocab.terms} == {"crashing", "my"}
    assert sorted(i for i, _ in vocab.terms.values()) == [0, 1]


def test_out_of_vocabulary_contributes_nothing():
    vocab = fit_tfidf([d.split() for d in DOCS], min_df=1)
    assert transform_tfidf(["zebra"], vocab) == {}
    assert transform_tfidf([], vocab) == {}
    a = transform_tfidf(["phone", "zebra"], vocab)
    assert a == transform_tfidf(["phone"], vocab)


@given(st.lists(st.sampled_from(" ".join(DOCS).split() + ["zzz"]), min_size=1, max_size=12))
def test_unit_norm(doc):
    vocab = fit_tfidf([d.split() for d in DOCS], min_df=1)
    w = transform_tfidf(doc, vocab)
    if any(t != "zzz" for t in doc):
        assert math.fsum(v * v for v in w.values()) == pytest.approx(1.0)
    assert all(v > 0 for v in w.values())


def test_empty_corpus_rejected():
    with pytest.raises(ValueError):
        fit_tfidf([])


def test_vocabulary_serializes():
    vocab = fit_tfidf([d.split() for d in DOCS], min_df=1)
    again = type(vocab).from_dict(vocab.to_dict())
    assert again == vocab


# -- dialogue tags ------------------------------------------------------------------


@pytest.mark.parametrize(
    "text,tag",
    [
        ("Is this something you're seeing now? Let us know in a DM and we'll take it from there.",
         DialogueTag.QUESTION),
        ("Thanks I've since had an email from XXX and it's been sorted.", DialogueTag.APPRECIATION),
        ("Updating to windows made it sooo slow. Now the recent update killed it.", DialogueTag.STATEMENT),
        ("Not a problem XX, I hope your future journeys are better. ZZZ.", DialogueTag.RESPONSE),
        # a suggestion that also contains a question mark: the question rule ranks first
        ("That's good to hear! Would you mind sharing your experience with us? Help us improve our support "
         "by answering our survey here: Have a wonderful day!", DialogueTag.QUESTION),
        ("That's good to hear! Would you mind sharing your experience with us. Help us improve our support "
         "by answering our survey here: Have a wonderful day!", DialogueTag.SUGGESTION),
    ],
)
def test_sample_tags(text, tag):
    assert tag_dialogue(prepare(text)) is tag


@pytest.mark.parametrize(
    "text,tag",
    [
        ("", DialogueTag.STATEMENT),
        ("@Acme how do i reset my password", DialogueTag.QUESTION),
        ("please visit https://t.co/x for details", DialogueTag.SUGGESTION),
        ("please visit our website.", DialogueTag.STATEMENT),
        ("you could restart the router", DialogueTag.SUGGESTION),
        ("no worries, glad it is sorted", DialogueTag.RESPONSE),
        ("thanks, can you help?", DialogueTag.APPRECIATION),
        ("try it now? thanks", DialogueTag.APPRECIATION),
        ("try it now?", DialogueTag.QUESTION),
    ],
)
def test_cascade(text, tag):
    assert tag_dialogue(prepare(text)) is tag


@given(st.lists(st.sampled_from(["thanks", "?", "what", "try", "glad", "visit", "<url>", "ok", ".", "you", "could"]),
                max_size=10))
def test_every_post_gets_one_tag(tokens):
    assert isinstance(tag_dialogue(tokens), DialogueTag)


# -- empathy ------------------------------------------------------------------------


def emp(customer, brand):
    return score_empathy(prepare(customer), prepare(brand)).as_tuple()


def test_apology_is_emotional_reaction():
    er, _, _ = emp("my phone broke", "I'm sorry you are having this problem")
    assert er >= 1


def test_first_person_emotion_is_strong():
    assert emp("x", "we hate to hear that")[0] == 2
    assert emp("x", "sorry about that")[0] == 1
    assert emp("x", "I am so very sorry")[0] == 2


def test_specific_question_is_strong_exploration():
    assert emp("my computer keeps freezing", "what happened when you restarted your computer?")[2] == 2


def test_generic_question_is_weak_exploration():
    assert emp("ugh", "how may i help you?")[2] == 1


def test_issue_noun_question_is_strong():
    assert emp("ugh", "which version are you on?")[2] == 2


def test_no_frame_scores_zero():
    assert emp("my order never arrived", "Please visit our website.") == (0, 0, 0)


def test_interpretation_levels():
    assert emp("my router keeps dropping wifi", "i understand, a router dropping wifi is annoying")[1] == 2
    assert emp("my router keeps dropping wifi", "i understand how that feels")[1] == 1
    assert emp("my router keeps dropping wifi", "we are on it")[1] == 0


@given(st.lists(st.sampled_from(["i", "sorry", "understand", "?", "what", "router", "we", "hate", "my", "router"]),
                max_size=10),
       st.lists(st.sampled_from(["router", "broken", "my"]), max_size=5))
def test_levels_in_range(brand, customer):
    assert set(score_empathy(customer, brand).as_tuple()) <= {0, 1, 2}


# -- external scores -------------------------------------------------------------------


def ext(text):
    return load_external_scores(io.StringIO(text))


def test_external_row_parsed():
    e = ext("conversation_id,er,ip,ex,tag_brand\nc1,2,0,1,questions\n")
    assert e.get("c1") == {"er": 2, "ip": 0, "ex": 1, "tag_brand": DialogueTag.QUESTION}
    assert e.get("c2") == {}


@pytest.mark.parametrize("bad", ["5", "-1", "1.5", "inf", "abc"])
def test_out_of_range_rejected(bad):
    e = ext(f"conversation_id,er\nc1,{bad}\nc2,1\n")
    assert e.rejected == 1 and len(e) == 1 and e.problems


def test_bad_tag_rejected():
    assert ext("conversation_id,tag_customer\nc1,rant\n").rejected == 1


def test_partial_columns_and_blanks():
    e = ext("conversation_id,ex,er\nc1,,2\n")
    assert e.get("c1") == {"er": 2}


def test_empty_file_is_no_op():
    assert len(ext("")) == 0


def test_header_requirements():
    with pytest.raises(ValueError):
        ext("id,er\nc1,1\n")
    with pytest.raises(ValueError):
        ext("conversation_id,score\nc1,1\n")


def test_unknown_ids_warned(caplog):
    e = ext("conversation_id,er\nc1,1\nc9,2\n")
    assert e.warn_unknown(["c1", "c2"]) == 1
    assert "c9" in caplog.text
