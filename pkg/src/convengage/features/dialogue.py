"""Rule-based speech-act tags for a single post."""

from __future__ import annotations

from enum import Enum

from ..text import is_punct


class DialogueTag(str, Enum):
    STATEMENT = "statement"
    QUESTION = "question"
    APPRECIATION = "appreciation"
    RESPONSE = "response"
    SUGGESTION = "suggestion"


TAG_ORDER = (
    DialogueTag.STATEMENT,
    DialogueTag.QUESTION,
    DialogueTag.APPRECIATION,
    DialogueTag.RESPONSE,
    DialogueTag.SUGGESTION,
)

GRATITUDE = frozenset(
    "thanks thank thankyou thx ty tysm appreciate appreciated appreciates grateful gratitude cheers".split()
)

QUESTION_OPENERS = frozenset(
    """what what's whats when where where's which who who's whom whose why how how's
    is isn't are aren't am was wasn't were weren't do does doesn't did didn't don't
    can can't could couldn't would wouldn't will won't should shouldn't shall may might
    have haven't has hasn't had""".split()
)

SUGGESTION_PHRASES = (
    ("would", "you", "mind"),
    ("you", "could"),
    ("you", "can", "try"),
    ("you", "might", "want"),
    ("you", "may", "want"),
    ("we", "recommend"),
    ("we", "suggest"),
    ("i", "recommend"),
    ("i", "suggest"),
    ("help", "us", "improve"),
    ("feel", "free"),
    ("try",),
)

IMPERATIVES = frozenset(
    """check visit click follow go head update restart reinstall reset contact send dm
    call reach see take use download install open log sign fill tap select read""".split()
)

RESPONSE_OPENERS = (
    ("not", "a", "problem"),
    ("no", "problem"),
    ("no", "worries"),
    ("you're", "welcome"),
    ("youre", "welcome"),
    ("glad",),
    ("anytime",),
    ("my", "pleasure"),
    ("happy", "to", "help"),
    ("good", "to", "hear"),
    ("that's", "good", "to", "hear"),
    ("great", "to", "hear"),
    ("of", "course"),
    ("sure",),
    ("got", "it"),
)

PLACEHOLDERS = frozenset({"<mention>", "<url>", "<num>"})


def _words(tokens: list[str]) -> list[str]:
    return [t for t in tokens if not is_punct(t)]


def _leading(words: list[str]) -> list[str]:
    i = 0
    while i < len(words) and words[i] in PLACEHOLDERS:
        i += 1
    return words[i:]


def _contains(words: list[str], phrase: tuple[str, ...]) -> bool:
    n = len(phrase)
    return any(tuple(words[i : i + n]) == phrase for i in range(len(words) - n + 1))


def _starts_with(words: list[str], phrase: tuple[str, ...]) -> bool:
    return tuple(words[: len(phrase)]) == phrase


def tag_dialogue(tokens: list[str]) -> DialogueTag:
    """First matching rule wins: appreciation, question, suggestion, response,
    then statement as the default."""
    words = _words(tokens)
    lead = _leading(words)
    if any(w in GRATITUDE for w in words):
        return DialogueTag.APPRECIATION
    if "?" in tokens or (lead and lead[0] in QUESTION_OPENERS):
        return DialogueTag.QUESTION
    if any(_contains(words, p) for p in SUGGESTION_PHRASES):
        return DialogueTag.SUGGESTION
    imperative = lead[1:] if lead[:1] in (["please"], ["kindly"]) else lead
    if imperative and imperative[0] in IMPERATIVES and "<url>" in tokens:
        return DialogueTag.SUGGESTION
    if any(_starts_with(lead, p) for p in RESPONSE_OPENERS):
        return DialogueTag.RESPONSE
    return DialogueTag.STATEMENT
