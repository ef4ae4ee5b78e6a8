"""Heuristic scores for three empathy mechanisms in a brand reply.

Each mechanism gets 0 (absent), 1 (weak) or 2 (strong):

* emotional reaction: apology or emotion words; strong when framed in the
  first person ("i'm so sorry", "we hate to hear")
* interpretation: an understanding frame ("i understand", "i know how");
  strong when the reply also picks up two or more content words of the
  customer's post
* exploration: the reply is a question; strong when it is specific, i.e.
  it reuses a customer content word or asks about an issue noun
"""

from __future__ import annotations

from dataclasses import dataclass

from ..text import is_punct
from .dialogue import DialogueTag, tag_dialogue

FIRST_PERSON = frozenset("i i'm im we we're i've we've i'd we'd me us".split())
EMOTION = frozenset(
    """sorry sad saddened hate hated upset concerned worried heartbroken devastated
    disappointed disappointing frustrating frustrated regret apologize apologise
    apologies awful terrible feel feeling gutted""".split()
)
APOLOGY = frozenset("sorry apologies apology apologize apologise oops unfortunately".split())
# intensifiers and copulas allowed between the pronoun and the emotion word
FRAME_FILLERS = frozenset("am are so very really truly sincerely deeply just to be feel do".split())

UNDERSTANDING_FRAMES = (
    ("i", "understand"),
    ("we", "understand"),
    ("i", "completely", "understand"),
    ("we", "completely", "understand"),
    ("i", "totally", "understand"),
    ("we", "totally", "understand"),
    ("i", "know", "how"),
    ("we", "know", "how"),
    ("i've", "had", "this"),
    ("i", "have", "had", "this"),
    ("i", "can", "imagine"),
    ("we", "can", "imagine"),
    ("i", "can", "see", "how"),
    ("we", "can", "see", "how"),
    ("that", "must", "be"),
    ("i", "get", "it"),
    ("we", "get", "it"),
    ("i", "hear", "you"),
    ("we", "hear", "you"),
    ("understandable",),
)

ISSUE_NOUNS = frozenset(
    """error errors version device order account model browser app update firmware
    message code number serial router modem phone laptop computer console flight
    booking reservation ticket package tracking delivery store location address
    screenshot os""".split()
)

STOPWORDS = frozenset(
    """the a an and or but if so to of in on at for with from by as is are was were be been
    being am do does did have has had this that these those it its it's i me my we us our
    you your yours he she they them their there here what when where which who why how
    can could would should will shall may might must not no yes please thanks thank hi
    hello hey just about into out up down over again very really any all some more most
    get got let know see like one also than then too now""".split()
)


@dataclass(frozen=True)
class EmpathyScores:
    emotional_reaction: int = 0
    interpretation: int = 0
    exploration: int = 0

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.emotional_reaction, self.interpretation, self.exploration)


def content_words(tokens: list[str]) -> set[str]:
    return {
        t for t in tokens
        if not t.startswith("<") and any(ch.isalpha() for ch in t)
        and len(t) >= 3 and t not in STOPWORDS
    }


def _words(tokens: list[str]) -> list[str]:
    return [t for t in tokens if not is_punct(t)]


def _has_phrase(words: list[str], phrase: tuple[str, ...]) -> bool:
    n = len(phrase)
    return any(tuple(words[i : i + n]) == phrase for i in range(len(words) - n + 1))


def _first_person_emotion(words: list[str]) -> bool:
    for i, w in enumerate(words):
        if w not in FIRST_PERSON:
            continue
        for j in range(i + 1, min(i + 5, len(words))):
            if words[j] in EMOTION:
                return True
            if words[j] not in FRAME_FILLERS:
                break
    return False


def emotional_reaction(brand: list[str]) -> int:
    words = _words(brand)
    if _first_person_emotion(words):
        return 2
    if any(w in APOLOGY or w in EMOTION for w in words):
        return 1
    return 0


def interpretation(customer: list[str], brand: list[str]) -> int:
    words = _words(brand)
    if not any(_has_phrase(words, f) for f in UNDERSTANDING_FRAMES):
        return 0
    overlap = content_words(customer) & content_words(brand)
    return 2 if len(overlap) >= 2 else 1


def exploration(customer: list[str], brand: list[str], brand_tag: DialogueTag | None = None) -> int:
    tag = brand_tag if brand_tag is not None else tag_dialogue(brand)
    if tag is not DialogueTag.QUESTION:
        return 0
    if content_words(brand) & content_words(customer) or ISSUE_NOUNS.intersection(brand):
        return 2
    return 1


def score_empathy(customer: list[str], brand: list[str], brand_tag: DialogueTag | None = None) -> EmpathyScores:
    return EmpathyScores(
        emotional_reaction(brand),
        interpretation(customer, brand),
        exploration(customer, brand, brand_tag),
    )
