"""Normalization, tokenization and n-gram extraction shared by every feature."""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass

START = "<s>"
END = "</s>"

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION_RE = re.compile(r"@\w+")
_DIGITS_RE = re.compile(r"\d+")
_APOSTROPHES = str.maketrans({"\u2019": "'", "\u2018": "'", "\u02bc": "'"})

TERMINAL_PUNCT = frozenset(".,!?")


@dataclass(frozen=True)
class NormalizationConfig:
    lowercase: bool = True
    url_token: str = "<url>"
    mention_token: str = "<mention>"
    number_token: str = "<num>"
    keep_emoji: bool = True

    def __post_init__(self):
        tokens = (self.url_token, self.mention_token, self.number_token)
        if any(not t or any(ch.isspace() for ch in t) for t in tokens):
            raise ValueError("placeholder tokens must be nonempty and contain no whitespace")
        if len(set(tokens)) != 3:
            raise ValueError("placeholder tokens must be mutually distinct")
        if self.lowercase and any(t != t.lower() for t in tokens):
            raise ValueError("placeholders must be lowercase when lowercase=True")
        for t in tokens:
            # a placeholder that itself matches a replacement rule breaks idempotence
            if _URL_RE.search(t) or _MENTION_RE.search(t) or _DIGITS_RE.search(t):
                raise ValueError(f"placeholder {t!r} would be rewritten by normalization")

    @classmethod
    def from_dict(cls, d: dict | None) -> "NormalizationConfig":
        return cls(**(d or {}))


DEFAULT_CONFIG = NormalizationConfig()


def is_emoji(ch: str) -> bool:
    return unicodedata.category(ch) == "So"


def normalize(text: str, config: NormalizationConfig = DEFAULT_CONFIG) -> str:
    """Replace URLs, @-mentions and digit runs with placeholders.

    Whitespace is collapsed to single spaces. The function is idempotent.
    """
    if not config.keep_emoji:
        # before URL matching: removal can join fragments into a new URL
        text = "".join(ch for ch in text if not is_emoji(ch))
    text = text.translate(_APOSTROPHES)
    if config.lowercase:
        text = text.lower()
    text = _URL_RE.sub(f" {config.url_token} ", text)
    text = _MENTION_RE.sub(config.mention_token, text)
    text = _DIGITS_RE.sub(config.number_token, text)
    return " ".join(text.split())


def _split_word(word: str) -> list[str]:
    out: list[str] = []
    # "?" and emoji always stand alone, wherever they occur
    buf = []
    for ch in word:
        if ch == "?" or is_emoji(ch):
            if buf:
                out.append("".join(buf))
                buf = []
            out.append(ch)
        else:
            buf.append(ch)
    if buf:
        out.append("".join(buf))

    result: list[str] = []
    for piece in out:
        trailing = []
        while piece and piece[-1] in TERMINAL_PUNCT:
            trailing.append(piece[-1])
            piece = piece[:-1]
        if piece:
            result.append(piece)
        result.extend(reversed(trailing))
    return result


def tokenize(text: str) -> list[str]:
    """Split normalized text into tokens.

    >>> tokenize("sorry to hear that!")
    ['sorry', 'to', 'hear', 'that', '!']
    """
    tokens: list[str] = []
    for word in text.split():
        tokens.extend(_split_word(word))
    return tokens


def is_punct(token: str) -> bool:
    return all(unicodedata.category(ch).startswith("P") for ch in token)


def word_tokens(tokens: list[str]) -> list[str]:
    """Tokens that count as words (punctuation-only tokens removed)."""
    return [t for t in tokens if not is_punct(t)]


def ngrams(tokens: list[str], n: int, pad: bool = False) -> list[tuple[str, ...]]:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    seq = list(tokens)
    if pad:
        seq = [START] * (n - 1) + seq + [END]
    return [tuple(seq[i : i + n]) for i in range(len(seq) - n + 1)]


def prepare(text: str, config: NormalizationConfig = DEFAULT_CONFIG) -> list[str]:
    return tokenize(normalize(text, config))
