"""Word-list categories in the style of LIWC, plus the Tone/Clout proxies.

The shipped lists under ``convengage/lexicons`` are open replacements for
the proprietary LIWC 2015 categories. A user-supplied LIWC ``.dic`` file can
be loaded with :func:`load_liwc_dic`.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..text import word_tokens

SHIPPED_CATEGORIES = (
    "interrogation",
    "certain",
    "tentative",
    "informal",
    "insight",
    "focuspast",
    "focuspresent",
    "focusfuture",
    "time",
    "posemo",
    "negemo",
    "we",
    "i",
    "social",
    "negate",
)

SUMMARY_NAMES = ("word_count", "Tone", "Clout")


@dataclass(frozen=True)
class Lexicon:
    name: str
    words: frozenset[str]
    prefixes: frozenset[str]

    def __post_init__(self):
        if not self.words and not self.prefixes:
            raise ValueError(f"lexicon {self.name!r} has no entries")

    @classmethod
    def from_entries(cls, name: str, entries) -> "Lexicon":
        words, prefixes = set(), set()
        for e in entries:
            e = e.strip().lower()
            if not e or e.startswith("#"):
                continue
            if e.endswith("*"):
                prefixes.add(e[:-1])
            else:
                words.add(e)
        return cls(name, frozenset(words), frozenset(prefixes))

    def matches(self, token: str) -> bool:
        token = token.lower()
        if token in self.words:
            return True
        if self.prefixes:
            for k in range(1, len(token) + 1):
                if token[:k] in self.prefixes:
                    return True
        return False


def load_lexicon(path) -> Lexicon:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        return Lexicon.from_entries(path.stem, fh)


def load_lexicon_dir(directory, categories=None) -> list[Lexicon]:
    directory = Path(directory)
    names = categories or sorted(p.stem for p in directory.glob("*.txt"))
    return [load_lexicon(directory / f"{name}.txt") for name in names]


def shipped_lexicons(categories=SHIPPED_CATEGORIES) -> list[Lexicon]:
    root = resources.files("convengage") / "lexicons"
    out = []
    for name in categories:
        text = (root / f"{name}.txt").read_text(encoding="utf-8")
        out.append(Lexicon.from_entries(name, text.splitlines()))
    return out


def load_liwc_dic(path, categories=None) -> list[Lexicon]:
    """Read a LIWC-format dictionary (``%``-delimited category header, then
    ``word<TAB>ids...`` lines)."""
    with open(path, encoding="utf-8-sig") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    marks = [i for i, ln in enumerate(lines) if ln.strip() == "%"]
    if len(marks) < 2:
        raise ValueError(f"{path}: not a LIWC dictionary (missing % header delimiters)")
    id_to_name = {}
    for ln in lines[marks[0] + 1 : marks[1]]:
        parts = ln.split()
        if len(parts) >= 2:
            id_to_name[parts[0]] = parts[1]
    entries: dict[str, list[str]] = {name: [] for name in id_to_name.values()}
    for ln in lines[marks[1] + 1 :]:
        parts = ln.split("\t") if "\t" in ln else ln.split()
        if len(parts) < 2:
            continue
        word = parts[0].strip()
        if " " in word or "(" in word:
            continue  # phrase and context-dependent entries are not supported
        for cid in parts[1:]:
            name = id_to_name.get(cid.strip())
            if name is not None:
                entries[name].append(word)
    wanted = categories or sorted(entries)
    return [Lexicon.from_entries(name, entries[name]) for name in wanted if entries.get(name)]


def score_lexicon(tokens: list[str], lexicons: list[Lexicon]) -> tuple[dict[str, float], int]:
    """Per-category share of word tokens, and the word count.

    Punctuation-only tokens are not words and never match.
    """
    words = word_tokens(tokens)
    n = len(words)
    scores = {}
    for lex in lexicons:
        hits = sum(1 for w in words if lex.matches(w)) if n else 0
        scores[lex.name] = hits / n if n else 0.0
    return scores, n


def summary_scores(proportions: dict[str, float]) -> tuple[float, float]:
    """Tone and Clout proxies.

    tone = posemo - negemo; clout = (we + social) - (i + negate). These are
    simple stand-ins, not the LIWC summary-variable regressions.
    """
    g = proportions.get
    tone = g("posemo", 0.0) - g("negemo", 0.0)
    clout = (g("we", 0.0) + g("social", 0.0)) - (g("i", 0.0) + g("negate", 0.0))
    return tone, clout
