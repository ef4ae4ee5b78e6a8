"""Turn (initial customer post, initial brand post) pairs into feature rows."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable

import numpy as np
import scipy.sparse as sp

from ..corpus import Conversation, label_engagement
from ..ngram_lm import KNModel
from ..text import DEFAULT_CONFIG, NormalizationConfig, prepare
from .dialogue import TAG_ORDER, DialogueTag, tag_dialogue
from .empathy import EmpathyScores, score_empathy
from .external import ExternalScores
from .lexicon import Lexicon, score_lexicon, summary_scores
from .tfidf import TfIdfVocabulary, fit_tfidf, transform_tfidf


class Group(str, Enum):
    CP = "cp"
    BAP = "bap"
    LIWC = "liwc"
    DIALOGUE = "dialogue"
    EMPATHY = "empathy"
    PERPLEXITY = "perplexity"


ALL_GROUPS = frozenset(Group)
CONTENT_GROUPS = frozenset({Group.CP, Group.BAP})
STYLE_GROUPS = ALL_GROUPS - CONTENT_GROUPS
EMPATHY_NAMES = ("Emotional Reactions", "Interpretations", "Explorations")
NOVELTY_NAME = "BRAND: Novelty"
SIDES = ("CUSTOMER", "BRAND")


def parse_toggles(toggles: str | Iterable[str]) -> frozenset[Group]:
    """``"cp,bap"`` or an iterable of group names; ``"all"`` selects everything."""
    items = toggles.split(",") if isinstance(toggles, str) else list(toggles)
    out = set()
    for item in items:
        item = str(item).strip().lower()
        if not item:
            continue
        if item == "all":
            return ALL_GROUPS
        aliases = {"e": "empathy", "p": "perplexity", "dt": "dialogue", "da": "dialogue"}
        try:
            out.add(Group(aliases.get(item, item)))
        except ValueError:
            raise ValueError(f"unknown feature group {item!r}; expected one of {[g.value for g in Group]}") from None
    if not out:
        raise ValueError("at least one feature group must be enabled")
    return frozenset(out)


def toggles_label(toggles) -> str:
    return "+".join(g.value for g in Group if g in toggles)


@dataclass(frozen=True)
class FeatureSpace:
    names: tuple[str, ...]
    groups: tuple[Group, ...]

    def __len__(self) -> int:
        return len(self.names)

    def columns(self, toggles) -> np.ndarray:
        return np.array([i for i, g in enumerate(self.groups) if g in toggles], dtype=np.int64)

    def group_slice(self, group: Group) -> np.ndarray:
        return self.columns({group})

    @property
    def dense_mask(self) -> np.ndarray:
        return np.array([g not in CONTENT_GROUPS for g in self.groups], dtype=bool)

    def write_sidecar(self, sink: IO[str]) -> None:
        sink.write("index\tname\tgroup\n")
        for i, (n, g) in enumerate(zip(self.names, self.groups)):
            sink.write(f"{i}\t{n}\t{g.value}\n")

    @classmethod
    def read_sidecar(cls, source: IO[str]) -> "FeatureSpace":
        names, groups = [], []
        for k, line in enumerate(source):
            if k == 0:
                continue
            _, name, group = line.rstrip("\n").split("\t")
            names.append(name)
            groups.append(Group(group))
        return cls(tuple(names), tuple(groups))


@dataclass
class FeatureVector:
    values: dict[int, float]
    space: FeatureSpace

    def name(self, index: int) -> str:
        return self.space.names[index]

    def group(self, index: int) -> Group:
        return self.space.groups[index]

    def to_dense(self) -> np.ndarray:
        out = np.zeros(len(self.space))
        for i, v in self.values.items():
            out[i] = v
        return out


@dataclass
class PostScores:
    word_count: int
    proportions: dict[str, float]
    tone: float
    clout: float


@dataclass
class StyleScores:
    customer: PostScores
    brand: PostScores
    dialogue_tag_customer: DialogueTag
    dialogue_tag_brand: DialogueTag
    empathy: EmpathyScores
    brand_perplexity: float | None = None


@dataclass
class Posts:
    conversation_id: str
    customer: list[str]
    brand: list[str]
    engaged: bool


def initial_posts(conversation: Conversation, config: NormalizationConfig = DEFAULT_CONFIG) -> Posts:
    brand = conversation.first_brand_post
    if brand is None:
        raise ValueError(f"conversation {conversation.conversation_id} has no brand post")
    return Posts(
        conversation.conversation_id,
        prepare(conversation.root.text, config),
        prepare(brand.text, config),
        label_engagement(conversation).engaged,
    )


def _post_scores(tokens: list[str], lexicons: list[Lexicon]) -> PostScores:
    props, wc = score_lexicon(tokens, lexicons)
    tone, clout = summary_scores(props)
    return PostScores(wc, props, tone, clout)


@dataclass
class Featurizer:
    """Fitted featurization artifacts. Fit on training conversations only."""

    cp_vocab: TfIdfVocabulary
    bap_vocab: TfIdfVocabulary
    lexicons: list[Lexicon]
    lm: KNModel | None = None
    norm: NormalizationConfig = DEFAULT_CONFIG
    external: ExternalScores = field(default_factory=ExternalScores)

    @classmethod
    def fit(
        cls,
        train: list[Conversation] | list[Posts],
        lexicons: list[Lexicon],
        lm: KNModel | None = None,
        min_df: int = 5,
        max_features: int = 50_000,
        norm: NormalizationConfig = DEFAULT_CONFIG,
        external: ExternalScores | None = None,
    ) -> "Featurizer":
        posts = [p if isinstance(p, Posts) else initial_posts(p, norm) for p in train]
        cp = fit_tfidf([p.customer for p in posts], min_df, max_features)
        bap = fit_tfidf([p.brand for p in posts], min_df, max_features)
        return cls(cp, bap, list(lexicons), lm, norm, external or ExternalScores())

    # -- layout --------------------------------------------------------------

    @property
    def space(self) -> FeatureSpace:
        names: list[str] = []
        groups: list[Group] = []
        for term in self.cp_vocab.names():
            names.append(f"CUSTOMER: tfidf[{term}]")
            groups.append(Group.CP)
        for term in self.bap_vocab.names():
            names.append(f"BRAND: tfidf[{term}]")
            groups.append(Group.BAP)
        for side in SIDES:
            for lex in self.lexicons:
                names.append(f"{side}: {lex.name}")
            names += [f"{side}: word_count", f"{side}: Tone", f"{side}: Clout"]
            groups += [Group.LIWC] * (len(self.lexicons) + 3)
        for side in SIDES:
            for tag in TAG_ORDER:
                names.append(f"{side}: {tag.value}")
                groups.append(Group.DIALOGUE)
        names += list(EMPATHY_NAMES)
        groups += [Group.EMPATHY] * 3
        names.append(NOVELTY_NAME)
        groups.append(Group.PERPLEXITY)
        return FeatureSpace(tuple(names), tuple(groups))

    def _offsets(self) -> dict[Group, int]:
        n_cp, n_bap, n_lex = len(self.cp_vocab), len(self.bap_vocab), len(self.lexicons) + 3
        liwc = n_cp + n_bap
        dialogue = liwc + 2 * n_lex
        empathy = dialogue + 2 * len(TAG_ORDER)
        return {
            Group.CP: 0,
            Group.BAP: n_cp,
            Group.LIWC: liwc,
            Group.DIALOGUE: dialogue,
            Group.EMPATHY: empathy,
            Group.PERPLEXITY: empathy + 3,
        }

    # -- scoring -------------------------------------------------------------

    def style(self, posts: Posts, with_perplexity: bool = True) -> StyleScores:
        override = self.external.get(posts.conversation_id)
        tag_c = override.get("tag_customer") or tag_dialogue(posts.customer)
        tag_b = override.get("tag_brand") or tag_dialogue(posts.brand)
        emp = score_empathy(posts.customer, posts.brand, tag_b)
        if any(k in override for k in ("er", "ip", "ex")):
            emp = EmpathyScores(
                override.get("er", emp.emotional_reaction),
                override.get("ip", emp.interpretation),
                override.get("ex", emp.exploration),
            )
        ppl = None
        if with_perplexity:
            if self.lm is None:
                raise ValueError("perplexity features need a language model")
            ppl = self.lm.perplexity(posts.brand).value if posts.brand else 1.0
        return StyleScores(
            _post_scores(posts.customer, self.lexicons),
            _post_scores(posts.brand, self.lexicons),
            tag_c,
            tag_b,
            emp,
            ppl,
        )

    def row(self, posts: Posts, toggles=ALL_GROUPS) -> dict[int, float]:
        off = self._offsets()
        values: dict[int, float] = {}
        if Group.CP in toggles:
            for i, v in transform_tfidf(posts.customer, self.cp_vocab).items():
                values[off[Group.CP] + i] = v
        if Group.BAP in toggles:
            for i, v in transform_tfidf(posts.brand, self.bap_vocab).items():
                values[off[Group.BAP] + i] = v
        if not toggles & STYLE_GROUPS:
            return values
        style = self.style(posts, with_perplexity=Group.PERPLEXITY in toggles)
        if Group.LIWC in toggles:
            k = off[Group.LIWC]
            for post in (style.customer, style.brand):
                for lex in self.lexicons:
                    values[k] = post.proportions[lex.name]
                    k += 1
                for v in (float(post.word_count), post.tone, post.clout):
                    values[k] = v
                    k += 1
        if Group.DIALOGUE in toggles:
            k = off[Group.DIALOGUE]
            for j, tag in enumerate((style.dialogue_tag_customer, style.dialogue_tag_brand)):
                values[k + j * len(TAG_ORDER) + TAG_ORDER.index(tag)] = 1.0
        if Group.EMPATHY in toggles:
            k = off[Group.EMPATHY]
            for j, v in enumerate(style.empathy.as_tuple()):
                values[k + j] = float(v)
        if Group.PERPLEXITY in toggles:
            values[off[Group.PERPLEXITY]] = math.log(style.brand_perplexity)
        return {i: v for i, v in sorted(values.items()) if v != 0.0}

    def assemble(self, conversation: Conversation, toggles=ALL_GROUPS) -> tuple[FeatureVector, bool]:
        posts = initial_posts(conversation, self.norm)
        return FeatureVector(self.row(posts, toggles), self.space), posts.engaged

    def matrix(self, items, toggles=ALL_GROUPS) -> tuple[sp.csr_matrix, np.ndarray]:
        """Feature matrix (rows in input order) and engagement labels."""
        posts = [p if isinstance(p, Posts) else initial_posts(p, self.norm) for p in items]
        indptr = [0]
        indices: list[int] = []
        data: list[float] = []
        for p in posts:
            r = self.row(p, toggles)
            indices.extend(r.keys())
            data.extend(r.values())
            indptr.append(len(indices))
        X = sp.csr_matrix(
            (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
            shape=(len(posts), len(self.space)),
        )
        y = np.array([p.engaged for p in posts], dtype=np.int8)
        return X, y


# ---------------------------------------------------------------------------
# sparse triplet export


def write_triplets(X: sp.spmatrix, sink: IO[str], row_offset: int = 0) -> None:
    coo = sp.coo_matrix(X)
    order = np.lexsort((coo.col, coo.row))
    for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
        sink.write(f"{r + row_offset} {c} {float(v)!r}\n")


def read_triplets(source: IO[str], shape: tuple[int, int]) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for line in source:
        if not line.strip():
            continue
        r, c, v = line.split()
        rows.append(int(r))
        cols.append(int(c))
        vals.append(float(v))
    return sp.csr_matrix((vals, (rows, cols)), shape=shape)
