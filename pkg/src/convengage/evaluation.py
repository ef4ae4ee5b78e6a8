"""Confusion counts, macro metrics, feature-set experiments, ablation and importance."""

from __future__ import annotations

import csv
import logging
from fractions import Fraction
from dataclasses import dataclass, field, replace
from typing import IO, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import Conversation, Role
from .features.assemble import (
    ALL_GROUPS,
    CONTENT_GROUPS,
    FeatureSpace,
    Featurizer,
    Group,
    Posts,
    initial_posts,
    toggles_label,
)
from .features.external import ExternalScores
from .features.lexicon import Lexicon
from .model import (
    DEFAULT_L2_GRID,
    Baseline,
    LogisticModel,
    TrainConfig,
    baseline_predict,
    fit_standardizer,
    predict,
    train_logreg,
    tune_l2,
)
from .ngram_lm import KNModel, count_ngrams, estimate
from .text import DEFAULT_CONFIG, NormalizationConfig, prepare

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def confusion(y_true, y_pred) -> ConfusionMatrix:
    t = np.asarray(y_true).astype(bool).ravel()
    p = np.asarray(y_pred).astype(bool).ravel()
    if len(t) != len(p):
        raise ValueError(f"length mismatch: {len(t)} labels vs {len(p)} predictions")
    if len(t) == 0:
        raise ValueError("nothing to evaluate")
    return ConfusionMatrix(
        int(np.sum(t & p)), int(np.sum(~t & p)), int(np.sum(t & ~p)), int(np.sum(~t & ~p))
    )


def _ratio(num: int, den: int) -> Fraction:
    return Fraction(num, den) if den else Fraction(0)


def _f1(p: Fraction, r: Fraction) -> Fraction:
    return 2 * p * r / (p + r) if p + r else Fraction(0)


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricsReport:
    engaged: ClassMetrics
    not_engaged: ClassMetrics
    macro_precision: float
    macro_recall: float
    macro_f1: float
    label: str = ""

    def with_label(self, label: str) -> "MetricsReport":
        return replace(self, label=label)


def macro_metrics(cm: ConfusionMatrix, label: str = "") -> MetricsReport:
    """Per-class and macro P/R/F1; any undefined ratio counts as 0.

    Ratios are kept exact and rounded to float once, so every value is the
    nearest double to the true ratio of counts.
    """
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    p1, r1 = _ratio(cm.tp, cm.tp + cm.fp), _ratio(cm.tp, cm.tp + cm.fn)
    p0, r0 = _ratio(cm.tn, cm.tn + cm.fn), _ratio(cm.tn, cm.tn + cm.fp)
    f1, f0 = _f1(p1, r1), _f1(p0, r0)
    return MetricsReport(
        ClassMetrics(float(p1), float(r1), float(f1), cm.tp + cm.fn),
        ClassMetrics(float(p0), float(r0), float(f0), cm.tn + cm.fp),
        float((p1 + p0) / 2),
        float((r1 + r0) / 2),
        float((f1 + f0) / 2),
        label,
    )


def evaluate_predictions(y_true, y_pred, label: str = "") -> MetricsReport:
    return macro_metrics(confusion(y_true, y_pred), label)


def baseline_reports(y_train, y_test, seed: int = 0) -> list[MetricsReport]:
    out = []
    for kind in Baseline:
        pred = baseline_predict(kind, y_train, len(y_test), seed)
        out.append(evaluate_predictions(y_test, pred, f"baseline:{kind.value}"))
    return out


# ---------------------------------------------------------------------------
# experiments


@dataclass
class ExperimentConfig:
    lexicons: list[Lexicon]
    lm: KNModel | None = None
    lm_order: int = 5
    lm_min_count: int = 2
    min_df: int = 5
    max_features: int = 50_000
    train: TrainConfig = field(default_factory=TrainConfig)
    tune: bool = True
    l2_grid: Sequence[float] = DEFAULT_L2_GRID
    validation_fraction: float = 0.1
    norm: NormalizationConfig = DEFAULT_CONFIG
    external: ExternalScores | None = None


@dataclass
class ExperimentData:
    """Full-width feature matrices for both splits and their shared feature space."""

    space: FeatureSpace
    X_train: sp.csr_matrix
    y_train: np.ndarray
    X_test: sp.csr_matrix
    y_test: np.ndarray
    featurizer: Featurizer | None = None

    def columns(self, toggles) -> np.ndarray:
        return self.space.columns(toggles)


def brand_sentences(conversations: Iterable[Conversation], norm: NormalizationConfig = DEFAULT_CONFIG):
    for conv in conversations:
        for turn in conv.turns:
            if turn.role is Role.BRAND:
                tokens = prepare(turn.tweet.text, norm)
                if tokens:
                    yield tokens


def train_brand_lm(conversations, order: int = 5, min_count: int = 2,
                   norm: NormalizationConfig = DEFAULT_CONFIG) -> KNModel:
    return estimate(count_ngrams(brand_sentences(conversations, norm), order), min_count=min_count)


def prepare_experiment(train: list[Conversation], test: list[Conversation], config: ExperimentConfig) -> ExperimentData:
    lm = config.lm
    if lm is None:
        lm = train_brand_lm(train, config.lm_order, config.lm_min_count, config.norm)
    train_posts = [initial_posts(c, config.norm) for c in train]
    test_posts = [initial_posts(c, config.norm) for c in test]
    return prepare_from_posts(train_posts, test_posts, config, lm)


def prepare_from_posts(train: list[Posts], test: list[Posts], config: ExperimentConfig,
                       lm: KNModel | None) -> ExperimentData:
    feat = Featurizer.fit(train, config.lexicons, lm, config.min_df, config.max_features,
                          config.norm, config.external)
    toggles = ALL_GROUPS if lm is not None else ALL_GROUPS - {Group.PERPLEXITY}
    X_train, y_train = feat.matrix(train, toggles)
    X_test, y_test = feat.matrix(test, toggles)
    return ExperimentData(feat.space, X_train, y_train, X_test, y_test, feat)


def subspace(space: FeatureSpace, cols: np.ndarray) -> FeatureSpace:
    return FeatureSpace(tuple(space.names[i] for i in cols), tuple(space.groups[i] for i in cols))


def fit_columns(data: ExperimentData, toggles, config: ExperimentConfig,
                y_train: np.ndarray | None = None) -> tuple[LogisticModel, np.ndarray]:
    """Train on the columns of ``toggles``; returns the model and the column indices."""
    cols = data.columns(toggles)
    if len(cols) == 0:
        raise ValueError(f"feature groups {toggles_label(toggles)} have no columns")
    y = data.y_train if y_train is None else np.asarray(y_train)
    X = data.X_train[:, cols]
    X.sort_indices()
    sub = subspace(data.space, cols)
    dense = np.flatnonzero(sub.dense_mask)
    train_cfg = config.train
    if config.tune:
        l2, scores = tune_l2(X, y, train_cfg, config.l2_grid, config.validation_fraction, dense)
        log.info("%s: validation macro F1 by l2 %s -> %g", toggles_label(toggles), scores, l2)
        train_cfg = replace(train_cfg, l2_strength=l2)
    std = fit_standardizer(X, dense)
    return train_logreg(X, y, train_cfg, std, sub), cols


def evaluate_columns(data: ExperimentData, toggles, config: ExperimentConfig,
                     on_train: bool = False) -> tuple[MetricsReport, LogisticModel]:
    model, cols = fit_columns(data, toggles, config)
    X = data.X_train if on_train else data.X_test
    y = data.y_train if on_train else data.y_test
    pred = predict(model, X[:, cols])
    return evaluate_predictions(y, pred, toggles_label(toggles)), model


def run_experiment(train, test, feature_toggles, config: ExperimentConfig) -> MetricsReport:
    """Fit every artifact on ``train``, evaluate the enabled feature groups on ``test``."""
    data = prepare_experiment(train, test, config)
    return evaluate_columns(data, feature_toggles, config)[0]


# ---------------------------------------------------------------------------
# ablation


@dataclass(frozen=True)
class AblationRow:
    removed: str
    metrics: MetricsReport
    delta_f1: float


@dataclass
class AblationReport:
    rows: list[AblationRow]

    def __len__(self) -> int:
        return len(self.rows)

    def row(self, removed: str) -> AblationRow:
        for r in self.rows:
            if r.removed == removed:
                return r
        raise KeyError(removed)


def ablate(data: ExperimentData, groups: Iterable[Group], config: ExperimentConfig,
           base_toggles=ALL_GROUPS) -> AblationReport:
    """Full model plus one retrain per group with that group switched off."""
    base = frozenset(base_toggles)
    full, _ = evaluate_columns(data, base, config)
    rows = [AblationRow("none", full.with_label("full"), 0.0)]
    for g in groups:
        g = Group(g)
        m, _ = evaluate_columns(data, base - {g}, config)
        rows.append(AblationRow(g.value, m.with_label(f"-{g.value}"), m.macro_f1 - full.macro_f1))
    return AblationReport(rows)


# ---------------------------------------------------------------------------
# importance


@dataclass(frozen=True)
class Importance:
    name: str
    group: Group
    coefficient: float


@dataclass
class ImportanceReport:
    stylistic: list[Importance]
    content: list[Importance]

    def coefficient(self, name: str) -> float:
        for item in self.stylistic + self.content:
            if item.name == name:
                return item.coefficient
        raise KeyError(name)


def importance(model: LogisticModel, top_k: int = 20) -> ImportanceReport:
    """Stylistic coefficients sorted descending, and the top-k content terms by |coefficient|."""
    if model.space is None:
        raise ValueError("model has no feature names")
    items = [
        Importance(n, g, float(w))
        for n, g, w in zip(model.space.names, model.space.groups, model.weights)
    ]
    stylistic = sorted((i for i in items if i.group not in CONTENT_GROUPS), key=lambda i: (-i.coefficient, i.name))
    content = sorted((i for i in items if i.group in CONTENT_GROUPS), key=lambda i: (-abs(i.coefficient), i.name))
    return ImportanceReport(stylistic, content[:top_k])


# ---------------------------------------------------------------------------
# report writers

METRIC_FIELDS = ("feature_set", "macro_p", "macro_r", "macro_f1",
                 "p_engaged", "r_engaged", "f1_engaged", "p_not_engaged", "r_not_engaged",
                 "f1_not_engaged", "support_engaged", "support_not_engaged")


def _fmt(v: float) -> str:
    return f"{v:.6f}"


def metrics_row(m: MetricsReport) -> list[str]:
    return [
        m.label, _fmt(m.macro_precision), _fmt(m.macro_recall), _fmt(m.macro_f1),
        _fmt(m.engaged.precision), _fmt(m.engaged.recall), _fmt(m.engaged.f1),
        _fmt(m.not_engaged.precision), _fmt(m.not_engaged.recall), _fmt(m.not_engaged.f1),
        str(m.engaged.support), str(m.not_engaged.support),
    ]


def _table(header: Sequence[str], rows: list[Sequence[str]]) -> str:
    widths = [max(len(str(x)) for x in col) for col in zip(header, *rows)]
    lines = ["  ".join(str(x).ljust(w) for x, w in zip(header, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(str(x).ljust(w) for x, w in zip(r, widths)).rstrip() for r in rows]
    return "\n".join(lines) + "\n"


def write_metrics(reports: list[MetricsReport], csv_sink: IO[str], text_sink: IO[str] | None = None) -> None:
    rows = [metrics_row(m) for m in reports]
    w = csv.writer(csv_sink, lineterminator="\n")
    w.writerow(METRIC_FIELDS)
    w.writerows(rows)
    if text_sink is not None:
        text_sink.write(_table(("feature set", "macro P", "macro R", "macro F1"), [r[:4] for r in rows]))


def write_ablation(report: AblationReport, csv_sink: IO[str], text_sink: IO[str] | None = None) -> None:
    rows = [
        [r.removed, _fmt(r.metrics.macro_precision), _fmt(r.metrics.macro_recall),
         _fmt(r.metrics.macro_f1), _fmt(r.delta_f1)]
        for r in report.rows
    ]
    w = csv.writer(csv_sink, lineterminator="\n")
    w.writerow(("removed_group", "macro_p", "macro_r", "macro_f1", "delta_f1"))
    w.writerows(rows)
    if text_sink is not None:
        text_sink.write(_table(("removed", "macro P", "macro R", "macro F1", "delta F1"), rows))


CLOUT_NOTE = "more we-words and social words, fewer i-words and negations (proxy formula)"


def write_importance(report: ImportanceReport, csv_sink: IO[str], text_sink: IO[str] | None = None) -> None:
    rows = [[i.name, i.group.value, f"{i.coefficient:.6f}"] for i in report.stylistic]
    w = csv.writer(csv_sink, lineterminator="\n")
    w.writerow(("feature", "group", "coefficient"))
    w.writerows(rows)
    if text_sink is not None:
        text_sink.write("stylistic features (standardized coefficients)\n")
        text_sink.write(_table(("feature", "group", "coefficient"), rows))
        if any(i.name.endswith("Clout") for i in report.stylistic):
            text_sink.write(f"\nClout: {CLOUT_NOTE}\n")
        if report.content:
            text_sink.write("\ntop content terms by |coefficient|\n")
            text_sink.write(_table(
                ("feature", "group", "coefficient"),
                [[i.name, i.group.value, f"{i.coefficient:.6f}"] for i in report.content],
            ))
