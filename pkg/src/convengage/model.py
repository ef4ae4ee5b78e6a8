"""Standardization, L2-regularized logistic regression and label-only baselines."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import IO, Sequence

import numpy as np
import scipy.sparse as sp

from .features.assemble import FeatureSpace, Group


class ClassWeight(str, Enum):
    NONE = "none"
    BALANCED = "balanced"


class Baseline(str, Enum):
    STRATIFIED = "stratified"
    UNIFORM = "uniform"
    MINOR = "minor"


class TrainingError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    l2_strength: float = 1.0
    learning_rate: float = 0.1
    max_epochs: int = 2000
    tolerance: float = 1e-6
    seed: int = 0
    class_weight: ClassWeight = ClassWeight.BALANCED

    def __post_init__(self):
        if not self.l2_strength > 0:
            raise ValueError("l2_strength must be positive")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be positive")
        if not 0 < self.tolerance < 1:
            raise ValueError("tolerance must lie in (0, 1)")
        object.__setattr__(self, "class_weight", ClassWeight(self.class_weight))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["class_weight"] = self.class_weight.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)


# ---------------------------------------------------------------------------
# standardization


@dataclass(frozen=True)
class Standardizer:
    """Z-scores the dense columns listed in ``columns``; other columns pass through."""

    n_features: int
    columns: np.ndarray
    mean: np.ndarray
    std: np.ndarray

    def apply(self, X) -> sp.csr_matrix:
        X = sp.csr_matrix(X, dtype=np.float64)
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} columns, got {X.shape[1]}")
        if len(self.columns) == 0:
            return X
        dense = X[:, self.columns].toarray()
        dense = (dense - self.mean) / self.std
        sparse_cols = np.setdiff1d(np.arange(self.n_features), self.columns)
        rebuilt = sp.hstack([X[:, sparse_cols], sp.csr_matrix(dense)], format="csc")
        order = np.argsort(np.concatenate([sparse_cols, self.columns]), kind="stable")
        out = sp.csr_matrix(rebuilt[:, order])
        out.eliminate_zeros()
        out.sort_indices()
        return out

    def to_dict(self) -> dict:
        return {
            "n_features": self.n_features,
            "columns": self.columns.tolist(),
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(
            d["n_features"],
            np.asarray(d["columns"], dtype=np.int64),
            np.asarray(d["mean"], dtype=np.float64),
            np.asarray(d["std"], dtype=np.float64),
        )


def fit_standardizer(X, columns: Sequence[int] | np.ndarray | None = None) -> Standardizer:
    """Mean and stddev of ``columns`` (all columns by default) over the rows of X."""
    X = sp.csr_matrix(X, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("cannot standardize an empty matrix")
    cols = np.arange(X.shape[1]) if columns is None else np.asarray(columns, dtype=np.int64)
    dense = X[:, cols].toarray()
    mean = dense.mean(axis=0)
    std = dense.std(axis=0)
    std[std == 0] = 1.0
    return Standardizer(X.shape[1], cols, mean, std)


def apply_standardizer(std: Standardizer, X) -> sp.csr_matrix:
    return std.apply(X)


# ---------------------------------------------------------------------------
# logistic regression


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def sample_weights(y: np.ndarray, mode: ClassWeight) -> np.ndarray:
    y = np.asarray(y)
    if mode is ClassWeight.NONE:
        return np.ones(len(y))
    n, pos = len(y), int(y.sum())
    # inverse prevalence, scaled so the weights average to 1
    w_pos, w_neg = n / (2.0 * pos), n / (2.0 * (n - pos))
    return np.where(y == 1, w_pos, w_neg)


def objective(w: np.ndarray, b: float, X, y, weights, l2: float) -> tuple[float, np.ndarray, float]:
    """Mean weighted log-loss + (l2/2)·‖w‖² and its gradient (bias unpenalized)."""
    z = X @ w + b
    # log(1 + e^z) - y·z, computed stably
    loss_i = np.logaddexp(0.0, z) - y * z
    n = X.shape[0]
    loss = float(weights @ loss_i) / n + 0.5 * l2 * float(w @ w)
    r = weights * (sigmoid(z) - y) / n
    grad_w = np.asarray(X.T @ r).ravel() + l2 * w
    grad_b = float(r.sum())
    return loss, grad_w, grad_b


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    config: TrainConfig = field(default_factory=TrainConfig)
    standardizer: Standardizer | None = None
    space: FeatureSpace | None = None
    epochs: int = 0
    converged: bool = False
    loss_history: list[float] = field(default_factory=list, repr=False)

    @property
    def n_features(self) -> int:
        return len(self.weights)

    def decision(self, X) -> np.ndarray:
        if sp.issparse(X):
            X = sp.csr_matrix(X)
        else:
            X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise ValueError(f"dimension mismatch: model has {self.n_features} features, input has {X.shape[1]}")
        if self.standardizer is not None:
            X = self.standardizer.apply(X)
        return np.asarray(X @ self.weights).ravel() + self.bias

    def to_dict(self) -> dict:
        return {
            "format": "convengage-logreg",
            "version": 1,
            "weights": [float(v) for v in self.weights],
            "bias": float(self.bias),
            "config": self.config.to_dict(),
            "standardizer": None if self.standardizer is None else self.standardizer.to_dict(),
            "names": None if self.space is None else list(self.space.names),
            "groups": None if self.space is None else [g.value for g in self.space.groups],
            "epochs": self.epochs,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LogisticModel":
        if d.get("format") != "convengage-logreg" or d.get("version") != 1:
            raise ValueError("not a version-1 logistic model file")
        space = None
        if d.get("names") is not None:
            space = FeatureSpace(tuple(d["names"]), tuple(Group(g) for g in d["groups"]))
        return cls(
            np.asarray(d["weights"], dtype=np.float64),
            float(d["bias"]),
            TrainConfig.from_dict(d["config"]),
            None if d["standardizer"] is None else Standardizer.from_dict(d["standardizer"]),
            space,
            d.get("epochs", 0),
            d.get("converged", False),
        )


def train_logreg(X, y, config: TrainConfig = TrainConfig(), standardizer: Standardizer | None = None,
                 space: FeatureSpace | None = None, record_loss: bool = False) -> LogisticModel:
    """Full-batch gradient descent from w = 0, b = 0.

    Stops when the gradient norm (weights and bias together) drops below
    ``config.tolerance`` or after ``config.max_epochs`` steps. If a
    standardizer is given, X is raw and gets standardized first; the model
    then applies the same transform at prediction time.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    if sp.issparse(X):
        X = sp.csr_matrix(X, dtype=np.float64)
    else:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] != len(y):
        raise ValueError(f"{X.shape[0]} rows but {len(y)} labels")
    if not np.all((y == 0) | (y == 1)):
        raise TrainingError("labels must be 0/1")
    if y.min() == y.max():
        raise TrainingError("training labels contain a single class")
    if standardizer is not None:
        X = standardizer.apply(X)

    weights = sample_weights(y, config.class_weight)
    w = np.zeros(X.shape[1])
    b = 0.0
    history: list[float] = []
    converged = False
    epoch = 0
    # overflow on a diverging run is detected below, not warned about
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, config.max_epochs + 1):
            loss, gw, gb = objective(w, b, X, y, weights, config.l2_strength)
            if not math.isfinite(loss) or not np.all(np.isfinite(gw)):
                raise TrainingError(f"training diverged (loss {loss}); lower the learning rate {config.learning_rate}")
            if record_loss:
                history.append(loss)
            if math.sqrt(float(gw @ gw) + gb * gb) < config.tolerance:
                converged = True
                break
            w = w - config.learning_rate * gw
            b = b - config.learning_rate * gb
    if not np.all(np.isfinite(w)):
        raise TrainingError(f"training diverged; lower the learning rate {config.learning_rate}")
    return LogisticModel(w, b, config, standardizer, space, epoch, converged, history)


def predict_proba(model: LogisticModel, X) -> np.ndarray:
    return sigmoid(model.decision(X))


def predict(model: LogisticModel, X, threshold: float = 0.5) -> np.ndarray:
    """Positive when the probability is >= threshold (an exact 0.5 is positive)."""
    return (predict_proba(model, X) >= threshold).astype(np.int8)


def save_model(model: LogisticModel, sink: IO[str] | str) -> None:
    text = json.dumps(model.to_dict(), sort_keys=True, indent=1) + "\n"
    if isinstance(sink, str) or hasattr(sink, "__fspath__"):
        with open(sink, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sink.write(text)


def load_model(source: IO[str] | str) -> LogisticModel:
    if isinstance(source, str) or hasattr(source, "__fspath__"):
        with open(source, encoding="utf-8") as fh:
            return LogisticModel.from_dict(json.load(fh))
    return LogisticModel.from_dict(json.load(source))


# ---------------------------------------------------------------------------
# tuning


DEFAULT_L2_GRID = (0.001, 0.01, 0.1, 1.0)


def validation_split(n: int, fraction: float = 0.1, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Sorted (fit, validation) index arrays; validation gets max(1, round(n·fraction))."""
    if n < 2:
        raise ValueError("need at least two rows to carve out a validation set")
    k = min(n - 1, max(1, int(round(n * fraction))))
    perm = np.random.default_rng(seed).permutation(n)
    return np.sort(perm[k:]), np.sort(perm[:k])


def tune_l2(X, y, config: TrainConfig, grid: Sequence[float] = DEFAULT_L2_GRID, fraction: float = 0.1,
            standardizer_columns: np.ndarray | None = None) -> tuple[float, list[tuple[float, float]]]:
    """Pick the L2 strength with the best validation macro F1 (ties go to the larger value)."""
    from .evaluation import confusion, macro_metrics

    X = sp.csr_matrix(X)
    y = np.asarray(y)
    fit_idx, val_idx = validation_split(X.shape[0], fraction, config.seed)
    if y[fit_idx].min() == y[fit_idx].max():
        return config.l2_strength, []
    Xf, Xv = X[fit_idx], X[val_idx]
    std = fit_standardizer(Xf, standardizer_columns) if standardizer_columns is not None else None
    scores = []
    for l2 in grid:
        m = train_logreg(Xf, y[fit_idx], replace(config, l2_strength=l2), std)
        f1 = macro_metrics(confusion(y[val_idx], predict(m, Xv))).macro_f1
        scores.append((float(l2), f1))
    best = max(scores, key=lambda s: (s[1], s[0]))[0]
    return best, scores


# ---------------------------------------------------------------------------
# baselines


def baseline_predict(kind: Baseline | str, y_train, n_test: int, seed: int = 0) -> np.ndarray:
    kind = Baseline(kind)
    y_train = np.asarray(y_train)
    if len(y_train) == 0:
        raise ValueError("y_train is empty")
    rng = np.random.default_rng(seed)
    prevalence = float(y_train.mean())
    if kind is Baseline.STRATIFIED:
        return (rng.random(n_test) < prevalence).astype(np.int8)
    if kind is Baseline.UNIFORM:
        return (rng.random(n_test) < 0.5).astype(np.int8)
    # least frequent class; a tie goes to the positive class
    minor = 1 if prevalence <= 0.5 else 0
    return np.full(n_test, minor, dtype=np.int8)
