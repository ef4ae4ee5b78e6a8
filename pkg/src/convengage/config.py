"""Pipeline configuration: YAML file, environment default, flag overrides."""

from __future__ import annotations

import copy
import hashlib
import os
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .features.assemble import Group, parse_toggles
from .model import DEFAULT_L2_GRID, TrainConfig
from .text import NormalizationConfig

CONFIG_ENV = "CONVENGAGE_CONFIG"

DEFAULTS: dict[str, Any] = {
    "seed": 13,
    "paths": {
        "corpus": None,
        "lexicons": None,  # directory of category files; null uses the shipped lexicons
        "liwc_dic": None,  # optional user-supplied .dic dictionary, replaces the lexicon directory
        "external_scores": None,
        "out": "run",
    },
    "split": {
        "train_fraction": 0.6,
        "lm_holdout_fraction": 0.1,
        "subsample": None,
    },
    "lm": {"order": 5, "min_count": 2},
    "tfidf": {"min_df": 5, "max_features": 50_000},
    "train": {
        "l2_strength": 1.0,
        "learning_rate": 0.1,
        "max_epochs": 2000,
        "tolerance": 1e-6,
        "class_weight": "balanced",
        "tune": True,
        "l2_grid": list(DEFAULT_L2_GRID),
        "validation_fraction": 0.1,
    },
    "toggles": [g.value for g in Group],
    "normalization": {},
    "figures": True,
}


class ConfigError(ValueError):
    """Invalid configuration; the CLI maps it to a usage error."""


def _merge(base: dict, override: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if k not in base:
            raise ConfigError(f"unknown config key {where}{k}")
        if isinstance(base[k], dict) and k != "normalization":
            if not isinstance(v, dict):
                raise ConfigError(f"config key {where}{k} must be a section")
            out[k] = _merge(base[k], v, f"{where}{k}.")
        else:
            out[k] = v
    return out


@dataclass
class PipelineConfig:
    raw: dict
    source: Path | None = None

    # typed accessors ---------------------------------------------------------

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def out(self) -> Path:
        return Path(self.raw["paths"]["out"])

    def path(self, key: str) -> Path | None:
        v = self.raw["paths"][key]
        return None if v in (None, "") else Path(v)

    @property
    def toggles(self) -> frozenset[Group]:
        return parse_toggles(self.raw["toggles"])

    @property
    def train_fraction(self) -> float:
        return float(self.raw["split"]["train_fraction"])

    @property
    def lm_holdout_fraction(self) -> float:
        return float(self.raw["split"]["lm_holdout_fraction"])

    @property
    def subsample(self) -> int | None:
        v = self.raw["split"]["subsample"]
        return None if v is None else int(v)

    @property
    def norm(self) -> NormalizationConfig:
        return NormalizationConfig.from_dict(self.raw["normalization"] or {})

    @property
    def train_config(self) -> TrainConfig:
        t = self.raw["train"]
        return TrainConfig(
            l2_strength=float(t["l2_strength"]),
            learning_rate=float(t["learning_rate"]),
            max_epochs=int(t["max_epochs"]),
            tolerance=float(t["tolerance"]),
            seed=self.derived_seed("validation"),
            class_weight=t["class_weight"],
        )

    def derived_seed(self, purpose: str) -> int:
        """Stage seeds all come from the root seed and a stage name."""
        ss = np.random.SeedSequence([self.seed, zlib.crc32(purpose.encode())])
        return int(ss.generate_state(1)[0])

    def validate(self, require_corpus: bool = False) -> "PipelineConfig":
        try:
            if not 0 < self.train_fraction < 1:
                raise ConfigError("split.train_fraction must lie in (0, 1)")
            if not 0 < self.lm_holdout_fraction < 1:
                raise ConfigError("split.lm_holdout_fraction must lie in (0, 1)")
            if self.subsample is not None and self.subsample < 2:
                raise ConfigError("split.subsample must be at least 2")
            if not 1 <= int(self.raw["lm"]["order"]) <= 6:
                raise ConfigError("lm.order must be between 1 and 6")
            if int(self.raw["lm"]["min_count"]) < 1:
                raise ConfigError("lm.min_count must be positive")
            if int(self.raw["tfidf"]["min_df"]) < 1 or int(self.raw["tfidf"]["max_features"]) < 1:
                raise ConfigError("tfidf.min_df and tfidf.max_features must be positive")
            vf = float(self.raw["train"]["validation_fraction"])
            if not 0 < vf < 1:
                raise ConfigError("train.validation_fraction must lie in (0, 1)")
            if not self.raw["train"]["l2_grid"]:
                raise ConfigError("train.l2_grid must be nonempty")
            self.train_config
            self.toggles
            self.norm
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        for key in ("lexicons", "liwc_dic", "external_scores"):
            p = self.path(key)
            if p is not None and not p.exists():
                raise ConfigError(f"paths.{key} does not exist: {p}")
        if require_corpus:
            p = self.path("corpus")
            if p is None:
                raise ConfigError("no corpus given (paths.corpus or --corpus)")
            if not p.exists():
                raise ConfigError(f"corpus file does not exist: {p}")
        return self

    def dump(self) -> str:
        return yaml.safe_dump(self.raw, sort_keys=True)

    def digest(self) -> str:
        return hashlib.sha256(self.dump().encode()).hexdigest()


def load_config(path: str | os.PathLike | None = None, overrides: dict | None = None) -> PipelineConfig:
    """Defaults, then the config file (explicit path or $CONVENGAGE_CONFIG), then overrides."""
    raw = copy.deepcopy(DEFAULTS)
    source = None
    if path is None and os.environ.get(CONFIG_ENV):
        path = os.environ[CONFIG_ENV]
    if path is not None:
        source = Path(path)
        if not source.exists():
            raise ConfigError(f"config file not found: {source}")
        try:
            data = yaml.safe_load(source.read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {source}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{source}: top level must be a mapping")
        raw = _merge(raw, data)
    if overrides:
        raw = _merge(raw, overrides)
    return PipelineConfig(raw, source)
