"""Command-line entry point: ``convengage <verb> [options]``.

Verbs run one pipeline stage each and read/write artifacts in the output
directory; ``reproduce`` runs them all and writes ``manifest.txt``.
Exit codes: 0 success, 1 data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import CONFIG_ENV, ConfigError, PipelineConfig, load_config
from .corpus import (
    Conversation,
    ParseReport,
    SchemaError,
    ThreadReport,
    corpus_stats,
    parse_corpus,
    read_conversations,
    split_train_test,
    stats_rows,
    thread_conversations,
    with_brand_response,
    write_conversations,
    write_stats,
)
from .evaluation import (
    ExperimentConfig,
    ExperimentData,
    ablate,
    baseline_reports,
    brand_sentences,
    evaluate_columns,
    evaluate_predictions,
    importance,
    write_ablation,
    write_importance,
    write_metrics,
)
from .features import (
    ALL_GROUPS,
    FeatureSpace,
    Featurizer,
    Group,
    initial_posts,
    load_lexicon_dir,
    load_liwc_dic,
    read_external_scores,
    read_triplets,
    shipped_lexicons,
    toggles_label,
    write_triplets,
)
from .model import TrainingError, load_model, predict, save_model
from .ngram_lm import ModelFormatError, count_ngrams, estimate, load_model as load_lm, save_model as save_lm, write_arpa
from .text import prepare

log = logging.getLogger("convengage")

EXIT_OK, EXIT_DATA, EXIT_USAGE = 0, 1, 2

CONVERSATIONS = "conversations.jsonl"
LM_FILE = "lm.enlm"
FEATURES = "features.trip"
FEATURE_NAMES = "features.names.tsv"
FEATURE_ROWS = "features.rows.tsv"
MODEL_FILE = "model.json"
METRICS = "metrics.csv"
ABLATION = "ablation.csv"
IMPORTANCE = "importance.csv"
MANIFEST = "manifest.txt"
MANIFEST_ARTIFACTS = (CONVERSATIONS, LM_FILE, FEATURES, MODEL_FILE, METRICS, ABLATION, IMPORTANCE)

# feature sets reported by `evaluate`, mirroring the usual content/style comparison
STANDARD_SETS = (
    frozenset({Group.CP}),
    frozenset({Group.BAP}),
    frozenset({Group.CP, Group.BAP}),
    frozenset({Group.LIWC, Group.EMPATHY, Group.PERPLEXITY, Group.DIALOGUE}),
)


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class StageError(Exception):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage} failed: {cause}")
        self.stage = stage
        self.cause = cause


# ---------------------------------------------------------------------------
# helpers


def _need(path: Path, producer: str) -> Path:
    if not path.exists():
        raise DataError(f"missing artifact {path}; run `convengage {producer}` first")
    return path


def _lexicons(cfg: PipelineConfig):
    if cfg.path("liwc_dic") is not None:
        return load_liwc_dic(cfg.path("liwc_dic"))
    if cfg.path("lexicons") is not None:
        return load_lexicon_dir(cfg.path("lexicons"))
    return shipped_lexicons()


def _experiment_config(cfg: PipelineConfig, lm=None, external=None) -> ExperimentConfig:
    t = cfg.raw["train"]
    return ExperimentConfig(
        lexicons=_lexicons(cfg),
        lm=lm,
        lm_order=int(cfg.raw["lm"]["order"]),
        lm_min_count=int(cfg.raw["lm"]["min_count"]),
        min_df=int(cfg.raw["tfidf"]["min_df"]),
        max_features=int(cfg.raw["tfidf"]["max_features"]),
        train=cfg.train_config,
        tune=bool(t["tune"]),
        l2_grid=tuple(float(v) for v in t["l2_grid"]),
        validation_fraction=float(t["validation_fraction"]),
        norm=cfg.norm,
        external=external,
    )


def _load_conversations(cfg: PipelineConfig) -> list[Conversation]:
    with open(_need(cfg.out / CONVERSATIONS, "ingest"), encoding="utf-8") as fh:
        return read_conversations(fh)


@dataclass
class Partition:
    lm: list[Conversation]
    train: list[Conversation]
    test: list[Conversation]
    excluded_no_brand: int


def partition(conversations: list[Conversation], cfg: PipelineConfig) -> Partition:
    """Brand-answered conversations, optional subsample, LM hold-out, then the train/test split."""
    kept, excluded = with_brand_response(conversations)
    if cfg.subsample is not None and cfg.subsample < len(kept):
        rng = np.random.default_rng(cfg.derived_seed("subsample"))
        idx = np.sort(rng.permutation(len(kept))[: cfg.subsample])
        kept = [kept[i] for i in idx]
    if len(kept) < 3:
        raise DataError(f"only {len(kept)} brand-answered conversations; need at least 3")
    lm, rest = split_train_test(kept, cfg.lm_holdout_fraction, cfg.derived_seed("lm_holdout"))
    train, test = split_train_test(rest, cfg.train_fraction, cfg.derived_seed("split"))
    return Partition(lm, train, test, excluded)


def load_experiment_data(cfg: PipelineConfig) -> tuple[ExperimentData, list[str]]:
    out = cfg.out
    with open(_need(out / FEATURE_NAMES, "featurize"), encoding="utf-8") as fh:
        space = FeatureSpace.read_sidecar(fh)
    rows = []
    with open(_need(out / FEATURE_ROWS, "featurize"), encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            r, cid, split, label = line.rstrip("\n").split("\t")
            rows.append((int(r), cid, split, int(label)))
    with open(_need(out / FEATURES, "featurize"), encoding="utf-8") as fh:
        X = read_triplets(fh, (len(rows), len(space)))
    split = np.array([r[2] for r in rows])
    y = np.array([r[3] for r in rows], dtype=np.int8)
    tr, te = np.flatnonzero(split == "train"), np.flatnonzero(split == "test")
    data = ExperimentData(space, X[tr], y[tr], X[te], y[te])
    return data, [r[1] for r in rows]


def _model_columns(data: ExperimentData, model) -> np.ndarray:
    cols = data.columns(set(model.space.groups))
    if tuple(data.space.names[i] for i in cols) != model.space.names:
        raise DataError("model.json does not match the feature files; rerun `convengage train`")
    return cols


def _write_reports(path: Path, writer, report, plot=None, cfg: PipelineConfig | None = None) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as csv_fh, \
            open(path.with_suffix(".txt"), "w", encoding="utf-8") as txt_fh:
        writer(report, csv_fh, txt_fh)
    if plot is not None and cfg is not None and cfg.raw["figures"]:
        from . import plotting

        getattr(plotting, plot)(report, cfg.out / "figures" / path.with_suffix(".png").name)
    return path


# ---------------------------------------------------------------------------
# stages


def cmd_ingest(cfg: PipelineConfig) -> Path:
    cfg.validate(require_corpus=True)
    cfg.out.mkdir(parents=True, exist_ok=True)
    parse = ParseReport()
    threads = ThreadReport()
    with open(cfg.path("corpus"), newline="", encoding="utf-8") as fh:
        convs = thread_conversations(parse_corpus(fh, parse), threads)
    if parse.skipped:
        shown = ", ".join(str(n) for n in parse.skipped_lines[:10])
        log.warning("skipped %d malformed records (ending at lines %s%s)", parse.skipped, shown,
                    ", ..." if parse.skipped > 10 else "")
    stats = corpus_stats(convs, cfg.norm)
    kept, excluded = with_brand_response(convs)
    extra = {"conversations_with_brand_response": len(kept), "conversations_without_brand_response": excluded}
    with open(cfg.out / CONVERSATIONS, "w", encoding="utf-8") as fh:
        write_conversations(convs, fh)
    with open(cfg.out / "stats.csv", "w", newline="", encoding="utf-8") as csv_fh, \
            open(cfg.out / "stats.txt", "w", encoding="utf-8") as txt_fh:
        write_stats(stats_rows(stats, parse, threads, extra), csv_fh, txt_fh)
    log.info("ingest: %d tweets parsed, %d conversations threaded", parse.rows - parse.skipped, len(convs))
    return cfg.out / CONVERSATIONS


def cmd_train_lm(cfg: PipelineConfig, arpa: bool = False) -> Path:
    cfg.validate()
    part = partition(_load_conversations(cfg), cfg)
    sentences = list(brand_sentences(part.lm, cfg.norm))
    if not sentences:
        raise DataError("the language-model hold-out set has no brand responses")
    lm = estimate(count_ngrams(sentences, int(cfg.raw["lm"]["order"])), min_count=int(cfg.raw["lm"]["min_count"]))
    save_lm(lm, str(cfg.out / LM_FILE))
    if arpa:
        with open(cfg.out / "lm.arpa", "w", encoding="utf-8") as fh:
            write_arpa(lm, fh)
    log.info("train-lm: order %d, %d sentences, vocabulary %d", lm.order, len(sentences), len(lm.vocab))
    return cfg.out / LM_FILE


def cmd_ppl(model_path: Path, text: str, cfg: PipelineConfig) -> dict:
    tokens = prepare(text, cfg.norm)
    if not text.strip() or not tokens:
        raise UsageError("ppl needs a nonempty response text")
    lm = load_lm(str(_need(model_path, "train-lm")))
    score = lm.perplexity(tokens)
    return {
        "perplexity": score.value,
        "log_perplexity": score.log_value,
        "tokens": score.token_count,
        "oov": score.oov_count,
        "log_prob": score.log_prob,
    }


def cmd_featurize(cfg: PipelineConfig) -> Path:
    cfg.validate()
    toggles = cfg.toggles
    part = partition(_load_conversations(cfg), cfg)
    lm = None
    if Group.PERPLEXITY in toggles:
        lm = load_lm(str(_need(cfg.out / LM_FILE, "train-lm")))
    external = None
    if cfg.path("external_scores") is not None:
        external = read_external_scores(cfg.path("external_scores"))
        if external.rejected:
            log.warning("external scores: %d rows rejected: %s", external.rejected, "; ".join(external.problems[:5]))
        external.warn_unknown(c.conversation_id for c in part.train + part.test)
    ecfg = _experiment_config(cfg, lm, external)
    train_posts = [initial_posts(c, cfg.norm) for c in part.train]
    test_posts = [initial_posts(c, cfg.norm) for c in part.test]
    feat = Featurizer.fit(train_posts, ecfg.lexicons, lm, ecfg.min_df, ecfg.max_features, cfg.norm, external)
    X_train, y_train = feat.matrix(train_posts, toggles)
    X_test, y_test = feat.matrix(test_posts, toggles)
    with open(cfg.out / FEATURES, "w", encoding="utf-8") as fh:
        write_triplets(X_train, fh)
        write_triplets(X_test, fh, row_offset=X_train.shape[0])
    with open(cfg.out / FEATURE_NAMES, "w", encoding="utf-8") as fh:
        feat.space.write_sidecar(fh)
    with open(cfg.out / FEATURE_ROWS, "w", encoding="utf-8") as fh:
        fh.write("row\tconversation_id\tsplit\tlabel\n")
        for i, (p, y) in enumerate(zip(train_posts + test_posts, np.concatenate([y_train, y_test]))):
            fh.write(f"{i}\t{p.conversation_id}\t{'train' if i < len(train_posts) else 'test'}\t{int(y)}\n")
    log.info("featurize: %d train rows, %d test rows, %d features (%s)",
             len(train_posts), len(test_posts), len(feat.space), toggles_label(toggles))
    return cfg.out / FEATURES


def cmd_train(cfg: PipelineConfig) -> Path:
    cfg.validate()
    data, _ = load_experiment_data(cfg)
    from .evaluation import fit_columns

    model, _ = fit_columns(data, cfg.toggles, _experiment_config(cfg))
    save_model(model, str(cfg.out / MODEL_FILE))
    log.info("train: l2 %g, %d epochs, converged=%s", model.config.l2_strength, model.epochs, model.converged)
    return cfg.out / MODEL_FILE


def cmd_evaluate(cfg: PipelineConfig) -> Path:
    cfg.validate()
    data, _ = load_experiment_data(cfg)
    model = load_model(str(_need(cfg.out / MODEL_FILE, "train")))
    ecfg = _experiment_config(cfg)
    reports = baseline_reports(data.y_train, data.y_test, cfg.derived_seed("baselines"))
    model_groups = frozenset(model.space.groups)
    for toggles in STANDARD_SETS:
        sub = toggles & cfg.toggles
        if not sub or sub == model_groups or len(data.columns(sub)) == 0:
            continue
        if any(r.label == toggles_label(sub) for r in reports):
            continue
        reports.append(evaluate_columns(data, sub, ecfg)[0])
    pred = predict(model, data.X_test[:, _model_columns(data, model)])
    reports.append(evaluate_predictions(data.y_test, pred, toggles_label(model_groups)))
    return _write_reports(cfg.out / METRICS, write_metrics, reports, "plot_metrics", cfg)


def cmd_ablate(cfg: PipelineConfig) -> Path:
    cfg.validate()
    data, _ = load_experiment_data(cfg)
    groups = [g for g in Group if g in cfg.toggles]
    if len(groups) < 2:
        raise UsageError("ablation needs at least two enabled feature groups")
    report = ablate(data, groups, _experiment_config(cfg), base_toggles=cfg.toggles)
    return _write_reports(cfg.out / ABLATION, write_ablation, report, "plot_ablation", cfg)


def cmd_explain(cfg: PipelineConfig) -> Path:
    cfg.validate()
    model = load_model(str(_need(cfg.out / MODEL_FILE, "train")))
    return _write_reports(cfg.out / IMPORTANCE, write_importance, importance(model), "plot_importance", cfg)


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(cfg: PipelineConfig) -> Path:
    lines = [
        f"# convengage {__version__}",
        f"# root_seed {cfg.seed}",
        f"# config_sha256 {cfg.digest()}",
    ]
    for name in MANIFEST_ARTIFACTS:
        lines.append(f"{sha256_file(cfg.out / name)}  {name}")
    path = cfg.out / MANIFEST
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


STAGES = ("ingest", "train-lm", "featurize", "train", "evaluate", "ablate", "explain")


def cmd_reproduce(cfg: PipelineConfig) -> Path:
    cfg.validate(require_corpus=True)
    runners = {
        "ingest": cmd_ingest,
        "train-lm": cmd_train_lm,
        "featurize": cmd_featurize,
        "train": cmd_train,
        "evaluate": cmd_evaluate,
        "ablate": cmd_ablate,
        "explain": cmd_explain,
    }
    for stage in STAGES:
        t0 = time.perf_counter()
        try:
            runners[stage](cfg)
        except Exception as exc:
            raise StageError(stage, exc) from exc
        log.info("%s done in %.1fs", stage, time.perf_counter() - t0)
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / "config.yaml").write_text(cfg.dump(), encoding="utf-8")
    return write_manifest(cfg)


def cmd_synth(path: Path, conversations: int, seed: int) -> Path:
    from .synthetic import generate_tweets, write_twcs

    path.parent.mkdir(parents=True, exist_ok=True)
    write_twcs(generate_tweets(conversations, seed=seed), path)
    return path


# ---------------------------------------------------------------------------
# argument parsing


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help=f"YAML config file (default: ${CONFIG_ENV} if set)")
    p.add_argument("--seed", type=int, help="root seed for every random choice")
    p.add_argument("--toggles", help="feature groups, e.g. cp,bap,liwc,empathy,perplexity,dialogue")
    p.add_argument("--out", help="output directory")
    p.add_argument("--corpus", help="customer-support CSV (tweet_id, author_id, inbound, ...)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="convengage", description="Customer engagement prediction pipeline.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True, metavar="verb")

    def verb(name, help):
        p = sub.add_parser(name, help=help)
        _common(p)
        return p

    verb("ingest", "thread the corpus into conversations and write corpus statistics")
    p = verb("train-lm", "train the brand-response language model")
    p.add_argument("--arpa", action="store_true", help="also write an ARPA text export")
    p = verb("ppl", "score a response's perplexity")
    p.add_argument("text", nargs="*", help="response text (read from stdin when omitted)")
    p.add_argument("--model", help="language model file (default: <out>/lm.enlm)")
    verb("featurize", "build train/test feature matrices")
    verb("train", "train the logistic regression model")
    verb("evaluate", "write metrics for baselines and feature sets")
    verb("ablate", "retrain with each feature group removed")
    verb("explain", "write stylistic feature coefficients")
    verb("reproduce", "run every stage and write a manifest")
    p = sub.add_parser("synth", help="write a small synthetic corpus for demos")
    p.add_argument("path")
    p.add_argument("--conversations", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


def config_from_args(args) -> PipelineConfig:
    overrides: dict = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.toggles is not None:
        overrides["toggles"] = [t for t in args.toggles.split(",") if t.strip()]
    paths = {}
    if args.out is not None:
        paths["out"] = args.out
    if args.corpus is not None:
        paths["corpus"] = args.corpus
    if paths:
        overrides["paths"] = paths
    return load_config(args.config, overrides)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.verb == "synth":
            print(cmd_synth(Path(args.path), args.conversations, args.seed))
            return EXIT_OK
        cfg = config_from_args(args)
        cfg.validate()
        if args.verb == "ppl":
            text = " ".join(args.text) if args.text else sys.stdin.read()
            model = Path(args.model) if args.model else cfg.out / LM_FILE
            for k, v in cmd_ppl(model, text, cfg).items():
                print(f"{k}\t{v:.10g}" if isinstance(v, float) else f"{k}\t{v}")
            return EXIT_OK
        verbs = {
            "ingest": cmd_ingest,
            "train-lm": lambda c: cmd_train_lm(c, arpa=args.arpa),
            "featurize": cmd_featurize,
            "train": cmd_train,
            "evaluate": cmd_evaluate,
            "ablate": cmd_ablate,
            "explain": cmd_explain,
            "reproduce": cmd_reproduce,
        }
        print(verbs[args.verb](cfg))
        return EXIT_OK
    except StageError as exc:
        print(f"convengage: {exc}", file=sys.stderr)
        return EXIT_USAGE if isinstance(exc.cause, (UsageError, ConfigError)) else EXIT_DATA
    except (UsageError, ConfigError) as exc:
        print(f"convengage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, SchemaError, ModelFormatError, TrainingError, FileNotFoundError,
            json.JSONDecodeError, ValueError) as exc:
        print(f"convengage: {exc}", file=sys.stderr)
        return EXIT_DATA


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
