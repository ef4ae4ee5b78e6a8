import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from convengage.corpus import thread_conversations, with_brand_response  # noqa: E402
from convengage.features import Featurizer, shipped_lexicons  # noqa: E402
from convengage.ngram_lm import count_ngrams, estimate  # noqa: E402
from convengage.synthetic import generate_tweets, generic_support_sentences  # noqa: E402
from convengage.text import prepare  # noqa: E402

CORPUS_ENV = "CONVENGAGE_CORPUS"


def real_corpus() -> Path | None:
    """Path of the full public corpus when the environment names one."""
    value = os.environ.get(CORPUS_ENV)
    if not value:
        return None
    path = Path(value)
    return path if path.exists() else None


def synthetic_conversations(n, seed):
    convs, _ = with_brand_response(thread_conversations(generate_tweets(n, seed=seed)))
    return convs


@pytest.fixture(scope="session")
def conversations():
    return synthetic_conversations(300, seed=4)


@pytest.fixture(scope="session")
def support_lm():
    sentences = [prepare(s) for s in generic_support_sentences(400, seed=1)]
    return estimate(count_ngrams(sentences, 5), min_count=2)


@pytest.fixture(scope="session")
def lexicons():
    return shipped_lexicons()


@pytest.fixture(scope="session")
def featurizer(conversations, lexicons, support_lm):
    return Featurizer.fit(conversations[:200], lexicons, support_lm, min_df=2)


# one verdict line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
