"""Override heuristic empathy scores and dialogue tags with values from a file.

The file is comma-separated with a ``conversation_id`` column and any subset
of ``er``, ``ip``, ``ex``, ``tag_customer``, ``tag_brand``.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import IO

from .dialogue import DialogueTag

log = logging.getLogger(__name__)

SCORE_COLUMNS = ("er", "ip", "ex")
TAG_COLUMNS = ("tag_customer", "tag_brand")


@dataclass
class ExternalScores:
    overrides: dict[str, dict[str, object]] = field(default_factory=dict)
    rejected: int = 0
    problems: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.overrides)

    def get(self, conversation_id: str) -> dict[str, object]:
        return self.overrides.get(conversation_id, {})

    def warn_unknown(self, known_ids) -> int:
        unknown = sorted(set(self.overrides) - set(known_ids))
        for cid in unknown[:20]:
            log.warning("external scores: unknown conversation_id %s", cid)
        if len(unknown) > 20:
            log.warning("external scores: %d more unknown conversation ids", len(unknown) - 20)
        return len(unknown)


def _parse_tag(value: str) -> DialogueTag:
    v = value.strip().lower()
    # accept plural forms such as "questions"
    for tag in DialogueTag:
        if v in (tag.value, tag.value + "s", tag.name.lower()):
            return tag
    raise ValueError(f"unknown dialogue tag {value!r}")


def load_external_scores(source: IO[str]) -> ExternalScores:
    out = ExternalScores()
    reader = csv.DictReader(source)
    if reader.fieldnames is None:
        return out
    if "conversation_id" not in reader.fieldnames:
        raise ValueError("external scores file needs a conversation_id column")
    cols = [c for c in SCORE_COLUMNS + TAG_COLUMNS if c in reader.fieldnames]
    if not cols:
        raise ValueError(f"external scores file has none of the columns {SCORE_COLUMNS + TAG_COLUMNS}")
    for row in reader:
        cid = (row["conversation_id"] or "").strip()
        try:
            if not cid:
                raise ValueError("empty conversation_id")
            values: dict[str, object] = {}
            for c in cols:
                raw = (row.get(c) or "").strip()
                if not raw:
                    continue
                if c in SCORE_COLUMNS:
                    level = int(float(raw))
                    if level not in (0, 1, 2) or float(raw) != level:
                        raise ValueError(f"{c}={raw} outside {{0, 1, 2}}")
                    values[c] = level
                else:
                    values[c] = _parse_tag(raw)
        except (ValueError, OverflowError) as exc:
            out.rejected += 1
            out.problems.append(f"line {reader.line_num}: {exc}")
            continue
        if values:
            out.overrides.setdefault(cid, {}).update(values)
    return out


def read_external_scores(path) -> ExternalScores:
    with open(path, newline="", encoding="utf-8") as fh:
        return load_external_scores(fh)
