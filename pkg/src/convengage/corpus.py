"""Tweet ingestion, conversation threading and engagement labels."""

from __future__ import annotations

import csv
import heapq
import io
import json
import logging
import math
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import IO, Iterable, Iterator

import numpy as np

from .text import DEFAULT_CONFIG, NormalizationConfig, normalize, tokenize, word_tokens

log = logging.getLogger(__name__)

COLUMNS = (
    "tweet_id",
    "author_id",
    "inbound",
    "created_at",
    "text",
    "response_tweet_id",
    "in_response_to_tweet_id",
)

TWITTER_TIME_FORMAT = "%a %b %d %H:%M:%S %z %Y"


class SchemaError(ValueError):
    pass


class Role(str, Enum):
    CUSTOMER = "CUSTOMER"
    BRAND = "BRAND"
    OTHER = "OTHER"


@dataclass(frozen=True, slots=True)
class Tweet:
    tweet_id: str
    author_id: str
    inbound: bool
    created_at: datetime
    text: str
    response_tweet_ids: tuple[str, ...] = ()
    in_response_to: str | None = None

    def sort_key(self):
        return (self.created_at, _id_key(self.tweet_id))

    def to_dict(self) -> dict:
        return {
            "tweet_id": self.tweet_id,
            "author_id": self.author_id,
            "inbound": self.inbound,
            "created_at": format_time(self.created_at),
            "text": self.text,
            "response_tweet_ids": list(self.response_tweet_ids),
            "in_response_to": self.in_response_to,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tweet":
        return cls(
            tweet_id=d["tweet_id"],
            author_id=d["author_id"],
            inbound=d["inbound"],
            created_at=parse_time(d["created_at"]),
            text=d["text"],
            response_tweet_ids=tuple(d.get("response_tweet_ids", ())),
            in_response_to=d.get("in_response_to"),
        )


@dataclass(frozen=True)
class Turn:
    role: Role
    tweet: Tweet


@dataclass(frozen=True)
class Conversation:
    conversation_id: str
    customer_id: str
    brand_id: str | None
    turns: tuple[Turn, ...]

    def by_role(self, role: Role) -> list[Tweet]:
        return [t.tweet for t in self.turns if t.role is role]

    @property
    def root(self) -> Tweet:
        return self.turns[0].tweet

    @property
    def first_brand_post(self) -> Tweet | None:
        for t in self.turns:
            if t.role is Role.BRAND:
                return t.tweet
        return None

    @property
    def has_brand_turn(self) -> bool:
        return self.first_brand_post is not None

    def to_dict(self) -> dict:
        return {
            "conversation_id": self.conversation_id,
            "brand_id": self.brand_id,
            "customer_id": self.customer_id,
            "turns": [{"role": t.role.value, "tweet": t.tweet.to_dict()} for t in self.turns],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Conversation":
        return cls(
            conversation_id=d["conversation_id"],
            customer_id=d["customer_id"],
            brand_id=d["brand_id"],
            turns=tuple(Turn(Role(t["role"]), Tweet.from_dict(t["tweet"])) for t in d["turns"]),
        )


@dataclass(frozen=True)
class EngagementLabel:
    customer_turns: int
    engagement_count: int
    engaged: bool


@dataclass
class CorpusStats:
    total_tweets: int = 0
    total_conversations: int = 0
    engaged_count: int = 0
    mean_turns_per_conversation: float = 0.0
    mean_words_per_tweet: float = 0.0
    max_conversation_length: int = 0
    per_brand_tweet_counts: dict[str, int] = field(default_factory=dict)


@dataclass
class ParseReport:
    rows: int = 0
    skipped: int = 0
    skipped_lines: list[int] = field(default_factory=list)


@dataclass
class ThreadReport:
    """What threading dropped or repaired, itemized for the stats report."""

    input_tweets: int = 0
    threaded_tweets: int = 0
    orphan_tweets: int = 0
    orphan_roots: int = 0
    brand_rooted_conversations: int = 0
    brand_rooted_tweets: int = 0
    cycles_broken: int = 0
    self_replies: int = 0
    duplicate_ids: int = 0
    linked_via_response_list: int = 0

    @property
    def dropped_tweets(self) -> int:
        return self.orphan_tweets + self.brand_rooted_tweets + self.duplicate_ids


# ---------------------------------------------------------------------------
# parsing


def _id_key(tweet_id: str):
    # numeric ids order numerically, anything else lexically after them
    return (0, int(tweet_id), "") if tweet_id.isdigit() else (1, 0, tweet_id)


def parse_time(value: str) -> datetime:
    value = value.strip()
    try:
        dt = datetime.strptime(value, TWITTER_TIME_FORMAT)
    except ValueError:
        dt = datetime.fromisoformat(value.replace("Z", "+00:00"))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt


def format_time(dt: datetime) -> str:
    return dt.strftime(TWITTER_TIME_FORMAT)


def _parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("true", "1", "t", "yes"):
        return True
    if v in ("false", "0", "f", "no"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _row_to_tweet(row: dict) -> Tweet:
    tweet_id = (row["tweet_id"] or "").strip()
    author_id = (row["author_id"] or "").strip()
    if not tweet_id or not author_id:
        raise ValueError("missing tweet_id or author_id")
    responses = tuple(r.strip() for r in (row["response_tweet_id"] or "").split(",") if r.strip())
    parent = (row["in_response_to_tweet_id"] or "").strip()
    if parent.endswith(".0") and parent[:-2].isdigit():
        # pandas-exported files write float ids
        parent = parent[:-2]
    return Tweet(
        tweet_id=tweet_id,
        author_id=author_id,
        inbound=_parse_bool(row["inbound"] or ""),
        created_at=parse_time(row["created_at"] or ""),
        text=row["text"] if row["text"] is not None else "",
        response_tweet_ids=responses,
        in_response_to=parent or None,
    )


def parse_corpus(source: IO[str], report: ParseReport | None = None) -> Iterator[Tweet]:
    """Stream tweets from a customer-support CSV (RFC-4180 quoting).

    Malformed records are skipped and counted in ``report``; a missing
    required column raises :class:`SchemaError`.
    """
    report = report if report is not None else ParseReport()
    reader = csv.DictReader(source)
    header = reader.fieldnames
    if header is None:
        raise SchemaError("empty corpus file: no header")
    missing = [c for c in COLUMNS if c not in header]
    if missing:
        raise SchemaError(f"missing required column(s): {', '.join(missing)} (line 1)")
    while True:
        try:
            row = next(reader)
        except StopIteration:
            break
        except csv.Error as exc:
            # the reader resynchronizes at the next line
            report.rows += 1
            report.skipped += 1
            if len(report.skipped_lines) < 1000:
                report.skipped_lines.append(reader.line_num)
            log.debug("skipping unreadable record at line %d: %s", reader.line_num, exc)
            continue
        report.rows += 1
        try:
            if None in row:
                raise ValueError("too many fields")
            tweet = _row_to_tweet(row)
        except (ValueError, TypeError, AttributeError) as exc:
            report.skipped += 1
            if len(report.skipped_lines) < 1000:
                report.skipped_lines.append(reader.line_num)
            log.debug("skipping record ending at line %d: %s", reader.line_num, exc)
            continue
        yield tweet


def read_corpus(path, report: ParseReport | None = None) -> list[Tweet]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(parse_corpus(fh, report))


def write_corpus(tweets: Iterable[Tweet], sink: IO[str]) -> None:
    # quote everything: a bare carriage return in text is not quoted otherwise
    writer = csv.writer(sink, lineterminator="\n", quoting=csv.QUOTE_ALL)
    writer.writerow(COLUMNS)
    for t in tweets:
        writer.writerow(
            [
                t.tweet_id,
                t.author_id,
                "True" if t.inbound else "False",
                format_time(t.created_at),
                t.text,
                ",".join(t.response_tweet_ids),
                t.in_response_to or "",
            ]
        )


# ---------------------------------------------------------------------------
# threading


def thread_conversations(
    tweets: Iterable[Tweet], report: ThreadReport | None = None
) -> list[Conversation]:
    """Group tweets into customer-rooted reply trees.

    Trees rooted at a brand tweet are discarded, replies whose parent is
    missing from the corpus are dropped along with their subtree, and reply
    cycles are broken at the in-reply edge of the cycle's earliest tweet.
    """
    report = report if report is not None else ThreadReport()
    by_id: dict[str, Tweet] = {}
    for t in tweets:
        report.input_tweets += 1
        if t.tweet_id in by_id:
            report.duplicate_ids += 1
            continue
        by_id[t.tweet_id] = t

    parent: dict[str, str | None] = {}
    for tid, t in by_id.items():
        p = t.in_response_to
        if p == tid:
            report.self_replies += 1
            p = None
        parent[tid] = p
    # children listed only on the parent side
    for tid, t in by_id.items():
        for child in t.response_tweet_ids:
            if child in by_id and child != tid and parent[child] is None and by_id[child].in_response_to is None:
                parent[child] = tid
                report.linked_via_response_list += 1

    children: dict[str, list[str]] = defaultdict(list)
    roots: list[str] = []
    orphans: list[str] = []
    for tid in by_id:
        p = parent[tid]
        if p is None:
            roots.append(tid)
        elif p not in by_id:
            orphans.append(tid)
        else:
            children[p].append(tid)

    reached: set[str] = set()

    def subtree(start: str) -> list[str]:
        out, stack = [], [start]
        while stack:
            node = stack.pop()
            if node in reached:
                continue
            reached.add(node)
            out.append(node)
            stack.extend(children.get(node, ()))
        return out

    trees: list[list[str]] = [subtree(r) for r in roots]
    for o in orphans:
        report.orphan_roots += 1
        report.orphan_tweets += len(subtree(o))

    # Whatever is unreached sits on a parent-pointer cycle (or hangs off one).
    leftover = sorted((tid for tid in by_id if tid not in reached), key=lambda i: by_id[i].sort_key())
    for tid in leftover:
        if tid in reached:
            continue
        # walk up to the cycle
        seen_order: dict[str, int] = {}
        node = tid
        while node not in seen_order:
            seen_order[node] = len(seen_order)
            node = parent[node]
        start = seen_order[node]
        cycle = [n for n, i in seen_order.items() if i >= start]
        cut = min(cycle, key=lambda i: by_id[i].sort_key())
        children[parent[cut]].remove(cut)
        parent[cut] = None
        report.cycles_broken += 1
        log.warning("reply cycle through %d tweets broken at tweet %s", len(cycle), cut)
        trees.append(subtree(cut))

    conversations: list[Conversation] = []
    for tree in trees:
        root = by_id[tree[0]]
        if not root.inbound:
            report.brand_rooted_conversations += 1
            report.brand_rooted_tweets += len(tree)
            continue
        ordered = _linearize(tree[0], children, by_id)
        conversations.append(_assign_roles(ordered))
        report.threaded_tweets += len(ordered)
    conversations.sort(key=lambda c: c.root.sort_key())
    return conversations


def _linearize(root: str, children: dict[str, list[str]], by_id: dict[str, Tweet]) -> list[Tweet]:
    # chronological order that never places a reply before its parent
    out: list[Tweet] = []
    heap = [(by_id[root].sort_key(), root)]
    while heap:
        _, tid = heapq.heappop(heap)
        out.append(by_id[tid])
        for c in children.get(tid, ()):
            heapq.heappush(heap, (by_id[c].sort_key(), c))
    return out


def _assign_roles(tweets: list[Tweet]) -> Conversation:
    customer_id = tweets[0].author_id
    brand_id = next((t.author_id for t in tweets if not t.inbound), None)
    turns = []
    for t in tweets:
        if t.author_id == customer_id:
            role = Role.CUSTOMER
        elif brand_id is not None and t.author_id == brand_id:
            role = Role.BRAND
        else:
            role = Role.OTHER
        turns.append(Turn(role, t))
    return Conversation(tweets[0].tweet_id, customer_id, brand_id, tuple(turns))


def with_brand_response(conversations: Iterable[Conversation]) -> tuple[list[Conversation], int]:
    """Keep conversations that received at least one brand turn; also return the excluded count."""
    kept, excluded = [], 0
    for c in conversations:
        if c.has_brand_turn:
            kept.append(c)
        else:
            excluded += 1
    return kept, excluded


# ---------------------------------------------------------------------------
# labels, splits, stats


class NoBrandTurnError(ValueError):
    pass


def label_engagement(conversation: Conversation) -> EngagementLabel:
    if not conversation.has_brand_turn:
        raise NoBrandTurnError(
            f"conversation {conversation.conversation_id} has no brand turn; filter with with_brand_response()"
        )
    customer_turns = sum(1 for t in conversation.turns if t.role is Role.CUSTOMER)
    return EngagementLabel(customer_turns, customer_turns - 1, customer_turns > 1)


def split_train_test(items: list, train_fraction: float, seed: int) -> tuple[list, list]:
    """Seeded random partition; the train side gets floor(n * fraction) items."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    if not items:
        raise ValueError("cannot split an empty list")
    n = len(items)
    n_train = math.floor(n * train_fraction)
    perm = np.random.default_rng(seed).permutation(n)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return [items[i] for i in train_idx], [items[i] for i in test_idx]


def tweet_word_count(text: str, config: NormalizationConfig = DEFAULT_CONFIG) -> int:
    return len(word_tokens(tokenize(normalize(text, config))))


def corpus_stats(
    conversations: Iterable[Conversation], config: NormalizationConfig = DEFAULT_CONFIG
) -> CorpusStats:
    stats = CorpusStats()
    brand_counts: Counter = Counter()
    total_words = 0
    for c in conversations:
        stats.total_conversations += 1
        n = len(c.turns)
        stats.total_tweets += n
        stats.max_conversation_length = max(stats.max_conversation_length, n)
        if c.has_brand_turn and label_engagement(c).engaged:
            stats.engaged_count += 1
        if c.brand_id is not None:
            brand_counts[c.brand_id] += n
        for turn in c.turns:
            total_words += tweet_word_count(turn.tweet.text, config)
    if stats.total_conversations:
        stats.mean_turns_per_conversation = stats.total_tweets / stats.total_conversations
    if stats.total_tweets:
        stats.mean_words_per_tweet = total_words / stats.total_tweets
    stats.per_brand_tweet_counts = dict(sorted(brand_counts.items(), key=lambda kv: (-kv[1], kv[0])))
    return stats


# ---------------------------------------------------------------------------
# serialization


def write_conversations(conversations: Iterable[Conversation], sink: IO[str]) -> int:
    n = 0
    for c in conversations:
        sink.write(json.dumps(c.to_dict(), ensure_ascii=False, sort_keys=True))
        sink.write("\n")
        n += 1
    return n


def read_conversations(source: IO[str]) -> list[Conversation]:
    return [Conversation.from_dict(json.loads(line)) for line in source if line.strip()]


def stats_rows(
    stats: CorpusStats,
    parse: ParseReport | None = None,
    threads: ThreadReport | None = None,
    extra: dict | None = None,
) -> list[tuple[str, object]]:
    rows: list[tuple[str, object]] = []
    if parse is not None:
        rows += [("parsed_rows", parse.rows), ("malformed_rows_skipped", parse.skipped)]
    if threads is not None:
        rows += [
            ("input_tweets", threads.input_tweets),
            ("threaded_tweets", threads.threaded_tweets),
            ("dropped_orphan_tweets", threads.orphan_tweets),
            ("orphan_subtrees", threads.orphan_roots),
            ("dropped_brand_rooted_tweets", threads.brand_rooted_tweets),
            ("brand_rooted_threads", threads.brand_rooted_conversations),
            ("duplicate_tweet_ids", threads.duplicate_ids),
            ("reply_cycles_broken", threads.cycles_broken),
            ("self_replies_ignored", threads.self_replies),
            ("edges_from_response_lists", threads.linked_via_response_list),
        ]
    for k, v in (extra or {}).items():
        rows.append((k, v))
    d = asdict(stats)
    brands = d.pop("per_brand_tweet_counts")
    for k, v in d.items():
        rows.append((k, round(v, 6) if isinstance(v, float) else v))
    rows.append(("brands", len(brands)))
    for brand, count in brands.items():
        rows.append((f"brand_tweets[{brand}]", count))
    return rows


def write_stats(rows: list[tuple[str, object]], csv_sink: IO[str], text_sink: IO[str] | None = None) -> None:
    writer = csv.writer(csv_sink, lineterminator="\n")
    writer.writerow(["key", "value"])
    writer.writerows(rows)
    if text_sink is not None:
        width = max(len(k) for k, _ in rows)
        for k, v in rows:
            text_sink.write(f"{k.ljust(width)}  {v}\n")


def corpus_from_string(data: str) -> list[Tweet]:
    return list(parse_corpus(io.StringIO(data)))
