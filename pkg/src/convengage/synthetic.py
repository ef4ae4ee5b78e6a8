"""Generator for small twcs-shaped corpora with a planted engagement signal.

Brand replies are either generic templates or specific follow-up questions
that reuse the customer's product and issue. Specific replies draw a second
customer turn far more often, so every feature family has something to find.
"""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

import numpy as np

from .corpus import Tweet

BRANDS = ("AcmeSupport", "ShipFast", "NimbusHelp", "VoltMobile")
PRODUCTS = ("phone", "laptop", "router", "app", "order", "account", "console", "modem", "tablet", "package")
ISSUES = (
    "keeps crashing", "won't turn on", "is really slow", "stopped working", "never arrived",
    "shows an error", "got charged twice", "won't connect", "lost all my data", "froze again",
)
OPENERS = ("ugh", "hey", "seriously", "hi", "help", "so", "wow")
CLOSERS = ("", "so annoying", "please fix this", "this is ridiculous", "thanks in advance")
# customers who ask for guidance come back more often
ASKING_CLOSERS = ("what do i do", "any ideas", "how do i fix it", "can someone help me")

GENERIC_REPLIES = (
    "how may i help you ?",
    "please send us a dm and we will help",
    "please dm us your details",
    "we are here to help , please dm us",
    "sorry to hear that , please dm us",
    "thanks for reaching out , please dm us",
    "please visit our help page {url}",
)
SPECIFIC_REPLIES = (
    "i'm so sorry your {product} {issue} . what version is your {product} running ?",
    "we hate to hear your {product} {issue} . what happened when you restarted your {product} ?",
    "i understand your {product} {issue} . which model of {product} do you have ?",
    "that must be frustrating . when did your {product} start acting up ?",
    "we're sorry about the {product} . can you tell us the error on your {product} ?",
)
FOLLOWUPS = ("it's the latest version", "i tried that already", "it started yesterday", "the {product} is new",
             "still not working", "here is the error code 42")
CLOSING_REPLIES = ("thanks , we've sent you a dm", "glad we could help", "let us know if there is anything else")


def _fmt_time(dt: datetime) -> str:
    return dt.strftime("%a %b %d %H:%M:%S %z %Y")


def generate_tweets(
    n_conversations: int = 500,
    seed: int = 0,
    specific_rate: float = 0.4,
    engage_if_specific: float = 0.75,
    engage_if_generic: float = 0.05,
    asking_rate: float = 0.35,
    asking_boost: float = 0.5,
    brand_rooted: int = 0,
    url_token: str = "https://t.co/x1",
) -> list[Tweet]:
    """Tweets of ``n_conversations`` customer-rooted threads (plus optional brand-rooted noise)."""
    rng = np.random.default_rng(seed)
    start = datetime(2017, 10, 1, 9, 0, 0, tzinfo=timezone.utc)
    tweets: list[dict] = []
    next_id = 1

    def new(author, inbound, when, text, parent):
        nonlocal next_id
        t = dict(tweet_id=str(next_id), author_id=author, inbound=inbound, created_at=when,
                 text=text, responses=[], parent=parent)
        next_id += 1
        if parent is not None:
            parent["responses"].append(t)
        tweets.append(t)
        return t

    def pick(seq):
        return seq[int(rng.integers(len(seq)))]

    for k in range(n_conversations):
        customer = f"cust{k:06d}"
        brand = pick(BRANDS)
        product, issue = pick(PRODUCTS), pick(ISSUES)
        when = start + timedelta(minutes=7 * k)
        asking = rng.random() < asking_rate
        closer = pick(ASKING_CLOSERS if asking else CLOSERS)
        text = f"{pick(OPENERS)} @{brand} my {product} {issue} {closer}".strip()
        root = new(customer, True, when, text, None)
        specific = rng.random() < specific_rate
        template = pick(SPECIFIC_REPLIES if specific else GENERIC_REPLIES)
        reply = template.format(product=product, issue=issue, url=url_token)
        when += timedelta(minutes=int(rng.integers(1, 60)))
        last = new(brand, False, when, f"@{customer} {reply}", root)
        p_engage = (engage_if_specific if specific else engage_if_generic) + (asking_boost if asking else 0.0)
        engaged = rng.random() < min(p_engage, 1.0)
        if engaged:
            for _ in range(int(rng.integers(1, 3))):
                when += timedelta(minutes=int(rng.integers(1, 30)))
                last = new(customer, True, when, f"@{brand} {pick(FOLLOWUPS).format(product=product)}", last)
                when += timedelta(minutes=int(rng.integers(1, 30)))
                last = new(brand, False, when, f"@{customer} {pick(CLOSING_REPLIES)}", last)

    for k in range(brand_rooted):
        brand = pick(BRANDS)
        when = start + timedelta(minutes=3 * k + 1)
        new(brand, False, when, "we have updated our service hours", None)

    return [
        Tweet(
            t["tweet_id"], t["author_id"], t["inbound"], t["created_at"], t["text"],
            tuple(r["tweet_id"] for r in t["responses"]),
            None if t["parent"] is None else t["parent"]["tweet_id"],
        )
        for t in tweets
    ]


def write_twcs(tweets: list[Tweet], path) -> None:
    from .corpus import write_corpus

    with open(path, "w", newline="", encoding="utf-8") as fh:
        write_corpus(tweets, fh)


def generic_support_sentences(n: int = 400, seed: int = 0) -> list[str]:
    """Brand replies dominated by generic templates, for language-model fixtures."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        if rng.random() < 0.85:
            out.append(GENERIC_REPLIES[int(rng.integers(len(GENERIC_REPLIES)))].format(url="<url>"))
        else:
            t = SPECIFIC_REPLIES[int(rng.integers(len(SPECIFIC_REPLIES)))]
            out.append(t.format(product=PRODUCTS[int(rng.integers(len(PRODUCTS)))],
                                issue=ISSUES[int(rng.integers(len(ISSUES)))]))
    return out
