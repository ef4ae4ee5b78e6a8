"""Binary and ARPA serialization for :class:`KNModel`.

Binary layout (little-endian)::

    b"ENLM"  u16 version  u8 order  u8 flags  u32 vocab_size
    vocab_size x (u16 byte_length, utf-8 bytes)
    order x 3 f64 discounts
    per order n = 1..order:
        u64 count
        count*n u32 word ids      (rows sorted)
        count f64 ln-probabilities
        count f64 ln-backoffs
    b"MLNE"
"""

from __future__ import annotations

import math
import struct
from typing import IO

import numpy as np

from ..text import START
from .model import SPECIALS, KNModel

MAGIC = b"ENLM"
TRAILER = b"MLNE"
VERSION = 1
ARPA_NEVER = -99.0
_LN10 = math.log(10.0)


class ModelFormatError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


def dumps(model: KNModel) -> bytes:
    parts = [MAGIC, struct.pack("<HBBI", VERSION, model.order, int(model.mle), len(model.vocab))]
    for w in model.vocab:
        b = w.encode("utf-8")
        parts.append(struct.pack("<H", len(b)) + b)
    for d in model.discounts:
        parts.append(struct.pack("<3d", *d))
    for n in range(1, model.order + 1):
        keys = sorted(model.entries[n])
        parts.append(struct.pack("<Q", len(keys)))
        ids = np.asarray(keys, dtype="<u4").reshape(len(keys), n)
        vals = np.asarray([model.entries[n][k] for k in keys], dtype="<f8").reshape(len(keys), 2)
        parts.append(ids.tobytes())
        parts.append(np.ascontiguousarray(vals[:, 0]).tobytes())
        parts.append(np.ascontiguousarray(vals[:, 1]).tobytes())
    parts.append(TRAILER)
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise ModelFormatError(f"truncated model file while reading {what}", self.pos)
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def loads(data: bytes) -> KNModel:
    r = _Reader(data)
    if r.take(4, "magic") != MAGIC:
        raise ModelFormatError("not an ENLM model file (bad magic)", 0)
    version, order, flags, vocab_size = r.unpack("<HBBI", "header")
    if version != VERSION:
        raise ModelFormatError(f"unsupported model version {version} (expected {VERSION})", 4)
    if not 1 <= order <= 6:
        raise ModelFormatError(f"invalid order {order}", 6)
    vocab = []
    for _ in range(vocab_size):
        (length,) = r.unpack("<H", "vocabulary")
        start = r.pos
        try:
            vocab.append(r.take(length, "vocabulary").decode("utf-8"))
        except UnicodeDecodeError:
            raise ModelFormatError("vocabulary entry is not valid utf-8", start) from None
    if tuple(vocab[:3]) != SPECIALS:
        raise ModelFormatError("vocabulary does not start with the special tokens", 12)
    discounts = [r.unpack("<3d", "discounts") for _ in range(order)]
    entries = {}
    for n in range(1, order + 1):
        (count,) = r.unpack("<Q", f"order-{n} count")
        at = r.pos
        ids = np.frombuffer(r.take(4 * n * count, f"order-{n} ids"), dtype="<u4").reshape(count, n)
        if count and int(ids.max()) >= vocab_size:
            raise ModelFormatError(f"order-{n} word id out of range", at)
        lp = np.frombuffer(r.take(8 * count, f"order-{n} probabilities"), dtype="<f8")
        lb = np.frombuffer(r.take(8 * count, f"order-{n} backoffs"), dtype="<f8")
        entries[n] = {
            tuple(int(i) for i in row): (float(p), float(b)) for row, p, b in zip(ids.tolist(), lp, lb)
        }
    if r.take(4, "trailer") != TRAILER:
        raise ModelFormatError("missing trailer", r.pos - 4)
    if r.pos != len(data):
        raise ModelFormatError("trailing bytes after model", r.pos)
    return KNModel(order, vocab, entries, discounts, mle=bool(flags & 1))


def save_model(model: KNModel, sink: IO[bytes] | str) -> None:
    data = dumps(model)
    if isinstance(sink, (str, bytes)) or hasattr(sink, "__fspath__"):
        with open(sink, "wb") as fh:
            fh.write(data)
    else:
        sink.write(data)


def load_model(source: IO[bytes] | str) -> KNModel:
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "rb") as fh:
            return loads(fh.read())
    return loads(source.read())


# ---------------------------------------------------------------------------
# ARPA


def _log10(x: float) -> float:
    return ARPA_NEVER if x == -math.inf else x / _LN10


def write_arpa(model: KNModel, sink: IO[str]) -> None:
    sink.write("\n\\data\\\n")
    for n in range(1, model.order + 1):
        sink.write(f"ngram {n}={len(model.entries[n])}\n")
    for n in range(1, model.order + 1):
        sink.write(f"\n\\{n}-grams:\n")
        for key in sorted(model.entries[n]):
            lp, lb = model.entries[n][key]
            words = " ".join(model.vocab[i] for i in key)
            if n < model.order:
                sink.write(f"{_log10(lp)!r}\t{words}\t{_log10(lb)!r}\n")
            else:
                sink.write(f"{_log10(lp)!r}\t{words}\n")
    sink.write("\n\\end\\\n")


def read_arpa(source: IO[str]) -> KNModel:
    lines = iter(enumerate(source, start=1))
    declared: dict[int, int] = {}
    for lineno, line in lines:
        if line.strip() == "\\data\\":
            break
    else:
        raise ModelFormatError("no \\data\\ header in ARPA file", 0)
    for lineno, line in lines:
        s = line.strip()
        if not s:
            if declared:
                break
            continue
        if not s.startswith("ngram "):
            raise ModelFormatError(f"line {lineno}: expected 'ngram N=count'", lineno)
        n, c = s[6:].split("=")
        declared[int(n)] = int(c)
    order = max(declared)
    raw: dict[int, list[tuple[tuple[str, ...], float, float]]] = {n: [] for n in declared}
    current = None
    for lineno, line in lines:
        s = line.strip()
        if not s:
            continue
        if s == "\\end\\":
            break
        if s.startswith("\\") and s.endswith("-grams:"):
            current = int(s[1:-7])
            continue
        if current is None:
            raise ModelFormatError(f"line {lineno}: n-gram outside a section", lineno)
        fields = s.split("\t") if "\t" in s else s.split()
        if "\t" in s:
            lp, words = float(fields[0]), tuple(fields[1].split())
            lb = float(fields[2]) if len(fields) > 2 else 0.0
        else:
            lp = float(fields[0])
            words = tuple(fields[1 : 1 + current])
            lb = float(fields[1 + current]) if len(fields) > 1 + current else 0.0
        if len(words) != current:
            raise ModelFormatError(f"line {lineno}: expected {current} words", lineno)
        raw[current].append((words, lp, lb))
    for n, c in declared.items():
        if len(raw[n]) != c:
            raise ModelFormatError(f"order {n}: header declares {c} n-grams, found {len(raw[n])}", 0)

    words = sorted({g[0] for g, _, _ in raw[1]} - set(SPECIALS))
    vocab = list(SPECIALS) + words
    ids = {w: i for i, w in enumerate(vocab)}
    entries: dict[int, dict] = {n: {} for n in range(1, order + 1)}
    for n, rows in raw.items():
        for g, lp, lb in rows:
            ln_p = -math.inf if (lp <= ARPA_NEVER) else lp * _LN10
            ln_b = -math.inf if (lb <= ARPA_NEVER) else lb * _LN10
            entries[n][tuple(ids[w] for w in g)] = (ln_p, ln_b)
    if (ids[START],) not in entries[1]:
        entries[1][(ids[START],)] = (-math.inf, 0.0)
    if (0,) not in entries[1]:
        raise ModelFormatError("ARPA model has no <unk> unigram", 0)
    return KNModel(order, vocab, entries, [(math.nan,) * 3] * order)
