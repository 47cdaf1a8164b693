"""EHR preprocessing: classify columns, tokenize text, chain blocks.

A record is a list of named columns.  Classification rules split the
columns into identifiable ones (held back for sealing) and the rest.
Each remaining column's text is tokenized into blocks -- one main word
per block, preceded by whatever stopwords ran up to it -- and a block
sequence becomes a pointer chain: every block gets a fresh 128-bit
pointer and records the pointer of its successor.  The chain's triples
are stored in a random order; only the head pointer, which is what gets
sealed per level, reveals where a chain starts.
"""

from __future__ import annotations

import enum
import fnmatch
import random
import uuid

from dataclasses import dataclass, replace
from importlib import resources

from .errors import EtenonError

Pointer = uuid.UUID


class TenonError(EtenonError):
    """Bad record data, rule configuration, or chain structure."""


class Classification(enum.Enum):
    IDENTIFIABLE = "identifiable"
    NONPII = "nonpii"


@dataclass(frozen=True)
class EhrColumn:
    name: str
    value: str
    label: Classification | None = None
    atomic: bool = False


@dataclass(frozen=True)
class EhrRecord:
    columns: tuple[EhrColumn, ...]

    def column(self, name: str) -> EhrColumn:
        for col in self.columns:
            if col.name == name:
                return col
        raise TenonError("record has no column %r" % name)

    def identifiable(self) -> tuple[EhrColumn, ...]:
        return tuple(c for c in self.columns if c.label is Classification.IDENTIFIABLE)

    def nonpii(self) -> tuple[EhrColumn, ...]:
        return tuple(c for c in self.columns if c.label is Classification.NONPII)


def record_from_json(obj) -> EhrRecord:
    try:
        columns = tuple(
            EhrColumn(name=str(c["name"]), value=str(c["value"])) for c in obj
        )
    except (KeyError, TypeError) as exc:
        raise TenonError("malformed record document: %s" % exc) from None
    names = [c.name for c in columns]
    if len(set(names)) != len(names):
        raise TenonError("record repeats a column name")
    return EhrRecord(columns=columns)


def record_to_json(record: EhrRecord) -> list:
    return [{"name": c.name, "value": c.value} for c in record.columns]


# ----------------------------------------------------------------------
# classification


_LABELS = {
    "identifiable": (Classification.IDENTIFIABLE, False),
    "nonpii": (Classification.NONPII, False),
    "atomic": (Classification.NONPII, True),
}


class ClassificationRules:
    """Ordered column-name patterns; first match wins, default catches.

    The file form is ``pattern = label`` per line, ``#`` comments, with
    labels ``identifiable``, ``nonpii`` or ``atomic`` (non-PII text that
    must never be split into blocks).  Patterns are shell-style and
    matched case-insensitively.  The ``default`` pattern, when present,
    labels anything nothing else matched.
    """

    def __init__(self, rules, default: str | None):
        for _, label in rules:
            if label not in _LABELS:
                raise TenonError("unknown classification label %r" % label)
        if default is not None and default not in _LABELS:
            raise TenonError("unknown classification label %r" % default)
        self.rules = tuple(rules)
        self.default = default

    @classmethod
    def parse(cls, text: str) -> "ClassificationRules":
        rules = []
        default = None
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise TenonError("rules line %d has no '='" % lineno)
            pattern, label = (part.strip() for part in line.split("=", 1))
            if not pattern:
                raise TenonError("rules line %d has an empty pattern" % lineno)
            if pattern == "default":
                default = label
            else:
                rules.append((pattern, label))
        return cls(rules, default)

    @classmethod
    def load(cls, path) -> "ClassificationRules":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.parse(fh.read())

    @classmethod
    def shipped(cls) -> "ClassificationRules":
        text = resources.files("etenon").joinpath("data/classify_rules.cfg").read_text()
        return cls.parse(text)

    def label_for(self, name: str) -> tuple[Classification, bool]:
        lowered = name.lower()
        for pattern, label in self.rules:
            if fnmatch.fnmatchcase(lowered, pattern.lower()):
                return _LABELS[label]
        if self.default is not None:
            return _LABELS[self.default]
        raise TenonError("no classification rule matches column %r" % name)


def classify(record: EhrRecord, rules: ClassificationRules) -> EhrRecord:
    """Return the record with every column labelled."""
    columns = []
    for col in record.columns:
        label, atomic = rules.label_for(col.name)
        columns.append(replace(col, label=label, atomic=atomic))
    return EhrRecord(columns=tuple(columns))


# ----------------------------------------------------------------------
# tokenization


def load_stopwords(path=None) -> frozenset[str]:
    """One word per line; the shipped list is used when no path is given."""
    if path is None:
        text = resources.files("etenon").joinpath("data/stopwords.txt").read_text()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    words = frozenset(
        w.strip().lower() for w in text.splitlines() if w.strip() and not w.startswith("#")
    )
    return words


def normalize(text: str) -> str:
    return " ".join(text.split())


def tokenize(text: str, stopwords) -> list[str]:
    """Split normalized text into blocks of one main word plus the
    stopwords that precede it.

    A run of stopwords with no following main word is folded into the
    final block (or becomes the only block); such a block ends in a
    stopword, which :func:`trailing_stopword` detects.
    """
    words = normalize(text).split()
    blocks: list[str] = []
    pending: list[str] = []
    for word in words:
        if word.lower() in stopwords:
            pending.append(word)
        else:
            blocks.append(" ".join(pending + [word]))
            pending = []
    if pending:
        tail = " ".join(pending)
        if blocks:
            blocks[-1] = blocks[-1] + " " + tail
        else:
            blocks.append(tail)
    return blocks


def trailing_stopword(blocks, stopwords) -> bool:
    """True when the final block ends in a stopword (degenerate tail)."""
    if not blocks:
        return False
    last = blocks[-1].split()
    return bool(last) and last[-1].lower() in stopwords


def is_tokenizable(column: EhrColumn) -> bool:
    """Multi-word values split into blocks unless the column is atomic."""
    return not column.atomic and len(column.value.split()) >= 2


def column_blocks(column: EhrColumn, stopwords) -> list[str]:
    """Blocks for one column: tokenized text or the value as one block."""
    if is_tokenizable(column):
        return tokenize(column.value, stopwords)
    return [normalize(column.value)]


# ----------------------------------------------------------------------
# pointer chains


def make_pointer(rng=None) -> Pointer:
    """Fresh 128-bit pointer.

    The default source is uuid4 (operating-system randomness).  Passing
    a seeded ``random.Random`` derives the pointer from it instead so
    scenario runs can be reproduced byte for byte.
    """
    if rng is None:
        return uuid.uuid4()
    return uuid.UUID(int=rng.getrandbits(128), version=4)


@dataclass(frozen=True)
class Triple:
    pointer: Pointer
    block: str
    next: Pointer | None


@dataclass(frozen=True)
class TenonStructure:
    """A pointer chain in its randomized storage order."""

    head: Pointer
    triples: tuple[Triple, ...]

    def chain_order(self) -> tuple[Triple, ...]:
        blocks, complete = reconstruct(self.head, self.triples)
        if not complete or len(blocks) != len(self.triples):
            raise TenonError("structure does not form a single chain")
        by_pointer = {t.pointer: t for t in self.triples}
        out = []
        cursor = self.head
        while cursor is not None:
            t = by_pointer[cursor]
            out.append(t)
            cursor = t.next
        return tuple(out)


def build_structure(blocks, rng=None) -> TenonStructure:
    """Chain the blocks in order and shuffle the storage layout."""
    blocks = list(blocks)
    if not blocks:
        raise TenonError("cannot build a structure from zero blocks")
    pointers: list[Pointer] = []
    seen = set()
    for _ in blocks:
        ptr = make_pointer(rng)
        while ptr in seen:
            ptr = make_pointer(rng)
        seen.add(ptr)
        pointers.append(ptr)
    triples = [
        Triple(
            pointer=pointers[i],
            block=block,
            next=pointers[i + 1] if i + 1 < len(blocks) else None,
        )
        for i, block in enumerate(blocks)
    ]
    shuffler = rng if rng is not None else random.SystemRandom()
    shuffler.shuffle(triples)
    return TenonStructure(head=pointers[0], triples=tuple(triples))


def reconstruct(head: Pointer, triples) -> tuple[list[str], bool]:
    """Follow the chain from ``head`` through whatever triples exist.

    Returns the blocks in chain order and a completeness flag: True
    when a terminal marker was reached, False when the chain broke at a
    pointer with no triple (a reader holding only part of the table).
    Duplicate pointers and cycles are structural errors.
    """
    by_pointer: dict[Pointer, Triple] = {}
    for t in triples:
        if t.pointer in by_pointer:
            raise TenonError("duplicate pointer %s" % t.pointer)
        by_pointer[t.pointer] = t
    blocks: list[str] = []
    visited: set[Pointer] = set()
    cursor: Pointer | None = head
    while cursor is not None:
        if cursor in visited:
            raise TenonError("pointer chain contains a cycle at %s" % cursor)
        visited.add(cursor)
        t = by_pointer.get(cursor)
        if t is None:
            return blocks, False
        blocks.append(t.block)
        cursor = t.next
    return blocks, True
