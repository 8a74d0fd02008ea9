"""Sentence-per-file CoNLL corpus I/O, alignment checks and deterministic splitting.

One ``.conll`` file holds exactly one sentence: one ``token<TAB>tag`` line per
token, where the tag is ``O``, ``B-<Class>`` or ``I-<Class>``.  On input any
run of whitespace separates columns and extra middle columns (e.g. POS) are
tolerated; on output a single TAB is used and middle columns are dropped.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Sequence


class EntityClass(str, Enum):
    """The ten annotation classes plus the synthetic conflict class ``X``.

    ``X`` is never produced by the rule engine; it only appears in the output
    of pessimistic prediction consolidation.
    """

    HAUPTAKTEUR = "Hauptakteur"
    ERGEBNISEMPFAENGER = "Ergebnisempfaenger"
    MITWIRKENDER = "Mitwirkender"
    AKTION = "Aktion"
    DOKUMENT = "Dokument"
    SIGNALWORT = "Signalwort"
    BEDINGUNG = "Bedingung"
    FRIST = "Frist"
    DATENFELD = "Datenfeld"
    HANDLUNGSGRUNDLAGE = "Handlungsgrundlage"
    CONFLICT = "X"


#: The ten real annotation classes, in canonical order (``X`` excluded).
REAL_CLASSES: tuple[EntityClass, ...] = tuple(
    c for c in EntityClass if c is not EntityClass.CONFLICT
)

_CLASS_BY_NAME = {c.value: c for c in EntityClass}


class CorpusError(Exception):
    """Base class for corpus parsing and validation failures."""


class MalformedLine(CorpusError):
    def __init__(self, line_no: int, line: str):
        super().__init__(f"line {line_no}: not a 'token tag' line: {line!r}")
        self.line_no = line_no
        self.line = line


class UnknownClass(CorpusError):
    def __init__(self, tag: str, line_no: int):
        super().__init__(f"line {line_no}: unknown entity class in tag {tag!r}")
        self.tag = tag
        self.line_no = line_no


class EmptyDocument(CorpusError):
    def __init__(self, doc_id: str = ""):
        super().__init__(f"document {doc_id!r} contains no tokens")
        self.doc_id = doc_id


class MultipleSentences(CorpusError):
    def __init__(self, doc_id: str, line_no: int):
        super().__init__(
            f"document {doc_id!r}: second sentence starts at line {line_no} "
            "(one sentence per file)"
        )
        self.doc_id = doc_id
        self.line_no = line_no


class TooFewDocuments(CorpusError):
    def __init__(self, count: int, minimum: int = 3):
        super().__init__(f"need at least {minimum} documents to split, got {count}")
        self.count = count


class AlignmentError(CorpusError):
    """Gold and prediction do not share the same token sequence."""


class LengthMismatch(AlignmentError):
    def __init__(self, gold_len: int, pred_len: int):
        super().__init__(f"token count differs: gold={gold_len}, pred={pred_len}")
        self.gold_len = gold_len
        self.pred_len = pred_len


class TokenMismatch(AlignmentError):
    def __init__(self, position: int, gold_text: str, pred_text: str):
        super().__init__(
            f"token {position} differs: gold={gold_text!r}, pred={pred_text!r}"
        )
        self.position = position
        self.gold_text = gold_text
        self.pred_text = pred_text


@dataclass(frozen=True)
class Token:
    """One whitespace-free token at a fixed position within its sentence."""

    text: str
    index: int

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("token text must be non-empty")
        if any(ch.isspace() for ch in self.text):
            raise ValueError(f"token text contains whitespace: {self.text!r}")
        if self.index < 0:
            raise ValueError(f"token index must be >= 0, got {self.index}")


@dataclass(frozen=True)
class IOBTag:
    """One IOB tag: ``O``, or ``B``/``I`` carrying an entity class."""

    prefix: str  # "O", "B" or "I"
    entity_class: EntityClass | None = None

    def __post_init__(self) -> None:
        if self.prefix not in ("O", "B", "I"):
            raise ValueError(f"invalid IOB prefix {self.prefix!r}")
        if self.prefix == "O" and self.entity_class is not None:
            raise ValueError("O tag cannot carry an entity class")
        if self.prefix != "O" and self.entity_class is None:
            raise ValueError(f"{self.prefix}- tag needs an entity class")

    def __str__(self) -> str:
        if self.prefix == "O":
            return "O"
        assert self.entity_class is not None
        return f"{self.prefix}-{self.entity_class.value}"


OUTSIDE = IOBTag("O")


def begin(entity_class: EntityClass) -> IOBTag:
    return IOBTag("B", entity_class)


def inside(entity_class: EntityClass) -> IOBTag:
    return IOBTag("I", entity_class)


_TAG_RE = re.compile(r"^(B|I)-(.+)$")


def parse_tag(text: str, line_no: int = 0) -> IOBTag:
    """Parse a serialized IOB tag.

    Raises :class:`MalformedLine` when the string is not structurally an IOB
    tag and :class:`UnknownClass` when the class name is not one of the
    eleven known values.
    """
    if text == "O":
        return OUTSIDE
    m = _TAG_RE.match(text)
    if m is None:
        raise MalformedLine(line_no, text)
    cls = _CLASS_BY_NAME.get(m.group(2))
    if cls is None:
        raise UnknownClass(text, line_no)
    return IOBTag(m.group(1), cls)


@dataclass(frozen=True)
class Document:
    """One sentence: parallel token and tag sequences plus a stable id.

    ``extra_cols`` keeps any middle columns found on parse (one tuple per
    token); it is carried along for inspection but excluded from equality,
    so the write/parse round-trip law holds for every document.
    """

    doc_id: str
    tokens: tuple[Token, ...]
    tags: tuple[IOBTag, ...]
    extra_cols: tuple[tuple[str, ...], ...] | None = field(
        default=None, compare=False
    )

    def __post_init__(self) -> None:
        if not self.tokens:
            raise EmptyDocument(self.doc_id)
        if len(self.tokens) != len(self.tags):
            raise ValueError(
                f"document {self.doc_id!r}: {len(self.tokens)} tokens "
                f"vs {len(self.tags)} tags"
            )
        for pos, token in enumerate(self.tokens):
            if token.index != pos:
                raise ValueError(
                    f"document {self.doc_id!r}: token index {token.index} "
                    f"at position {pos}"
                )

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def token_texts(self) -> tuple[str, ...]:
        return tuple(t.text for t in self.tokens)

    def with_tags(self, tags: Sequence[IOBTag]) -> "Document":
        """Copy of this document carrying a different tag sequence."""
        return Document(self.doc_id, self.tokens, tuple(tags))


def make_document(
    doc_id: str, token_texts: Sequence[str], tags: Sequence[IOBTag]
) -> Document:
    """Build a Document from plain token strings, assigning positions."""
    tokens = tuple(Token(text, i) for i, text in enumerate(token_texts))
    return Document(doc_id, tokens, tuple(tags))


def parse_conll(text: str, doc_id: str) -> Document:
    """Parse one sentence-per-file CoNLL document.

    Column 1 is the token, the last column the IOB tag; middle columns are
    kept in ``extra_cols``.  A blank line ends the sentence; any further
    non-blank line raises :class:`MultipleSentences`.
    """
    tokens: list[str] = []
    tags: list[IOBTag] = []
    extras: list[tuple[str, ...]] = []
    sentence_done = False
    for line_no, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            if tokens:
                sentence_done = True
            continue
        if sentence_done:
            raise MultipleSentences(doc_id, line_no)
        cols = line.split()
        if len(cols) < 2:
            raise MalformedLine(line_no, line)
        tokens.append(cols[0])
        tags.append(parse_tag(cols[-1], line_no))
        extras.append(tuple(cols[1:-1]))
    if not tokens:
        raise EmptyDocument(doc_id)
    return Document(
        doc_id,
        tuple(Token(text, i) for i, text in enumerate(tokens)),
        tuple(tags),
        extra_cols=tuple(extras) if any(extras) else None,
    )


def write_conll(doc: Document) -> str:
    """Serialize a document: one ``token<TAB>tag`` line per token, trailing LF."""
    return "".join(f"{t.text}\t{tag}\n" for t, tag in zip(doc.tokens, doc.tags))


def validate_alignment(gold: Document, pred: Document) -> None:
    """Check that gold and prediction share the same token text sequence.

    Tags are irrelevant here.  Raises :class:`LengthMismatch` or
    :class:`TokenMismatch`.
    """
    if len(gold) != len(pred):
        raise LengthMismatch(len(gold), len(pred))
    for g, p in zip(gold.tokens, pred.tokens):
        if g.text != p.text:
            raise TokenMismatch(g.index, g.text, p.text)


@dataclass(frozen=True)
class SplitConfig:
    """Ratios and seed for the deterministic train/dev/test split."""

    train_ratio: float = 0.6
    dev_ratio: float = 0.2
    test_ratio: float = 0.2
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("train_ratio", "dev_ratio", "test_ratio"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ValueError(f"{name} must be in (0, 1), got {value}")
        total = self.train_ratio + self.dev_ratio + self.test_ratio
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"ratios must sum to 1, got {total}")


_MASK64 = (1 << 64) - 1


def _splitmix64(seed: int) -> Iterator[int]:
    """Endless stream of 64-bit values (splitmix64), fixed across platforms."""
    state = seed & _MASK64
    while True:
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        yield z ^ (z >> 31)


def split_corpus(
    docs: Sequence[Document], cfg: SplitConfig
) -> tuple[list[Document], list[Document], list[Document]]:
    """Partition documents into (train, dev, test) deterministically.

    Documents are ordered by id, shuffled by a Fisher-Yates pass driven by a
    splitmix64 stream seeded with ``cfg.seed``, and cut at
    ``floor(n*train_ratio)`` and ``floor(n*(train_ratio+dev_ratio))``.  The
    same inputs and seed always yield the same partition.
    """
    if len(docs) < 3:
        raise TooFewDocuments(len(docs))
    ordered = sorted(docs, key=lambda d: d.doc_id)
    rng = _splitmix64(cfg.seed)
    for i in range(len(ordered) - 1, 0, -1):
        j = next(rng) % (i + 1)
        ordered[i], ordered[j] = ordered[j], ordered[i]
    n = len(ordered)
    cut1 = math.floor(n * cfg.train_ratio + 1e-9)
    cut2 = math.floor(n * (cfg.train_ratio + cfg.dev_ratio) + 1e-9)
    return ordered[:cut1], ordered[cut1:cut2], ordered[cut2:]


def read_corpus_dir(path: str | Path) -> list[Document]:
    """Read every ``*.conll`` file in a directory; the file stem is the id."""
    root = Path(path)
    docs = []
    for file in sorted(root.glob("*.conll")):
        docs.append(parse_conll(file.read_text(encoding="utf-8"), file.stem))
    return docs


def write_corpus_dir(docs: Iterable[Document], path: str | Path) -> None:
    """Write one ``<doc_id>.conll`` file per document (UTF-8, LF endings)."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    for doc in docs:
        target = root / f"{doc.doc_id}.conll"
        with open(target, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(write_conll(doc))
