"""Validation of generative completions and per-class prediction merging.

Each sentence gets one prompt per real class; accepted completions become
candidate tag sequences collected in a :class:`PredictionBundle`.  Two
consolidation schemes merge a bundle into a single tag sequence:

* pessimistic: a token predicted with two or more distinct classes across
  candidates gets the synthetic conflict class ``X``;
* optimistic: when the gold class is among a token's predicted options, the
  gold class wins; otherwise the pessimistic rule applies.  This needs the
  gold tags and is therefore an evaluation upper bound, not a system output.

Both schemes work per token position and re-derive B-/I- prefixes by strict
IOB2 encoding of the resulting class runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus_io import (
    OUTSIDE,
    AlignmentError,
    Document,
    EntityClass,
    IOBTag,
    begin,
    inside,
    make_document,
    parse_tag,
    CorpusError,
)


class CompletionRejected(Exception):
    """A completion failed validation; recorded, never fatal."""

    reason = "rejected"


class TooLong(CompletionRejected):
    reason = "too-long"

    def __init__(self, length: int, limit: float):
        super().__init__(f"completion has {length} chars, limit {limit:.0f}")


class TokenSequenceMismatch(CompletionRejected):
    reason = "token-mismatch"

    def __init__(self, detail: str = "completion tokens differ from input"):
        super().__init__(detail)


class UnparseableAnnotation(CompletionRejected):
    reason = "unparseable"

    def __init__(self, piece: str):
        super().__init__(f"cannot interpret annotated token {piece!r}")
        self.piece = piece


@dataclass(frozen=True)
class PredictionBundle:
    """Per-class candidate tag sequences for one sentence.

    Keys are real classes only and every candidate is exactly as long as the
    token sequence; the conflict class ``X`` never occurs in candidates (it
    is produced, not consumed, by consolidation).
    """

    doc_id: str
    tokens: tuple[str, ...]
    per_class: Mapping[EntityClass, tuple[tuple[IOBTag, ...], ...]]

    def __post_init__(self) -> None:
        if not self.tokens:
            raise ValueError("bundle needs a non-empty token sequence")
        for cls, candidates in self.per_class.items():
            if cls is EntityClass.CONFLICT:
                raise ValueError("bundle keys must be real classes, not X")
            for candidate in candidates:
                if len(candidate) != len(self.tokens):
                    raise ValueError(
                        f"candidate for {cls.value} has {len(candidate)} tags "
                        f"for {len(self.tokens)} tokens"
                    )
                if any(t.entity_class is EntityClass.CONFLICT for t in candidate):
                    raise ValueError("candidates must not contain class X")

    def candidates(self) -> list[tuple[IOBTag, ...]]:
        """All candidate sequences across classes, in stable class order."""
        out: list[tuple[IOBTag, ...]] = []
        for cls in sorted(self.per_class, key=lambda c: c.value):
            out.extend(self.per_class[cls])
        return out


def _parse_piece(piece: str) -> tuple[str, IOBTag]:
    """Split one whitespace-delimited completion piece into (token, tag).

    ``token/TAG`` carries an annotation (last slash splits); a bare token
    means ``O``.  A trailing part that looks like a B-/I- annotation but
    names an unknown class, or names ``X``, is unparseable rather than a
    funny token.
    """
    head, slash, tail = piece.rpartition("/")
    if not slash:
        return piece, OUTSIDE
    if tail == "O":
        return head, OUTSIDE
    if tail.startswith(("B-", "I-")):
        try:
            tag = parse_tag(tail)
        except CorpusError:
            raise UnparseableAnnotation(piece) from None
        if tag.entity_class is EntityClass.CONFLICT:
            raise UnparseableAnnotation(piece)
        return head, tag
    return piece, OUTSIDE  # slash belongs to the token itself


def validate_completion(
    input_tokens: Sequence[str],
    completion_text: str,
    max_len_factor: float = 3.0,
) -> list[IOBTag]:
    """Check one raw completion and extract its tag sequence.

    Accepted iff the completion is at most ``max_len_factor`` times the input
    sentence's character length and reproduces the input tokens exactly.
    Raises a :class:`CompletionRejected` subclass otherwise.
    """
    limit = max_len_factor * len(" ".join(input_tokens))
    if len(completion_text) > limit:
        raise TooLong(len(completion_text), limit)
    tokens: list[str] = []
    tags: list[IOBTag] = []
    for piece in completion_text.split():
        token, tag = _parse_piece(piece)
        tokens.append(token)
        tags.append(tag)
    if tokens != list(input_tokens):
        raise TokenSequenceMismatch(
            f"completion has {len(tokens)} tokens vs {len(input_tokens)} input "
            "tokens or differing texts"
        )
    return tags


def _encode_runs(token_classes: Sequence[EntityClass | None]) -> list[IOBTag]:
    """Strict IOB2 tags from a per-token class assignment (None = outside)."""
    tags: list[IOBTag] = []
    previous: EntityClass | None = None
    for cls in token_classes:
        if cls is None:
            tags.append(OUTSIDE)
        elif cls is previous:
            tags.append(inside(cls))
        else:
            tags.append(begin(cls))
        previous = cls
    return tags


def _predicted_classes(
    bundle: PredictionBundle,
) -> list[set[EntityClass | None]]:
    """Per position: the set of predicted options (None stands for O).

    A position no candidate covers (i.e. an empty bundle) has ``{None}``.
    """
    options: list[set[EntityClass | None]] = [set() for _ in bundle.tokens]
    for candidate in bundle.candidates():
        for i, tag in enumerate(candidate):
            options[i].add(tag.entity_class)
    for position in options:
        if not position:
            position.add(None)
    return options


def _pessimistic_class(options: set[EntityClass | None]) -> EntityClass | None:
    real = {cls for cls in options if cls is not None}
    if not real:
        return None
    if len(real) == 1:
        return next(iter(real))
    return EntityClass.CONFLICT


def consolidate_pessimistic(bundle: PredictionBundle) -> list[IOBTag]:
    """Merge candidates; conflicting per-token classes collapse to ``X``.

    A pure function of the bundle: gold tags are never consulted.
    """
    options = _predicted_classes(bundle)
    return _encode_runs([_pessimistic_class(opts) for opts in options])


def consolidate_optimistic(
    bundle: PredictionBundle, gold: Sequence[IOBTag]
) -> list[IOBTag]:
    """Merge candidates, preferring the gold class wherever it was an option."""
    if len(gold) != len(bundle.tokens):
        raise AlignmentError(
            f"gold has {len(gold)} tags for {len(bundle.tokens)} tokens"
        )
    options = _predicted_classes(bundle)
    token_classes: list[EntityClass | None] = []
    for opts, gold_tag in zip(options, gold):
        gold_class = gold_tag.entity_class
        if gold_class in opts:
            token_classes.append(gold_class)
        else:
            token_classes.append(_pessimistic_class(opts))
    return _encode_runs(token_classes)


def emit_iob_triple(
    bundle: PredictionBundle, gold: Sequence[IOBTag]
) -> tuple[Document, Document, Document]:
    """(gold, optimistic, pessimistic) documents over the bundle's tokens."""
    gold_doc = make_document(bundle.doc_id, bundle.tokens, gold)
    opt_doc = gold_doc.with_tags(consolidate_optimistic(bundle, gold))
    pes_doc = gold_doc.with_tags(consolidate_pessimistic(bundle))
    return gold_doc, opt_doc, pes_doc


# ---------------------------------------------------------------------------
# Completions directory layout: <doc_id>.<ClassName>.<k>.txt
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Rejection:
    """One rejected completion: what was thrown away and why."""

    doc_id: str
    entity_class: EntityClass
    reason: str


def read_completion_files(
    path: str | Path,
) -> dict[str, list[tuple[EntityClass, str]]]:
    """Map doc_id to its (class, completion text) list from a directory.

    Files are named ``<doc_id>.<ClassName>.<k>.txt``; names that do not
    follow the scheme raise ValueError.  Iteration order is sorted by
    filename, so downstream results are order-independent.
    """
    by_doc: dict[str, list[tuple[EntityClass, str]]] = {}
    for file in sorted(Path(path).glob("*.txt")):
        parts = file.stem.rsplit(".", 2)
        if len(parts) != 3:
            raise ValueError(
                f"completion file {file.name!r} is not <doc_id>.<Class>.<k>.txt"
            )
        doc_id, class_name, _k = parts
        try:
            cls = EntityClass(class_name)
        except ValueError:
            raise ValueError(
                f"completion file {file.name!r} names unknown class {class_name!r}"
            ) from None
        if cls is EntityClass.CONFLICT:
            raise ValueError(f"completion file {file.name!r} uses class X")
        by_doc.setdefault(doc_id, []).append(
            (cls, file.read_text(encoding="utf-8"))
        )
    return by_doc


def build_bundle(
    doc_id: str,
    tokens: Sequence[str],
    completions: Iterable[tuple[EntityClass, str]],
    max_len_factor: float = 3.0,
) -> tuple[PredictionBundle, list[Rejection]]:
    """Validate completions into a bundle, recording every rejection."""
    per_class: dict[EntityClass, list[tuple[IOBTag, ...]]] = {}
    rejections: list[Rejection] = []
    for cls, text in completions:
        try:
            tags = validate_completion(tokens, text, max_len_factor)
        except CompletionRejected as err:
            rejections.append(Rejection(doc_id, cls, err.reason))
            continue
        per_class.setdefault(cls, []).append(tuple(tags))
    bundle = PredictionBundle(
        doc_id,
        tuple(tokens),
        {cls: tuple(cands) for cls, cands in per_class.items()},
    )
    return bundle, rejections
