"""Conversion between IOB tag sequences and token-index entity spans."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .corpus_io import OUTSIDE, EntityClass, IOBTag, begin, inside


class SpanEncodingError(Exception):
    """A span list cannot be encoded as an IOB sequence."""


class OverlappingSpans(SpanEncodingError):
    def __init__(self, first: "EntitySpan", second: "EntitySpan"):
        super().__init__(f"spans overlap: {first} and {second}")
        self.first = first
        self.second = second


class SpanOutOfRange(SpanEncodingError):
    def __init__(self, span: "EntitySpan", length: int):
        super().__init__(f"span {span} outside sentence of length {length}")
        self.span = span
        self.length = length


@dataclass(frozen=True)
class EntitySpan:
    """Half-open token-index span ``[start, end)`` of one entity class."""

    entity_class: EntityClass
    start: int
    end: int

    def __post_init__(self) -> None:
        if not 0 <= self.start < self.end:
            raise ValueError(f"need 0 <= start < end, got [{self.start}, {self.end})")

    def __str__(self) -> str:
        return f"{self.entity_class.value}[{self.start},{self.end})"

    def overlaps(self, other: "EntitySpan") -> bool:
        return self.start < other.end and other.start < self.end


def tags_to_spans(tags: Sequence[IOBTag]) -> list[EntitySpan]:
    """Decode a tag sequence into spans (lenient).

    ``B-`` always opens a new span and ``I-C`` continues an open span of
    class ``C``.  An ``I-C`` with no compatible open span (sentence-initial,
    after ``O``, or after a different class) also opens a new span, so
    decoding never fails on the loose IOB sequences external systems emit.
    """
    spans: list[EntitySpan] = []
    open_class: EntityClass | None = None
    open_start = 0

    def close(end: int) -> None:
        nonlocal open_class
        if open_class is not None:
            spans.append(EntitySpan(open_class, open_start, end))
            open_class = None

    for i, tag in enumerate(tags):
        if tag.prefix == "O":
            close(i)
        elif tag.prefix == "B" or tag.entity_class != open_class:
            close(i)
            open_class = tag.entity_class
            open_start = i
        # I- matching the open class: span continues
    close(len(tags))
    return spans


def spans_to_tags(spans: Sequence[EntitySpan], length: int) -> list[IOBTag]:
    """Encode non-overlapping spans as a strict IOB2 tag sequence."""
    ordered = sorted(spans, key=lambda s: (s.start, s.end))
    for span in ordered:
        if span.end > length:
            raise SpanOutOfRange(span, length)
    for prev, cur in zip(ordered, ordered[1:]):
        if prev.overlaps(cur):
            raise OverlappingSpans(prev, cur)
    tags: list[IOBTag] = [OUTSIDE] * length
    for span in ordered:
        tags[span.start] = begin(span.entity_class)
        for i in range(span.start + 1, span.end):
            tags[i] = inside(span.entity_class)
    return tags


def token_index_set(tags: Sequence[IOBTag], entity_class: EntityClass) -> frozenset[int]:
    """Positions whose tag carries the given class (B- and I- both count)."""
    return frozenset(
        i for i, tag in enumerate(tags) if tag.entity_class == entity_class
    )
