"""Token-level P/R/F1 and span-level Jaccard statistics over aligned documents.

Token metrics compare per-token class identity (B-/I- prefixes collapsed,
``O`` is not a class).  The Jaccard suite scores one class in one document as
``|G∩P| / |G∪P|`` over token-index sets and aggregates mean, median,
zero-overlap count and zero-to-total ratio across the corpus.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal, Mapping, Sequence

from .corpus_io import (
    REAL_CLASSES,
    Document,
    EntityClass,
    validate_alignment,
)
from .spans import token_index_set

#: Which documents count toward a class's Jaccard population: every document
#: where the class occurs in gold or prediction ("either", the default, so
#: hallucinated-only documents score 0), or only where it occurs in gold.
JaccardPopulation = Literal["either", "gold"]


@dataclass(frozen=True)
class ClassCounts:
    """Token-level true/false positive and false negative counts for one class."""

    entity_class: EntityClass
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn) < 0:
            raise ValueError("counts must be non-negative")

    def __add__(self, other: "ClassCounts") -> "ClassCounts":
        if other.entity_class is not self.entity_class:
            raise ValueError("cannot add counts of different classes")
        return ClassCounts(
            self.entity_class,
            self.tp + other.tp,
            self.fp + other.fp,
            self.fn + other.fn,
        )


@dataclass(frozen=True)
class ClassMetrics:
    """Precision, recall and F1 for one class (or a pooled micro average)."""

    entity_class: EntityClass | None
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class JaccardReport:
    """Per-class Jaccard statistics over a corpus of document pairs."""

    entity_class: EntityClass
    mean: float
    median: float
    zero_overlap_count: int
    total_count: int
    ratio: float
    per_doc: Mapping[str, float]


def token_counts(gold: Document, pred: Document) -> dict[EntityClass, ClassCounts]:
    """Per-class token-level counts for one aligned document pair.

    The result has an entry for every class, zero counts included, so
    aggregation and macro averaging need no special casing.
    """
    validate_alignment(gold, pred)
    tp: dict[EntityClass, int] = {c: 0 for c in EntityClass}
    fp: dict[EntityClass, int] = {c: 0 for c in EntityClass}
    fn: dict[EntityClass, int] = {c: 0 for c in EntityClass}
    for g_tag, p_tag in zip(gold.tags, pred.tags):
        g, p = g_tag.entity_class, p_tag.entity_class
        if g is not None and g is p:
            tp[g] += 1
        else:
            if g is not None:
                fn[g] += 1
            if p is not None:
                fp[p] += 1
    return {c: ClassCounts(c, tp[c], fp[c], fn[c]) for c in EntityClass}


def corpus_token_counts(
    pairs: Iterable[tuple[Document, Document]],
) -> dict[EntityClass, ClassCounts]:
    """Sum :func:`token_counts` over many (gold, pred) pairs."""
    total = {c: ClassCounts(c) for c in EntityClass}
    for gold, pred in pairs:
        for cls, counts in token_counts(gold, pred).items():
            total[cls] = total[cls] + counts
    return total


def prf(counts: ClassCounts) -> ClassMetrics:
    """Precision/recall/F1 from counts; degenerate denominators yield 0."""
    p = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    r = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return ClassMetrics(counts.entity_class, p, r, f1, counts.tp + counts.fn)


def micro_average(all_counts: Iterable[ClassCounts]) -> ClassMetrics:
    """Pool counts across classes, then apply the P/R/F1 formulas."""
    tp = fp = fn = 0
    for counts in all_counts:
        tp += counts.tp
        fp += counts.fp
        fn += counts.fn
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return ClassMetrics(None, p, r, f1, tp + fn)


def macro_average(all_metrics: Iterable[ClassMetrics]) -> float:
    """Unweighted mean of the given per-class F1 values.

    Callers pass one entry per class of interest; zero-support classes carry
    F1 = 0 and therefore pull the mean down.
    """
    values = [m.f1 for m in all_metrics]
    if not values:
        return 0.0
    return sum(values) / len(values)


def jaccard_per_doc(
    gold: Document, pred: Document, entity_class: EntityClass
) -> float | None:
    """Intersection-over-union of one class's token positions, or None.

    Returns None when neither gold nor prediction contains the class; such a
    document does not count toward the class's population.
    """
    validate_alignment(gold, pred)
    g = token_index_set(gold.tags, entity_class)
    p = token_index_set(pred.tags, entity_class)
    if not g and not p:
        return None
    return len(g & p) / len(g | p)


def _in_population(
    gold_indices: frozenset[int],
    pred_indices: frozenset[int],
    population: JaccardPopulation,
) -> bool:
    if population == "gold":
        return bool(gold_indices)
    return bool(gold_indices or pred_indices)


def jaccard_report(
    pairs: Sequence[tuple[Document, Document]],
    entity_class: EntityClass,
    population: JaccardPopulation = "either",
) -> JaccardReport:
    """Aggregate per-document Jaccard scores for one class.

    ``per_doc`` holds every counted document's score; mean and median are
    computed over exactly those values (doc-id order, so results are stable
    regardless of input order), the zero-to-total ratio over their count.
    """
    per_doc: dict[str, float] = {}
    for gold, pred in pairs:
        validate_alignment(gold, pred)
        g = token_index_set(gold.tags, entity_class)
        p = token_index_set(pred.tags, entity_class)
        if not _in_population(g, p, population):
            continue
        per_doc[gold.doc_id] = len(g & p) / len(g | p)
    values = [per_doc[doc_id] for doc_id in sorted(per_doc)]
    total = len(values)
    zero = sum(1 for v in values if v == 0.0)
    return JaccardReport(
        entity_class=entity_class,
        mean=statistics.fmean(values) if values else 0.0,
        median=statistics.median(values) if values else 0.0,
        zero_overlap_count=zero,
        total_count=total,
        ratio=zero / total if total else 0.0,
        per_doc=per_doc,
    )


@dataclass(frozen=True)
class EvaluationResult:
    """Everything one system's evaluation run produces, ready for reporting."""

    system: str
    per_class: Mapping[EntityClass, ClassMetrics]
    micro: ClassMetrics
    macro_f1: float
    conflict_class: ClassMetrics
    jaccard: Mapping[EntityClass, JaccardReport]


def evaluate_pairs(
    pairs: Sequence[tuple[Document, Document]],
    system: str,
    population: JaccardPopulation = "either",
) -> EvaluationResult:
    """Full two-level evaluation of aligned (gold, pred) document pairs.

    Micro and macro pool the ten real classes; the synthetic conflict class
    ``X`` is reported separately and never averaged in.
    """
    counts = corpus_token_counts(pairs)
    per_class = {c: prf(counts[c]) for c in REAL_CLASSES}
    return EvaluationResult(
        system=system,
        per_class=per_class,
        micro=micro_average(counts[c] for c in REAL_CLASSES),
        macro_f1=macro_average(per_class.values()),
        conflict_class=prf(counts[EntityClass.CONFLICT]),
        jaccard={
            c: jaccard_report(pairs, c, population) for c in REAL_CLASSES
        },
    )


def _metrics_to_json(m: ClassMetrics) -> dict:
    return {
        "precision": m.precision,
        "recall": m.recall,
        "f1": m.f1,
        "support": m.support,
    }


def result_to_json(result: EvaluationResult) -> dict:
    """Plain-dict form of an evaluation result (the interchange schema)."""
    return {
        "system": result.system,
        "token_metrics": {
            "per_class": {
                c.value: _metrics_to_json(m) for c, m in result.per_class.items()
            },
            "micro": _metrics_to_json(result.micro),
            "macro_f1": result.macro_f1,
            "conflict_class": _metrics_to_json(result.conflict_class),
        },
        "jaccard": {
            "per_class": {
                c.value: {
                    "mean": rep.mean,
                    "median": rep.median,
                    "zero_overlap_count": rep.zero_overlap_count,
                    "total_count": rep.total_count,
                    "ratio": rep.ratio,
                    "per_doc": dict(sorted(rep.per_doc.items())),
                }
                for c, rep in result.jaccard.items()
            }
        },
    }


def write_result(result: EvaluationResult, path: str | Path) -> None:
    """Write an evaluation result JSON file (UTF-8, sorted keys)."""
    payload = json.dumps(
        result_to_json(result), indent=2, sort_keys=True, ensure_ascii=False
    )
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(payload + "\n")
