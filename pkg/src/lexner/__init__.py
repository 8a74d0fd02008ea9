"""Rule-based NER with token- and span-level evaluation for CoNLL corpora."""

from importlib import resources
from pathlib import Path

from .corpus_io import (
    REAL_CLASSES,
    Document,
    EntityClass,
    IOBTag,
    SplitConfig,
    Token,
    make_document,
    parse_conll,
    split_corpus,
    validate_alignment,
    write_conll,
)
from .spans import EntitySpan, spans_to_tags, tags_to_spans, token_index_set
from .rules import (
    CompiledRuleset,
    FilterSpec,
    GazetteerSpec,
    PhrasePattern,
    TokenMatcher,
    TokenPattern,
    apply_ruleset,
    build_dynamic_gazetteer,
    compile_ruleset,
    load_ruleset_file,
    resolve_overlaps,
)
from .consolidate import (
    PredictionBundle,
    consolidate_optimistic,
    consolidate_pessimistic,
    emit_iob_triple,
    validate_completion,
)
from .metrics import (
    ClassCounts,
    ClassMetrics,
    JaccardReport,
    evaluate_pairs,
    jaccard_per_doc,
    jaccard_report,
    macro_average,
    micro_average,
    prf,
    token_counts,
)

__version__ = "0.1.0"


def fixture_path(name: str = "") -> Path:
    """Filesystem path of a bundled fixture (demo rules, reference scores)."""
    root = resources.files(__name__) / "fixtures"
    return Path(str(root / name if name else root))


__all__ = [
    "REAL_CLASSES",
    "Document",
    "EntityClass",
    "IOBTag",
    "SplitConfig",
    "Token",
    "make_document",
    "parse_conll",
    "split_corpus",
    "validate_alignment",
    "write_conll",
    "EntitySpan",
    "spans_to_tags",
    "tags_to_spans",
    "token_index_set",
    "CompiledRuleset",
    "FilterSpec",
    "GazetteerSpec",
    "PhrasePattern",
    "TokenMatcher",
    "TokenPattern",
    "apply_ruleset",
    "build_dynamic_gazetteer",
    "compile_ruleset",
    "load_ruleset_file",
    "resolve_overlaps",
    "PredictionBundle",
    "consolidate_optimistic",
    "consolidate_pessimistic",
    "emit_iob_triple",
    "validate_completion",
    "ClassCounts",
    "ClassMetrics",
    "JaccardReport",
    "evaluate_pairs",
    "jaccard_per_doc",
    "jaccard_report",
    "macro_average",
    "micro_average",
    "prf",
    "token_counts",
    "fixture_path",
]
