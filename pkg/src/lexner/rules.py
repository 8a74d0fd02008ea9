"""Rule-based entity recognizer: token patterns, phrase patterns, gazetteers.

Patterns operate on surface token attributes only (text, case, affixes,
regex); no syntactic information is consulted.  All matches from all pattern
kinds are collected and then reduced to a non-overlapping span list by a
fixed policy: longest match first, then lowest priority value, then leftmost
start, then declaration order.

Quantifier matching is greedy (maximal munch for ``ONE_OR_MORE`` /
``ZERO_OR_MORE``) without backtracking; a pattern whose later step fails
after a greedy step simply does not match at that start position.  This is a
deliberate simplification that keeps matching linear and predictable.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .corpus_io import Document, EntityClass
from .spans import EntitySpan

PROVENANCES = ("static", "derived-from-dev", "derived-from-model-gazetteer")


class RulesetError(Exception):
    """Base class for ruleset compilation and loading failures."""


class BadRegex(RulesetError):
    def __init__(self, pattern_id: str, regex: str, reason: str):
        super().__init__(f"{pattern_id}: regex {regex!r} does not compile: {reason}")
        self.pattern_id = pattern_id
        self.regex = regex


class EmptyGazetteer(RulesetError):
    def __init__(self, entity_class: EntityClass):
        super().__init__(f"gazetteer for {entity_class.value} has no entries")
        self.entity_class = entity_class


class RulesetSchemaError(RulesetError):
    """A ruleset JSON document does not match the expected schema."""


class Attr(str, Enum):
    """Surface token attribute a matcher tests."""

    TEXT = "TEXT"
    LOWER = "LOWER"
    REGEX = "REGEX"
    IS_DIGIT = "IS_DIGIT"
    IS_TITLE = "IS_TITLE"
    PREFIX = "PREFIX"
    SUFFIX = "SUFFIX"
    IN_LIST = "IN_LIST"


class Quantifier(str, Enum):
    ONE = "ONE"
    OPTIONAL = "OPTIONAL"
    ONE_OR_MORE = "ONE_OR_MORE"
    ZERO_OR_MORE = "ZERO_OR_MORE"


_STRING_ATTRS = (Attr.TEXT, Attr.LOWER, Attr.REGEX, Attr.PREFIX, Attr.SUFFIX)
_BOOL_ATTRS = (Attr.IS_DIGIT, Attr.IS_TITLE)


@dataclass(frozen=True)
class TokenMatcher:
    """One step of a token pattern: attribute test plus quantifier."""

    attr: Attr
    value: str | bool | tuple[str, ...] = True
    quantifier: Quantifier = Quantifier.ONE

    def __post_init__(self) -> None:
        if self.attr in _STRING_ATTRS and not isinstance(self.value, str):
            raise ValueError(f"{self.attr.value} needs a string value")
        if self.attr in _BOOL_ATTRS and not isinstance(self.value, bool):
            raise ValueError(f"{self.attr.value} needs a boolean value")
        if self.attr is Attr.IN_LIST:
            if not isinstance(self.value, tuple) or not self.value:
                raise ValueError("IN_LIST needs a non-empty tuple of strings")


def _no_conflict_class(entity_class: EntityClass) -> None:
    if entity_class is EntityClass.CONFLICT:
        raise ValueError("the conflict class X cannot be the target of a rule")


def _check_provenance(provenance: str) -> None:
    if provenance not in PROVENANCES:
        raise ValueError(
            f"unknown provenance {provenance!r}, expected one of {PROVENANCES}"
        )


@dataclass(frozen=True)
class TokenPattern:
    """Ordered matcher sequence producing spans of one class."""

    entity_class: EntityClass
    matchers: tuple[TokenMatcher, ...]
    priority: int = 100
    provenance: str = "static"

    def __post_init__(self) -> None:
        _no_conflict_class(self.entity_class)
        _check_provenance(self.provenance)
        if not self.matchers:
            raise ValueError("token pattern needs at least one matcher")
        if not any(
            m.quantifier in (Quantifier.ONE, Quantifier.ONE_OR_MORE)
            for m in self.matchers
        ):
            raise ValueError("token pattern could match an empty span")


@dataclass(frozen=True)
class PhrasePattern:
    """Exact word-sequence pattern for one class."""

    entity_class: EntityClass
    phrase: tuple[str, ...]
    priority: int = 100
    case_sensitive: bool = True
    provenance: str = "static"

    def __post_init__(self) -> None:
        _no_conflict_class(self.entity_class)
        _check_provenance(self.provenance)
        if not self.phrase:
            raise ValueError("phrase must not be empty")
        for word in self.phrase:
            if not word or any(ch.isspace() for ch in word):
                raise ValueError(f"bad phrase token {word!r}")


@dataclass(frozen=True)
class FilterSpec:
    """Conjunction of token predicates for dynamic gazetteer construction."""

    suffix_in: tuple[str, ...] = ()
    prefix_in: tuple[str, ...] = ()
    min_length: int | None = None
    is_capitalized: bool = False
    regex: str | None = None

    def __post_init__(self) -> None:
        if not (
            self.suffix_in
            or self.prefix_in
            or self.min_length is not None
            or self.is_capitalized
            or self.regex is not None
        ):
            raise ValueError("filter needs at least one predicate")
        if self.regex is not None:
            try:
                re.compile(self.regex)
            except re.error as err:
                raise ValueError(f"filter regex {self.regex!r}: {err}") from err

    def matches(self, text: str) -> bool:
        if self.suffix_in and not any(text.endswith(s) for s in self.suffix_in):
            return False
        if self.prefix_in and not any(text.startswith(p) for p in self.prefix_in):
            return False
        if self.min_length is not None and len(text) < self.min_length:
            return False
        if self.is_capitalized and not text[:1].isupper():
            return False
        if self.regex is not None and re.fullmatch(self.regex, text) is None:
            return False
        return True


@dataclass(frozen=True)
class GazetteerSpec:
    """Word/phrase list for one class, explicit or filter-derived.

    Exactly one of ``entries`` (explicit phrases) and ``source_filter``
    (predicates applied to corpus tokens at compile time) is given.
    """

    entity_class: EntityClass
    entries: tuple[str, ...] | None = None
    source_filter: FilterSpec | None = None
    case_sensitive: bool = True
    priority: int = 100
    provenance: str = "static"

    def __post_init__(self) -> None:
        _no_conflict_class(self.entity_class)
        _check_provenance(self.provenance)
        if (self.entries is None) == (self.source_filter is None):
            raise ValueError("give exactly one of entries and source_filter")


def _make_predicate(matcher: TokenMatcher, pattern_id: str) -> Callable[[str], bool]:
    attr, value = matcher.attr, matcher.value
    if attr is Attr.TEXT:
        return lambda text: text == value
    if attr is Attr.LOWER:
        expected = str(value).lower()
        return lambda text: text.lower() == expected
    if attr is Attr.REGEX:
        try:
            compiled = re.compile(str(value))
        except re.error as err:
            raise BadRegex(pattern_id, str(value), str(err)) from err
        return lambda text: compiled.fullmatch(text) is not None
    if attr is Attr.IS_DIGIT:
        return lambda text: text.isdigit() is value
    if attr is Attr.IS_TITLE:
        return lambda text: text.istitle() is value
    if attr is Attr.PREFIX:
        return lambda text: text.startswith(str(value))
    if attr is Attr.SUFFIX:
        return lambda text: text.endswith(str(value))
    members = frozenset(value)  # IN_LIST
    return lambda text: text in members


@dataclass(frozen=True)
class _PreparedTokenPattern:
    pattern: TokenPattern
    steps: tuple[tuple[Quantifier, Callable[[str], bool]], ...]
    order: int


@dataclass(frozen=True)
class _PreparedPhrase:
    pattern: PhrasePattern
    match_words: tuple[str, ...]  # casefolded when insensitive
    order: int


@dataclass(frozen=True)
class CompiledRuleset:
    """Immutable, ready-to-apply pattern collection.

    Compiling the same inputs twice yields behaviorally identical rulesets;
    gazetteers are already expanded into phrase patterns here.
    """

    token_patterns: tuple[TokenPattern, ...]
    phrase_patterns: tuple[PhrasePattern, ...]
    _prepared_tokens: tuple[_PreparedTokenPattern, ...] = field(repr=False)
    _phrase_index: Mapping[str, tuple[_PreparedPhrase, ...]] = field(repr=False)


def build_dynamic_gazetteer(
    corpus: Sequence[Document],
    filter_spec: FilterSpec,
    entity_class: EntityClass,
    priority: int = 100,
    case_sensitive: bool = True,
    provenance: str = "derived-from-dev",
) -> list[PhrasePattern]:
    """Single-token phrase patterns from corpus tokens passing every predicate.

    Distinct matching tokens are collected over the whole corpus and emitted
    in lexicographic order, so the result is deterministic.  An empty result
    is valid.
    """
    hits = {
        token.text
        for doc in corpus
        for token in doc.tokens
        if filter_spec.matches(token.text)
    }
    return [
        PhrasePattern(entity_class, (text,), priority, case_sensitive, provenance)
        for text in sorted(hits)
    ]


def _expand_gazetteer(
    spec: GazetteerSpec, corpus: Sequence[Document] | None
) -> list[PhrasePattern]:
    if spec.source_filter is not None:
        if corpus is None:
            raise RulesetError(
                f"gazetteer for {spec.entity_class.value} is filter-based; "
                "compile_ruleset needs a corpus to expand it"
            )
        return build_dynamic_gazetteer(
            corpus,
            spec.source_filter,
            spec.entity_class,
            priority=spec.priority,
            case_sensitive=spec.case_sensitive,
            provenance=spec.provenance,
        )
    assert spec.entries is not None
    seen: set[str] = set()
    patterns: list[PhrasePattern] = []
    for entry in spec.entries:
        key = entry if spec.case_sensitive else entry.casefold()
        if key in seen:
            continue
        seen.add(key)
        patterns.append(
            PhrasePattern(
                spec.entity_class,
                tuple(entry.split()),
                spec.priority,
                spec.case_sensitive,
                spec.provenance,
            )
        )
    if not patterns:
        raise EmptyGazetteer(spec.entity_class)
    return patterns


def compile_ruleset(
    token_patterns: Sequence[TokenPattern] = (),
    phrase_patterns: Sequence[PhrasePattern] = (),
    gazetteers: Sequence[GazetteerSpec] = (),
    corpus: Sequence[Document] | None = None,
) -> CompiledRuleset:
    """Validate and index patterns; expand gazetteers into phrase patterns.

    Declaration order (token patterns, then phrase patterns, then gazetteer
    expansions) is the final tie-break during overlap resolution.  Filter
    gazetteers are expanded against ``corpus``.
    """
    order = 0
    prepared_tokens: list[_PreparedTokenPattern] = []
    for i, pattern in enumerate(token_patterns):
        pattern_id = f"token_patterns[{i}]"
        steps = tuple(
            (m.quantifier, _make_predicate(m, pattern_id)) for m in pattern.matchers
        )
        prepared_tokens.append(_PreparedTokenPattern(pattern, steps, order))
        order += 1

    all_phrases: list[PhrasePattern] = list(phrase_patterns)
    for spec in gazetteers:
        all_phrases.extend(_expand_gazetteer(spec, corpus))

    prepared_phrases: list[_PreparedPhrase] = []
    for pattern in all_phrases:
        words = (
            pattern.phrase
            if pattern.case_sensitive
            else tuple(w.casefold() for w in pattern.phrase)
        )
        prepared_phrases.append(_PreparedPhrase(pattern, words, order))
        order += 1

    prepared_tokens.sort(key=lambda p: (p.pattern.priority, p.order))
    prepared_phrases.sort(key=lambda p: (p.pattern.priority, p.order))
    index: dict[str, list[_PreparedPhrase]] = {}
    for prep in prepared_phrases:
        index.setdefault(prep.match_words[0].casefold(), []).append(prep)

    return CompiledRuleset(
        token_patterns=tuple(p.pattern for p in prepared_tokens),
        phrase_patterns=tuple(p.pattern for p in prepared_phrases),
        _prepared_tokens=tuple(prepared_tokens),
        _phrase_index={k: tuple(v) for k, v in index.items()},
    )


def _try_match(
    steps: Sequence[tuple[Quantifier, Callable[[str], bool]]],
    texts: Sequence[str],
    start: int,
) -> int | None:
    """Greedy match attempt at one start position; returns the end or None."""
    pos = start
    n = len(texts)
    for quantifier, holds in steps:
        if quantifier is Quantifier.ONE:
            if pos < n and holds(texts[pos]):
                pos += 1
            else:
                return None
        elif quantifier is Quantifier.OPTIONAL:
            if pos < n and holds(texts[pos]):
                pos += 1
        elif quantifier is Quantifier.ONE_OR_MORE:
            if not (pos < n and holds(texts[pos])):
                return None
            pos += 1
            while pos < n and holds(texts[pos]):
                pos += 1
        else:  # ZERO_OR_MORE
            while pos < n and holds(texts[pos]):
                pos += 1
    return pos


def find_matches(
    ruleset: CompiledRuleset, doc: Document
) -> list[tuple[EntitySpan, int, int]]:
    """All raw pattern matches as (span, priority, declaration order) triples."""
    texts = doc.token_texts
    n = len(texts)
    matches: list[tuple[EntitySpan, int, int]] = []
    for prep in ruleset._prepared_tokens:
        for start in range(n):
            end = _try_match(prep.steps, texts, start)
            if end is not None and end > start:
                matches.append(
                    (
                        EntitySpan(prep.pattern.entity_class, start, end),
                        prep.pattern.priority,
                        prep.order,
                    )
                )
    for start, text in enumerate(texts):
        for prep in ruleset._phrase_index.get(text.casefold(), ()):
            words = prep.match_words
            end = start + len(words)
            if end > n:
                continue
            window = texts[start:end]
            if not prep.pattern.case_sensitive:
                window = tuple(w.casefold() for w in window)
            if tuple(window) == words:
                matches.append(
                    (
                        EntitySpan(prep.pattern.entity_class, start, end),
                        prep.pattern.priority,
                        prep.order,
                    )
                )
    return matches


def resolve_overlaps(
    matches: Iterable[tuple[EntitySpan, int, int]],
) -> list[EntitySpan]:
    """Greedy reduction of arbitrary matches to a non-overlapping span list.

    Candidates are ranked longest span first, then lower priority value,
    then smaller start, then smaller declaration order; a candidate is
    accepted iff it overlaps no previously accepted span.  The result is
    sorted by start.
    """
    ranked = sorted(
        matches,
        key=lambda m: (-(m[0].end - m[0].start), m[1], m[0].start, m[2]),
    )
    accepted: list[EntitySpan] = []
    for span, _priority, _order in ranked:
        if all(not span.overlaps(other) for other in accepted):
            accepted.append(span)
    accepted.sort(key=lambda s: (s.start, s.end))
    return accepted


def apply_ruleset(ruleset: CompiledRuleset, doc: Document) -> list[EntitySpan]:
    """Match every pattern against the document and resolve overlaps.

    Gold tags on the document are ignored; only token texts matter.
    """
    return resolve_overlaps(find_matches(ruleset, doc))


# ---------------------------------------------------------------------------
# Ruleset JSON file format
# ---------------------------------------------------------------------------

_MATCHER_KEYS = {"attr", "value", "quantifier"}
_TOKEN_PATTERN_KEYS = {"class", "matchers", "priority", "provenance"}
_PHRASE_PATTERN_KEYS = {"class", "phrase", "priority", "case_sensitive", "provenance"}
_GAZETTEER_KEYS = {
    "class",
    "entries",
    "file",
    "filter",
    "case_sensitive",
    "priority",
    "provenance",
}
_FILTER_KEYS = {"suffix_in", "prefix_in", "min_length", "is_capitalized", "regex"}
_TOP_KEYS = {"token_patterns", "phrase_patterns", "gazetteers"}


@dataclass(frozen=True)
class RulesetDefinition:
    """Parsed but not yet compiled ruleset file contents."""

    token_patterns: tuple[TokenPattern, ...]
    phrase_patterns: tuple[PhrasePattern, ...]
    gazetteers: tuple[GazetteerSpec, ...]

    def compile(self, corpus: Sequence[Document] | None = None) -> CompiledRuleset:
        return compile_ruleset(
            self.token_patterns, self.phrase_patterns, self.gazetteers, corpus
        )


def _reject_unknown(obj: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise RulesetSchemaError(f"{where}: unknown keys {unknown}")


def _parse_class(value: object, where: str) -> EntityClass:
    try:
        cls = EntityClass(value)
    except ValueError:
        raise RulesetSchemaError(f"{where}: unknown class {value!r}") from None
    if cls is EntityClass.CONFLICT:
        raise RulesetSchemaError(f"{where}: class X cannot be a rule target")
    return cls


def _parse_matcher(obj: object, where: str) -> TokenMatcher:
    if not isinstance(obj, dict):
        raise RulesetSchemaError(f"{where}: matcher must be an object")
    _reject_unknown(obj, _MATCHER_KEYS, where)
    try:
        attr = Attr(obj.get("attr"))
    except ValueError:
        raise RulesetSchemaError(
            f"{where}: unknown attr {obj.get('attr')!r}"
        ) from None
    value = obj.get("value", True)
    if isinstance(value, list):
        value = tuple(value)
    try:
        quantifier = Quantifier(obj.get("quantifier", "ONE"))
    except ValueError:
        raise RulesetSchemaError(
            f"{where}: unknown quantifier {obj.get('quantifier')!r}"
        ) from None
    try:
        return TokenMatcher(attr, value, quantifier)
    except ValueError as err:
        raise RulesetSchemaError(f"{where}: {err}") from err


def _parse_token_pattern(obj: object, where: str) -> TokenPattern:
    if not isinstance(obj, dict):
        raise RulesetSchemaError(f"{where}: pattern must be an object")
    _reject_unknown(obj, _TOKEN_PATTERN_KEYS, where)
    cls = _parse_class(obj.get("class"), where)
    raw_matchers = obj.get("matchers")
    if not isinstance(raw_matchers, list) or not raw_matchers:
        raise RulesetSchemaError(f"{where}: 'matchers' must be a non-empty list")
    matchers = tuple(
        _parse_matcher(m, f"{where}.matchers[{i}]") for i, m in enumerate(raw_matchers)
    )
    try:
        return TokenPattern(
            cls,
            matchers,
            priority=int(obj.get("priority", 100)),
            provenance=str(obj.get("provenance", "static")),
        )
    except ValueError as err:
        raise RulesetSchemaError(f"{where}: {err}") from err


def _parse_phrase_pattern(obj: object, where: str) -> PhrasePattern:
    if not isinstance(obj, dict):
        raise RulesetSchemaError(f"{where}: pattern must be an object")
    _reject_unknown(obj, _PHRASE_PATTERN_KEYS, where)
    cls = _parse_class(obj.get("class"), where)
    phrase = obj.get("phrase")
    if isinstance(phrase, str):
        phrase = phrase.split()
    if not isinstance(phrase, list) or not phrase:
        raise RulesetSchemaError(f"{where}: 'phrase' must be a non-empty list or string")
    try:
        return PhrasePattern(
            cls,
            tuple(phrase),
            priority=int(obj.get("priority", 100)),
            case_sensitive=bool(obj.get("case_sensitive", True)),
            provenance=str(obj.get("provenance", "static")),
        )
    except ValueError as err:
        raise RulesetSchemaError(f"{where}: {err}") from err


def _parse_filter(obj: object, where: str) -> FilterSpec:
    if not isinstance(obj, dict):
        raise RulesetSchemaError(f"{where}: filter must be an object")
    _reject_unknown(obj, _FILTER_KEYS, where)
    try:
        return FilterSpec(
            suffix_in=tuple(obj.get("suffix_in", ())),
            prefix_in=tuple(obj.get("prefix_in", ())),
            min_length=obj.get("min_length"),
            is_capitalized=bool(obj.get("is_capitalized", False)),
            regex=obj.get("regex"),
        )
    except ValueError as err:
        raise RulesetSchemaError(f"{where}: {err}") from err


def read_wordlist(path: str | Path) -> tuple[str, ...]:
    """Read a gazetteer word-list file: one phrase per line, ``#`` comments."""
    entries = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        entries.append(line)
    return tuple(entries)


def _parse_gazetteer(obj: object, where: str, base_dir: Path) -> GazetteerSpec:
    if not isinstance(obj, dict):
        raise RulesetSchemaError(f"{where}: gazetteer must be an object")
    _reject_unknown(obj, _GAZETTEER_KEYS, where)
    cls = _parse_class(obj.get("class"), where)
    sources = [key for key in ("entries", "file", "filter") if key in obj]
    if len(sources) != 1:
        raise RulesetSchemaError(
            f"{where}: give exactly one of 'entries', 'file', 'filter'"
        )
    source = sources[0]
    entries: tuple[str, ...] | None = None
    source_filter: FilterSpec | None = None
    default_provenance = "static"
    if source == "entries":
        raw = obj["entries"]
        if not isinstance(raw, list):
            raise RulesetSchemaError(f"{where}: 'entries' must be a list")
        entries = tuple(str(e) for e in raw)
    elif source == "file":
        entries = read_wordlist(base_dir / str(obj["file"]))
    else:
        source_filter = _parse_filter(obj["filter"], f"{where}.filter")
        default_provenance = "derived-from-dev"
    try:
        return GazetteerSpec(
            cls,
            entries=entries,
            source_filter=source_filter,
            case_sensitive=bool(obj.get("case_sensitive", True)),
            priority=int(obj.get("priority", 100)),
            provenance=str(obj.get("provenance", default_provenance)),
        )
    except ValueError as err:
        raise RulesetSchemaError(f"{where}: {err}") from err


def load_ruleset_file(path: str | Path) -> RulesetDefinition:
    """Load and strictly validate a ruleset JSON file.

    Unknown keys are rejected everywhere.  Gazetteer ``file`` sources are
    resolved relative to the ruleset file's directory.
    """
    file = Path(path)
    try:
        data = json.loads(file.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise RulesetSchemaError(f"{file}: not valid JSON: {err}") from err
    if not isinstance(data, dict):
        raise RulesetSchemaError(f"{file}: top level must be an object")
    _reject_unknown(data, _TOP_KEYS, str(file))
    for key in _TOP_KEYS:
        if key in data and not isinstance(data[key], list):
            raise RulesetSchemaError(f"{file}: {key!r} must be a list")
    return RulesetDefinition(
        token_patterns=tuple(
            _parse_token_pattern(obj, f"token_patterns[{i}]")
            for i, obj in enumerate(data.get("token_patterns", []))
        ),
        phrase_patterns=tuple(
            _parse_phrase_pattern(obj, f"phrase_patterns[{i}]")
            for i, obj in enumerate(data.get("phrase_patterns", []))
        ),
        gazetteers=tuple(
            _parse_gazetteer(obj, f"gazetteers[{i}]", file.parent)
            for i, obj in enumerate(data.get("gazetteers", []))
        ),
    )
