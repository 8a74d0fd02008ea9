"""Comparison tables over evaluation result files.

One column per system, one row per class.  The F1 table carries per-class
token F1 plus a macro row; the Jaccard table carries (mean, ratio) pairs.
Within each row the best cell (highest F1 / highest mean) is marked; ties
are all marked.  Result files are the JSON documents ``evaluate`` writes;
summary-only files (externally produced scores) are accepted as long as the
fields a table needs are present.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Sequence

from .corpus_io import REAL_CLASSES, EntityClass

Locale = Literal["german", "english"]

ENGLISH_LABELS: dict[EntityClass, str] = {
    EntityClass.HAUPTAKTEUR: "Main actor",
    EntityClass.ERGEBNISEMPFAENGER: "Recipient of service",
    EntityClass.MITWIRKENDER: "Contributor",
    EntityClass.AKTION: "Action",
    EntityClass.DOKUMENT: "Document",
    EntityClass.SIGNALWORT: "Signaling word",
    EntityClass.BEDINGUNG: "Condition",
    EntityClass.FRIST: "Deadline",
    EntityClass.DATENFELD: "Data field",
    EntityClass.HANDLUNGSGRUNDLAGE: "Legal grounds for action",
    EntityClass.CONFLICT: "X",
}

GERMAN_LABELS: dict[EntityClass, str] = {
    **{c: c.value for c in EntityClass},
    EntityClass.ERGEBNISEMPFAENGER: "Ergebnisempfänger",
}

MACRO_ROW_LABEL = "Macro F1-score"


class ReportSchemaError(Exception):
    """A result file does not carry the fields the report needs."""


def class_label(entity_class: EntityClass, locale: Locale) -> str:
    labels = GERMAN_LABELS if locale == "german" else ENGLISH_LABELS
    return labels[entity_class]


@dataclass(frozen=True)
class SystemScores:
    """The slice of one result file that tables are built from."""

    system: str
    f1: dict[EntityClass, float]
    macro_f1: float | None
    jaccard_mean: dict[EntityClass, float]
    jaccard_ratio: dict[EntityClass, float]


def _class_map(obj: object, where: str) -> dict[str, dict]:
    if not isinstance(obj, dict):
        raise ReportSchemaError(f"{where} must be an object")
    per_class = obj.get("per_class")
    if not isinstance(per_class, dict):
        raise ReportSchemaError(f"{where}.per_class must be an object")
    return per_class


def load_result_file(path: str | Path) -> SystemScores:
    """Read one result JSON file into the table-building view."""
    file = Path(path)
    try:
        data = json.loads(file.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise ReportSchemaError(f"{file}: not valid JSON: {err}") from err
    if not isinstance(data, dict) or not isinstance(data.get("system"), str):
        raise ReportSchemaError(f"{file}: missing 'system' name")
    token = _class_map(data.get("token_metrics"), f"{file}: token_metrics")
    jaccard = _class_map(data.get("jaccard"), f"{file}: jaccard")

    f1: dict[EntityClass, float] = {}
    for name, record in token.items():
        try:
            cls = EntityClass(name)
        except ValueError:
            raise ReportSchemaError(f"{file}: unknown class {name!r}") from None
        if not isinstance(record, dict) or not isinstance(
            record.get("f1"), (int, float)
        ):
            raise ReportSchemaError(f"{file}: class {name}: missing numeric 'f1'")
        f1[cls] = float(record["f1"])

    macro = data["token_metrics"].get("macro_f1")
    if macro is not None and not isinstance(macro, (int, float)):
        raise ReportSchemaError(f"{file}: 'macro_f1' must be numeric or null")

    mean: dict[EntityClass, float] = {}
    ratio: dict[EntityClass, float] = {}
    for name, record in jaccard.items():
        try:
            cls = EntityClass(name)
        except ValueError:
            raise ReportSchemaError(f"{file}: unknown class {name!r}") from None
        if not isinstance(record, dict):
            raise ReportSchemaError(f"{file}: jaccard class {name}: not an object")
        for key, target in (("mean", mean), ("ratio", ratio)):
            value = record.get(key)
            if value is None:
                continue
            if not isinstance(value, (int, float)):
                raise ReportSchemaError(
                    f"{file}: jaccard class {name}: {key!r} must be numeric"
                )
            target[cls] = float(value)

    return SystemScores(
        system=data["system"],
        f1=f1,
        macro_f1=None if macro is None else float(macro),
        jaccard_mean=mean,
        jaccard_ratio=ratio,
    )


@dataclass(frozen=True)
class TableRow:
    label: str
    cells: tuple[tuple[float, ...] | None, ...]  # one tuple of numbers per system
    bold: tuple[bool, ...]


@dataclass(frozen=True)
class ComparisonTable:
    title: str
    columns: tuple[str, ...]  # system names
    subcolumns: tuple[str, ...]  # labels of each number within a cell
    rows: tuple[TableRow, ...]


def _bold_mask(values: Sequence[tuple[float, ...] | None]) -> tuple[bool, ...]:
    """Mark every cell whose first number equals the row maximum."""
    present = [cell[0] for cell in values if cell is not None]
    if not present:
        return tuple(False for _ in values)
    best = max(present)
    return tuple(cell is not None and cell[0] == best for cell in values)


def build_f1_table(
    systems: Sequence[SystemScores], locale: Locale = "english"
) -> ComparisonTable:
    """Per-class token F1 with a macro row; best cell per row marked."""
    rows = []
    for cls in REAL_CLASSES:
        cells = tuple(
            (s.f1[cls],) if cls in s.f1 else None for s in systems
        )
        rows.append(TableRow(class_label(cls, locale), cells, _bold_mask(cells)))
    macro_cells = tuple(
        None if s.macro_f1 is None else (s.macro_f1,) for s in systems
    )
    rows.append(TableRow(MACRO_ROW_LABEL, macro_cells, _bold_mask(macro_cells)))
    return ComparisonTable(
        title="Token-level F1",
        columns=tuple(s.system for s in systems),
        subcolumns=("F1",),
        rows=tuple(rows),
    )


def build_jaccard_table(
    systems: Sequence[SystemScores], locale: Locale = "english"
) -> ComparisonTable:
    """Per-class Jaccard (mean, zero-to-total ratio); best mean per row marked."""
    rows = []
    for cls in REAL_CLASSES:
        cells = []
        for s in systems:
            if cls in s.jaccard_mean:
                cells.append((s.jaccard_mean[cls], s.jaccard_ratio.get(cls, 0.0)))
            else:
                cells.append(None)
        cells = tuple(cells)
        rows.append(TableRow(class_label(cls, locale), cells, _bold_mask(cells)))
    return ComparisonTable(
        title="Span-level Jaccard",
        columns=tuple(s.system for s in systems),
        subcolumns=("mean ↑", "ratio ↓"),
        rows=tuple(rows),
    )


def _format_numbers(cell: tuple[float, ...] | None, decimals: int) -> list[str]:
    if cell is None:
        return ["-"]
    return [f"{value:.{decimals}f}" for value in cell]


def render_markdown(table: ComparisonTable, decimals: int) -> str:
    """GitHub-style pipe table; per-row best cells in bold."""
    lines = [f"### {table.title}", ""]
    header = ["Class"]
    for system in table.columns:
        if len(table.subcolumns) == 1:
            header.append(system)
        else:
            header.extend(f"{system} {sub}" for sub in table.subcolumns)
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "---|" * len(header))
    for row in table.rows:
        cells = [row.label]
        for cell, bold in zip(row.cells, row.bold):
            rendered = _format_numbers(cell, decimals)
            if bold:
                rendered = [f"**{text}**" for text in rendered]
            if len(table.subcolumns) == 1:
                cells.append(rendered[0])
            else:
                padded = rendered + ["-"] * (len(table.subcolumns) - len(rendered))
                cells.extend(padded)
        lines.append("| " + " | ".join(cells) + " |")
    lines.append("")
    return "\n".join(lines)


def render_csv(table: ComparisonTable, decimals: int) -> str:
    """CSV with one header row; a final 'best' column flags the row winners."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    header = ["class"]
    for system in table.columns:
        if len(table.subcolumns) == 1:
            header.append(system)
        else:
            header.extend(f"{system} {sub}" for sub in table.subcolumns)
    header.append("best")
    writer.writerow(header)
    for row in table.rows:
        record = [row.label]
        for cell in row.cells:
            rendered = _format_numbers(cell, decimals)
            if len(table.subcolumns) == 1:
                record.append(rendered[0])
            else:
                record.extend(rendered + ["-"] * (len(table.subcolumns) - len(rendered)))
        winners = [
            system for system, bold in zip(table.columns, row.bold) if bold
        ]
        record.append(";".join(winners))
        writer.writerow(record)
    return buffer.getvalue()


def render_report(
    systems: Sequence[SystemScores],
    fmt: Literal["markdown", "csv"] = "markdown",
    locale: Locale = "english",
) -> str:
    """Both tables (F1 at 4 decimals, Jaccard at 2) in the requested format."""
    f1_table = build_f1_table(systems, locale)
    jaccard_table = build_jaccard_table(systems, locale)
    if fmt == "markdown":
        return render_markdown(f1_table, 4) + "\n" + render_markdown(jaccard_table, 2)
    return render_csv(f1_table, 4) + "\n" + render_csv(jaccard_table, 2)
