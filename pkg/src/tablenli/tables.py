"""Evidence tables: typed cells, linearization and the numeric inventory.

Tables come from irregular sources (merged cells, several header rows), so
parsing never rejects a ragged grid; short rows are padded with empty cells.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

EMPTY_MARKERS = frozenset({"—", "-", ""})

# optional sign, comma-grouped or plain digits, optional fraction, optional % or +
NUMBER_RE = re.compile(
    r"(?P<sign>[+-])?"
    r"(?P<int>\d{1,3}(?:,\d{3})+|0|[1-9]\d*)"
    r"(?P<frac>\.\d+)?"
    r"(?P<suffix>%|\+)?"
)

_TOKEN_SPLIT = re.compile(r"[\s/–—]+")
_STRIP_LEFT = "([{\"'“‘"
_STRIP_RIGHT = ")]}\"'”’.,;:!?"


class TableError(ValueError):
    """Structurally invalid table input."""


@dataclass(frozen=True)
class ParsedNumber:
    value: Decimal
    percent: bool = False
    plus: bool = False

    @property
    def exact(self) -> Fraction:
        return Fraction(self.value)


def parse_number(token: str) -> ParsedNumber | None:
    """Parse one token with the table number grammar, or return None."""
    m = NUMBER_RE.fullmatch(token.strip())
    if m is None:
        return None
    text = (m["sign"] or "") + m["int"].replace(",", "") + (m["frac"] or "")
    return ParsedNumber(Decimal(text), percent=m["suffix"] == "%", plus=m["suffix"] == "+")


def number_tokens(text: str) -> list[tuple[str, ParsedNumber]]:
    """All number tokens in free text, in order, as (token, parsed) pairs."""
    found = []
    for raw in _TOKEN_SPLIT.split(text):
        tok = raw.lstrip(_STRIP_LEFT).rstrip(_STRIP_RIGHT)
        if not tok:
            continue
        parsed = parse_number(tok)
        if parsed is not None:
            found.append((tok, parsed))
    return found


class CellKind(str, Enum):
    NUMBER = "number"
    PERCENT = "percentage"
    TEXT = "text"
    EMPTY = "empty"


@dataclass(frozen=True)
class Cell:
    raw: str
    kind: CellKind
    value: Decimal | str | None
    row: int
    col: int

    def render(self) -> str:
        """Re-render the typed value; numbers get thousands separators."""
        if self.kind is CellKind.NUMBER:
            return f"{self.value:,}"
        if self.kind is CellKind.PERCENT:
            return f"{self.value:,}%"
        if self.kind is CellKind.EMPTY:
            return ""
        return self.raw


def type_cell(raw: str, row: int = 0, col: int = 0) -> Cell:
    text = raw.strip()
    if text in EMPTY_MARKERS:
        return Cell(raw, CellKind.EMPTY, None, row, col)
    parsed = parse_number(text)
    if parsed is None:
        return Cell(raw, CellKind.TEXT, text, row, col)
    kind = CellKind.PERCENT if parsed.percent else CellKind.NUMBER
    return Cell(raw, kind, parsed.value, row, col)


@dataclass(frozen=True)
class Table:
    caption: str
    rows: tuple[tuple[Cell, ...], ...]
    header_row_count: int = 1
    source_id: str = ""

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return len(self.rows[0]) if self.rows else 0

    def raw_grid(self) -> list[list[str]]:
        return [[c.raw for c in row] for row in self.rows]

    def cells(self) -> Iterable[Cell]:
        for row in self.rows:
            yield from row

    def to_dict(self) -> dict:
        return {
            "caption": self.caption,
            "header_row_count": self.header_row_count,
            "rows": self.raw_grid(),
        }


def parse_table(
    raw_grid: Sequence[Sequence[str]],
    caption: str = "",
    header_row_count: int = 1,
    source_id: str = "",
) -> Table:
    """Type every cell of a raw text grid and pad ragged rows."""
    if not raw_grid:
        raise TableError("table grid is empty")
    width = max(len(r) for r in raw_grid)
    if width == 0:
        raise TableError("table grid has no cells")
    if not 0 <= header_row_count <= len(raw_grid):
        raise TableError(
            f"header_row_count={header_row_count} outside 0..{len(raw_grid)}"
        )
    rows = []
    for i, raw_row in enumerate(raw_grid):
        padded = list(raw_row) + [""] * (width - len(raw_row))
        rows.append(tuple(type_cell(str(raw), i, j) for j, raw in enumerate(padded)))
    return Table(caption or "", tuple(rows), header_row_count, source_id)


def table_from_dict(record: dict, source_id: str = "", header_row_count: int | None = None) -> Table:
    """Build a Table from the JSONL ``tables`` entry format."""
    hrc = record.get("header_row_count", 1) if header_row_count is None else header_row_count
    return parse_table(record["rows"], record.get("caption", ""), hrc, source_id)


def linearize(table: Table) -> str:
    lines = [table.caption] if table.caption else []
    lines.extend(" | ".join(c.raw for c in row) for row in table.rows)
    return "\n".join(lines)


def linearize_all(tables: Sequence[Table]) -> str:
    """Multi-table evidence is joined in dataset order, blank-line separated."""
    return "\n\n".join(linearize(t) for t in tables)


def extract_numbers(tables: Sequence[Table]) -> frozenset[Fraction]:
    """Every numeric token in any cell or caption of ``tables``.

    Percentages contribute their numeric part. Captions are scanned too:
    extractions routinely cite a year that only the caption carries.
    """
    found: set[Fraction] = set()
    for table in tables:
        texts = [table.caption, *(c.raw for c in table.cells())]
        for text in texts:
            found.update(p.exact for _, p in number_tokens(text))
    return frozenset(found)
