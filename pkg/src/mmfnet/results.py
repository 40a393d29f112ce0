"""Tabular experiment records with deterministic CSV / JSON serialization."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import __version__


def _cell(value: Any) -> Any:
    if isinstance(value, float):
        return format(value, ".17g")
    return value


def _plain(value: Any) -> Any:
    # numpy scalars -> python scalars so json.dumps stays deterministic
    if hasattr(value, "item") and not isinstance(value, (list, tuple, dict, str)):
        return value.item()
    return value


@dataclass
class ExperimentResult:
    """Rows of a scenario run plus the resolved parameters that produced them."""

    columns: tuple[str, ...]
    rows: list[dict[str, Any]] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.columns = tuple(self.columns)
        self.metadata.setdefault("version", __version__)

    def add(self, **row: Any) -> None:
        missing = set(self.columns) - set(row)
        extra = set(row) - set(self.columns)
        if missing or extra:
            raise ValueError(f"row keys mismatch: missing={sorted(missing)} extra={sorted(extra)}")
        self.rows.append({c: _plain(row[c]) for c in self.columns})

    def column(self, name: str) -> list[Any]:
        return [r[name] for r in self.rows]

    def __len__(self) -> int:
        return len(self.rows)

    def to_csv(self, path: str | Path | None = None, with_metadata: bool = True) -> str:
        buf = io.StringIO()
        if with_metadata:
            buf.write("# " + json.dumps(self.metadata, sort_keys=True) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_cell(row[c]) for c in self.columns])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def to_json(self, path: str | Path | None = None) -> str:
        payload = {"metadata": self.metadata, "columns": list(self.columns), "rows": self.rows}
        text = json.dumps(payload, sort_keys=True, indent=1) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, text: str) -> "ExperimentResult":
        lines = text.splitlines()
        metadata: dict[str, Any] = {}
        if lines and lines[0].startswith("# "):
            metadata = json.loads(lines[0][2:])
            lines = lines[1:]
        reader = csv.reader(lines)
        columns = next(reader)
        result = cls(tuple(columns), metadata=metadata)
        for values in reader:
            result.rows.append({c: _parse(v) for c, v in zip(columns, values)})
        return result

    @classmethod
    def from_json(cls, text: str) -> "ExperimentResult":
        data = json.loads(text)
        return cls(tuple(data["columns"]), list(data["rows"]), dict(data["metadata"]))


def _parse(value: str) -> Any:
    for conv in (int, float):
        try:
            return conv(value)
        except ValueError:
            pass
    return value


def rows_table(columns: Sequence[str], rows: Sequence[Sequence[Any]], **metadata: Any) -> ExperimentResult:
    result = ExperimentResult(tuple(columns), metadata=dict(metadata))
    for values in rows:
        result.add(**dict(zip(columns, values)))
    return result
