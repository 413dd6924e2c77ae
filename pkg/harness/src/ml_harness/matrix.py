"""Loading exported feature matrices and their schema sidecars.

The harness sees only these two files — never the raw traces — so this
module is the single trust boundary: the matrix header is validated
against the sidecar column list and any mismatch aborts with an explicit
column diff.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import IO

import numpy as np

LABEL_COLUMN = "label_sd"
TARGET_COLUMNS = ("sd_count", "longest_len_s", "longest_start_s", "longest_end_s")

# presentation names for the regression targets, keyed by matrix column
TARGET_NAMES = {
    "sd_count": "SD count",
    "longest_len_s": "Longest SD length (s)",
    "longest_start_s": "Longest SD start (s)",
    "longest_end_s": "Longest SD end (s)",
}

GROUPS = ("intra", "covering", "app_count")


class MatrixError(Exception):
    """Malformed matrix or sidecar, or a matrix/sidecar mismatch."""


@dataclass(frozen=True)
class Schema:
    feature_columns: tuple[str, ...]
    label_columns: tuple[str, ...]

    @property
    def width(self) -> int:
        return len(self.feature_columns)


@dataclass(frozen=True)
class Matrix:
    target_ids: tuple[str, ...]
    x: np.ndarray  # (n, width) float
    label: np.ndarray  # (n,) int 0/1
    targets: dict[str, np.ndarray]  # per regression column, (n,) float
    schema: Schema

    def __len__(self) -> int:
        return len(self.target_ids)


def read_schema(source: IO[str]) -> Schema:
    try:
        doc = json.load(source)
    except json.JSONDecodeError as exc:
        raise MatrixError(f"sidecar is not valid JSON: {exc}") from exc
    for key in ("feature_columns", "label_columns"):
        if key not in doc:
            raise MatrixError(f"sidecar missing key {key!r}")
    schema = Schema(
        feature_columns=tuple(doc["feature_columns"]),
        label_columns=tuple(doc["label_columns"]),
    )
    labels = (LABEL_COLUMN,) + TARGET_COLUMNS
    if schema.label_columns != labels:
        raise MatrixError(
            f"sidecar label columns {schema.label_columns} != {labels}"
        )
    return schema


def _column_diff(got: list[str], want: list[str]) -> str:
    missing = [c for c in want if c not in got]
    extra = [c for c in got if c not in want]
    parts = []
    if missing:
        parts.append(f"missing: {', '.join(missing[:10])}")
    if extra:
        parts.append(f"extra: {', '.join(extra[:10])}")
    if not parts:
        parts.append("same names, different order")
    return "; ".join(parts)


def read_matrix(source: IO[str], schema: Schema) -> Matrix:
    want = ["target_id", *schema.feature_columns, *schema.label_columns]
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise MatrixError("empty matrix file") from None
    if header != want:
        raise MatrixError(f"matrix/sidecar column mismatch: {_column_diff(header, want)}")
    ids: list[str] = []
    body: list[list[str]] = []
    for row in reader:
        if len(row) != len(want):
            raise MatrixError(
                f"row {len(ids) + 1}: {len(row)} cells, expected {len(want)}"
            )
        ids.append(row[0])
        body.append(row[1:])
    if not body:
        raise MatrixError("matrix has a header but no rows")
    data = np.asarray(body, dtype=float)
    w = schema.width
    return Matrix(
        target_ids=tuple(ids),
        x=data[:, :w],
        label=data[:, w].astype(int),
        targets={
            col: data[:, w + 1 + i] for i, col in enumerate(TARGET_COLUMNS)
        },
        schema=schema,
    )


def load(matrix_path: str, schema_path: str) -> Matrix:
    with open(schema_path) as f:
        schema = read_schema(f)
    with open(matrix_path) as f:
        return read_matrix(f, schema)


def column_group(name: str) -> str:
    """Partition of feature columns into attribution groups."""
    if name.startswith("cov"):
        return "covering"
    if name.startswith("appcount_"):
        return "app_count"
    return "intra"
