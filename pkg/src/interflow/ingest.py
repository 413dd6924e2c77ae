"""Text formats for traces, labels, correlation spaces and matrices.

Every format is line-oriented, deterministic and diffable:

* trace:   ``flow_id,app_type,conn_type,n,start_1,dur_1,...,start_n,dur_n``
  (integers in nanoseconds), flows sorted by flow_id. ``#key=value``
  header lines carry the format version, time origin and taxonomy.
* labels:  a trace line plus ``|events:`` with ``start,end,channel``
  triples separated by ``;``.
* space:   ``target_id,covering_id,overlap_class,first_idx,last_idx,count``.
* matrix:  plain CSV with a mandatory header; a JSON sidecar lists the
  feature columns in order.

Writing the same data twice yields byte-identical files.
"""
from __future__ import annotations

import json
from typing import IO, Iterable

from .correlation import CoveringMatch
from .errors import DuplicateId, ParseError, SchemaMismatch
from .featurizer import LABEL_COLUMNS, FeatureSchema, FeatureVector
from .flow_model import (
    DelayMeasurement,
    FlowRecord,
    FlowSet,
    ONOSplit,
    Taxonomy,
)
from .sd_labeling import LabeledFlow, SDEvent, split_no_segment

FORMAT_VERSION = "1"


def _fmt_float(v: float) -> str:
    return repr(float(v))


def _parse_flow_line(line: str, line_no: int) -> FlowRecord:
    parts = line.split(",")
    if len(parts) < 4:
        raise ParseError(line_no, f"expected >= 4 fields, got {len(parts)}")
    flow_id, app, conn, n_str = parts[:4]
    try:
        n = int(n_str)
    except ValueError:
        raise ParseError(line_no, f"bad measurement count {n_str!r}")
    if n < 1 or len(parts) != 4 + 2 * n:
        raise ParseError(
            line_no, f"expected {4 + 2 * n} fields for n={n}, got {len(parts)}"
        )
    try:
        nums = [int(p) for p in parts[4:]]
    except ValueError as exc:
        raise ParseError(line_no, f"non-integer measurement field: {exc}")
    measurements = tuple(
        DelayMeasurement(nums[2 * i], nums[2 * i + 1]) for i in range(n)
    )
    return FlowRecord(flow_id, app, conn, measurements)


def _flow_line(flow: FlowRecord) -> str:
    fields = [flow.flow_id, flow.app_type, flow.conn_type, str(len(flow.measurements))]
    for m in flow.measurements:
        fields.append(str(m.start_ts))
        fields.append(str(m.duration))
    return ",".join(fields)


def read_trace(source: IO[str]) -> FlowSet:
    """Parse a trace file; raises ParseError/DuplicateId on bad input."""
    time_origin = 0
    taxonomy = Taxonomy()
    flows: list[FlowRecord] = []
    seen: set[str] = set()
    for line_no, raw in enumerate(source, start=1):
        line = raw.rstrip("\n")
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            if key == "time_origin":
                time_origin = int(value)
            elif key == "app_types":
                taxonomy = Taxonomy(tuple(value.split(";")), taxonomy.conn_types)
            elif key == "conn_types":
                taxonomy = Taxonomy(taxonomy.app_types, tuple(value.split(";")))
            continue
        flow = _parse_flow_line(line, line_no)
        if flow.flow_id in seen:
            raise DuplicateId(f"line {line_no}: duplicate flow_id {flow.flow_id!r}")
        seen.add(flow.flow_id)
        flows.append(flow)
    flows.sort(key=lambda f: f.flow_id)
    return FlowSet(tuple(flows), time_origin, taxonomy)


def write_trace(flows: FlowSet, sink: IO[str]) -> None:
    """Deterministic inverse of read_trace: flows sorted by flow_id."""
    sink.write(f"#version={FORMAT_VERSION}\n")
    sink.write(f"#time_origin={flows.time_origin}\n")
    sink.write(f"#app_types={';'.join(flows.taxonomy.app_types)}\n")
    sink.write(f"#conn_types={';'.join(flows.taxonomy.conn_types)}\n")
    for flow in sorted(flows.flows, key=lambda f: f.flow_id):
        sink.write(_flow_line(flow) + "\n")


def write_labels(labeled: Iterable[LabeledFlow], sink: IO[str]) -> None:
    """Trace line per flow plus its detected events."""
    sink.write(f"#version={FORMAT_VERSION}\n")
    for lf in sorted(labeled, key=lambda lf: lf.flow.flow_id):
        events = ";".join(
            f"{e.start_ts},{e.end_ts},{e.channel}" for e in lf.events
        )
        sink.write(f"{_flow_line(lf.flow)}|events:{events}\n")


def read_labels(source: IO[str], split: ONOSplit) -> list[LabeledFlow]:
    """Rebuild labeled flows; event peak scores are not persisted."""
    out = []
    for line_no, raw in enumerate(source, start=1):
        line = raw.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        if "|events:" not in line:
            raise ParseError(line_no, "missing |events: section")
        flow_part, _, events_part = line.partition("|events:")
        flow = _parse_flow_line(flow_part, line_no)
        events = []
        if events_part:
            for item in events_part.split(";"):
                fields = item.split(",")
                if len(fields) != 3:
                    raise ParseError(line_no, f"bad event triple {item!r}")
                start, end, channel = int(fields[0]), int(fields[1]), fields[2]
                events.append(
                    SDEvent(start, end, (start + end) // 2, channel, 0.0)
                )
        out.append(
            LabeledFlow(
                flow,
                tuple(events),
                split_no_segment(flow, events, split),
            )
        )
    return out


def write_space(
    space: list[tuple[str, list[CoveringMatch]]], sink: IO[str]
) -> None:
    """One line per (target, covering) pair."""
    sink.write(f"#version={FORMAT_VERSION}\n")
    sink.write("target_id,covering_id,overlap_class,first_idx,last_idx,count\n")
    for target_id, matches in space:
        for m in matches:
            sink.write(
                f"{target_id},{m.covering_id},{m.overlap_class},"
                f"{m.in_window_indices[0]},{m.in_window_indices[-1]},"
                f"{len(m.in_window_indices)}\n"
            )


def read_space(source: IO[str]) -> list[tuple[str, list[tuple[str, str, int, int, int]]]]:
    """Pairs grouped per target: (covering_id, class, first, last, count)."""
    grouped: dict[str, list[tuple[str, str, int, int, int]]] = {}
    header_seen = False
    for line_no, raw in enumerate(source, start=1):
        line = raw.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise ParseError(line_no, f"expected 6 fields, got {len(parts)}")
        grouped.setdefault(parts[0], []).append(
            (parts[1], parts[2], int(parts[3]), int(parts[4]), int(parts[5]))
        )
    return sorted(grouped.items())


def write_feature_matrix(
    rows: list[FeatureVector], schema: FeatureSchema, sink: IO[str]
) -> None:
    """CSV with header: target_id, feature columns, label/target columns."""
    header = ("target_id",) + schema.columns + LABEL_COLUMNS
    sink.write(",".join(header) + "\n")
    for row in sorted(rows, key=lambda r: r.target_id):
        if row.values.size != schema.total_width:
            raise SchemaMismatch(
                f"row {row.target_id}: width {row.values.size} != "
                f"{schema.total_width}"
            )
        cells = [row.target_id]
        cells += [_fmt_float(v) for v in row.values]
        cells.append(str(row.label_sd))
        cells += [_fmt_float(v) for v in row.targets]
        sink.write(",".join(cells) + "\n")


def read_feature_matrix(source: IO[str], schema: FeatureSchema) -> list[FeatureVector]:
    """Parse a matrix file back into FeatureVectors, validating the header."""
    import numpy as np

    expected = ("target_id",) + schema.columns + LABEL_COLUMNS
    header = source.readline().rstrip("\n").split(",")
    if tuple(header) != expected:
        raise SchemaMismatch(
            f"matrix header has {len(header)} columns, schema expects "
            f"{len(expected)}"
        )
    rows = []
    w = schema.total_width
    for line_no, raw in enumerate(source, start=2):
        line = raw.rstrip("\n")
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != len(expected):
            raise ParseError(line_no, f"expected {len(expected)} cells")
        values = np.array([float(v) for v in parts[1 : 1 + w]])
        label = int(parts[1 + w])
        targets = tuple(float(v) for v in parts[2 + w :])
        rows.append(FeatureVector(parts[0], values, label, targets))
    return rows


def read_schema_sidecar(source: IO[str]) -> FeatureSchema:
    from .featurizer import make_schema

    doc = json.load(source)
    taxonomy = Taxonomy(tuple(doc["app_types"]), tuple(doc["conn_types"]))
    schema = make_schema(doc["m"], doc["k"], taxonomy)
    if list(schema.columns) != doc["feature_columns"]:
        raise SchemaMismatch("sidecar column list does not match the schema formula")
    return schema


def write_schema_sidecar(schema: FeatureSchema, sink: IO[str]) -> None:
    json.dump(
        {
            "version": FORMAT_VERSION,
            "m": schema.m,
            "k": schema.k,
            "app_types": list(schema.taxonomy.app_types),
            "conn_types": list(schema.taxonomy.conn_types),
            "feature_columns": list(schema.columns),
            "label_columns": list(LABEL_COLUMNS),
        },
        sink,
        indent=2,
        sort_keys=True,
    )
    sink.write("\n")
