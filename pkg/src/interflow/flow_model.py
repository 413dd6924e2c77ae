"""Core domain types: delay measurements, flows, flow sets and jitter.

All timestamps and durations are integer nanoseconds relative to a
trace-local epoch, so window arithmetic is exact. Measurement indices are
1-based in documentation and error messages.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import SeriesTooShort

NS_PER_S = 1_000_000_000
NS_PER_MS = 1_000_000

# Default categorical taxonomies; published so feature-width formulas are
# checkable. conn_type is encoded as a single binary column downstream.
APP_TYPES = ("web", "video", "other")
CONN_TYPES = ("tcp", "udp")


@dataclass(frozen=True)
class Taxonomy:
    app_types: tuple[str, ...] = APP_TYPES
    conn_types: tuple[str, ...] = CONN_TYPES


@dataclass(frozen=True)
class DelayMeasurement:
    """One per-packet delay sample: when it started and how long it lasted."""

    start_ts: int  # ns since trace epoch
    duration: int  # ns, >= 0

    @property
    def end_ts(self) -> int:
        return self.start_ts + self.duration


@dataclass(frozen=True)
class FlowRecord:
    """One network flow with its ordered delay measurements."""

    flow_id: str
    app_type: str
    conn_type: str
    measurements: tuple[DelayMeasurement, ...]

    @property
    def start_ts(self) -> int:
        """Flow start time: start of measurement 1."""
        return self.measurements[0].start_ts

    def durations(self) -> list[int]:
        return [m.duration for m in self.measurements]

    def starts(self) -> list[int]:
        return [m.start_ts for m in self.measurements]


@dataclass(frozen=True)
class FlowSet:
    flows: tuple[FlowRecord, ...]
    time_origin: int = 0
    taxonomy: Taxonomy = field(default_factory=Taxonomy)

    def by_id(self) -> dict[str, FlowRecord]:
        return {f.flow_id: f for f in self.flows}


@dataclass(frozen=True)
class ONOSplit:
    """Number of initial delay measurements observed before offload."""

    m: int

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")


@dataclass(frozen=True)
class JitterSeries:
    """Absolute successive delay differences (delta-delay), length n-1."""

    values: tuple[int, ...]


def validate_flow(flow: FlowRecord, taxonomy: Taxonomy = Taxonomy()) -> list[str]:
    """Return every invariant violation; an empty list means the flow is ok."""
    violations = []
    if not flow.measurements:
        violations.append("no measurements")
    for m in flow.measurements:
        if m.duration < 0:
            violations.append("negative duration")
            break
    for a, b in zip(flow.measurements, flow.measurements[1:]):
        if b.start_ts <= a.start_ts:
            violations.append("unsorted measurements")
            break
    if flow.app_type not in taxonomy.app_types:
        violations.append(f"unknown app_type {flow.app_type!r}")
    if flow.conn_type not in taxonomy.conn_types:
        violations.append(f"unknown conn_type {flow.conn_type!r}")
    return violations


def validate_flowset(fs: FlowSet) -> list[str]:
    violations = []
    seen: set[str] = set()
    for f in fs.flows:
        if f.flow_id in seen:
            violations.append(f"duplicate flow_id {f.flow_id!r}")
        seen.add(f.flow_id)
        for v in validate_flow(f, fs.taxonomy):
            violations.append(f"{f.flow_id}: {v}")
        if f.measurements and f.start_ts < fs.time_origin:
            violations.append(f"{f.flow_id}: starts before time_origin")
    return violations


def jitter_of(flow: FlowRecord) -> JitterSeries:
    """Jitter as absolute successive delay difference (RFC 3393 style)."""
    if len(flow.measurements) < 2:
        raise SeriesTooShort(
            f"flow {flow.flow_id}: jitter needs >= 2 measurements, "
            f"got {len(flow.measurements)}"
        )
    d = flow.durations()
    return JitterSeries(tuple(abs(b - a) for a, b in zip(d, d[1:])))
