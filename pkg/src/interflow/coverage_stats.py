"""Statistical characterization of the correlation space.

Three analyses over a built correlation space and SD labels: covering-flow
counts (all vs SD-containing), time from window open to the first covering
measurement, and the best temporal alignment between target and covering
SD event centers. All values are raw and non-normalized.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .correlation import CoveringMatch, correlation_window
from .errors import EmptyInput
from .flow_model import NS_PER_S, ONOSplit
from .sd_labeling import LabeledFlow

Space = list[tuple[str, list[CoveringMatch]]]


@dataclass(frozen=True)
class DistSummary:
    count: int
    mean: float
    median: float
    p10: float
    p25: float
    p75: float
    p90: float
    min: float
    max: float

    FIELDS = ("count", "mean", "median", "p10", "p25", "p75", "p90", "min", "max")


def summarize(values: list[float]) -> DistSummary:
    if not values:
        raise EmptyInput("cannot summarize an empty value list")
    a = np.asarray(values, dtype=float)
    p10, p25, med, p75, p90 = np.percentile(a, [10, 25, 50, 75, 90])
    return DistSummary(
        count=int(a.size),
        mean=float(a.mean()),
        median=float(med),
        p10=float(p10),
        p25=float(p25),
        p75=float(p75),
        p90=float(p90),
        min=float(a.min()),
        max=float(a.max()),
    )


@dataclass(frozen=True)
class CountStats:
    all: DistSummary
    sd_only: DistSummary
    per_target_all: dict[str, int]
    per_target_sd: dict[str, int]


def _has_observable_sd(lf: LabeledFlow) -> bool:
    return len(lf.observable_events()) > 0


def covering_count_stats(space: Space, labeled: list[LabeledFlow]) -> CountStats:
    """Per-target covering counts, overall and restricted to coverings with
    at least one SD event in their observable segment."""
    if not space:
        raise EmptyInput("empty correlation space")
    by_id = {lf.flow.flow_id: lf for lf in labeled}
    per_all: dict[str, int] = {}
    per_sd: dict[str, int] = {}
    for target_id, matches in space:
        per_all[target_id] = len(matches)
        per_sd[target_id] = sum(
            1 for m in matches if _has_observable_sd(by_id[m.covering_id])
        )
    return CountStats(
        all=summarize([float(v) for v in per_all.values()]),
        sd_only=summarize([float(v) for v in per_sd.values()]),
        per_target_all=per_all,
        per_target_sd=per_sd,
    )


@dataclass(frozen=True)
class TimelinessStats:
    generic: DistSummary | None
    sd_first: DistSummary | None
    excluded_generic: int  # targets with no covering at all
    excluded_sd: int  # targets with no SD-containing covering
    per_target_generic_s: dict[str, float]
    per_target_sd_s: dict[str, float]


def time_to_first_covering(
    space: Space,
    labeled: list[LabeledFlow],
    split: ONOSplit,
    active_timeout: int,
) -> TimelinessStats:
    """Delay (seconds) from window open to the first covering measurement,
    overall and restricted to SD-containing coverings."""
    if not space:
        raise EmptyInput("empty correlation space")
    by_id = {lf.flow.flow_id: lf for lf in labeled}
    generic: dict[str, float] = {}
    sd_first: dict[str, float] = {}
    excluded_generic = excluded_sd = 0
    for target_id, matches in space:
        window = correlation_window(by_id[target_id].flow, split, active_timeout)
        if matches:
            generic[target_id] = (matches[0].first_start_ts - window.start_ts) / NS_PER_S
        else:
            excluded_generic += 1
        sd_matches = [m for m in matches if _has_observable_sd(by_id[m.covering_id])]
        if sd_matches:
            sd_first[target_id] = (
                sd_matches[0].first_start_ts - window.start_ts
            ) / NS_PER_S
        else:
            excluded_sd += 1
    return TimelinessStats(
        generic=summarize(list(generic.values())) if generic else None,
        sd_first=summarize(list(sd_first.values())) if sd_first else None,
        excluded_generic=excluded_generic,
        excluded_sd=excluded_sd,
        per_target_generic_s=generic,
        per_target_sd_s=sd_first,
    )


@dataclass(frozen=True)
class AlignmentRecord:
    target_id: str
    best_offset: int  # ns, covering-SD center minus target-SD center
    pair_count: int


@dataclass(frozen=True)
class AlignmentStats:
    records: list[AlignmentRecord]
    summary: DistSummary | None  # of best offsets, in seconds
    excluded: int  # SD targets with zero candidate pairs


def best_sd_alignment(
    space: Space,
    labeled: list[LabeledFlow],
    selection: str = "min_abs",
) -> AlignmentStats:
    """Best temporal alignment per target with non-observable-segment SD.

    For every (target-SD, covering-SD) pair the offset is the covering
    event center minus the target event center. ``min_abs`` (default)
    selects the pair with the smallest magnitude, ties broken toward the
    more negative offset; ``signed_min`` selects the literal minimum.
    """
    if selection not in ("min_abs", "signed_min"):
        raise ValueError(f"unknown selection rule {selection!r}")
    by_id = {lf.flow.flow_id: lf for lf in labeled}
    records = []
    excluded = 0
    for target_id, matches in space:
        target = by_id[target_id]
        if not target.no_segment_events:
            continue
        offsets = []
        for m in matches:
            for cov_ev in by_id[m.covering_id].observable_events():
                for tgt_ev in target.no_segment_events:
                    offsets.append(cov_ev.center_ts - tgt_ev.center_ts)
        if not offsets:
            excluded += 1
            continue
        if selection == "min_abs":
            best = min(offsets, key=lambda o: (abs(o), o))
        else:
            best = min(offsets)
        records.append(AlignmentRecord(target_id, best, len(offsets)))
    summary = (
        summarize([r.best_offset / NS_PER_S for r in records]) if records else None
    )
    return AlignmentStats(records=records, summary=summary, excluded=excluded)


def _fmt(v: float) -> str:
    return repr(float(v))


def _summary_rows(named: list[tuple[str, DistSummary | None]]) -> list[str]:
    lines = ["metric," + ",".join(DistSummary.FIELDS)]
    for name, s in named:
        if s is None:
            continue
        cells = [name, str(s.count)] + [
            _fmt(getattr(s, f)) for f in DistSummary.FIELDS[1:]
        ]
        lines.append(",".join(cells))
    return lines


def _write_lines(path: Path, lines: list[str]) -> None:
    path.write_text("#version=1\n" + "\n".join(lines) + "\n")


def emit_report(
    out_dir: str | Path,
    counts: CountStats | None = None,
    timeliness: TimelinessStats | None = None,
    alignment: AlignmentStats | None = None,
) -> None:
    """Plot-ready percentile tables and raw per-target columns.

    Deterministic: per-target rows are sorted by target id.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if counts is not None:
        _write_lines(
            out / "counts.csv",
            _summary_rows([("all", counts.all), ("sd_only", counts.sd_only)]),
        )
        raw = ["target_id,covering_count,sd_covering_count"]
        for tid in sorted(counts.per_target_all):
            raw.append(f"{tid},{counts.per_target_all[tid]},{counts.per_target_sd[tid]}")
        _write_lines(out / "counts_raw.csv", raw)
    if timeliness is not None:
        _write_lines(
            out / "timeliness.csv",
            _summary_rows(
                [("generic", timeliness.generic), ("sd_first", timeliness.sd_first)]
            )
            + [
                f"#excluded_generic={timeliness.excluded_generic}",
                f"#excluded_sd={timeliness.excluded_sd}",
            ],
        )
        raw = ["target_id,first_covering_s,first_sd_covering_s"]
        tids = sorted(
            set(timeliness.per_target_generic_s) | set(timeliness.per_target_sd_s)
        )
        for tid in tids:
            g = timeliness.per_target_generic_s.get(tid)
            s = timeliness.per_target_sd_s.get(tid)
            raw.append(
                f"{tid},{'' if g is None else _fmt(g)},"
                f"{'' if s is None else _fmt(s)}"
            )
        _write_lines(out / "timeliness_raw.csv", raw)
    if alignment is not None:
        _write_lines(
            out / "alignment.csv",
            _summary_rows([("best_offset", alignment.summary)])
            + [f"#excluded={alignment.excluded}"],
        )
        raw = ["target_id,best_offset_ns,pair_count"]
        for r in sorted(alignment.records, key=lambda r: r.target_id):
            raw.append(f"{r.target_id},{r.best_offset},{r.pair_count}")
        _write_lines(out / "alignment_raw.csv", raw)
