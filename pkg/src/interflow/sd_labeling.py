"""Service-degradation event detection over delay and jitter series.

Detection is one-sided (increases only) and per flow. Two flaggers are
available: a modified Z-score using the median/MAD with the usual 0.6745
consistency constant, and an upper-fence IQR rule with type-7 quartiles.
Maximal runs of at least ``min_run`` consecutive flagged samples become
one SDEvent spanning the flagged measurements.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SeriesTooShort
from .flow_model import FlowRecord, FlowSet, ONOSplit, jitter_of

MODIFIED_Z_CONSTANT = 0.6745

METHODS = ("robust_z", "iqr", "union")
CHANNELS = ("delay", "jitter", "either")


@dataclass(frozen=True)
class SDConfig:
    method: str = "robust_z"
    z_threshold: float = 3.5
    iqr_multiplier: float = 1.5
    min_run: int = 2
    channel: str = "delay"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.channel not in CHANNELS:
            raise ValueError(f"unknown channel {self.channel!r}")
        if self.z_threshold <= 0 or self.iqr_multiplier <= 0 or self.min_run < 1:
            raise ValueError("thresholds must be positive and min_run >= 1")


@dataclass(frozen=True)
class SDEvent:
    start_ts: int
    end_ts: int
    center_ts: int  # integer midpoint, floored
    channel: str
    peak_score: float


@dataclass(frozen=True)
class LabeledFlow:
    flow: FlowRecord
    events: tuple[SDEvent, ...]
    no_segment_events: tuple[SDEvent, ...]
    notes: tuple[str, ...] = ()

    def observable_events(self) -> tuple[SDEvent, ...]:
        no = set(self.no_segment_events)
        return tuple(e for e in self.events if e not in no)


def robust_z_scores(x: np.ndarray) -> np.ndarray | None:
    """Modified Z-scores, or None when MAD is zero (degenerate spread)."""
    med = np.median(x)
    mad = np.median(np.abs(x - med))
    if mad == 0:
        return None
    return MODIFIED_Z_CONSTANT * (x - med) / mad


def iqr_fence_scores(x: np.ndarray, multiplier: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample IQR scores and flags: x > Q3 + multiplier * IQR.

    Quartiles use linear interpolation (type 7). Requires >= 4 samples.
    Scores are (x - Q3) / IQR, or +inf where flagged with IQR == 0.
    """
    if x.size < 4:
        raise SeriesTooShort(f"iqr needs >= 4 samples, got {x.size}")
    q1, q3 = np.percentile(x, [25, 75])
    iqr = q3 - q1
    flags = x > q3 + multiplier * iqr
    if iqr > 0:
        scores = (x - q3) / iqr
    else:
        scores = np.where(flags, math.inf, 0.0)
    return scores, flags


def _channel_flags(
    x: np.ndarray, cfg: SDConfig
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Flag mask and scores for one value series, honouring the MAD=0 fallback."""
    notes: list[str] = []
    z_flags = None
    z_scores = None
    if cfg.method in ("robust_z", "union"):
        z_scores = robust_z_scores(x)
        if z_scores is not None:
            z_flags = z_scores > cfg.z_threshold
        elif np.any(x != np.median(x)):
            # MAD collapsed but values differ: fall back to the IQR fence.
            notes.append("mad_zero_fallback_iqr")
            if x.size >= 4:
                z_scores, z_flags = iqr_fence_scores(x, cfg.iqr_multiplier)
            else:
                notes.append("fallback_series_too_short")
                z_flags = np.zeros(x.size, dtype=bool)
                z_scores = np.zeros(x.size)
        else:
            z_flags = np.zeros(x.size, dtype=bool)
            z_scores = np.zeros(x.size)

    if cfg.method == "robust_z":
        return z_flags, z_scores, notes
    i_scores, i_flags = iqr_fence_scores(x, cfg.iqr_multiplier)
    if cfg.method == "iqr":
        return i_flags, i_scores, notes
    # union: flag set union, scores the pointwise max
    return z_flags | i_flags, np.maximum(z_scores, i_scores), notes


def _runs(flags: np.ndarray, min_run: int) -> list[tuple[int, int]]:
    """Maximal runs [first, last] (inclusive) of flagged indices, length >= min_run."""
    runs = []
    start = None
    for i, f in enumerate(flags):
        if f and start is None:
            start = i
        elif not f and start is not None:
            if i - start >= min_run:
                runs.append((start, i - 1))
            start = None
    if start is not None and len(flags) - start >= min_run:
        runs.append((start, len(flags) - 1))
    return runs


def _events_for_channel(
    flow: FlowRecord, channel: str, cfg: SDConfig
) -> tuple[list[SDEvent], list[str]]:
    if channel == "delay":
        x = np.asarray(flow.durations(), dtype=float)
        index_offset = 0  # series index i maps to measurement i
    else:
        if len(flow.measurements) < 3:
            raise SeriesTooShort(
                f"flow {flow.flow_id}: jitter channel needs >= 3 measurements"
            )
        x = np.asarray(jitter_of(flow).values, dtype=float)
        index_offset = 1  # jitter i maps to the later measurement i+1

    flags, scores, notes = _channel_flags(x, cfg)
    events = []
    for first, last in _runs(flags, cfg.min_run):
        m_first = flow.measurements[first + index_offset]
        m_last = flow.measurements[last + index_offset]
        start, end = m_first.start_ts, m_last.end_ts
        events.append(
            SDEvent(
                start_ts=start,
                end_ts=end,
                center_ts=(start + end) // 2,
                channel=channel,
                peak_score=float(np.max(scores[first : last + 1])),
            )
        )
    return events, notes


def detect_sd_events(flow: FlowRecord, cfg: SDConfig) -> list[SDEvent]:
    """Detect SD events in one flow; events sorted by (start_ts, channel)."""
    events, _ = detect_sd_events_with_notes(flow, cfg)
    return events


def detect_sd_events_with_notes(
    flow: FlowRecord, cfg: SDConfig
) -> tuple[list[SDEvent], list[str]]:
    channels = ("delay", "jitter") if cfg.channel == "either" else (cfg.channel,)
    all_events: list[SDEvent] = []
    all_notes: list[str] = []
    for ch in channels:
        ev, notes = _events_for_channel(flow, ch, cfg)
        all_events.extend(ev)
        all_notes.extend(f"{ch}:{n}" for n in notes)
    all_events.sort(key=lambda e: (e.start_ts, e.channel))
    return all_events, all_notes


def split_no_segment(
    flow: FlowRecord, events: list[SDEvent], split: ONOSplit
) -> tuple[SDEvent, ...]:
    """Events whose start falls at/after the O/NO transition instant.

    Flows with <= m measurements never offload: empty result.
    """
    if len(flow.measurements) <= split.m:
        return ()
    transition = flow.measurements[split.m - 1].end_ts
    return tuple(e for e in events if e.start_ts >= transition)


def label_flowset(
    flows: FlowSet, cfg: SDConfig, split: ONOSplit
) -> list[LabeledFlow]:
    """Label every flow; per-flow failures become annotations, never aborts.

    Output sorted by flow_id.
    """
    out = []
    for flow in sorted(flows.flows, key=lambda f: f.flow_id):
        try:
            events, notes = detect_sd_events_with_notes(flow, cfg)
        except SeriesTooShort as exc:
            out.append(LabeledFlow(flow, (), (), (f"error:{exc}",)))
            continue
        out.append(
            LabeledFlow(
                flow,
                tuple(events),
                split_no_segment(flow, events, split),
                tuple(notes),
            )
        )
    return out
