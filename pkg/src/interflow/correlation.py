"""Correlation windows and covering-flow enumeration.

A target flow's correlation window opens at its O/NO transition and closes
at flow start + active_timeout, i.e. it lasts active_timeout minus the time
spent observable. A candidate flow covers the target when at least one of
its observable measurements (indices 1..m) lies entirely inside the window;
it is fully contained when all of them do, otherwise it overlaps partially.

An alternative bound that closes the window at the start of the target's
first measurement plus the window duration is available behind
``literal_bound=True``; the default follows the transition-anchored
definition.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyWindow, NeverOffloaded
from .flow_model import FlowRecord, FlowSet, ONOSplit

DEFAULT_ACTIVE_TIMEOUT_S = 300


@dataclass(frozen=True)
class CorrelationWindow:
    target_id: str
    start_ts: int  # end of the target's m-th measurement
    end_ts: int
    delta_t: int  # end_ts - start_ts


@dataclass(frozen=True)
class CoveringMatch:
    target_id: str
    covering_id: str
    overlap_class: str  # "fully_contained" | "partial_overlap"
    in_window_indices: tuple[int, ...]  # 1-based observable measurement indices
    first_start_ts: int  # start of the earliest in-window measurement

FULLY_CONTAINED = "fully_contained"
PARTIAL_OVERLAP = "partial_overlap"


def observable_count(flow: FlowRecord, split: ONOSplit) -> int:
    return min(split.m, len(flow.measurements))


def ono_split(flow: FlowRecord, split: ONOSplit) -> tuple[range, int]:
    """Observable index range 1..m and the O/NO transition instant.

    The transition happens at the end of measurement m. Flows with <= m
    measurements never offload and are usable only as covering flows.
    """
    if len(flow.measurements) <= split.m:
        raise NeverOffloaded(
            f"flow {flow.flow_id}: {len(flow.measurements)} measurements, "
            f"needs > {split.m} to enter the non-observable state"
        )
    return range(1, split.m + 1), flow.measurements[split.m - 1].end_ts


def correlation_window(
    target: FlowRecord,
    split: ONOSplit,
    active_timeout: int,
    literal_bound: bool = False,
) -> CorrelationWindow:
    """Window over which covering flows are sought for one target."""
    _, transition = ono_split(target, split)
    observable_span = transition - target.start_ts
    delta_t = active_timeout - observable_span
    if delta_t <= 0:
        raise EmptyWindow(
            f"flow {target.flow_id}: active_timeout {active_timeout} <= "
            f"observable span {observable_span}"
        )
    if literal_bound:
        end = target.start_ts + delta_t
    else:
        end = target.start_ts + active_timeout
    return CorrelationWindow(target.flow_id, transition, end, end - transition)


class _ObsCache:
    """Per-flow numpy arrays of observable measurement starts/ends."""

    def __init__(self, split: ONOSplit):
        self.split = split
        self._cache: dict[str, tuple[np.ndarray, np.ndarray]] = {}

    def get(self, flow: FlowRecord) -> tuple[np.ndarray, np.ndarray]:
        hit = self._cache.get(flow.flow_id)
        if hit is None:
            n = observable_count(flow, self.split)
            starts = np.fromiter(
                (m.start_ts for m in flow.measurements[:n]), dtype=np.int64, count=n
            )
            ends = starts + np.fromiter(
                (m.duration for m in flow.measurements[:n]), dtype=np.int64, count=n
            )
            hit = (starts, ends)
            self._cache[flow.flow_id] = hit
        return hit


def _match_candidate(
    window: CorrelationWindow,
    cand: FlowRecord,
    starts: np.ndarray,
    ends: np.ndarray,
) -> CoveringMatch | None:
    inside = (starts >= window.start_ts) & (ends <= window.end_ts)
    if not inside.any():
        return None
    idx = np.nonzero(inside)[0]
    cls = FULLY_CONTAINED if idx.size == starts.size else PARTIAL_OVERLAP
    return CoveringMatch(
        target_id=window.target_id,
        covering_id=cand.flow_id,
        overlap_class=cls,
        in_window_indices=tuple(int(i) + 1 for i in idx),
        first_start_ts=int(starts[idx[0]]),
    )


def find_covering(
    window: CorrelationWindow,
    candidates: FlowSet,
    split: ONOSplit,
    _cache: _ObsCache | None = None,
) -> list[CoveringMatch]:
    """Enumerate covering flows for one window.

    Output sorted by first in-window measurement start, then flow_id. The
    target itself must not be among the candidates.
    """
    cache = _cache or _ObsCache(split)
    matches = []
    for cand in candidates.flows:
        if cand.flow_id == window.target_id:
            continue
        starts, ends = cache.get(cand)
        m = _match_candidate(window, cand, starts, ends)
        if m is not None:
            matches.append(m)
    matches.sort(key=lambda m: (m.first_start_ts, m.covering_id))
    return matches


class FlowIntervalIndex:
    """Static interval tree over every flow's observable-segment extent.

    Supports overlap queries by time interval; used to prune covering-flow
    candidates. Query results always equal the brute-force linear scan.
    """

    def __init__(self, flows: FlowSet, split: ONOSplit):
        self.split = split
        self.cache = _ObsCache(split)
        items = []
        for f in flows.flows:
            starts, ends = self.cache.get(f)
            items.append((int(starts[0]), int(ends[-1]), f))
        self._root = _Node.build(items)

    def query(self, start_ts: int, end_ts: int) -> list[FlowRecord]:
        """Flows whose observable extent overlaps [start_ts, end_ts]."""
        out: list[FlowRecord] = []
        if self._root is not None:
            self._root.query(start_ts, end_ts, out)
        return out


class _Node:
    __slots__ = ("center", "by_start", "by_end", "left", "right")

    def __init__(self, center, by_start, by_end, left, right):
        self.center = center
        self.by_start = by_start  # intervals overlapping center, sorted by start
        self.by_end = by_end  # same intervals, sorted by descending end
        self.left = left
        self.right = right

    @classmethod
    def build(cls, items):
        if not items:
            return None
        endpoints = sorted(s for s, _, _ in items)
        center = endpoints[len(endpoints) // 2]
        here = [it for it in items if it[0] <= center <= it[1]]
        left = [it for it in items if it[1] < center]
        right = [it for it in items if it[0] > center]
        return cls(
            center,
            sorted(here, key=lambda it: it[0]),
            sorted(here, key=lambda it: -it[1]),
            cls.build(left),
            cls.build(right),
        )

    def query(self, qs, qe, out):
        if qe < self.center:
            # only intervals starting at or before qe can overlap
            for s, e, f in self.by_start:
                if s > qe:
                    break
                out.append(f)
            if self.left is not None:
                self.left.query(qs, qe, out)
        elif qs > self.center:
            for s, e, f in self.by_end:
                if e < qs:
                    break
                out.append(f)
            if self.right is not None:
                self.right.query(qs, qe, out)
        else:
            for _, _, f in self.by_start:
                out.append(f)
            if self.left is not None:
                self.left.query(qs, qe, out)
            if self.right is not None:
                self.right.query(qs, qe, out)


class _PackedObs:
    """All observable measurements packed into flat columns.

    One containment test per window is then two vectorized comparisons over
    the whole population instead of a per-candidate scan; the per-flow
    grouping reproduces find_covering's output exactly.
    """

    def __init__(self, flows: FlowSet, split: ONOSplit, cache: _ObsCache | None = None):
        cache = cache or _ObsCache(split)
        self.flow_ids: list[str] = []
        starts, ends, offsets = [], [], []
        total = 0
        for f in flows.flows:
            s, e = cache.get(f)
            self.flow_ids.append(f.flow_id)
            offsets.append(total)
            total += s.size
            starts.append(s)
            ends.append(e)
        offsets.append(total)
        self.starts = (
            np.concatenate(starts) if starts else np.empty(0, dtype=np.int64)
        )
        self.ends = np.concatenate(ends) if ends else np.empty(0, dtype=np.int64)
        self.offsets = np.asarray(offsets, dtype=np.int64)

    def matches(self, window: CorrelationWindow) -> list[CoveringMatch]:
        inside = (self.starts >= window.start_ts) & (self.ends <= window.end_ts)
        sel = np.flatnonzero(inside)
        if sel.size == 0:
            return []
        flow_of = np.searchsorted(self.offsets, sel, side="right") - 1
        uniq, first, counts = np.unique(flow_of, return_index=True, return_counts=True)
        out = []
        for j, f0, c in zip(uniq, first, counts):
            fid = self.flow_ids[j]
            if fid == window.target_id:
                continue
            base = self.offsets[j]
            obs_n = self.offsets[j + 1] - base
            idxs = sel[f0 : f0 + c] - base + 1
            out.append(
                CoveringMatch(
                    target_id=window.target_id,
                    covering_id=fid,
                    overlap_class=FULLY_CONTAINED if c == obs_n else PARTIAL_OVERLAP,
                    in_window_indices=tuple(int(i) for i in idxs),
                    first_start_ts=int(self.starts[sel[f0]]),
                )
            )
        out.sort(key=lambda m: (m.first_start_ts, m.covering_id))
        return out


def eligible_targets(
    flows: FlowSet, split: ONOSplit, active_timeout: int
) -> list[tuple[FlowRecord, CorrelationWindow]]:
    """Flows that offload and whose correlation window is non-empty."""
    out = []
    for f in sorted(flows.flows, key=lambda f: f.flow_id):
        try:
            out.append((f, correlation_window(f, split, active_timeout)))
        except (NeverOffloaded, EmptyWindow):
            continue
    return out


def build_correlation_space(
    flows: FlowSet,
    split: ONOSplit,
    active_timeout: int,
    index: FlowIntervalIndex | None = None,
) -> list[tuple[str, list[CoveringMatch]]]:
    """One entry per eligible target, sorted by target flow_id.

    Runs a packed column scan over all observable measurements, which is
    equal to the all-pairs find_covering enumeration by construction. An
    existing FlowIntervalIndex can be passed to reuse its measurement
    cache.
    """
    packed = _PackedObs(flows, split, cache=index.cache if index else None)
    space = []
    for target, window in eligible_targets(flows, split, active_timeout):
        space.append((target.flow_id, packed.matches(window)))
    return space
