"""Concatenated feature-vector construction.

One row per eligible target flow: an intra-flow block computed from the
observable segment, K covering-flow blocks (first K fully contained
coverings by arrival, sentinel-padded when fewer exist), and per-app-type
counts over all coverings. Trailing columns carry the classification label
and the regression targets.

Width formula, published here so it is checkable:

    INTRA(m) = 14 + 2m + A + C        (A app one-hot, C conn binary columns)
    COV(m)   = 14 + 2m                (includes the slot missing-indicator)
    TOTAL    = INTRA(m) + K * COV(m) + A

All time-valued features are converted to seconds at this boundary;
everything upstream stays in integer nanoseconds.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .correlation import (
    FULLY_CONTAINED,
    CorrelationWindow,
    CoveringMatch,
    correlation_window,
    observable_count,
    ono_split,
)
from .errors import ConstraintViolation, InsufficientData, SchemaMismatch
from .flow_model import NS_PER_S, ONOSplit, Taxonomy
from .sd_labeling import (
    LabeledFlow,
    SDConfig,
    iqr_fence_scores,
    robust_z_scores,
)

LABEL_COLUMNS = ("label_sd", "sd_count", "longest_len_s", "longest_start_s", "longest_end_s")

# Clamp for the degenerate-spread branches of the proximity score.
_SCORE_CLAMP = 1e6

_STAT_NAMES = ("mean", "std", "min", "max", "median")


@dataclass(frozen=True)
class FeatureSchema:
    m: int
    k: int
    taxonomy: Taxonomy
    columns: tuple[str, ...]

    @property
    def total_width(self) -> int:
        return len(self.columns)


def intra_width(m: int, taxonomy: Taxonomy) -> int:
    a = len(taxonomy.app_types)
    c = len(taxonomy.conn_types) - 1
    return 14 + 2 * m + a + c


def covering_width(m: int) -> int:
    return 14 + 2 * m


def make_schema(m: int, k: int = 30, taxonomy: Taxonomy = Taxonomy()) -> FeatureSchema:
    cols: list[str] = []
    for ch in ("d", "j"):
        cols += [f"{ch}_{s}" for s in _STAT_NAMES]
    cols += ["o_sd_count", "o_sd_total_s", "split_sd_o", "o_duration_s"]
    cols += [f"d_{i}" for i in range(1, m + 1)]
    cols += [f"j_{i}" for i in range(1, m + 1)]
    cols += [f"app_{a}" for a in taxonomy.app_types]
    cols += [f"conn_{c}" for c in taxonomy.conn_types[1:]]
    for slot in range(1, k + 1):
        p = f"cov{slot:02d}_"
        for ch in ("d", "j"):
            cols += [f"{p}{ch}_{s}" for s in _STAT_NAMES]
        cols += [f"{p}o_sd_count", f"{p}o_sd_total_s", f"{p}rel_start_s", f"{p}missing"]
        cols += [f"{p}d_{i}" for i in range(1, m + 1)]
        cols += [f"{p}j_{i}" for i in range(1, m + 1)]
    cols += [f"appcount_{a}" for a in taxonomy.app_types]
    assert len(cols) == intra_width(m, taxonomy) + k * covering_width(m) + len(
        taxonomy.app_types
    )
    return FeatureSchema(m=m, k=k, taxonomy=taxonomy, columns=tuple(cols))


@dataclass(frozen=True)
class FeatureVector:
    target_id: str
    values: np.ndarray
    label_sd: int
    targets: tuple[float, float, float, float]  # sd_count, len_s, start_s, end_s


def _series_stats(x: np.ndarray) -> list[float]:
    """mean, std, min, max, median; zeros for an empty series."""
    if x.size == 0:
        return [0.0] * 5
    return [
        float(x.mean()),
        float(x.std()),
        float(x.min()),
        float(x.max()),
        float(np.median(x)),
    ]


def _padded_raw(x: np.ndarray, m: int, lead_zero: bool = False) -> list[float]:
    vals = ([0.0] if lead_zero else []) + [float(v) for v in x]
    vals = vals[:m]
    return vals + [0.0] * (m - len(vals))


def _threshold_margin(x: np.ndarray, cfg: SDConfig) -> float:
    """Signed distance of the last sample from the active SD threshold.

    Positive means the last observable sample already breaches the
    threshold; negative means headroom remains.
    """
    if x.size == 0:
        return 0.0
    margins = []
    if cfg.method in ("robust_z", "union"):
        z = robust_z_scores(x)
        if z is not None:
            margins.append(float(z[-1]) - cfg.z_threshold)
    if cfg.method in ("iqr", "union") or not margins:
        if x.size >= 4:
            scores, _ = iqr_fence_scores(x, cfg.iqr_multiplier)
            margins.append(float(scores[-1]) - cfg.iqr_multiplier)
    if not margins:
        return 0.0
    margin = max(margins)
    return max(-_SCORE_CLAMP, min(_SCORE_CLAMP, margin))


def _obs_series(lf: LabeledFlow, split: ONOSplit) -> tuple[np.ndarray, np.ndarray]:
    n = observable_count(lf.flow, split)
    delays = np.asarray([m.duration for m in lf.flow.measurements[:n]], dtype=float)
    jitter = np.abs(np.diff(delays))
    return delays, jitter


def _obs_event_stats(lf: LabeledFlow) -> tuple[int, float]:
    events = lf.observable_events()
    total_s = sum((e.end_ts - e.start_ts) for e in events) / NS_PER_S
    return len(events), total_s


def intra_features(
    target: LabeledFlow,
    split: ONOSplit,
    cfg: SDConfig = SDConfig(),
    taxonomy: Taxonomy = Taxonomy(),
) -> np.ndarray:
    """Intra-flow block from the observable segment only."""
    ono_split(target.flow, split)  # raises NeverOffloaded for ineligible flows
    delays, jitter = _obs_series(target, split)
    n_events, total_s = _obs_event_stats(target)
    obs_duration_s = (
        target.flow.measurements[split.m - 1].end_ts - target.flow.start_ts
    ) / NS_PER_S
    proximity = max(_threshold_margin(delays, cfg), _threshold_margin(jitter, cfg))
    vals = (
        _series_stats(delays / NS_PER_S)
        + _series_stats(jitter / NS_PER_S)
        + [float(n_events), total_s, proximity, obs_duration_s]
        + _padded_raw(delays / NS_PER_S, split.m)
        + _padded_raw(jitter / NS_PER_S, split.m, lead_zero=True)
    )
    vals += [1.0 if target.flow.app_type == a else 0.0 for a in taxonomy.app_types]
    vals += [
        1.0 if target.flow.conn_type == c else 0.0 for c in taxonomy.conn_types[1:]
    ]
    return np.asarray(vals, dtype=float)


def covering_block(
    match: CoveringMatch,
    covering: LabeledFlow,
    window: CorrelationWindow,
    split: ONOSplit,
) -> np.ndarray:
    """One covering-flow slot; only fully contained coverings are accepted."""
    if match.overlap_class != FULLY_CONTAINED:
        raise ConstraintViolation(
            f"covering {match.covering_id} is {match.overlap_class}; "
            "feature slots accept fully contained coverings only"
        )
    delays, jitter = _obs_series(covering, split)
    n_events, total_s = _obs_event_stats(covering)
    rel_start_s = (covering.flow.start_ts - window.start_ts) / NS_PER_S
    vals = (
        _series_stats(delays / NS_PER_S)
        + _series_stats(jitter / NS_PER_S)
        + [float(n_events), total_s, rel_start_s, 0.0]  # missing-indicator 0
        + _padded_raw(delays / NS_PER_S, split.m)
        + _padded_raw(jitter / NS_PER_S, split.m, lead_zero=True)
    )
    return np.asarray(vals, dtype=float)


def _sentinel_block(m: int) -> np.ndarray:
    block = np.zeros(covering_width(m))
    block[13] = 1.0  # missing-indicator
    return block


def _targets_from_events(
    target: LabeledFlow, window: CorrelationWindow
) -> tuple[int, tuple[float, float, float, float]]:
    events = target.no_segment_events
    if not events:
        return 0, (0.0, 0.0, 0.0, 0.0)
    # longest by duration; equal durations tie toward the earliest start
    longest = sorted(events, key=lambda e: (-(e.end_ts - e.start_ts), e.start_ts))[0]
    return 1, (
        float(len(events)),
        (longest.end_ts - longest.start_ts) / NS_PER_S,
        (longest.start_ts - window.start_ts) / NS_PER_S,
        (longest.end_ts - window.start_ts) / NS_PER_S,
    )


def build_matrix(
    labeled: list[LabeledFlow],
    space: list[tuple[str, list[CoveringMatch]]],
    schema: FeatureSchema,
    active_timeout: int,
    cfg: SDConfig = SDConfig(),
) -> list[FeatureVector]:
    """One FeatureVector per space entry, ordered by target flow_id."""
    by_id = {lf.flow.flow_id: lf for lf in labeled}
    split = ONOSplit(schema.m)
    rows = []
    for target_id, matches in sorted(space):
        target = by_id[target_id]
        window = correlation_window(target.flow, split, active_timeout)
        blocks = [intra_features(target, split, cfg, schema.taxonomy)]
        contained = [m for m in matches if m.overlap_class == FULLY_CONTAINED]
        for m in contained[: schema.k]:
            blocks.append(covering_block(m, by_id[m.covering_id], window, split))
        for _ in range(schema.k - len(contained[: schema.k])):
            blocks.append(_sentinel_block(schema.m))
        app_counts = {a: 0 for a in schema.taxonomy.app_types}
        for m in matches:
            app_counts[by_id[m.covering_id].flow.app_type] += 1
        blocks.append(
            np.asarray([float(app_counts[a]) for a in schema.taxonomy.app_types])
        )
        values = np.concatenate(blocks)
        if values.size != schema.total_width:
            raise SchemaMismatch(
                f"row width {values.size} != schema width {schema.total_width}"
            )
        label, targets = _targets_from_events(target, window)
        rows.append(FeatureVector(target_id, values, label, targets))
    return rows


def train_test_split(
    rows: list[FeatureVector],
    fraction: float,
    balance: bool,
    seed: int,
) -> tuple[list[FeatureVector], list[FeatureVector]]:
    """Deterministic seeded split; optional per-partition class balancing."""
    rng = np.random.default_rng(seed)
    pos = [r for r in rows if r.label_sd == 1]
    neg = [r for r in rows if r.label_sd == 0]
    if balance and (len(pos) < 2 or len(neg) < 2):
        raise InsufficientData(
            f"balancing needs >= 2 rows per class, got {len(pos)}/{len(neg)}"
        )
    train: list[FeatureVector] = []
    test: list[FeatureVector] = []
    parts: dict[str, list[list[FeatureVector]]] = {"train": [], "test": []}
    for cls_rows in (pos, neg):
        order = rng.permutation(len(cls_rows))
        n_train = round(fraction * len(cls_rows))
        parts["train"].append([cls_rows[i] for i in order[:n_train]])
        parts["test"].append([cls_rows[i] for i in order[n_train:]])
    for name, out in (("train", train), ("test", test)):
        a, b = parts[name]
        if balance:
            n = min(len(a), len(b))
            a, b = a[:n], b[:n]
        out.extend(a)
        out.extend(b)
        out.sort(key=lambda r: r.target_id)
    return train, test
