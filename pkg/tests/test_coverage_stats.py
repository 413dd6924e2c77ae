"""Coverage statistics with planted-value oracles."""

import pytest

from flowbuild import make_flow, make_flowset
from interflow.correlation import build_correlation_space
from interflow.coverage_stats import (
    DistSummary,
    best_sd_alignment,
    covering_count_stats,
    emit_report,
    summarize,
    time_to_first_covering,
)
from interflow.errors import EmptyInput
from interflow.flow_model import NS_PER_S, ONOSplit
from interflow.sd_labeling import SDConfig, SDEvent, LabeledFlow, label_flowset
from interflow.synth import generate, scenario_presets

M5 = ONOSplit(5)
TIMEOUT = 300 * NS_PER_S


def _plain_labels(flows):
    return [LabeledFlow(f, (), ()) for f in flows.flows]


def build_targets_with_planted_counts(counts):
    flows = []
    for t_idx, c in enumerate(counts):
        base = t_idx * 10_000.0
        flows.append(make_flow(f"t{t_idx}", [10] * 8, start_s=base))
        for j in range(c):
            flows.append(
                make_flow(f"t{t_idx}c{j}", [10] * 5, start_s=base + 20 + j, period_s=0.5)
            )
    return make_flowset(*flows)


def test_summary_ordering_invariant():
    s = summarize([5.0, 1.0, 3.0, 2.0, 4.0, 9.0])
    assert s.min <= s.p10 <= s.p25 <= s.median <= s.p75 <= s.p90 <= s.max
    assert s.count == 6


def test_summarize_empty_raises():
    with pytest.raises(EmptyInput):
        summarize([])


def test_uniform_three_coverings_no_sd():
    flows = build_targets_with_planted_counts([3, 3, 3])
    space = build_correlation_space(flows, M5, TIMEOUT)
    labeled = _plain_labels(flows)
    stats = covering_count_stats(space, labeled)
    assert stats.all.mean == 3.0
    assert stats.sd_only.mean == 0.0


def test_planted_counts_1234():
    flows = build_targets_with_planted_counts([1, 2, 3, 4])
    space = build_correlation_space(flows, M5, TIMEOUT)
    stats = covering_count_stats(space, _plain_labels(flows))
    # oracle recount
    per_target = {tid: len(ms) for tid, ms in space}
    assert sorted(per_target.values()) == [1, 2, 3, 4]
    assert stats.all.mean == 2.5
    assert stats.all.median == 2.5


def test_empty_space_rejected():
    with pytest.raises(EmptyInput):
        covering_count_stats([], [])
    with pytest.raises(EmptyInput):
        time_to_first_covering([], [], M5, TIMEOUT)


def test_first_covering_at_window_start_zero_delay():
    target = make_flow("t", [10] * 8, start_s=0.0)
    window_start = target.measurements[4].end_ts
    cov = make_flow(
        "c", [10] * 5, start_s=window_start / NS_PER_S, period_s=0.5
    )
    flows = make_flowset(target, cov)
    space = build_correlation_space(flows, M5, TIMEOUT)
    stats = time_to_first_covering(space, _plain_labels(flows), M5, TIMEOUT)
    assert stats.per_target_generic_s["t"] == 0.0


def test_planted_first_covering_delays():
    flows = []
    for t_idx, delay_s in enumerate((1.0, 2.0, 3.0)):
        base = t_idx * 10_000.0
        target = make_flow(f"t{t_idx}", [10] * 8, start_s=base)
        ws = target.measurements[4].end_ts / NS_PER_S
        flows.append(target)
        flows.append(make_flow(f"t{t_idx}c", [10] * 5, start_s=ws + delay_s, period_s=0.5))
    fs = make_flowset(*flows)
    space = build_correlation_space(fs, M5, TIMEOUT)
    stats = time_to_first_covering(space, _plain_labels(fs), M5, TIMEOUT)
    assert stats.generic.mean == pytest.approx(2.0)
    assert stats.sd_first is None
    assert stats.excluded_sd == 3


def _with_events(lf_flow, centers_s, no_segment=False):
    events = tuple(
        SDEvent(
            int((c - 0.5) * NS_PER_S),
            int((c + 0.5) * NS_PER_S),
            int(c * NS_PER_S),
            "delay",
            5.0,
        )
        for c in centers_s
    )
    return LabeledFlow(lf_flow, events, events if no_segment else ())


def _alignment_scene(cov_centers_s, tgt_center_s=100.0):
    target = make_flow("t", [10] * 8, start_s=0.0)
    cov = make_flow("c", [10] * 5, start_s=20.0, period_s=0.5)
    flows = make_flowset(target, cov)
    space = build_correlation_space(flows, M5, TIMEOUT)
    labeled = [
        _with_events(target, [tgt_center_s], no_segment=True),
        _with_events(cov, cov_centers_s),
    ]
    return space, labeled


def test_identical_centers_zero_offset():
    space, labeled = _alignment_scene([100.0])
    stats = best_sd_alignment(space, labeled)
    assert stats.records[0].best_offset == 0


def test_min_abs_selection_preserves_sign():
    # covering SD at target-30 s and target+10 s -> +10 s wins
    space, labeled = _alignment_scene([70.0, 110.0])
    stats = best_sd_alignment(space, labeled)
    [rec] = stats.records
    assert rec.best_offset == 10 * NS_PER_S
    assert rec.pair_count == 2
    # brute-force confirmation: no pair with smaller magnitude
    offsets = [(c - 100.0) * NS_PER_S for c in (70.0, 110.0)]
    assert all(abs(rec.best_offset) <= abs(o) for o in offsets)


def test_tie_breaks_toward_negative():
    space, labeled = _alignment_scene([90.0, 110.0])
    stats = best_sd_alignment(space, labeled)
    assert stats.records[0].best_offset == -10 * NS_PER_S


def test_signed_min_selection_mode():
    space, labeled = _alignment_scene([70.0, 110.0])
    stats = best_sd_alignment(space, labeled, selection="signed_min")
    assert stats.records[0].best_offset == -30 * NS_PER_S


def test_targets_without_pairs_excluded():
    space, labeled = _alignment_scene([])
    stats = best_sd_alignment(space, labeled)
    assert stats.records == []
    assert stats.excluded == 1


def test_sd_counts_bounded_by_all_counts():
    flows, _ = generate(scenario_presets("sparse_sd", seed=1))
    labeled = label_flowset(flows, SDConfig(), ONOSplit(10))
    space = build_correlation_space(flows, ONOSplit(10), TIMEOUT)
    stats = covering_count_stats(space, labeled)
    for tid in stats.per_target_all:
        assert stats.per_target_sd[tid] <= stats.per_target_all[tid]


def test_emit_report_roundtrip_and_determinism(tmp_path):
    flows = build_targets_with_planted_counts([1, 2, 3, 4])
    space = build_correlation_space(flows, M5, TIMEOUT)
    labeled = _plain_labels(flows)
    counts = covering_count_stats(space, labeled)
    timeliness = time_to_first_covering(space, labeled, M5, TIMEOUT)
    for d in ("r1", "r2"):
        emit_report(tmp_path / d, counts=counts, timeliness=timeliness)
    for name in ("counts.csv", "counts_raw.csv", "timeliness.csv", "timeliness_raw.csv"):
        a = (tmp_path / "r1" / name).read_bytes()
        b = (tmp_path / "r2" / name).read_bytes()
        assert a == b
    # re-parse the summary line and compare against the DistSummary
    lines = (tmp_path / "r1" / "counts.csv").read_text().splitlines()
    header = lines[1].split(",")
    row = dict(zip(header, lines[2].split(",")))
    assert row["metric"] == "all"
    for f in DistSummary.FIELDS:
        assert float(row[f]) == pytest.approx(getattr(counts.all, f))
