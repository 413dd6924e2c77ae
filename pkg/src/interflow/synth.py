"""Synthetic gateway-trace generation with controllable congestion.

Flows arrive by a Poisson process, carry periodic delay measurements drawn
from a lognormal base, and congestion episodes multiplicatively inflate the
delays of participating flows after a per-flow lag. The lag is the control
knob that plants a known precedence between covering-flow and target-flow
degradation.

Randomness comes from a single numpy PCG64 generator seeded with a 64-bit
integer; identical configs produce identical flow sets byte for byte.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, UnknownPreset
from .flow_model import (
    APP_TYPES,
    CONN_TYPES,
    NS_PER_MS,
    NS_PER_S,
    DelayMeasurement,
    FlowRecord,
    FlowSet,
)


@dataclass(frozen=True)
class CongestionEpisode:
    start_s: float
    duration_s: float
    delay_multiplier: float
    participation_prob: float
    per_flow_lag_s: tuple[float, float] = (0.0, 0.0)
    # "absolute": start_s is trace time; "flow": start_s is an offset from
    # each participating flow's own start (per-flow planted episodes).
    anchor: str = "absolute"
    # participate iff the flow participated in the episode at this index
    # (lets a precursor and a main episode hit the same flows)
    linked_to: int | None = None

    def __post_init__(self):
        if self.delay_multiplier <= 1:
            raise ConfigError("delay_multiplier must be > 1")
        if not 0 <= self.participation_prob <= 1:
            raise ConfigError("participation_prob must be in [0, 1]")
        if self.anchor not in ("absolute", "flow"):
            raise ConfigError(f"unknown anchor {self.anchor!r}")


@dataclass(frozen=True)
class TrafficGroup:
    """One arrival population; presets compose several to shape scenarios."""

    name: str
    arrival_rate_per_s: float
    arrival_start_s: float
    arrival_end_s: float
    measurements_per_flow: tuple[int, int]
    measurement_period_ms: tuple[float, float]
    n_max: int | None = None
    # None: draw the lag from each episode's own range
    lag_override_s: tuple[float, float] | None = None


@dataclass(frozen=True)
class ScriptedFlow:
    """Fully explicit flow for hand-built scenes."""

    flow_id: str
    start_s: float
    period_s: float
    n_measurements: int
    duration_ms: float
    app_type: str = "web"
    conn_type: str = "tcp"


@dataclass(frozen=True)
class SynthConfig:
    n_flows: int
    horizon_s: float
    arrival_rate_per_s: float
    measurements_per_flow: tuple[int, int] = (10, 30)
    base_delay_ms: tuple[float, float] = (math.log(10.0), 0.3)  # lognormal mu, sigma
    measurement_period_ms: tuple[float, float] = (500.0, 1500.0)
    congestion: tuple[CongestionEpisode, ...] = ()
    app_mix: tuple[float, ...] = (0.5, 0.3, 0.2)
    seed: int = 0
    extra_groups: tuple[TrafficGroup, ...] = ()
    scripted: tuple[ScriptedFlow, ...] = ()

    def __post_init__(self):
        if abs(sum(self.app_mix) - 1.0) > 1e-9:
            raise ConfigError("app_mix must sum to 1")
        if len(self.app_mix) != len(APP_TYPES):
            raise ConfigError("app_mix length must match the app taxonomy")
        if self.horizon_s <= 0 or self.arrival_rate_per_s < 0:
            raise ConfigError("horizon and rate must be positive")
        lo, hi = self.measurements_per_flow
        if lo < 1 or hi < lo:
            raise ConfigError("bad measurements_per_flow range")
        lo, hi = self.measurement_period_ms
        if lo <= 0 or hi < lo:
            raise ConfigError("bad measurement_period_ms range")


@dataclass(frozen=True)
class Participation:
    flow_id: str
    episode_index: int
    lag_s: float


def _default_group(cfg: SynthConfig) -> TrafficGroup:
    return TrafficGroup(
        name="f",
        arrival_rate_per_s=cfg.arrival_rate_per_s,
        arrival_start_s=0.0,
        arrival_end_s=cfg.horizon_s,
        measurements_per_flow=cfg.measurements_per_flow,
        measurement_period_ms=cfg.measurement_period_ms,
        n_max=cfg.n_flows or None,
    )


def _gen_group(
    group: TrafficGroup,
    cfg: SynthConfig,
    rng: np.random.Generator,
) -> tuple[list[FlowRecord], list[Participation]]:
    flows: list[FlowRecord] = []
    truth: list[Participation] = []
    t = group.arrival_start_s
    i = 0
    while True:
        if group.arrival_rate_per_s <= 0:
            break
        t += rng.exponential(1.0 / group.arrival_rate_per_s)
        if t >= group.arrival_end_s:
            break
        if group.n_max is not None and i >= group.n_max:
            break
        flow_id = f"{group.name}{i:06d}"
        n = int(rng.integers(group.measurements_per_flow[0],
                             group.measurements_per_flow[1] + 1))
        period_ns = int(
            rng.uniform(*group.measurement_period_ms) * NS_PER_MS
        )
        app = APP_TYPES[rng.choice(len(cfg.app_mix), p=cfg.app_mix)]
        conn = CONN_TYPES[int(rng.integers(0, 2))]
        start_ns = int(t * NS_PER_S)
        starts = start_ns + period_ns * np.arange(n, dtype=np.int64)
        mu, sigma = cfg.base_delay_ms
        delays_ms = rng.lognormal(mu, sigma, size=n)

        participated: dict[int, bool] = {}
        for ep_idx, ep in enumerate(cfg.congestion):
            if ep.linked_to is not None:
                joins = participated.get(ep.linked_to, False)
            else:
                joins = rng.random() < ep.participation_prob
            participated[ep_idx] = joins
            if not joins:
                continue
            if group.lag_override_s is not None:
                lag = rng.uniform(*group.lag_override_s)
            else:
                lag = rng.uniform(*ep.per_flow_lag_s)
            ep_start_s = ep.start_s + (t if ep.anchor == "flow" else 0.0)
            lo = (ep_start_s + lag) * NS_PER_S
            hi = lo + ep.duration_s * NS_PER_S
            mask = (starts >= lo) & (starts < hi)
            if mask.any():
                delays_ms = np.where(mask, delays_ms * ep.delay_multiplier, delays_ms)
            truth.append(Participation(flow_id, ep_idx, lag))

        measurements = tuple(
            DelayMeasurement(int(s), max(0, int(d * NS_PER_MS)))
            for s, d in zip(starts, delays_ms)
        )
        flows.append(FlowRecord(flow_id, app, conn, measurements))
        i += 1
    return flows, truth


def _gen_scripted(sf: ScriptedFlow) -> FlowRecord:
    start = int(sf.start_s * NS_PER_S)
    period = int(sf.period_s * NS_PER_S)
    dur = int(sf.duration_ms * NS_PER_MS)
    return FlowRecord(
        sf.flow_id,
        sf.app_type,
        sf.conn_type,
        tuple(
            DelayMeasurement(start + i * period, dur) for i in range(sf.n_measurements)
        ),
    )


def generate(cfg: SynthConfig) -> tuple[FlowSet, list[Participation]]:
    """Deterministic flow set plus episode-participation ground truth."""
    rng = np.random.default_rng(cfg.seed)
    flows: list[FlowRecord] = [_gen_scripted(sf) for sf in cfg.scripted]
    truth: list[Participation] = []
    groups = (
        [_default_group(cfg)] if cfg.arrival_rate_per_s > 0 else []
    ) + list(cfg.extra_groups)
    for group in groups:
        gf, gt = _gen_group(group, cfg, rng)
        flows.extend(gf)
        truth.extend(gt)
    flows.sort(key=lambda f: f.flow_id)
    truth.sort(key=lambda p: (p.flow_id, p.episode_index))
    return FlowSet(tuple(flows)), truth


# Hand-built seven-flow scene for the overlap taxonomy (built for m=5 and a
# 300 s active timeout). Target ft: window opens at 8.01 s, closes at 300 s.
_FIG1_FLOWS = (
    ScriptedFlow("ft", start_s=0.0, period_s=2.0, n_measurements=20, duration_ms=10.0),
    # partial: observable measurements at 4,6,8 start before the window opens
    ScriptedFlow("fa", start_s=4.0, period_s=2.0, n_measurements=8, duration_ms=10.0),
    # fully contained
    ScriptedFlow("fb", start_s=50.0, period_s=1.0, n_measurements=10, duration_ms=10.0, app_type="video"),
    ScriptedFlow("fc", start_s=100.0, period_s=1.0, n_measurements=6, duration_ms=10.0, app_type="other", conn_type="udp"),
    # partial: observable measurements starting at/after 300 s fall outside
    ScriptedFlow("fd", start_s=292.0, period_s=4.0, n_measurements=8, duration_ms=10.0),
    # non-contributing: all observable measurements end before the window opens
    ScriptedFlow("fe", start_s=1.0, period_s=0.5, n_measurements=5, duration_ms=10.0),
    # non-contributing: observable segment entirely after the window closes
    ScriptedFlow("fnext", start_s=301.0, period_s=1.0, n_measurements=8, duration_ms=10.0),
)

PRESETS = ("fig1_scene", "alignment_lag", "sparse_sd", "dense", "planted_signal")


def scenario_presets(name: str, seed: int = 0, lag_s: float = 60.0) -> SynthConfig:
    """Documented configs used by the acceptance tests."""
    if name == "fig1_scene":
        return SynthConfig(
            n_flows=len(_FIG1_FLOWS),
            horizon_s=400.0,
            arrival_rate_per_s=0.0,
            scripted=_FIG1_FLOWS,
            seed=seed,
        )
    if name == "alignment_lag":
        # Long-lived subject flows finish their observable segment early and
        # degrade lag_s after the episode; short sensor flows degrade at the
        # episode itself, so covering SD centers precede target centers by
        # roughly lag_s.
        return SynthConfig(
            n_flows=0,
            horizon_s=300.0,
            arrival_rate_per_s=0.0,
            base_delay_ms=(math.log(10.0), 0.25),
            congestion=(
                CongestionEpisode(
                    start_s=30.0,
                    duration_s=6.0,
                    delay_multiplier=10.0,
                    participation_prob=1.0,
                ),
            ),
            extra_groups=(
                TrafficGroup(
                    name="tgt",
                    arrival_rate_per_s=3.0,
                    arrival_start_s=0.0,
                    arrival_end_s=10.0,
                    # long enough to still be active lag_s after the episode
                    measurements_per_flow=(110, 110),
                    measurement_period_ms=(1000.0, 1000.0),
                    lag_override_s=(lag_s, lag_s),
                ),
                TrafficGroup(
                    name="sens",
                    arrival_rate_per_s=2.0,
                    arrival_start_s=0.0,
                    arrival_end_s=200.0,
                    measurements_per_flow=(10, 10),
                    measurement_period_ms=(1000.0, 1000.0),
                    lag_override_s=(0.0, 0.0),
                ),
            ),
            seed=seed,
        )
    if name == "sparse_sd":
        return SynthConfig(
            n_flows=0,
            horizon_s=600.0,
            arrival_rate_per_s=1.0,
            measurements_per_flow=(15, 30),
            measurement_period_ms=(500.0, 2000.0),
            base_delay_ms=(math.log(10.0), 0.25),
            congestion=tuple(
                CongestionEpisode(
                    start_s=s,
                    duration_s=20.0,
                    delay_multiplier=8.0,
                    participation_prob=0.08,
                )
                for s in (100.0, 300.0, 500.0)
            ),
            seed=seed,
        )
    if name == "dense":
        return SynthConfig(
            n_flows=1000,
            horizon_s=500.0,
            arrival_rate_per_s=2.5,
            measurements_per_flow=(10, 30),
            measurement_period_ms=(200.0, 1000.0),
            congestion=(
                CongestionEpisode(
                    start_s=150.0,
                    duration_s=30.0,
                    delay_multiplier=6.0,
                    participation_prob=0.3,
                ),
                CongestionEpisode(
                    start_s=350.0,
                    duration_s=30.0,
                    delay_multiplier=6.0,
                    participation_prob=0.3,
                ),
            ),
            seed=seed,
        )
    if name == "planted_signal":
        # Strong intra-flow signal: half the flows get a personal delay
        # inflation that starts inside the observable segment (m=5) and
        # extends into the non-observable one.
        return SynthConfig(
            n_flows=0,
            horizon_s=12000.0,
            arrival_rate_per_s=1.0,
            measurements_per_flow=(25, 35),
            measurement_period_ms=(500.0, 1000.0),
            base_delay_ms=(math.log(10.0), 0.3),
            congestion=(
                # precursor bump inside the observable segment
                CongestionEpisode(
                    start_s=1.0,
                    duration_s=1.5,
                    delay_multiplier=3.0,
                    participation_prob=0.5,
                    anchor="flow",
                ),
                # main degradation, strictly inside the non-observable segment
                CongestionEpisode(
                    start_s=6.0,
                    duration_s=4.0,
                    delay_multiplier=6.0,
                    participation_prob=1.0,
                    anchor="flow",
                    linked_to=0,
                ),
            ),
            seed=seed,
        )
    raise UnknownPreset(f"unknown preset {name!r} (known: {', '.join(PRESETS)})")
