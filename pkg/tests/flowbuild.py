"""Hand-built flow constructors shared across the test modules."""
from interflow.flow_model import (
    NS_PER_MS,
    NS_PER_S,
    DelayMeasurement,
    FlowRecord,
    FlowSet,
)


def make_flow(
    flow_id="f0",
    durations_ms=(10, 10, 10),
    start_s=0.0,
    period_s=1.0,
    app="web",
    conn="tcp",
):
    """Periodic flow with the given delay durations in milliseconds."""
    start = int(start_s * NS_PER_S)
    period = int(period_s * NS_PER_S)
    return FlowRecord(
        flow_id,
        app,
        conn,
        tuple(
            DelayMeasurement(start + i * period, int(d * NS_PER_MS))
            for i, d in enumerate(durations_ms)
        ),
    )


def make_flowset(*flows):
    return FlowSet(tuple(sorted(flows, key=lambda f: f.flow_id)))
