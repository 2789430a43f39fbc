"""In-network aggregation at cluster heads.

Members run DPS toward their head; the head summarizes the values it has
reconstructed (plus its own reading) and runs a second DPS instance on the
summary stream toward the sink.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from .dps import DpsTrace, run_dps
from .predictors import PredictorSpec
from .topology import Cluster, ClusterPlan

__all__ = [
    "AggregateFn",
    "ClusterPipelineResult",
    "PipelineResult",
    "aggregate",
    "run_cluster",
    "run_cluster_pipeline",
]


class AggregateFn(str, Enum):
    AVERAGE = "Average"
    MINIMUM = "Minimum"
    MAXIMUM = "Maximum"


def aggregate(values: Sequence[float], fn: AggregateFn | str) -> float:
    fn = AggregateFn(fn)
    if len(values) == 0:
        raise ValueError("cannot aggregate an empty value set")
    vals = [float(v) for v in values]
    if not all(math.isfinite(v) for v in vals):
        raise ValueError("aggregate inputs must be finite")
    if fn is AggregateFn.MINIMUM:
        return min(vals)
    if fn is AggregateFn.MAXIMUM:
        return max(vals)
    mean = sum(vals) / len(vals)
    # rounding can push a mean of equal values one ulp outside the range
    return min(max(mean, min(vals)), max(vals))


@dataclass(frozen=True)
class ClusterPipelineResult:
    head: int
    member_traces: dict[int, DpsTrace]
    true_aggregate: tuple[float, ...]
    head_aggregate: tuple[float, ...]
    sink_aggregate: tuple[float, ...]
    aggregate_trace: DpsTrace | None
    member_msgs: int
    head_to_sink_msgs: int
    baseline_msgs: int

    @property
    def total_msgs(self) -> int:
        return self.member_msgs + self.head_to_sink_msgs

    @property
    def reduction_pct(self) -> float:
        if self.baseline_msgs == 0:
            return 0.0
        return 100.0 * (1.0 - self.total_msgs / self.baseline_msgs)


@dataclass(frozen=True)
class PipelineResult:
    clusters: tuple[ClusterPipelineResult, ...]

    @property
    def member_msgs(self) -> int:
        return sum(c.member_msgs for c in self.clusters)

    @property
    def head_to_sink_msgs(self) -> int:
        return sum(c.head_to_sink_msgs for c in self.clusters)

    @property
    def baseline_msgs(self) -> int:
        return sum(c.baseline_msgs for c in self.clusters)

    @property
    def total_msgs(self) -> int:
        return self.member_msgs + self.head_to_sink_msgs

    @property
    def reduction_pct(self) -> float:
        if self.baseline_msgs == 0:
            return 0.0
        return 100.0 * (1.0 - self.total_msgs / self.baseline_msgs)

    @property
    def aggregate_traces(self) -> dict[int, DpsTrace | None]:
        return {c.head: c.aggregate_trace for c in self.clusters}


def run_cluster(
    cluster: Cluster,
    series: Mapping[int, Sequence[float]],
    spec: PredictorSpec,
    e_max: float,
    fn: AggregateFn | str = AggregateFn.AVERAGE,
    stage2_dps: bool = True,
) -> ClusterPipelineResult:
    fn = AggregateFn(fn)
    members = sorted(cluster.members)
    for m in members:
        if m not in series:
            raise KeyError(f"no series for node {m}")
    lengths = {len(series[m]) for m in members}
    if len(lengths) != 1:
        raise ValueError(f"member series lengths differ in cluster {cluster.head}: {sorted(lengths)}")
    t = lengths.pop()

    traces = {
        m: run_dps(series[m], spec, e_max, node_id=m) for m in members if m != cluster.head
    }
    # what the head knows at each epoch: reconstructions plus its own reading
    known = [
        series[m] if m == cluster.head else traces[m].reconstructed for m in members
    ]
    head_agg = tuple(aggregate([col[i] for col in known], fn) for i in range(t))
    true_agg = tuple(aggregate([series[m][i] for m in members], fn) for i in range(t))

    if stage2_dps and t > 0:
        agg_trace: DpsTrace | None = run_dps(head_agg, spec, e_max, node_id=cluster.head)
        sink_agg = agg_trace.reconstructed
        up = agg_trace.transmissions
    else:
        agg_trace, sink_agg, up = None, head_agg, t
    n = len(members)
    return ClusterPipelineResult(
        head=cluster.head,
        member_traces=traces,
        true_aggregate=true_agg,
        head_aggregate=head_agg,
        sink_aggregate=tuple(sink_agg),
        aggregate_trace=agg_trace,
        member_msgs=sum(tr.transmissions for tr in traces.values()),
        head_to_sink_msgs=up,
        baseline_msgs=t * (2 * (n - 1) + 1),
    )


def run_cluster_pipeline(
    plan: ClusterPlan,
    series: Mapping[int, Sequence[float]],
    spec: PredictorSpec,
    e_max: float,
    fn: AggregateFn | str = AggregateFn.AVERAGE,
    stage2_dps: bool = True,
) -> PipelineResult:
    """Run the two-stage aggregation pipeline for every cluster in ``plan``.

    The baseline is the relay cost without aggregation or prediction:
    ``T * (2 * (N - 1) + 1)`` messages per cluster.
    """
    plan.validate()
    lengths = {len(series[n]) for n in plan.nodes if n in series}
    if len(lengths) > 1:
        raise ValueError(f"series lengths differ across the plan: {sorted(lengths)}")
    return PipelineResult(
        tuple(run_cluster(c, series, spec, e_max, fn, stage2_dps) for c in plan.clusters)
    )
