"""Dual prediction scheme: paired node and sink state machines.

The node transmits a reading only when it deviates from the shared prediction
by more than ``e_max``; otherwise both sides feed the *prediction* back into
their predictors so the two clones never diverge.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence, TextIO, Union

from .predictors import (
    PredictorSpec,
    PredictorState,
    new_predictor,
    observe,
    predict,
    warmup_needed,
)

__all__ = [
    "Decision",
    "DpsTrace",
    "LockstepCheck",
    "LockstepError",
    "Metrics",
    "NodeState",
    "ProtocolDesyncError",
    "Reason",
    "SinkState",
    "Suppress",
    "Transmit",
    "check_margin",
    "new_node",
    "new_sink",
    "node_step",
    "run_dps",
    "sink_step",
    "trace_metrics",
    "verify_lockstep",
    "write_trace_csv",
]

TRACE_COLUMNS = ("epoch", "actual", "reconstructed", "decision", "reason")


class ProtocolDesyncError(RuntimeError):
    pass


class LockstepError(AssertionError):
    pass


class Reason(str, Enum):
    WARMUP = "Warmup"
    EXCEEDED_MARGIN = "ExceededMargin"


@dataclass(frozen=True)
class Transmit:
    value: float
    reason: Reason


@dataclass(frozen=True)
class Suppress:
    predicted: float


Decision = Union[Transmit, Suppress]


def check_margin(e_max: float) -> float:
    e_max = float(e_max)
    if not math.isfinite(e_max) or e_max <= 0:
        raise ValueError(f"error margin must be finite and > 0, got {e_max!r}")
    return e_max


@dataclass(frozen=True)
class NodeState:
    predictor: PredictorState
    e_max: float


@dataclass(frozen=True)
class SinkState:
    predictor: PredictorState


def new_node(spec: PredictorSpec, e_max: float) -> NodeState:
    return NodeState(new_predictor(spec), check_margin(e_max))


def new_sink(spec: PredictorSpec) -> SinkState:
    return SinkState(new_predictor(spec))


def node_step(node: NodeState, actual: float) -> tuple[Decision, NodeState]:
    actual = float(actual)
    if not math.isfinite(actual):
        raise ValueError(f"non-finite reading {actual!r}")
    state = node.predictor
    if warmup_needed(state) > 0:
        return Transmit(actual, Reason.WARMUP), NodeState(observe(state, actual), node.e_max)
    p = predict(state)
    if abs(actual - p) > node.e_max:
        decision: Decision = Transmit(actual, Reason.EXCEEDED_MARGIN)
        return decision, NodeState(observe(state, actual), node.e_max)
    return Suppress(p), NodeState(observe(state, p), node.e_max)


def sink_step(sink: SinkState, msg: float | None) -> tuple[float, SinkState]:
    state = sink.predictor
    if msg is None:
        if warmup_needed(state) > 0:
            raise ProtocolDesyncError(
                f"no message received while the sink still needs {warmup_needed(state)} warm-up value(s)"
            )
        value = predict(state)
    else:
        value = float(msg)
    return value, SinkState(observe(state, value))


@dataclass(frozen=True)
class DpsTrace:
    """Outcome of one DPS run over a single stream.

    ``predictions[i]`` is the shared prediction made before epoch ``i`` was
    observed, or ``None`` during warm-up.
    """

    node_id: int | str | None
    e_max: float
    spec: PredictorSpec
    decisions: tuple[Decision, ...]
    actual: tuple[float, ...]
    reconstructed: tuple[float, ...]
    predictions: tuple[float | None, ...]
    transmissions: int
    total: int

    @property
    def warmup_transmissions(self) -> int:
        return sum(
            1 for d in self.decisions if isinstance(d, Transmit) and d.reason is Reason.WARMUP
        )

    def transmitted(self) -> list[bool]:
        return [isinstance(d, Transmit) for d in self.decisions]


def run_dps(
    series: Sequence[float],
    spec: PredictorSpec,
    e_max: float,
    node_id: int | str | None = None,
    check_lockstep: bool = False,
) -> DpsTrace:
    """Drive a node and its sink clone in lock-step over ``series``.

    With ``check_lockstep`` the two predictor states are compared after every
    epoch and :class:`LockstepError` is raised on the first divergence.
    """
    if len(series) < 1:
        raise ValueError("series must contain at least one reading")
    node = new_node(spec, e_max)
    sink = new_sink(spec)
    decisions: list[Decision] = []
    actual: list[float] = []
    recon: list[float] = []
    preds: list[float | None] = []
    tx = 0
    for i, raw in enumerate(series):
        value = float(raw)
        warm = warmup_needed(node.predictor) > 0
        decision, node = node_step(node, value)
        if isinstance(decision, Transmit):
            tx += 1
            msg: float | None = decision.value
            # the sink clone holds the state the node predicted from
            preds.append(None if warm else predict(sink.predictor))
        else:
            msg = None
            preds.append(decision.predicted)
        rec, sink = sink_step(sink, msg)
        if check_lockstep and node.predictor != sink.predictor:
            raise LockstepError(f"node and sink predictors diverged at epoch {i}")
        decisions.append(decision)
        actual.append(value)
        recon.append(rec)
    return DpsTrace(
        node_id=node_id,
        e_max=check_margin(e_max),
        spec=spec,
        decisions=tuple(decisions),
        actual=tuple(actual),
        reconstructed=tuple(recon),
        predictions=tuple(preds),
        transmissions=tx,
        total=len(actual),
    )


@dataclass(frozen=True)
class LockstepCheck:
    ok: bool
    epoch: int | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def verify_lockstep(trace: DpsTrace) -> LockstepCheck:
    """Replay node and sink from scratch and compare against ``trace``."""
    n = len(trace.actual)
    if len(trace.decisions) != n or len(trace.reconstructed) != n:
        return LockstepCheck(False, min(len(trace.decisions), len(trace.reconstructed), n), "length mismatch")
    try:
        node = new_node(trace.spec, trace.e_max)
        sink = new_sink(trace.spec)
    except ValueError as exc:
        return LockstepCheck(False, 0, str(exc))
    for i in range(n):
        decision, node = node_step(node, trace.actual[i])
        if decision != trace.decisions[i]:
            return LockstepCheck(False, i, f"decision mismatch: replay {decision}, trace {trace.decisions[i]}")
        rec, sink = sink_step(sink, decision.value if isinstance(decision, Transmit) else None)
        if rec != trace.reconstructed[i]:
            return LockstepCheck(False, i, f"reconstruction mismatch: replay {rec}, trace {trace.reconstructed[i]}")
        if abs(trace.reconstructed[i] - trace.actual[i]) > trace.e_max:
            return LockstepCheck(False, i, "reconstruction error exceeds e_max")
        if node.predictor != sink.predictor:
            return LockstepCheck(False, i, "predictor states diverged")
    if trace.transmissions != sum(trace.transmitted()) or trace.total != n:
        return LockstepCheck(False, None, "transmission counters disagree with decisions")
    return LockstepCheck(True)


@dataclass(frozen=True)
class Metrics:
    transmissions: int
    total: int
    reduction_pct: float
    mse_reconstruction: float
    mse_prediction: float

    def to_dict(self) -> dict[str, float | int]:
        return {
            "transmissions": self.transmissions,
            "total": self.total,
            "reduction_pct": self.reduction_pct,
            "mse_reconstruction": self.mse_reconstruction,
            "mse_prediction": self.mse_prediction,
        }


def trace_metrics(trace: DpsTrace, include_warmup: bool = True) -> Metrics:
    """Reduction and MSE for one trace.

    ``include_warmup=False`` drops warm-up epochs from the reduction ratio
    only; the reported counts stay raw.
    """
    tx, total = trace.transmissions, trace.total
    if not include_warmup:
        warm = trace.warmup_transmissions
        tx, total = tx - warm, total - warm
    reduction = 100.0 * (1.0 - tx / total) if total > 0 else 0.0
    sq = [(r - a) ** 2 for r, a in zip(trace.reconstructed, trace.actual)]
    mse_rec = sum(sq) / len(sq) if sq else 0.0
    pred_sq = [(p - a) ** 2 for p, a in zip(trace.predictions, trace.actual) if p is not None]
    mse_pred = sum(pred_sq) / len(pred_sq) if pred_sq else float("nan")
    return Metrics(trace.transmissions, trace.total, reduction, mse_rec, mse_pred)


def write_trace_csv(
    trace: DpsTrace, out: TextIO, cluster_id: int | str | None = None
) -> None:
    """Write the per-epoch trace; a ``cluster_id`` column is prepended when given."""
    writer = csv.writer(out, lineterminator="\n")
    header: Iterable[str] = TRACE_COLUMNS if cluster_id is None else ("cluster_id",) + TRACE_COLUMNS
    writer.writerow(header)
    for i, (d, a, r) in enumerate(zip(trace.decisions, trace.actual, trace.reconstructed)):
        if isinstance(d, Transmit):
            row = [i, repr(a), repr(r), "Transmit", d.reason.value]
        else:
            row = [i, repr(a), repr(r), "Suppress", ""]
        if cluster_id is not None:
            row.insert(0, cluster_id)
        writer.writerow(row)


def trace_csv(trace: DpsTrace, cluster_id: int | str | None = None) -> str:
    buf = io.StringIO()
    write_trace_csv(trace, buf, cluster_id)
    return buf.getvalue()
