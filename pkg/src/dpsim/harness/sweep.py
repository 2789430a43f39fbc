"""Error-margin sweeps over units (nodes or clusters) x predictors x margins."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from ..aggregation import AggregateFn, run_cluster
from ..dataset import NodeSeries, clean, load_readings, slice_series, synth
from ..dps import run_dps, trace_metrics
from ..predictors import PredictorSpec
from ..topology import (
    Cluster,
    ClusterMethod,
    ClusterPlan,
    CountMode,
    cluster_kmeans,
    cluster_manual,
    cluster_nearest_head,
    count_messages,
    parse_positions,
)
from .config import ConfigError, DataError, SweepConfig

log = logging.getLogger(__name__)

__all__ = ["SweepRow", "SweepResult", "load_series", "build_plan", "run_sweep"]


@dataclass(frozen=True)
class SweepRow:
    unit: str
    predictor: str
    e_max: float
    transmissions: int
    total: int
    reduction_pct: float
    mse_reconstruction: float
    mse_prediction: float
    baseline_msgs: int
    dps_msgs: int


@dataclass
class SweepResult:
    rows: list[SweepRow]
    units: list[str] = field(default_factory=list)
    predictors: list[str] = field(default_factory=list)
    margins: list[float] = field(default_factory=list)

    def select(self, **where) -> list[SweepRow]:
        return [r for r in self.rows if all(getattr(r, k) == v for k, v in where.items())]


def node_unit(node_id: int) -> str:
    return f"node-{node_id}"


def cluster_unit(head: int) -> str:
    return f"cluster-{head}"


def unit_sort_key(unit: str) -> tuple[str, int]:
    kind, _, ident = unit.partition("-")
    return (kind, int(ident)) if ident.isdigit() else (kind, 0)


def load_series(cfg: SweepConfig) -> dict[int, list[float]]:
    """Per-node temperature sequences after cleaning, node filtering and slicing."""
    ds = cfg.dataset
    if ds.synthetic is not None:
        cleaned: dict[int, NodeSeries] = {s.node_id: synth(s.to_spec()) for s in ds.synthetic}
    elif ds.readings is not None:
        path = Path(ds.readings)
        if not path.is_file():
            raise DataError(f"readings file not found: {path}")
        parsed = load_readings(path)
        if parsed.rejects:
            log.info("%d of %d lines rejected while parsing %s", len(parsed.rejects), parsed.lines, path)
        cleaned = clean(parsed.readings, (ds.t_min, ds.t_max)).series
    else:
        raise ConfigError("dataset needs either readings or synthetic series")

    start, end = ds.slice
    sliced = {n: list(slice_series(s, start, end).temperatures) for n, s in cleaned.items()}
    want = end - start if end is not None else None
    if ds.nodes == "all":
        nodes = sorted(
            n for n, v in sliced.items() if v and (not ds.require_full_slice or want is None or len(v) >= want)
        )
    else:
        nodes = sorted(set(ds.nodes))
        missing = [n for n in nodes if not sliced.get(n)]
        if missing:
            raise DataError(f"no data for node(s) {missing} in the selected slice")
        if ds.require_full_slice and want is not None:
            short = [n for n in nodes if len(sliced[n]) < want]
            if short:
                raise DataError(f"node(s) {short} have fewer than {want} readings in the slice")
    if not nodes:
        raise DataError("no nodes with data in the selected slice")
    return {n: sliced[n] for n in nodes}


def build_plan(cfg: SweepConfig, nodes: Sequence[int]) -> ClusterPlan | None:
    topo = cfg.topology
    if topo.mode == "StarDirect":
        return None
    if topo.clusters is not None:
        plan = cluster_manual([c.model_dump() for c in topo.clusters])
    else:
        if cfg.dataset.locations is None:
            raise ConfigError("kmeans/nearest_heads clustering needs dataset.locations")
        path = Path(cfg.dataset.locations)
        if not path.is_file():
            raise DataError(f"locations file not found: {path}")
        with path.open() as fh:
            positions = [p for p in parse_positions(fh) if p.node_id in set(nodes)]
        missing = sorted(set(nodes) - {p.node_id for p in positions})
        if missing:
            raise DataError(f"no position for node(s) {missing}")
        if topo.kmeans is not None:
            plan = cluster_kmeans(positions, topo.kmeans.k, topo.kmeans.seed)
        else:
            plan = cluster_nearest_head(positions, topo.nearest_heads or [])
    missing = sorted(set(plan.nodes) - set(nodes))
    if missing:
        raise DataError(f"cluster plan references node(s) {missing} that have no data")
    return plan


@dataclass(frozen=True)
class _Cell:
    mode: str
    unit: str
    head: int | None
    series: dict[int, tuple[float, ...]]
    spec: PredictorSpec
    margins: tuple[float, ...]
    include_warmup: bool
    aggregate: str
    stage2_dps: bool


def _pooled_mse(pairs: list[tuple[float, float]]) -> float:
    return sum((a - b) ** 2 for a, b in pairs) / len(pairs) if pairs else math.nan


def _run_cell(cell: _Cell) -> list[SweepRow]:
    rows = []
    label = cell.spec.label
    for e_max in cell.margins:
        if cell.mode == "StarDirect":
            (node, values), = cell.series.items()
            tr = run_dps(values, cell.spec, e_max, node_id=node)
            m = trace_metrics(tr, include_warmup=cell.include_warmup)
            rows.append(
                SweepRow(cell.unit, label, e_max, m.transmissions, m.total, m.reduction_pct,
                         m.mse_reconstruction, m.mse_prediction, tr.total, tr.transmissions)
            )
        elif cell.mode == "Relay":
            assert cell.head is not None
            cluster = Cluster(cell.head, frozenset(cell.series))
            traces = {n: run_dps(v, cell.spec, e_max, node_id=n) for n, v in cell.series.items()}
            msgs = count_messages(ClusterPlan((cluster,), ClusterMethod.MANUAL), traces, CountMode.RELAY)
            base, sent = msgs.baseline_msgs, msgs.dps_msgs
            if not cell.include_warmup:
                warm = sum(t.warmup_transmissions * (1 if n == cell.head else 2) for n, t in traces.items())
                base, sent = base - warm, sent - warm
            rec = [(r, a) for t in traces.values() for r, a in zip(t.reconstructed, t.actual)]
            pred = [(p, a) for t in traces.values() for p, a in zip(t.predictions, t.actual) if p is not None]
            rows.append(
                SweepRow(cell.unit, label, e_max,
                         sum(t.transmissions for t in traces.values()),
                         sum(t.total for t in traces.values()),
                         100.0 * (1 - sent / base) if base > 0 else 0.0,
                         _pooled_mse(rec), _pooled_mse(pred), msgs.baseline_msgs, msgs.dps_msgs)
            )
        else:
            assert cell.head is not None
            cluster = Cluster(cell.head, frozenset(cell.series))
            res = run_cluster(cluster, cell.series, cell.spec, e_max, AggregateFn(cell.aggregate), cell.stage2_dps)
            base, sent = res.baseline_msgs, res.total_msgs
            if not cell.include_warmup:
                warm = sum(t.warmup_transmissions for t in res.member_traces.values())
                if res.aggregate_trace is not None:
                    warm += res.aggregate_trace.warmup_transmissions
                base, sent = base - warm, sent - warm
            agg_pred = (
                trace_metrics(res.aggregate_trace).mse_prediction
                if res.aggregate_trace is not None else math.nan
            )
            rows.append(
                SweepRow(cell.unit, label, e_max,
                         sum(t.transmissions for t in res.member_traces.values())
                         + (res.aggregate_trace.transmissions if res.aggregate_trace else 0),
                         sum(len(v) for v in cell.series.values()),
                         100.0 * (1 - sent / base) if base > 0 else 0.0,
                         _pooled_mse(list(zip(res.sink_aggregate, res.true_aggregate))),
                         agg_pred, res.baseline_msgs, res.total_msgs)
            )
    return rows


def _cells(cfg: SweepConfig, series: dict[int, list[float]]) -> list[_Cell]:
    specs = cfg.predictor_specs()
    margins = tuple(cfg.grid.margins())
    topo = cfg.topology
    common = dict(
        spec=None, margins=margins, include_warmup=cfg.include_warmup_in_reduction,
        aggregate=topo.aggregate.value, stage2_dps=topo.stage2_dps,
    )
    cells = []
    plan = build_plan(cfg, list(series))
    for spec in specs:
        common["spec"] = spec
        if plan is None:
            for n in sorted(series):
                cells.append(_Cell(mode="StarDirect", unit=node_unit(n), head=None,
                                   series={n: tuple(series[n])}, **common))
            continue
        for c in plan.clusters:
            # cluster members run in lock-step, so trim to the shortest member series
            t = min(len(series[n]) for n in c.members)
            members = {n: tuple(series[n][:t]) for n in sorted(c.members)}
            cells.append(_Cell(mode=topo.mode, unit=cluster_unit(c.head), head=c.head,
                               series=members, **common))
    return cells


def run_sweep(cfg: SweepConfig, jobs: int | None = None) -> SweepResult:
    """Execute the full unit x predictor x margin grid.

    The row set and order are independent of ``jobs``: cells are pure and
    results are sorted by (unit, predictor order in the config, e_max).
    """
    series = load_series(cfg)
    cells = _cells(cfg, series)
    jobs = cfg.jobs if jobs is None else jobs
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(cells))) as pool:
            chunks = list(pool.map(_run_cell, cells))
    else:
        chunks = [_run_cell(c) for c in cells]
    labels = [s.label for s in cfg.predictor_specs()]
    order = {lab: i for i, lab in enumerate(labels)}
    rows = sorted(
        (r for chunk in chunks for r in chunk),
        key=lambda r: (unit_sort_key(r.unit), order[r.predictor], r.e_max),
    )
    units = sorted({c.unit for c in cells}, key=unit_sort_key)
    return SweepResult(rows, units, labels, list(cfg.grid.margins()))
