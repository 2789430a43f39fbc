"""Dual prediction scheme simulator for sensor-network data reduction."""

from .aggregation import AggregateFn, aggregate, run_cluster_pipeline
from .dps import DpsTrace, Metrics, Suppress, Transmit, run_dps, trace_metrics, verify_lockstep
from .predictors import PredictorKind, PredictorSpec, PredictorState, new_predictor, observe, predict
from .topology import ClusterPlan, CountMode, cluster_kmeans, cluster_manual, count_messages

__version__ = "0.1.0"

__all__ = [
    "AggregateFn",
    "ClusterPlan",
    "CountMode",
    "DpsTrace",
    "Metrics",
    "PredictorKind",
    "PredictorSpec",
    "PredictorState",
    "Suppress",
    "Transmit",
    "aggregate",
    "cluster_kmeans",
    "cluster_manual",
    "count_messages",
    "new_predictor",
    "observe",
    "predict",
    "run_cluster_pipeline",
    "run_dps",
    "trace_metrics",
    "verify_lockstep",
]
