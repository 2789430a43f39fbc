"""Node positions, star/cluster construction and multihop message accounting."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from .dps import DpsTrace

__all__ = [
    "Cluster",
    "ClusterMethod",
    "ClusterPlan",
    "CountMode",
    "MessageCount",
    "NodePosition",
    "PartitionError",
    "cluster_kmeans",
    "cluster_manual",
    "cluster_nearest_head",
    "count_messages",
    "parse_positions",
    "star_plan",
]


class PartitionError(ValueError):
    def __init__(self, node_id: int | None, message: str):
        super().__init__(message)
        self.node_id = node_id


@dataclass(frozen=True)
class NodePosition:
    node_id: int
    x: float
    y: float


class ClusterMethod(str, Enum):
    MANUAL = "Manual"
    KMEANS = "KMeans"
    NEAREST_HEAD = "NearestHead"


class CountMode(str, Enum):
    RELAY = "Relay"
    STAR_DIRECT = "StarDirect"


@dataclass(frozen=True)
class Cluster:
    head: int
    members: frozenset[int]

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class ClusterPlan:
    clusters: tuple[Cluster, ...]
    method: ClusterMethod

    @property
    def nodes(self) -> list[int]:
        return sorted(n for c in self.clusters for n in c.members)

    @property
    def heads(self) -> list[int]:
        return [c.head for c in self.clusters]

    def head_of(self, node_id: int) -> int:
        for c in self.clusters:
            if node_id in c.members:
                return c.head
        raise KeyError(node_id)

    def validate(self, node_set: Iterable[int] | None = None) -> None:
        """Check the plan is a partition (of ``node_set`` when given)."""
        seen: set[int] = set()
        for c in self.clusters:
            if not c.members:
                raise PartitionError(c.head, f"cluster headed by {c.head} is empty")
            if c.head not in c.members:
                raise PartitionError(c.head, f"head {c.head} is not a member of its own cluster")
            for n in sorted(c.members):
                if n in seen:
                    raise PartitionError(n, f"node {n} appears in more than one cluster")
                seen.add(n)
        if node_set is not None:
            expected = set(node_set)
            missing = sorted(expected - seen)
            if missing:
                raise PartitionError(missing[0], f"node {missing[0]} is not covered by any cluster")
            extra = sorted(seen - expected)
            if extra:
                raise PartitionError(extra[0], f"node {extra[0]} is not part of the deployment")


def parse_positions(stream: TextIO | Iterable[str]) -> list[NodePosition]:
    """Read ``node_id x y`` lines. Blank lines and ``#`` comments are skipped."""
    out: list[NodePosition] = []
    seen: set[int] = set()
    for line_no, line in enumerate(stream, 1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        parts = text.split()
        if len(parts) != 3:
            raise ValueError(f"line {line_no}: expected 'node_id x y', got {line.rstrip()!r}")
        try:
            node_id, x, y = int(parts[0]), float(parts[1]), float(parts[2])
        except ValueError:
            raise ValueError(f"line {line_no}: unparseable position {line.rstrip()!r}") from None
        if node_id in seen:
            raise ValueError(f"line {line_no}: duplicate node id {node_id}")
        seen.add(node_id)
        out.append(NodePosition(node_id, x, y))
    return out


def star_plan(node_ids: Iterable[int]) -> ClusterPlan:
    """Every node is its own head: the single-hop star layout."""
    return ClusterPlan(
        tuple(Cluster(n, frozenset([n])) for n in sorted(set(node_ids))), ClusterMethod.MANUAL
    )


def cluster_manual(assignments: Iterable[Mapping | tuple[int, Iterable[int]]]) -> ClusterPlan:
    clusters = []
    for a in assignments:
        if isinstance(a, Mapping):
            head, members = a["head"], a["members"]
        else:
            head, members = a
        clusters.append(Cluster(int(head), frozenset(int(m) for m in members)))
    plan = ClusterPlan(tuple(sorted(clusters, key=lambda c: c.head)), ClusterMethod.MANUAL)
    plan.validate()
    return plan


def _head_nearest(members: list[NodePosition], center: np.ndarray) -> int:
    best = min(
        members,
        key=lambda p: ((p.x - center[0]) ** 2 + (p.y - center[1]) ** 2, p.node_id),
    )
    return best.node_id


def cluster_kmeans(positions: Sequence[NodePosition], k: int, seed: int = 0) -> ClusterPlan:
    """Euclidean k-means over node coordinates.

    Each cluster's head is the member closest to the cluster centroid, ties
    broken by lowest node id.
    """
    from sklearn.cluster import KMeans

    if not positions:
        raise ValueError("no positions to cluster")
    if k < 1 or k > len(positions):
        raise ValueError(f"k={k} must be between 1 and the node count {len(positions)}")
    ordered = sorted(positions, key=lambda p: p.node_id)
    xy = np.array([[p.x, p.y] for p in ordered], dtype=float)
    labels = KMeans(n_clusters=k, n_init=10, random_state=seed).fit(xy).labels_
    clusters = []
    for label in sorted(set(labels.tolist())):
        members = [p for p, lab in zip(ordered, labels) if lab == label]
        center = np.array([[p.x, p.y] for p in members]).mean(axis=0)
        clusters.append(Cluster(_head_nearest(members, center), frozenset(p.node_id for p in members)))
    plan = ClusterPlan(tuple(sorted(clusters, key=lambda c: c.head)), ClusterMethod.KMEANS)
    plan.validate([p.node_id for p in positions])
    return plan


def cluster_nearest_head(positions: Sequence[NodePosition], heads: Iterable[int]) -> ClusterPlan:
    """Assign every node to its closest head (ties to the lowest head id)."""
    by_id = {p.node_id: p for p in positions}
    head_ids = sorted(set(heads))
    if not head_ids:
        raise ValueError("at least one head is required")
    for h in head_ids:
        if h not in by_id:
            raise PartitionError(h, f"head {h} has no position")
    groups: dict[int, set[int]] = {h: {h} for h in head_ids}
    for p in positions:
        if p.node_id in groups:
            continue
        nearest = min(
            head_ids, key=lambda h: ((by_id[h].x - p.x) ** 2 + (by_id[h].y - p.y) ** 2, h)
        )
        groups[nearest].add(p.node_id)
    return ClusterPlan(
        tuple(Cluster(h, frozenset(m)) for h, m in groups.items()), ClusterMethod.NEAREST_HEAD
    )


@dataclass(frozen=True)
class MessageCount:
    baseline_msgs: int
    dps_msgs: int

    @property
    def reduction_pct(self) -> float:
        if self.baseline_msgs == 0:
            return 0.0
        return 100.0 * (1.0 - self.dps_msgs / self.baseline_msgs)

    def __add__(self, other: "MessageCount") -> "MessageCount":
        return MessageCount(self.baseline_msgs + other.baseline_msgs, self.dps_msgs + other.dps_msgs)


def count_messages(
    plan: ClusterPlan, traces: Mapping[int, DpsTrace], mode: CountMode | str
) -> MessageCount:
    """Count radio messages with and without DPS.

    In relay mode a member's reading costs two hops (member to head, head to
    sink) and a head's own reading one. Star mode charges one hop everywhere.
    """
    mode = CountMode(mode)
    lengths = set()
    for n in plan.nodes:
        if n not in traces:
            raise KeyError(f"no trace for node {n}")
        lengths.add(traces[n].total)
    if len(lengths) > 1:
        raise ValueError(f"trace lengths differ: {sorted(lengths)}")
    t = lengths.pop() if lengths else 0
    heads = set(plan.heads)
    n_nodes = len(plan.nodes)
    if mode is CountMode.STAR_DIRECT:
        return MessageCount(n_nodes * t, sum(traces[n].transmissions for n in plan.nodes))
    h = len(heads)
    baseline = t * (2 * (n_nodes - h) + h)
    dps = sum(
        traces[n].transmissions * (1 if n in heads else 2) for n in plan.nodes
    )
    return MessageCount(baseline, dps)
