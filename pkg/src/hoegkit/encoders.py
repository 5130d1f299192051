"""Graph encodings of process executions.

``Efg`` is the homogeneous encoding: one node per event, the execution's
directly-follows edges. ``Hoeg`` adds one node type per object type, each
with its own feature matrix, and an ``(object type, "interacts", "event")``
edge type pointing from objects to the events that reference them.

Matrices are stored features x nodes; adjacency matrices are 2 x edges with
source indices in row 0 and target indices in row 1.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .extraction import ProcessExecution
from .features import (
    FeatureConfig,
    NormalizationStats,
    event_feature_matrix,
    object_feature_vector,
    remaining_times,
)
from .model import EventLog

EVENT = "event"
FOLLOWS = (EVENT, "follows", EVENT)
INTERACTS = "interacts"

EdgeType = tuple[str, str, str]


def _edge_array(pairs) -> np.ndarray:
    pairs = sorted(set(pairs))
    if not pairs:
        return np.zeros((2, 0), dtype=np.int64)
    return np.array(pairs, dtype=np.int64).T.copy()


@dataclass
class Efg:
    features: np.ndarray
    adjacency: np.ndarray
    targets: np.ndarray
    node_index: dict[str, int]
    execution_id: str = ""

    @property
    def num_events(self) -> int:
        return self.features.shape[1]

    def event_ids(self) -> list[str]:
        return sorted(self.node_index, key=self.node_index.get)


@dataclass
class Hoeg:
    node_types: tuple[str, ...]
    edge_types: tuple[EdgeType, ...]
    features: dict[str, np.ndarray]
    adjacency: dict[EdgeType, np.ndarray]
    node_index: dict[str, dict[str, int]]
    targets: np.ndarray
    edge_features: dict[EdgeType, np.ndarray] = field(default_factory=dict)
    execution_id: str = ""

    @property
    def num_events(self) -> int:
        return self.features[EVENT].shape[1]

    def check(self) -> list[str]:
        """Structural problems with this graph; empty when well formed."""
        problems = []
        if EVENT not in self.node_types or len(self.node_types) < 2:
            problems.append("node types must include 'event' and at least one object type")
        if set(self.features) != set(self.node_types):
            problems.append("feature matrices must match node types exactly")
        if set(self.adjacency) != set(self.edge_types):
            problems.append("adjacency matrices must match edge types exactly")
        for et in self.edge_types:
            src, _, dst = et
            if src not in self.node_types or dst not in self.node_types:
                problems.append(f"edge type {et} uses an unknown node type")
                continue
            a = self.adjacency.get(et)
            if a is None:
                continue
            if a.ndim != 2 or a.shape[0] != 2:
                problems.append(f"adjacency {et} must be 2 x m")
                continue
            if a.size and (a[0].min() < 0 or a[0].max() >= self.features[src].shape[1]
                           or a[1].min() < 0 or a[1].max() >= self.features[dst].shape[1]):
                problems.append(f"adjacency {et} has out-of-range indices")
            if len({tuple(c) for c in a.T}) != a.shape[1]:
                problems.append(f"adjacency {et} has duplicate edges")
        if self.targets.shape != (self.num_events,):
            problems.append("targets must have one entry per event node")
        return problems


def _retained_events(execution: ProcessExecution, log: EventLog, prefix: str | None) -> list[str]:
    events = list(execution.event_ids)
    if prefix is None:
        return events
    if prefix not in events:
        raise KeyError(f"prefix event {prefix!r} not in execution {execution.id}")
    return events[: events.index(prefix) + 1]


def encode_efg(
    execution: ProcessExecution,
    log: EventLog,
    cfg: FeatureConfig,
    stats: NormalizationStats,
    prefix: str | None = None,
) -> Efg:
    events = _retained_events(execution, log, prefix)
    index = {e: i for i, e in enumerate(events)}
    feats = event_feature_matrix(execution, log, cfg, stats)[:, : len(events)]
    targets = stats.standardize_target(remaining_times(execution, log)[: len(events)])
    edges = [(index[a], index[b]) for a, b in execution.edges if a in index and b in index]
    return Efg(feats, _edge_array(edges), targets, index, execution.id)


def encode_hoeg(
    execution: ProcessExecution,
    log: EventLog,
    cfg: FeatureConfig,
    stats: NormalizationStats,
    prefix: str | None = None,
) -> Hoeg:
    """Heterogeneous encoding; with ``prefix`` only events up to it are kept.

    Every object type in ``cfg.object_types`` gets a node type, possibly with
    zero nodes, so all graphs of a dataset share one type signature. Object
    nodes are the objects referenced by retained events, sorted by id.
    """
    efg = encode_efg(execution, log, cfg, stats, prefix)
    events = efg.event_ids()
    object_types = list(cfg.object_types) or list(log.object_types)
    node_types = (EVENT, *object_types)
    edge_types = (FOLLOWS, *((t, INTERACTS, EVENT) for t in object_types))

    referenced: dict[str, set[str]] = {t: set() for t in object_types}
    for eid in events:
        for oid in log.objects_of_event(eid):
            referenced.setdefault(log.objects[oid].type_name, set()).add(oid)

    features = {EVENT: efg.features}
    node_index = {EVENT: dict(efg.node_index)}
    adjacency = {FOLLOWS: efg.adjacency}
    for t in object_types:
        ids = sorted(referenced[t])
        node_index[t] = {o: i for i, o in enumerate(ids)}
        dim = cfg.object_dim(t)
        mat = np.zeros((dim, len(ids)))
        for i, o in enumerate(ids):
            mat[:, i] = object_feature_vector(log.objects[o], cfg, stats)
        features[t] = mat
    for t in object_types:
        pairs = []
        for eid in events:
            for oid in log.objects_of_event(eid):
                if log.objects[oid].type_name == t:
                    pairs.append((node_index[t][oid], efg.node_index[eid]))
        adjacency[(t, INTERACTS, EVENT)] = _edge_array(pairs)
    return Hoeg(node_types, edge_types, features, adjacency, node_index, efg.targets, {}, execution.id)


@dataclass(frozen=True)
class SubgraphSample:
    parent: str
    indices: tuple[int, ...]
    target: float


def subgraph_samples(efg: Efg, k: int = 4) -> list[SubgraphSample]:
    """Windows of ``k`` chronologically consecutive events.

    Each window's target is the remaining time of its last event, so the
    first ``k - 1`` events never get a prediction.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    n = efg.num_events
    return [
        SubgraphSample(efg.execution_id, tuple(range(i, i + k)), float(efg.targets[i + k - 1]))
        for i in range(max(0, n - k + 1))
    ]


def sample_graph(efg: Efg, sample: SubgraphSample) -> Efg:
    """Materialize a sample as its own graph, keeping only edges inside the window."""
    lo, hi = sample.indices[0], sample.indices[-1]
    a = efg.adjacency
    keep = (a[0] >= lo) & (a[0] <= hi) & (a[1] >= lo) & (a[1] <= hi)
    ids = efg.event_ids()[lo : hi + 1]
    return Efg(
        efg.features[:, lo : hi + 1].copy(),
        a[:, keep] - lo,
        efg.targets[lo : hi + 1].copy(),
        {e: i for i, e in enumerate(ids)},
        efg.execution_id,
    )


def efg_to_table(efgs, feature_names: list[str] | None = None) -> tuple[list[str], np.ndarray]:
    """Flatten graphs into rows of ``features + [target]``, graph order then event order."""
    efgs = list(efgs)
    if feature_names is None:
        dim = efgs[0].features.shape[0] if efgs else 0
        feature_names = [f"f{i}" for i in range(dim)]
    header = list(feature_names) + ["target"]
    if not efgs:
        return header, np.zeros((0, len(header)))
    rows = [np.vstack([g.features, g.targets[None, :]]).T for g in efgs]
    return header, np.concatenate(rows, axis=0)


def write_table_csv(path, header: list[str], table: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in table:
            w.writerow([repr(float(x)) for x in row])
