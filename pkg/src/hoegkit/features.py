"""Event and object features, the remaining-time target, and data splits.

Event features, in column order:

* ``C2`` activity one-hot over the training vocabulary, plus one trailing
  slot for activities not seen in training;
* ``P2`` seconds since the execution's first event (standardized);
* ``P5`` seconds since the previous event of the execution (standardized,
  0 s for the first event);
* ``O3`` number of distinct object types referenced by strictly earlier
  events of the execution (raw count);
* numeric event attributes seen in training, sorted by name (standardized;
  a missing value encodes as the training mean, i.e. 0).

The execution order is the log's ``(timestamp, id)`` order, so every
feature of an event depends only on that event and earlier ones.

Object features per type: numeric attributes (sorted, standardized with
per-type training statistics), then categorical attributes (sorted), each
one-hot over the categories seen in training. Unseen categories encode as
all zeros. Timestamps count as numeric (POSIX seconds).

All statistics and vocabularies come from the training executions only.
Standard deviations are population deviations; values below ``1e-12`` fall
back to ``1.0``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from datetime import datetime
from typing import Iterable, Sequence

import numpy as np

from .extraction import ProcessExecution
from .model import AttributeValue, EventLog, ObjectInstance

STD_FLOOR = 1e-12
SPLITS = ("train", "validation", "test")


@dataclass
class FeatureConfig:
    activity: bool = True
    elapsed: bool = True
    previous_delta: bool = True
    previous_type_count: bool = True
    numeric_event_attrs: bool = True
    zero_fill: bool = False
    activities: list[str] = field(default_factory=list)
    event_attrs: list[str] = field(default_factory=list)
    object_types: list[str] = field(default_factory=list)
    # type -> [(attribute, kind, categories)], numeric attributes first
    object_schema: dict[str, list[tuple[str, str, list[str]]]] = field(default_factory=dict)

    def event_feature_names(self) -> list[str]:
        names = []
        if self.activity:
            names += [f"C2:{a}" for a in self.activities] + ["C2:<unknown>"]
        if self.elapsed:
            names.append("P2")
        if self.previous_delta:
            names.append("P5")
        if self.previous_type_count:
            names.append("O3")
        if self.numeric_event_attrs:
            names += [f"event:{a}" for a in self.event_attrs]
        return names

    @property
    def event_dim(self) -> int:
        return len(self.event_feature_names())

    def object_feature_names(self, type_name: str) -> list[str]:
        names = []
        for attr, kind, cats in self.object_schema.get(type_name, []):
            if kind == "category":
                names += [f"{attr}={c}" for c in cats]
            else:
                names.append(attr)
        return names

    def object_dim(self, type_name: str) -> int:
        return len(self.object_feature_names(type_name))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["object_schema"] = {
            t: [[a, k, list(c)] for a, k, c in attrs] for t, attrs in self.object_schema.items()
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureConfig":
        d = dict(d)
        d["object_schema"] = {
            t: [(a, k, list(c)) for a, k, c in attrs] for t, attrs in d.get("object_schema", {}).items()
        }
        return cls(**d)


@dataclass
class NormalizationStats:
    target_mean: float
    target_std: float
    # feature key -> (mean, std); keys "P2", "P5", "event:<attr>", "<type>:<attr>"
    features: dict[str, tuple[float, float]] = field(default_factory=dict)

    def standardize(self, key: str, value: float) -> float:
        mean, std = self.features.get(key, (0.0, 1.0))
        return (value - mean) / std

    def standardize_target(self, seconds):
        return (np.asarray(seconds, dtype=float) - self.target_mean) / self.target_std

    def to_dict(self) -> dict:
        return {
            "target_mean": self.target_mean,
            "target_std": self.target_std,
            "features": {k: [m, s] for k, (m, s) in self.features.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationStats":
        return cls(d["target_mean"], d["target_std"], {k: (m, s) for k, (m, s) in d["features"].items()})


@dataclass
class SplitAssignment:
    assignment: dict[str, str]
    ratios: tuple[float, float, float]
    seed: int

    def ids(self, split: str) -> list[str]:
        return [k for k, v in self.assignment.items() if v == split]

    def sizes(self) -> tuple[int, int, int]:
        return tuple(sum(1 for v in self.assignment.values() if v == s) for s in SPLITS)

    def to_dict(self) -> dict:
        return {"assignment": self.assignment, "ratios": list(self.ratios), "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "SplitAssignment":
        return cls(dict(d["assignment"]), tuple(d["ratios"]), d["seed"])


def _seconds(ts: datetime) -> float:
    return ts.timestamp()


def _numeric(value: AttributeValue) -> float | None:
    if isinstance(value, datetime):
        return value.timestamp()
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    return None


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    # fsum keeps the result independent of summation order
    n = len(values)
    if n == 0:
        return 0.0, 1.0
    mean = math.fsum(values) / n
    var = math.fsum((v - mean) ** 2 for v in values) / n
    std = math.sqrt(var)
    if std < STD_FLOOR:
        std = 1.0
    return mean, std


def remaining_time(execution: ProcessExecution, event_id: str, log: EventLog) -> float:
    """Seconds from ``event_id`` until the execution's last event."""
    if event_id not in execution.event_ids:
        raise KeyError(f"event {event_id!r} not in execution {execution.id}")
    last = log.event(execution.event_ids[-1]).timestamp
    return (last - log.event(event_id).timestamp).total_seconds()


def remaining_times(execution: ProcessExecution, log: EventLog) -> np.ndarray:
    last = _seconds(log.event(execution.event_ids[-1]).timestamp) if execution.event_ids else 0.0
    return np.array([last - _seconds(log.event(e).timestamp) for e in execution.event_ids])


def _timing(execution: ProcessExecution, log: EventLog) -> tuple[list[float], list[float], list[int]]:
    """Per event: elapsed seconds, seconds since previous event, previous type count."""
    elapsed, delta, type_count = [], [], []
    seen: set[str] = set()
    start = prev = None
    for eid in execution.event_ids:
        e = log.event(eid)
        t = _seconds(e.timestamp)
        if start is None:
            start = prev = t
        elapsed.append(t - start)
        delta.append(t - prev)
        type_count.append(len(seen))
        seen.update(tn for tn, ids in e.refs.items() if ids)
        prev = t
    return elapsed, delta, type_count


def build_feature_config(
    train: Iterable[ProcessExecution], log: EventLog, **flags
) -> FeatureConfig:
    train = list(train)
    cfg = FeatureConfig(**flags)
    activities: set[str] = set()
    event_attrs: set[str] = set()
    for ex in train:
        for eid in ex.event_ids:
            e = log.event(eid)
            activities.add(e.activity)
            event_attrs.update(k for k, v in e.attrs.items() if _numeric(v) is not None)
    cfg.activities = sorted(activities)
    cfg.event_attrs = sorted(event_attrs)
    cfg.object_types = list(log.object_types)

    kinds: dict[str, dict[str, str]] = {t: {} for t in cfg.object_types}
    cats: dict[tuple[str, str], set[str]] = {}
    for o in _train_objects(train, log):
        for name, value in o.attrs.items():
            kind = "category" if isinstance(value, str) else "number"
            kinds[o.type_name].setdefault(name, kind)
            if kind == "category":
                cats.setdefault((o.type_name, name), set()).add(value)
    for t, attrs in kinds.items():
        numeric = sorted(a for a, k in attrs.items() if k == "number")
        categorical = sorted(a for a, k in attrs.items() if k == "category")
        cfg.object_schema[t] = [(a, "number", []) for a in numeric] + [
            (a, "category", sorted(cats[(t, a)])) for a in categorical
        ]
    return cfg


def _train_objects(train: Sequence[ProcessExecution], log: EventLog) -> list[ObjectInstance]:
    # objects referenced by training events, in id order
    ids: set[str] = set()
    for ex in train:
        for eid in ex.event_ids:
            ids.update(log.objects_of_event(eid))
    return [log.objects[o] for o in sorted(ids)]


def fit_normalization(
    train: Iterable[ProcessExecution], log: EventLog, cfg: FeatureConfig | None = None
) -> NormalizationStats:
    train = [ex for ex in train if ex.event_ids]
    if not train:
        raise ValueError("training split is empty")
    if cfg is None:
        cfg = build_feature_config(train, log)
    targets: list[float] = []
    elapsed: list[float] = []
    delta: list[float] = []
    attr_values: dict[str, list[float]] = {a: [] for a in cfg.event_attrs}
    for ex in train:
        targets.extend(remaining_times(ex, log).tolist())
        el, de, _ = _timing(ex, log)
        elapsed += el
        delta += de
        for eid in ex.event_ids:
            for a, v in log.event(eid).attrs.items():
                x = _numeric(v)
                if a in attr_values and x is not None:
                    attr_values[a].append(x)
    target_mean, target_std = _mean_std(targets)
    stats = NormalizationStats(target_mean, target_std)
    stats.features["P2"] = _mean_std(elapsed)
    stats.features["P5"] = _mean_std(delta)
    for a, vals in attr_values.items():
        stats.features[f"event:{a}"] = _mean_std(vals)

    objects = _train_objects(train, log)
    for t, attrs in cfg.object_schema.items():
        for a, kind, _ in attrs:
            if kind != "number":
                continue
            vals = [_numeric(o.attrs[a]) for o in objects if o.type_name == t and a in o.attrs]
            stats.features[f"{t}:{a}"] = _mean_std([v for v in vals if v is not None])
    return stats


def event_feature_matrix(
    execution: ProcessExecution, log: EventLog, cfg: FeatureConfig, stats: NormalizationStats
) -> np.ndarray:
    """Features of every event of the execution, shape ``(event_dim, n_events)``."""
    n = len(execution.event_ids)
    out = np.zeros((cfg.event_dim, n))
    elapsed, delta, type_count = _timing(execution, log)
    act_index = {a: i for i, a in enumerate(cfg.activities)}
    for j, eid in enumerate(execution.event_ids):
        e = log.event(eid)
        row = 0
        if cfg.activity:
            out[row + act_index.get(e.activity, len(cfg.activities)), j] = 1.0
            row += len(cfg.activities) + 1
        if cfg.elapsed:
            out[row, j] = stats.standardize("P2", elapsed[j])
            row += 1
        if cfg.previous_delta:
            out[row, j] = stats.standardize("P5", delta[j])
            row += 1
        if cfg.previous_type_count:
            out[row, j] = type_count[j]
            row += 1
        if cfg.numeric_event_attrs:
            for a in cfg.event_attrs:
                x = _numeric(e.attrs[a]) if a in e.attrs else None
                out[row, j] = 0.0 if x is None else stats.standardize(f"event:{a}", x)
                row += 1
    return out


def event_feature_vector(
    execution: ProcessExecution, event_id: str, log: EventLog, cfg: FeatureConfig, stats: NormalizationStats
) -> np.ndarray:
    if event_id not in execution.event_ids:
        raise KeyError(f"event {event_id!r} not in execution {execution.id}")
    return event_feature_matrix(execution, log, cfg, stats)[:, execution.event_ids.index(event_id)]


def object_feature_vector(o: ObjectInstance, cfg: FeatureConfig, stats: NormalizationStats) -> np.ndarray:
    out = []
    for a, kind, cats in cfg.object_schema.get(o.type_name, []):
        if a not in o.attrs:
            if cfg.zero_fill and kind == "number":
                out.append(0.0)
                continue
            raise ValueError(f"object {o.id}: missing attribute {a!r}")
        value = o.attrs[a]
        if kind == "category":
            out += [1.0 if value == c else 0.0 for c in cats]
        else:
            x = _numeric(value)
            if x is None:
                raise ValueError(f"object {o.id}: attribute {a!r} is not numeric")
            out.append(stats.standardize(f"{o.type_name}:{a}", x))
    return np.array(out, dtype=float)


def assign_splits(
    executions: Sequence[ProcessExecution],
    ratios: Sequence[float] = (0.7, 0.15, 0.15),
    seed: int = 0,
    chronological: bool = False,
) -> SplitAssignment:
    """Assign whole executions to train/validation/test.

    Sizes use largest-remainder rounding of ``ratio * n``. Every split with a
    nonzero ratio receives at least one execution. Executions are shuffled
    with ``numpy.random.default_rng(seed)`` unless ``chronological``, in
    which case the earliest executions go to train.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must be three non-negative numbers summing to 1, got {ratios}")
    n = len(executions)
    needed = sum(1 for r in ratios if r > 0)
    if n < needed:
        raise ValueError(f"{n} executions cannot fill {needed} non-empty splits")

    exact = [r * n for r in ratios]
    sizes = [math.floor(x) for x in exact]
    by_remainder = sorted(range(3), key=lambda i: (-(exact[i] - sizes[i]), i))
    for i in by_remainder[: n - sum(sizes)]:
        sizes[i] += 1
    for i in range(3):
        if ratios[i] > 0 and sizes[i] == 0:
            # never take the last execution of another non-empty split
            spare = [j for j in range(3) if sizes[j] > (1 if ratios[j] > 0 else 0)]
            donor = max(spare, key=lambda j: (sizes[j] - exact[j], sizes[j]))
            sizes[donor] -= 1
            sizes[i] += 1

    ids = [ex.id for ex in executions]
    if not chronological:
        order = np.random.default_rng(seed).permutation(n)
        ids = [ids[i] for i in order]
    assignment: dict[str, str] = {}
    start = 0
    for split, size in zip(SPLITS, sizes):
        for eid in ids[start : start + size]:
            assignment[eid] = split
        start += size
    return SplitAssignment(assignment, ratios, seed)
