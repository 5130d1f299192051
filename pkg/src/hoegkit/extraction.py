"""Process execution extraction from the object graph.

Two strategies are supported: one execution per connected component of the
object graph, and one execution per object of a leading type.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from itertools import combinations

from .model import EventLog


class UnionFind:
    """Disjoint sets over hashable items, with path halving and union by size."""

    def __init__(self, items=()):
        self.parent = {}
        self.size = {}
        for x in items:
            self.add(x)

    def add(self, x):
        if x not in self.parent:
            self.parent[x] = x
            self.size[x] = 1

    def find(self, x):
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra

    def groups(self) -> dict:
        out = defaultdict(list)
        for x in self.parent:
            out[self.find(x)].append(x)
        return dict(out)


@dataclass(frozen=True)
class ObjectGraph:
    nodes: frozenset[str]
    edges: frozenset[frozenset[str]]

    def adjacency(self) -> dict[str, set[str]]:
        adj: dict[str, set[str]] = {n: set() for n in self.nodes}
        for edge in self.edges:
            a, b = tuple(edge)
            adj[a].add(b)
            adj[b].add(a)
        return adj


@dataclass(frozen=True)
class ProcessExecution:
    id: str
    object_ids: frozenset[str]
    event_ids: tuple[str, ...]
    edges: frozenset[tuple[str, str]]

    def __len__(self) -> int:
        return len(self.event_ids)


def build_object_graph(log: EventLog) -> ObjectGraph:
    edges = set()
    for e in log.events:
        objs = sorted(log.objects_of_event(e.id))
        for a, b in combinations(objs, 2):
            edges.add(frozenset((a, b)))
    return ObjectGraph(frozenset(log.objects), frozenset(edges))


def _object_neighbours(log: EventLog) -> dict[str, set[str]]:
    adj: dict[str, set[str]] = {o: set() for o in log.objects}
    for e in log.events:
        objs = log.objects_of_event(e.id)
        for o in objs:
            adj[o].update(objs)
    for o, ns in adj.items():
        ns.discard(o)
    return adj


def execution_for_objects(log: EventLog, object_ids, execution_id: str) -> ProcessExecution:
    """Events touching any of ``object_ids`` and the directly-follows edges among them."""
    object_ids = frozenset(object_ids)
    event_set = set()
    for o in object_ids:
        event_set.update(log.sigma.get(o, ()))
    event_ids = tuple(sorted(event_set, key=log.position))
    edges = frozenset(
        (a, b) for a in event_ids for b in log.successors(a) if b in event_set
    )
    return ProcessExecution(execution_id, object_ids, event_ids, edges)


def _order_key(log: EventLog, ex: ProcessExecution):
    # executions without events sort last
    if ex.event_ids:
        first = log.event(ex.event_ids[0])
        return (0, first.timestamp, first.id, ex.id)
    return (1, None, "", ex.id)


def _sorted(log: EventLog, executions: list[ProcessExecution]) -> list[ProcessExecution]:
    return sorted(executions, key=lambda ex: _order_key(log, ex))


def extract_connected_components(log: EventLog) -> list[ProcessExecution]:
    uf = UnionFind(log.objects)
    for e in log.events:
        objs = sorted(log.objects_of_event(e.id))
        for o in objs[1:]:
            uf.union(objs[0], o)
    comps = [frozenset(g) for g in uf.groups().values()]
    raw = _sorted(log, [execution_for_objects(log, c, min(c)) for c in comps])
    return [
        ProcessExecution(f"cc-{i}", ex.object_ids, ex.event_ids, ex.edges)
        for i, ex in enumerate(raw)
    ]


def leading_assignment(log: EventLog, leading: str) -> dict[str, str]:
    """Map every reachable object to its nearest leading-type object.

    Multi-source BFS over the object graph; among equally near leading
    objects the smallest id wins. Objects that cannot reach any leading
    object are left out.
    """
    if leading not in log.object_types:
        raise ValueError(f"unknown object type {leading!r}")
    adj = _object_neighbours(log)
    seeds = sorted(o.id for o in log.objects_of_type(leading))
    label = {s: s for s in seeds}
    frontier = seeds
    while frontier:
        reached: dict[str, str] = {}
        for u in frontier:
            for v in adj[u]:
                if v in label:
                    continue
                if v not in reached or label[u] < reached[v]:
                    reached[v] = label[u]
        label.update(reached)
        frontier = sorted(reached)
    return label


def extract_leading_type(log: EventLog, leading: str) -> list[ProcessExecution]:
    label = leading_assignment(log, leading)
    groups: dict[str, set[str]] = defaultdict(set)
    for obj, seed in label.items():
        groups[seed].add(obj)
    raw = [execution_for_objects(log, objs, f"lead-{seed}") for seed, objs in groups.items()]
    return _sorted(log, raw)


def parse_strategy(strategy: str) -> tuple[str, str | None]:
    """``"cc"`` / ``"connected-components"`` or ``"leading:<type>"``."""
    if strategy in ("cc", "connected-components"):
        return ("cc", None)
    if strategy.startswith("leading:") and len(strategy) > len("leading:"):
        return ("leading", strategy.split(":", 1)[1])
    raise ValueError(f"unknown extraction strategy {strategy!r}")


def extract(log: EventLog, strategy: str = "cc") -> list[ProcessExecution]:
    kind, leading = parse_strategy(strategy)
    if kind == "cc":
        return extract_connected_components(log)
    return extract_leading_type(log, leading)


def count_cases(log: EventLog, strategy: str = "cc") -> int:
    return len(extract(log, strategy))
