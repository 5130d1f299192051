"""Random inputs and brute-force oracles shared by the tests."""
from __future__ import annotations

from collections import deque
from datetime import datetime, timedelta, timezone

import numpy as np

from hoegkit.learn.nn import GraphData, ModelParams
from hoegkit.model import Event, EventLog, ObjectInstance

T0 = datetime(2023, 1, 1, tzinfo=timezone.utc)


def random_log(rng, max_objects=200, max_events=400, n_types=3, max_refs=3, attrs=True) -> EventLog:
    n_obj = int(rng.integers(1, max_objects + 1))
    types = [f"t{k}" for k in range(n_types)]
    objects = []
    for i in range(n_obj):
        t = types[int(rng.integers(n_types))]
        a = {"w": float(rng.normal())} if attrs else {}
        objects.append(ObjectInstance(f"o{i}", t, a))
    n_ev = int(rng.integers(0, max_events + 1))
    events = []
    for j in range(n_ev):
        k = int(rng.integers(1, max_refs + 1))
        picked = sorted(set(int(x) for x in rng.integers(0, n_obj, size=k)))
        refs: dict[str, list[str]] = {}
        for i in picked:
            refs.setdefault(objects[i].type_name, []).append(objects[i].id)
        # coarse times so that ties occur
        ts = T0 + timedelta(hours=int(rng.integers(0, 50)))
        events.append(Event(f"e{j}", f"a{int(rng.integers(4))}", ts, {"x": float(rng.normal())},
                            {t: tuple(v) for t, v in refs.items()}))
    return EventLog(events, objects, types)


def bfs_components(log: EventLog) -> list[frozenset[str]]:
    """Connected components of the object graph by repeated BFS."""
    adj = {o: set() for o in log.objects}
    for e in log.events:
        objs = list(log.objects_of_event(e.id))
        for a in objs:
            for b in objs:
                if a != b:
                    adj[a].add(b)
    seen, comps = set(), []
    for start in sorted(adj):
        if start in seen:
            continue
        comp, queue = {start}, deque([start])
        seen.add(start)
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    comp.add(v)
                    queue.append(v)
        comps.append(frozenset(comp))
    return comps


def bfs_distances(adj: dict[str, set[str]], source: str) -> dict[str, int]:
    dist, queue = {source: 0}, deque([source])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def nearest_seed_bruteforce(log: EventLog, leading: str) -> dict[str, str]:
    adj = {o: set() for o in log.objects}
    for e in log.events:
        objs = list(log.objects_of_event(e.id))
        for a in objs:
            adj[a].update(b for b in objs if b != a)
    seeds = [o.id for o in log.objects.values() if o.type_name == leading]
    dists = {s: bfs_distances(adj, s) for s in seeds}
    out = {}
    for o in log.objects:
        options = [(dists[s][o], s) for s in seeds if o in dists[s]]
        if options:
            out[o] = min(options)[1]
    return out


def random_toy_graph(rng, max_events=6, max_types=3, pooled=False) -> GraphData:
    n_ev = int(rng.integers(1, max_events + 1))
    x = {"event": rng.normal(size=(n_ev, int(rng.integers(1, 5))))}
    pairs = [(i, j) for i in range(n_ev) for j in range(i + 1, n_ev) if rng.random() < 0.5]
    edges = {("event", "follows", "event"): _pairs(pairs)}
    for t in range(int(rng.integers(1, max_types + 1))):
        name = f"t{t}"
        n_o = int(rng.integers(0, 4))
        x[name] = rng.normal(size=(n_o, int(rng.integers(0, 4))))
        edges[(name, "interacts", "event")] = _pairs(
            [(o, e) for o in range(n_o) for e in range(n_ev) if rng.random() < 0.5]
        )
    targets = rng.normal(size=1 if pooled else n_ev)
    return GraphData(x, edges, targets, pooled)


def _pairs(pairs):
    return (np.array([p[0] for p in pairs], dtype=np.int64), np.array([p[1] for p in pairs], dtype=np.int64))


def perturbed_params(g: GraphData, hidden: int, seed: int, rng) -> ModelParams:
    """Random weights with nonzero biases and slopes so every path carries gradient."""
    p = ModelParams.init(g.signature(), hidden, 2, seed=seed, pooled=g.pooled)
    for key, v in p.tensors.items():
        if key.endswith(".b") or key.endswith("prelu"):
            p.tensors[key] = np.asarray(v + rng.normal(scale=0.3, size=v.shape))
    return p


def numeric_gradients(g: GraphData, params: ModelParams, loss_fn, eps=1e-5) -> dict[str, np.ndarray]:
    """Central finite differences of ``loss_fn(params)`` for every entry."""
    out = {}
    for key, v in params.tensors.items():
        grad = np.zeros_like(v)
        for idx in np.ndindex(v.shape):
            old = v[idx]
            v[idx] = old + eps
            up = loss_fn(params)
            v[idx] = old - eps
            down = loss_fn(params)
            v[idx] = old
            grad[idx] = (up - down) / (2 * eps)
        out[key] = grad
    return out


def relative_errors(analytic: dict, numeric: dict, floor=1e-7) -> np.ndarray:
    errs = []
    for k in analytic:
        a, n = analytic[k].ravel(), numeric[k].ravel()
        errs.append(np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor))
    return np.concatenate(errs)
