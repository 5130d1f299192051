"""Heterogeneous message passing with hand-written gradients.

Node states are kept as ``(nodes, hidden)`` arrays. With ``X_t`` the input
features of node type ``t`` (nodes as rows)::

    H0_t = X_t W_in_t^T + b_in_t
    Z_t  = H_t W_self_t^T + b_t + sum over edge types r ending in t of
           (sum of H_src over the r-neighbours) W_r^T
    H'_t = PReLU(Z_t)                       # one learnable slope per layer

After the last layer a linear head maps event states to one number per event
node, or, in pooled mode, the mean event state to one number per graph.
Neighbour aggregation is a plain sum.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..encoders import EVENT, FOLLOWS, Efg, Hoeg, sample_graph, SubgraphSample

CHECKPOINT_VERSION = 1
PRELU_INIT = 0.25


@dataclass
class GraphData:
    """Graph in the layout the network consumes."""

    x: dict[str, np.ndarray]                      # node type -> (n, d)
    edges: dict[tuple, tuple[np.ndarray, np.ndarray]]  # edge type -> (src, dst)
    targets: np.ndarray                           # per event node, or length 1 when pooled
    pooled: bool = False
    graph_id: str = ""

    @property
    def num_targets(self) -> int:
        return len(self.targets)

    def signature(self) -> "Signature":
        return Signature({t: m.shape[1] for t, m in self.x.items()}, tuple(self.edges))


def as_graph_data(g, pooled: bool = False) -> GraphData:
    """Convert a ``Hoeg``, ``Efg`` or ``(Efg, SubgraphSample)`` pair."""
    if isinstance(g, GraphData):
        return g
    if isinstance(g, tuple):
        efg, sample = g
        if not isinstance(sample, SubgraphSample):
            raise TypeError("expected (Efg, SubgraphSample)")
        sub = sample_graph(efg, sample)
        data = as_graph_data(sub)
        return GraphData(data.x, data.edges, np.array([sample.target]), True, efg.execution_id)
    if isinstance(g, Hoeg):
        x = {t: np.ascontiguousarray(g.features[t].T, dtype=float) for t in g.node_types}
        edges = {et: (g.adjacency[et][0], g.adjacency[et][1]) for et in g.edge_types}
        return GraphData(x, edges, np.asarray(g.targets, dtype=float), False, g.execution_id)
    if isinstance(g, Efg):
        x = {EVENT: np.ascontiguousarray(g.features.T, dtype=float)}
        edges = {FOLLOWS: (g.adjacency[0], g.adjacency[1])}
        targets = np.asarray(g.targets, dtype=float)
        if pooled:
            return GraphData(x, edges, targets[-1:].copy(), True, g.execution_id)
        return GraphData(x, edges, targets, False, g.execution_id)
    raise TypeError(f"cannot convert {type(g).__name__} to graph data")


@dataclass(frozen=True)
class Signature:
    node_dims: dict[str, int]
    edge_types: tuple[tuple[str, str, str], ...]

    def __hash__(self):
        return hash((tuple(self.node_dims.items()), self.edge_types))


def _et_name(et) -> str:
    return "|".join(et)


@dataclass
class ModelParams:
    hidden_dim: int
    layers: int
    node_dims: dict[str, int]
    edge_types: tuple[tuple[str, str, str], ...]
    tensors: dict[str, np.ndarray] = field(default_factory=dict)
    pooled: bool = False

    @classmethod
    def init(cls, signature: Signature, hidden_dim: int, layers: int = 2, seed: int = 0,
             pooled: bool = False) -> "ModelParams":
        """Glorot-uniform weights, zero biases, PReLU slopes at 0.25."""
        rng = np.random.default_rng(seed)
        h = hidden_dim

        def glorot(rows, cols):
            bound = np.sqrt(6.0 / (rows + cols))
            return rng.uniform(-bound, bound, size=(rows, cols))

        t: dict[str, np.ndarray] = {}
        for nt, d in signature.node_dims.items():
            t[f"in.{nt}.W"] = glorot(h, d)
            t[f"in.{nt}.b"] = np.zeros(h)
        for layer in range(layers):
            for nt in signature.node_dims:
                t[f"l{layer}.self.{nt}.W"] = glorot(h, h)
                t[f"l{layer}.self.{nt}.b"] = np.zeros(h)
            for et in signature.edge_types:
                t[f"l{layer}.msg.{_et_name(et)}.W"] = glorot(h, h)
            t[f"l{layer}.prelu"] = np.array(PRELU_INIT)
        t["head.W"] = glorot(1, h)
        t["head.b"] = np.zeros(1)
        return cls(h, layers, dict(signature.node_dims), tuple(signature.edge_types), t, pooled)

    def copy(self) -> "ModelParams":
        return ModelParams(self.hidden_dim, self.layers, dict(self.node_dims), self.edge_types,
                           {k: v.copy() for k, v in self.tensors.items()}, self.pooled)

    def zeros_like(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.tensors.items()}

    def check(self, graph: GraphData) -> None:
        for nt, x in graph.x.items():
            key = f"in.{nt}.W"
            if key not in self.tensors:
                raise ValueError(f"no parameters for node type {nt!r} ({key})")
            if self.tensors[key].shape[1] != x.shape[1]:
                raise ValueError(
                    f"shape mismatch for {key}: expects {self.tensors[key].shape[1]} features, "
                    f"graph has {x.shape[1]}"
                )
        for et in graph.edges:
            key = f"l0.msg.{_et_name(et)}.W"
            if key not in self.tensors:
                raise ValueError(f"no parameters for edge type {et} ({key})")
        if EVENT not in graph.x:
            raise ValueError("graph has no event nodes")

    def to_dict(self) -> dict:
        return {
            "schema_version": CHECKPOINT_VERSION,
            "hidden_dim": self.hidden_dim,
            "layers": self.layers,
            "pooled": self.pooled,
            "node_dims": self.node_dims,
            "edge_types": [list(et) for et in self.edge_types],
            "tensors": {
                k: {"shape": list(v.shape), "data": [float(x) for x in v.ravel()]}
                for k, v in self.tensors.items()
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        if d.get("schema_version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {d.get('schema_version')!r}")
        tensors = {k: np.array(v["data"], dtype=float).reshape(v["shape"]) for k, v in d["tensors"].items()}
        return cls(d["hidden_dim"], d["layers"], dict(d["node_dims"]),
                   tuple(tuple(et) for et in d["edge_types"]), tensors, d["pooled"])

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "ModelParams":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _aggregate(h_src: np.ndarray, src: np.ndarray, dst: np.ndarray, n_dst: int) -> np.ndarray:
    out = np.zeros((n_dst, h_src.shape[1]))
    np.add.at(out, dst, h_src[src])
    return out


def _forward(graph: GraphData, params: ModelParams):
    p = params.tensors
    H = {nt: x @ p[f"in.{nt}.W"].T + p[f"in.{nt}.b"] for nt, x in graph.x.items()}
    cache = []
    for layer in range(params.layers):
        Z = {nt: h @ p[f"l{layer}.self.{nt}.W"].T + p[f"l{layer}.self.{nt}.b"] for nt, h in H.items()}
        msgs = {}
        for et, (src, dst) in graph.edges.items():
            if len(src) == 0:
                continue
            m = _aggregate(H[et[0]], src, dst, H[et[2]].shape[0])
            msgs[et] = m
            Z[et[2]] = Z[et[2]] + m @ p[f"l{layer}.msg.{_et_name(et)}.W"].T
        a = p[f"l{layer}.prelu"]
        H_next = {nt: np.where(z > 0, z, a * z) for nt, z in Z.items()}
        cache.append((H, Z, msgs))
        H = H_next
    h_event = H[EVENT]
    if params.pooled:
        pooled = h_event.mean(axis=0, keepdims=True) if len(h_event) else np.zeros((1, params.hidden_dim))
        pred = (pooled @ p["head.W"].T + p["head.b"]).ravel()
    else:
        pred = (h_event @ p["head.W"].T + p["head.b"]).ravel()
    return pred, cache, H


def forward(graph, params: ModelParams) -> np.ndarray:
    """Predictions per event node (or one per graph in pooled mode)."""
    graph = as_graph_data(graph, pooled=params.pooled)
    params.check(graph)
    return _forward(graph, params)[0]


def loss(predictions, targets, kind: str = "mse") -> float:
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(targets, dtype=float)
    if p.shape != t.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise ValueError("loss of empty vectors")
    if kind == "mse":
        return float(np.mean((p - t) ** 2))
    if kind == "mae":
        return float(np.mean(np.abs(p - t)))
    raise ValueError(f"unknown loss {kind!r}")


def loss_grad_sum(graph: GraphData, params: ModelParams, kind: str = "mse"):
    """Summed (not averaged) loss over the graph's targets and its gradients."""
    pred, cache, H = _forward(graph, params)
    diff = pred - graph.targets
    if kind == "mse":
        total = float(np.sum(diff**2))
        g_pred = 2.0 * diff
    elif kind == "mae":
        total = float(np.sum(np.abs(diff)))
        g_pred = np.sign(diff)
    else:
        raise ValueError(f"unknown loss {kind!r}")
    return total, _backward(graph, params, cache, H, g_pred)


def _backward(graph: GraphData, params: ModelParams, cache, H, g_pred: np.ndarray) -> dict[str, np.ndarray]:
    p = params.tensors
    grads = params.zeros_like()
    h_event = H[EVENT]
    w_head = p["head.W"]
    if params.pooled:
        n = len(h_event)
        pooled = h_event.mean(axis=0, keepdims=True) if n else np.zeros((1, params.hidden_dim))
        grads["head.W"] += g_pred[:, None].T @ pooled
        grads["head.b"] += g_pred.sum(keepdims=True)
        dH = {nt: np.zeros_like(h) for nt, h in H.items()}
        if n:
            dH[EVENT] += np.repeat(g_pred[0] * w_head / n, n, axis=0)
    else:
        grads["head.W"] += g_pred[None, :] @ h_event
        grads["head.b"] += g_pred.sum(keepdims=True)
        dH = {nt: np.zeros_like(h) for nt, h in H.items()}
        dH[EVENT] += g_pred[:, None] @ w_head

    for layer in reversed(range(params.layers)):
        H_prev, Z, msgs = cache[layer]
        a = p[f"l{layer}.prelu"]
        dZ = {}
        g_slope = 0.0
        for nt, z in Z.items():
            neg = z <= 0
            dZ[nt] = np.where(neg, a * dH[nt], dH[nt])
            g_slope += float(np.sum(dH[nt][neg] * z[neg]))
        grads[f"l{layer}.prelu"] += g_slope
        dH_prev = {}
        for nt, h in H_prev.items():
            W = p[f"l{layer}.self.{nt}.W"]
            grads[f"l{layer}.self.{nt}.W"] += dZ[nt].T @ h
            grads[f"l{layer}.self.{nt}.b"] += dZ[nt].sum(axis=0)
            dH_prev[nt] = dZ[nt] @ W
        for et, m in msgs.items():
            src, dst = graph.edges[et]
            key = f"l{layer}.msg.{_et_name(et)}.W"
            grads[key] += dZ[et[2]].T @ m
            dm = dZ[et[2]] @ p[key]
            np.add.at(dH_prev[et[0]], src, dm[dst])
        dH = dH_prev

    for nt, x in graph.x.items():
        grads[f"in.{nt}.W"] += dH[nt].T @ x
        grads[f"in.{nt}.b"] += dH[nt].sum(axis=0)
    return grads


def backward(graph, params: ModelParams, kind: str = "mse") -> dict[str, np.ndarray]:
    """Gradients of the mean loss over the graph's targets."""
    graph = as_graph_data(graph, pooled=params.pooled)
    params.check(graph)
    _, grads = loss_grad_sum(graph, params, kind)
    n = graph.num_targets
    return {k: v / n for k, v in grads.items()}
