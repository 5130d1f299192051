"""Training loop, baselines and evaluation."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .nn import GraphData, ModelParams, as_graph_data, forward, loss_grad_sum, _forward
from .optim import Adam, EarlyStopping

HIDDEN_DIMS = (8, 16, 24, 32, 48, 64, 128, 256)
LEARNING_RATES = (0.01, 0.001)


@dataclass
class ModelConfig:
    hidden_dim: int = 24
    learning_rate: float = 0.001
    mp_layers: int = 2
    post_layers: int = 1
    dropout: float = 0.0
    batch_size: int = 16
    max_epochs: int = 30
    early_stop_patience: int | None = 4
    seed: int = 0
    # loss optimised during training; early stopping always monitors validation MAE
    loss: str = "mse"

    def grid_deviations(self) -> list[str]:
        """Settings outside the hyperparameter grid used in the experiments."""
        out = []
        if self.hidden_dim not in HIDDEN_DIMS:
            out.append(f"hidden_dim {self.hidden_dim} not in {HIDDEN_DIMS}")
        if self.learning_rate not in LEARNING_RATES:
            out.append(f"learning_rate {self.learning_rate} not in {LEARNING_RATES}")
        for name, want in (("mp_layers", 2), ("post_layers", 1), ("dropout", 0.0),
                           ("batch_size", 16), ("max_epochs", 30), ("early_stop_patience", 4)):
            if getattr(self, name) != want:
                out.append(f"{name} is {getattr(self, name)}, experiments used {want}")
        return out

    def check(self) -> None:
        if self.hidden_dim < 1 or self.batch_size < 1 or self.max_epochs < 0 or self.mp_layers < 0:
            raise ValueError(f"invalid model config {self}")
        if self.post_layers != 1:
            raise ValueError("only a single linear head is supported")
        if self.dropout != 0.0:
            raise ValueError("dropout is not supported")
        if self.loss not in ("mse", "mae"):
            raise ValueError(f"unknown loss {self.loss!r}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainReport:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    best_epoch: int = 0
    epochs_run: int = 0
    fit_seconds: float = 0.0
    predict_seconds: float = 0.0
    metrics: dict[str, dict[str, float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _mean_loss(graphs: Sequence[GraphData], params: ModelParams, kind: str) -> float:
    total, count = 0.0, 0
    for g in graphs:
        pred = _forward(g, params)[0]
        d = pred - g.targets
        total += float(np.sum(d**2) if kind == "mse" else np.sum(np.abs(d)))
        count += len(d)
    return total / count


def train(graphs, splits: Sequence[str], cfg: ModelConfig) -> tuple[ModelParams, TrainReport]:
    """Fit a model with Adam on minibatches of whole graphs.

    Epoch 0 of the report is the untrained model. Each later epoch shuffles
    the training graphs, takes Adam steps on batches of ``cfg.batch_size``
    graphs with the loss averaged over all targets of the batch, then records
    the training loss (``cfg.loss``) and validation MAE. Parameters from the
    epoch with the lowest validation MAE are returned.
    """
    cfg.check()
    data = [as_graph_data(g) for g in graphs]
    train_set = [g for g, s in zip(data, splits) if s == "train" and g.num_targets]
    val_set = [g for g, s in zip(data, splits) if s == "validation" and g.num_targets]
    if not train_set:
        raise ValueError("training split is empty")
    if not val_set:
        raise ValueError("validation split is empty")
    signature = train_set[0].signature()
    params = ModelParams.init(signature, cfg.hidden_dim, cfg.mp_layers, cfg.seed, train_set[0].pooled)
    for g in train_set + val_set:
        params.check(g)

    rng = np.random.default_rng([cfg.seed, 1])
    opt = Adam(cfg.learning_rate)
    stopper = EarlyStopping(cfg.early_stop_patience)
    report = TrainReport()
    report.train_loss.append(_mean_loss(train_set, params, cfg.loss))
    report.val_loss.append(_mean_loss(val_set, params, "mae"))
    best = params.copy()

    start = time.perf_counter()
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(train_set))
        for lo in range(0, len(order), cfg.batch_size):
            batch = [train_set[i] for i in order[lo : lo + cfg.batch_size]]
            grads = params.zeros_like()
            count = 0
            for g in batch:
                _, gg = loss_grad_sum(g, params, cfg.loss)
                for k, v in gg.items():
                    grads[k] += v
                count += g.num_targets
            for k in grads:
                grads[k] /= count
            opt.step(params.tensors, grads)
        report.train_loss.append(_mean_loss(train_set, params, cfg.loss))
        report.val_loss.append(_mean_loss(val_set, params, "mae"))
        report.epochs_run = epoch
        stop = stopper.update(report.val_loss[-1], epoch)
        if stopper.best_epoch == epoch:
            best = params.copy()
        if stop:
            break
    report.fit_seconds = time.perf_counter() - start
    report.best_epoch = stopper.best_epoch or 0
    return best, report


class MedianBaseline:
    """Predicts the median of the training targets for every target."""

    def __init__(self, targets):
        t = np.asarray(list(targets), dtype=float)
        if t.size == 0:
            raise ValueError("median of empty targets")
        self.value = float(np.median(t))

    def __call__(self, graph) -> np.ndarray:
        return np.full(as_graph_data(graph).num_targets, self.value)


def median_baseline(train_targets) -> MedianBaseline:
    return MedianBaseline(train_targets)


def model_predictor(params: ModelParams) -> Callable:
    return lambda g: forward(g, params)


def evaluate(predictor: Callable, graphs) -> tuple[float, float, float]:
    """MAE, MSE over all targets of ``graphs`` and the wall-clock prediction time."""
    data = [as_graph_data(g) for g in graphs]
    start = time.perf_counter()
    preds = [np.asarray(predictor(g), dtype=float) for g in data]
    seconds = time.perf_counter() - start
    if not data or sum(len(p) for p in preds) == 0:
        return float("nan"), float("nan"), seconds
    p = np.concatenate(preds)
    t = np.concatenate([g.targets for g in data])
    d = p - t
    return float(np.mean(np.abs(d))), float(np.mean(d**2)), seconds
