"""End-to-end dataset construction, training and evaluation."""
from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .encoders import Efg, Hoeg, encode_efg, encode_hoeg, subgraph_samples
from .extraction import ProcessExecution, extract
from .features import (
    FeatureConfig,
    NormalizationStats,
    SplitAssignment,
    assign_splits,
    build_feature_config,
    fit_normalization,
)
from .learn import ModelConfig, ModelParams, TrainReport, evaluate, median_baseline, model_predictor, train
from .learn.nn import as_graph_data
from .model import EventLog

ENCODERS = ("efg", "hoeg", "efg_ss")
SPLIT_NAMES = ("train", "validation", "test")
SUBGRAPH_SIZE = 4


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("HOEGKIT_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class RunConfig:
    input: str = ""
    extraction: str = "cc"
    splits: tuple[float, float, float] = (0.7, 0.15, 0.15)
    seed: int = 0
    chronological: bool = False
    encoder: str = "hoeg"
    dataset: str = ""
    out: str = "out"
    features: dict = field(default_factory=dict)
    model: ModelConfig = field(default_factory=ModelConfig)

    def __post_init__(self):
        if isinstance(self.model, dict):
            self.model = ModelConfig(**self.model)
        self.splits = tuple(float(x) for x in self.splits)
        if self.encoder not in ENCODERS:
            raise ValueError(f"unknown encoder {self.encoder!r}; choose from {ENCODERS}")

    @property
    def dataset_name(self) -> str:
        return self.dataset or (Path(self.input).stem if self.input else "dataset")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["splits"] = list(self.splits)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))


@dataclass
class Dataset:
    executions: list[ProcessExecution]
    split: SplitAssignment
    feature_config: FeatureConfig
    stats: NormalizationStats
    graphs: list
    graph_splits: list[str]

    def of_split(self, name: str) -> list:
        return [g for g, s in zip(self.graphs, self.graph_splits) if s == name]


def encode_executions(executions, log, cfg, stats, encoder: str) -> list:
    def one(ex):
        if encoder == "hoeg":
            return encode_hoeg(ex, log, cfg, stats)
        return encode_efg(ex, log, cfg, stats)

    threads = thread_count()
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, executions))
    return [one(ex) for ex in executions]


def build_dataset(log: EventLog, run: RunConfig) -> Dataset:
    """Extract executions, split them, fit features on train, encode all.

    Executions without events are dropped before splitting. For ``efg_ss``
    every execution contributes its windows of four consecutive events.
    """
    executions = [ex for ex in extract(log, run.extraction) if ex.event_ids]
    split = assign_splits(executions, run.splits, run.seed, run.chronological)
    train_ex = [ex for ex in executions if split.assignment[ex.id] == "train"]
    cfg = build_feature_config(train_ex, log, **run.features)
    stats = fit_normalization(train_ex, log, cfg)
    encoded = encode_executions(executions, log, cfg, stats, run.encoder)
    graphs, graph_splits = [], []
    for ex, g in zip(executions, encoded):
        s = split.assignment[ex.id]
        if run.encoder == "efg_ss":
            for sample in subgraph_samples(g, SUBGRAPH_SIZE):
                graphs.append(as_graph_data((g, sample)))
                graph_splits.append(s)
        else:
            graphs.append(g)
            graph_splits.append(s)
    return Dataset(executions, split, cfg, stats, graphs, graph_splits)


def split_metrics(predictor, dataset: Dataset) -> tuple[dict[str, dict[str, float]], float]:
    metrics, predict_seconds = {}, 0.0
    for name in SPLIT_NAMES:
        mae, mse, seconds = evaluate(predictor, dataset.of_split(name))
        metrics[name] = {"mae": mae, "mse": mse}
        predict_seconds += seconds
    return metrics, predict_seconds


def fit_and_evaluate(dataset: Dataset, model_cfg: ModelConfig) -> tuple[ModelParams, TrainReport]:
    params, report = train(dataset.graphs, dataset.graph_splits, model_cfg)
    report.metrics, report.predict_seconds = split_metrics(model_predictor(params), dataset)
    return params, report


def median_report(dataset: Dataset, include_validation: bool = False) -> tuple[dict, float]:
    """Median baseline fitted on train (optionally train+validation) targets."""
    fit_on = {"train", "validation"} if include_validation else {"train"}
    targets = np.concatenate(
        [as_graph_data(g).targets for g, s in zip(dataset.graphs, dataset.graph_splits) if s in fit_on]
    )
    return split_metrics(median_baseline(targets), dataset)


def metric_rows(dataset_name: str, model: str, metrics: dict, fit_seconds: float, predict_seconds: float) -> list[dict]:
    return [
        {
            "dataset": dataset_name,
            "model": model,
            "split": s,
            "mae": metrics[s]["mae"],
            "mse": metrics[s]["mse"],
            "fit_seconds": fit_seconds,
            "predict_seconds": predict_seconds,
        }
        for s in SPLIT_NAMES
    ]


def summary_row(dataset_name: str, model: str, metrics: dict, fit_seconds: float, predict_seconds: float) -> dict:
    """One row per model: MAE/MSE for each split, then timings."""
    row = {"dataset": dataset_name, "model": model}
    for s in SPLIT_NAMES:
        row[f"{s}_mae"] = metrics[s]["mae"]
        row[f"{s}_mse"] = metrics[s]["mse"]
    row["fit_seconds"] = fit_seconds
    row["predict_seconds"] = predict_seconds
    return row


SUMMARY_COLUMNS = ["dataset", "model"] + [f"{s}_{m}" for s in SPLIT_NAMES for m in ("mae", "mse")] + [
    "fit_seconds",
    "predict_seconds",
]
