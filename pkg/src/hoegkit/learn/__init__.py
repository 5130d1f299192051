from .nn import GraphData, ModelParams, Signature, as_graph_data, backward, forward, loss
from .optim import Adam, EarlyStopping
from .training import (
    MedianBaseline,
    ModelConfig,
    TrainReport,
    evaluate,
    median_baseline,
    model_predictor,
    train,
)

__all__ = [
    "Adam",
    "EarlyStopping",
    "GraphData",
    "MedianBaseline",
    "ModelConfig",
    "ModelParams",
    "Signature",
    "TrainReport",
    "as_graph_data",
    "backward",
    "evaluate",
    "forward",
    "loss",
    "median_baseline",
    "model_predictor",
    "train",
]
