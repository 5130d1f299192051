from __future__ import annotations

import numpy as np


class Adam:
    """Adam with bias correction, one moment pair per named tensor."""

    def __init__(self, lr: float = 0.001, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        """Update ``params`` in place."""
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for k, g in grads.items():
            if k not in self.m:
                self.m[k] = np.zeros_like(g)
                self.v[k] = np.zeros_like(g)
            m = self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            v = self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            params[k] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class EarlyStopping:
    """Stop once the monitored loss has not improved for ``patience`` epochs.

    ``patience=None`` never stops.
    """

    def __init__(self, patience: int | None = 4):
        self.patience = patience
        self.best: float | None = None
        self.best_epoch: int | None = None
        self.counter = 0

    def update(self, value: float, epoch: int) -> bool:
        """Record one epoch; returns True when training should stop."""
        if self.best is None or value < self.best:
            self.best = value
            self.best_epoch = epoch
            self.counter = 0
            return False
        self.counter += 1
        return self.patience is not None and self.counter >= self.patience
