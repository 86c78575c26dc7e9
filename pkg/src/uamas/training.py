"""Seeded minibatch training of a variational net."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .adam import Adam
from .bnn import VariationalNet, elbo_loss
from .errors import ShapeMismatch

# Reference protocol: 300 epochs, lr 0.005, Adam, 50 MC samples at inference,
# certainty threshold 0.80.
REFERENCE_EPOCHS = 300
REFERENCE_LEARNING_RATE = 0.005
REFERENCE_MC_SAMPLES = 50
REFERENCE_THRESHOLD = 0.80
REFERENCE_K_FOLDS = 5


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = REFERENCE_EPOCHS
    learning_rate: float = REFERENCE_LEARNING_RATE
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 128
    train_mc_samples: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.learning_rate <= 0 or self.batch_size < 1:
            raise ValueError("epochs/learning_rate/batch_size out of range")
        if self.train_mc_samples < 1:
            raise ValueError("train_mc_samples must be >= 1")

    def with_seed(self, seed: int) -> "TrainConfig":
        return replace(self, seed=seed)

    def is_reference_protocol(self) -> bool:
        """True when training hyperparameters match the reference run."""
        return (
            self.epochs == REFERENCE_EPOCHS
            and self.learning_rate == REFERENCE_LEARNING_RATE
            and self.train_mc_samples == 1
        )


@dataclass
class TrainResult:
    net: VariationalNet
    loss_trace: list[float] = field(default_factory=list)


ProgressCallback = Callable[[dict], None]


def train(
    net: VariationalNet,
    X: np.ndarray,
    y: np.ndarray,
    config: TrainConfig,
    progress: ProgressCallback | None = None,
) -> TrainResult:
    """Train a copy of ``net``; deterministic given ``config.seed``.

    The loss trace holds one mean-batch-loss entry per epoch and progress
    events carry ``{"epoch", "epochs", "loss"}``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(X) == 0:
        raise ShapeMismatch("training set is empty")
    if y.min() < 0 or y.max() >= net.num_classes:
        raise ShapeMismatch("labels outside the net's class range")

    trained = net.copy()
    params = trained.parameters()
    optimizer = Adam(config.learning_rate, config.beta1, config.beta2, config.adam_eps)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    n = len(X)
    num_batches = (n + config.batch_size - 1) // config.batch_size

    trace = []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for b in range(num_batches):
            idx = order[b * config.batch_size : (b + 1) * config.batch_size]
            loss, grads = elbo_loss(
                trained, X[idx], y[idx], num_batches, rng, config.train_mc_samples
            )
            optimizer.step(params, grads)
            epoch_loss += loss
        trace.append(epoch_loss / num_batches)
        if progress is not None:
            progress({"epoch": epoch + 1, "epochs": config.epochs, "loss": trace[-1]})
    return TrainResult(net=trained, loss_trace=trace)
