"""Mini-batch training loop with validation-based early stopping."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import EmptyPartition
from .adam import AdamState, adam_step
from .losses import get_loss
from .network import apply_running_update, loss_and_grad

log = logging.getLogger(__name__)


@dataclass
class TrainingConfig:
    learning_rate: float = 1e-3
    patience: int = 10
    split_fractions: tuple = (0.75, 0.05, 0.20)
    max_epochs: int = 1000
    batch_size: int = 32
    seed: int = 0
    loss: str = "mae"

    def __post_init__(self):
        self.split_fractions = tuple(float(f) for f in self.split_fractions)
        if len(self.split_fractions) != 3 or any(f < 0 for f in self.split_fractions):
            raise ValueError("split_fractions must be three non-negative numbers")
        if abs(sum(self.split_fractions) - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {sum(self.split_fractions)}")
        if self.patience < 1:
            raise ValueError("patience must be at least 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.max_epochs < 1 or self.batch_size < 2:
            raise ValueError("max_epochs must be >= 1 and batch_size >= 2")
        get_loss(self.loss)
        self.loss = self.loss.lower()

    def to_dict(self):
        d = asdict(self)
        d["split_fractions"] = list(self.split_fractions)
        return d


@dataclass
class TrainingHistory:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    best_epoch: int = -1
    stopped_early: bool = False
    loss: str = "mae"

    @property
    def epochs_run(self):
        return len(self.train_loss)

    @property
    def best_val_loss(self):
        return self.val_loss[self.best_epoch] if self.best_epoch >= 0 else math.inf

    def to_dict(self):
        return {
            "loss": self.loss,
            "epochs_run": self.epochs_run,
            "best_epoch": self.best_epoch,
            "best_val_loss": self.best_val_loss,
            "stopped_early": self.stopped_early,
            "train_loss": list(self.train_loss),
            "val_loss": list(self.val_loss),
        }


class EarlyStopping:
    """Tracks the best monitored loss; signals a stop after ``patience`` epochs without strict improvement."""

    def __init__(self, patience):
        self.patience = patience
        self.best = math.inf
        self.best_epoch = -1
        self.wait = 0

    def update(self, epoch, value):
        """Record ``value`` for ``epoch``. Returns (improved, should_stop)."""
        if value < self.best:
            self.best = value
            self.best_epoch = epoch
            self.wait = 0
            return True, False
        self.wait += 1
        return False, self.wait >= self.patience


def _batches(n, batch_size, rng):
    order = rng.permutation(n)
    chunks = [order[i : i + batch_size] for i in range(0, n, batch_size)]
    # a lone trailing sample cannot be batch-normalized; fold it into the previous batch
    if len(chunks) > 1 and len(chunks[-1]) < 2:
        tail = chunks.pop()
        chunks[-1] = np.concatenate([chunks[-1], tail])
    return chunks


def evaluate_loss(model, windows, targets, loss="mae"):
    loss_fn, _ = get_loss(loss)
    return loss_fn(model.predict(windows), targets)


def train(model, train_set, val_set=None, config=None):
    """Fit ``model`` on ``train_set = (windows, targets)``.

    Validation loss is computed in inference mode after every epoch. When the
    validation partition is empty the training partition is monitored
    instead. Returns a new model holding the best-epoch parameters and
    running statistics, plus the history.
    """
    config = config or TrainingConfig()
    x_train = np.asarray(train_set[0], dtype=float)
    y_train = np.asarray(train_set[1], dtype=float).ravel()
    if x_train.shape[0] < 2:
        raise EmptyPartition(f"training partition needs at least 2 samples, got {x_train.shape[0]}")
    if val_set is None or len(val_set[0]) == 0:
        log.warning("empty validation partition; monitoring training loss for early stopping")
        x_val, y_val = x_train, y_train
    else:
        x_val = np.asarray(val_set[0], dtype=float)
        y_val = np.asarray(val_set[1], dtype=float).ravel()

    model = model.copy()
    rng = np.random.default_rng(config.seed)
    state = AdamState.zeros(model.params.size)
    stopper = EarlyStopping(config.patience)
    history = TrainingHistory(loss=config.loss)
    best = (model.params.copy(), dict(model.running))

    for epoch in range(config.max_epochs):
        model.train()
        total = 0.0
        for idx in _batches(len(y_train), config.batch_size, rng):
            value, grad, stats = loss_and_grad(model, x_train[idx], y_train[idx], config.loss)
            apply_running_update(model, stats)
            model.params, state = adam_step(model.params, grad, state, config.learning_rate)
            total += value * len(idx)
        model.eval()
        history.train_loss.append(total / len(y_train))
        val = evaluate_loss(model, x_val, y_val, config.loss)
        history.val_loss.append(val)

        improved, stop = stopper.update(epoch, val)
        if improved:
            best = (model.params.copy(), dict(model.running))
        if stop:
            history.stopped_early = True
            break

    history.best_epoch = stopper.best_epoch
    model.params, model.running = best
    model.eval()
    log.info(
        "trained %d epochs, best epoch %d, val %s %.6g",
        history.epochs_run, history.best_epoch, config.loss, history.best_val_loss,
    )
    return model, history
