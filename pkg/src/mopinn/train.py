"""Inner-loop training machinery: Adam, plateau scheduling, histories.

The checkpoint-selection rule implemented here picks the reported model
retrospectively: after the full epoch budget, walk the recorded history and
take the last epoch at which the validation residual loss exceeded the
physics training loss by more than a fixed threshold (a sign of the final
overfitting-free state); if that never happened, keep the final epoch.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import pinn_problems
from .errors import ConfigurationError, RunFailedError

Array = np.ndarray


@dataclass(frozen=True)
class SchedulerConfig:
    factor: float = 0.5
    patience: int = 1000
    min_lr: float = 1e-6
    rel_improvement: float = 1e-4

    def __post_init__(self):
        if not 0.0 < self.factor < 1.0:
            raise ConfigurationError("scheduler factor must lie in (0, 1)")
        if self.patience < 1 or self.min_lr < 0:
            raise ConfigurationError("invalid scheduler settings")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.003
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    epochs: int = 50_000
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)
    stop_threshold: float = 0.1
    checkpoint_every: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigurationError("learning rate must be positive")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ConfigurationError("betas must lie in [0, 1)")
        if self.stop_threshold < 0:
            raise ConfigurationError("stop threshold must be non-negative")
        if self.epochs < 1 or self.checkpoint_every < 1:
            raise ConfigurationError("epoch counts must be positive")


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    m: Array
    v: Array
    t: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n))


def adam_step(state: AdamState, params: Array, gradient: Array,
              learning_rate: float, beta1: float = 0.9, beta2: float = 0.999,
              epsilon: float = 1e-8) -> Array:
    """One bias-corrected Adam update; returns the new parameter vector."""
    gradient = np.asarray(gradient, dtype=np.float64)
    if gradient.shape != params.shape:
        raise ConfigurationError("gradient length does not match parameter count")
    if not np.all(np.isfinite(gradient)):
        raise RunFailedError("non-finite gradient")
    state.t += 1
    state.m = beta1 * state.m + (1.0 - beta1) * gradient
    state.v = beta2 * state.v + (1.0 - beta2) * gradient * gradient
    m_hat = state.m / (1.0 - beta1 ** state.t)
    v_hat = state.v / (1.0 - beta2 ** state.t)
    return params - learning_rate * m_hat / (np.sqrt(v_hat) + epsilon)


# ---------------------------------------------------------------------------
# reduce-on-plateau scheduler
# ---------------------------------------------------------------------------

class PlateauScheduler:
    """Halve the learning rate when the monitored loss stops improving."""

    def __init__(self, initial_lr: float, config: SchedulerConfig):
        self.lr = initial_lr
        self.config = config
        self._best = np.inf
        self._bad_count = 0

    def step(self, loss: float) -> float:
        """Feed the monitored loss for one check; returns the current lr."""
        if loss < self._best * (1.0 - self.config.rel_improvement):
            self._best = loss
            self._bad_count = 0
        else:
            self._bad_count += 1
            if self._bad_count > self.config.patience:
                self.lr = max(self.lr * self.config.factor, self.config.min_lr)
                self._bad_count = 0
        return self.lr


# ---------------------------------------------------------------------------
# history and checkpoint selection
# ---------------------------------------------------------------------------

@dataclass
class HistoryEntry:
    epoch: int
    loss_data: float
    loss_physics: float
    loss_validation: float
    lr: float
    params: Array


class History:
    def __init__(self):
        self.entries: list[HistoryEntry] = []

    def append(self, entry: HistoryEntry) -> None:
        if self.entries and entry.epoch <= self.entries[-1].epoch:
            raise ConfigurationError("history epochs must be strictly increasing")
        for value in (entry.loss_data, entry.loss_physics,
                      entry.loss_validation, entry.lr):
            if not np.isfinite(value):
                raise RunFailedError(f"non-finite history value at epoch {entry.epoch}")
        self.entries.append(entry)

    def __len__(self) -> int:
        return len(self.entries)

    def epochs(self) -> list[int]:
        return [e.epoch for e in self.entries]

    def save_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "loss_data", "loss_physics",
                             "loss_validation", "lr"])
            for e in self.entries:
                writer.writerow([e.epoch, repr(e.loss_data), repr(e.loss_physics),
                                 repr(e.loss_validation), repr(e.lr)])


def record_validation(net, problem, validation_pts: Array) -> float:
    """Residual loss at held-out points (no IC/BC terms)."""
    return pinn_problems.pde_loss(net, problem, validation_pts)


def select_checkpoint_threshold(history: History, threshold: float) -> HistoryEntry:
    """Last recorded epoch where validation exceeded physics loss by > threshold.

    Falls back to the final entry when no such epoch exists (training never
    overfitted, or recovered and stayed clean).
    """
    if not history.entries:
        raise ConfigurationError("history is empty")
    selected = history.entries[-1]
    for entry in reversed(history.entries):
        if entry.loss_validation - entry.loss_physics > threshold:
            selected = entry
            break
    return selected
