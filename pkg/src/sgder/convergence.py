"""Plateau detection and the restart / stop decisions of escalating restarts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

from .errors import DataError
from .schedules import escalated_lr


class Verdict(Enum):
    CONTINUE = "continue"
    PLATEAU = "plateau"


class StopReason(str, Enum):
    NO_IMPROVEMENT = "NoImprovement"
    BUDGET_EXHAUSTED = "BudgetExhausted"
    NUMERIC_ERROR = "NumericError"


@dataclass
class PlateauDetector:
    """Patience counter over validation losses.

    An observation counts as an improvement only if it is strictly below
    ``best_loss - min_delta``.  The detector reports a plateau once
    ``patience`` consecutive observations failed to improve.
    """

    patience: int
    min_delta: float = 0.0
    best_loss: float = math.inf
    epochs_since_improve: int = 0

    def __post_init__(self):
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")
        if self.min_delta < 0:
            raise ValueError(f"min_delta must be >= 0, got {self.min_delta}")

    def observe(self, val_loss: float) -> Verdict:
        if not math.isfinite(val_loss):
            raise DataError(f"validation loss is not finite: {val_loss!r}")
        if val_loss < self.best_loss - self.min_delta:
            self.best_loss = val_loss
            self.epochs_since_improve = 0
            return Verdict.CONTINUE
        self.epochs_since_improve += 1
        if self.epochs_since_improve >= self.patience:
            return Verdict.PLATEAU
        return Verdict.CONTINUE

    def reset_counter(self) -> None:
        # best_loss survives restarts on purpose
        self.epochs_since_improve = 0


@dataclass(frozen=True)
class RestartDecision:
    new_k: int
    new_lr: float


@dataclass(frozen=True)
class Stop:
    reason: StopReason


Decision = Union[RestartDecision, Stop]


@dataclass
class RestartController:
    """Tracks restart segments and decides between restarting and stopping.

    ``segment_bests[i]`` is the lowest validation loss seen during restart
    segment ``i``.
    """

    eta0: float
    max_epochs: int
    restart_count: int = 0
    segment_bests: list[float] = field(default_factory=list)
    epochs_elapsed: int = 0

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if not self.eta0 > 0:
            raise ValueError("eta0 must be positive")

    @property
    def global_best(self) -> float:
        return min(self.segment_bests, default=math.inf)

    def record(self, val_loss: float) -> None:
        """Account for one finished epoch of the current segment."""
        if not math.isfinite(val_loss):
            raise DataError(f"validation loss is not finite: {val_loss!r}")
        if len(self.segment_bests) <= self.restart_count:
            self.segment_bests.append(val_loss)
        else:
            self.segment_bests[-1] = min(self.segment_bests[-1], val_loss)
        self.epochs_elapsed += 1

    def budget_exhausted(self) -> bool:
        return self.epochs_elapsed >= self.max_epochs

    def should_stop(self) -> bool:
        return should_stop(self.segment_bests, self.epochs_elapsed, self.max_epochs)

    def on_plateau(self, detector: PlateauDetector) -> Decision:
        """Either escalate to the next restart or stop the run."""
        if self.budget_exhausted():
            return Stop(StopReason.BUDGET_EXHAUSTED)
        if should_stop(self.segment_bests, 0, self.max_epochs):
            return Stop(StopReason.NO_IMPROVEMENT)
        self.restart_count += 1
        detector.reset_counter()
        return RestartDecision(self.restart_count, escalated_lr(self.restart_count, self.eta0))


def should_stop(segment_bests: list[float], epochs_elapsed: int, max_epochs: int) -> bool:
    """True when the budget is spent or the latest segment failed to beat
    every earlier segment.  Ties count as failure."""
    if epochs_elapsed >= max_epochs:
        return True
    if len(segment_bests) >= 2:
        return segment_bests[-1] >= min(segment_bests[:-1])
    return False
