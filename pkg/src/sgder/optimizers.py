"""Plain SGD and Adam over flat float64 parameter vectors."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import NumericError


def _check(theta: np.ndarray, grad: np.ndarray, lr: float) -> None:
    if theta.shape != grad.shape:
        raise ValueError(f"shape mismatch: theta {theta.shape} vs grad {grad.shape}")
    if not lr > 0:
        raise ValueError(f"lr must be positive, got {lr}")
    if not np.all(np.isfinite(grad)):
        bad = np.flatnonzero(~np.isfinite(grad))
        raise NumericError(f"non-finite gradient at {bad.size} coordinate(s), first index {bad[0]}")


def sgd_step(theta: np.ndarray, grad: np.ndarray, lr: float) -> np.ndarray:
    """Return ``theta - lr * grad`` as a new array."""
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    _check(theta, grad, lr)
    return theta - lr * grad


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, dim: int, **kwargs) -> "AdamState":
        return cls(m=np.zeros(dim), v=np.zeros(dim), **kwargs)

    def __post_init__(self):
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        if self.m.shape != self.v.shape:
            raise ValueError("moment shapes differ")


def adam_step(
    state: AdamState, theta: np.ndarray, grad: np.ndarray, lr: float
) -> tuple[AdamState, np.ndarray]:
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    _check(theta, grad, lr)
    if state.m.shape != theta.shape:
        raise ValueError(f"Adam state has shape {state.m.shape}, theta has {theta.shape}")
    t = state.t + 1
    m = state.beta1 * state.m + (1 - state.beta1) * grad
    v = state.beta2 * state.v + (1 - state.beta2) * grad * grad
    m_hat = m / (1 - state.beta1**t)
    v_hat = v / (1 - state.beta2**t)
    new_theta = theta - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return replace(state, m=m, v=v, t=t), new_theta


def apply_restart(state: AdamState | None) -> AdamState | None:
    """Optimizer state across an escalating restart.

    Parameters are never touched and Adam's moments and step counter carry
    over unchanged; only the learning rate supplied by the schedule moves.
    Plain SGD has no state, so ``None`` passes through.
    """
    return state
