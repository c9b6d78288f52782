"""Per-epoch learning-rate schedules.

Every schedule is a pure function of its parameters and integer counters.
``ScheduleState`` bundles those counters into an immutable value and
``advance`` moves it forward by one event, so replaying a recorded event
sequence always reproduces the same learning-rate series bit for bit.

Six kinds are provided:

* ``EXP_DECAY``            eta0 * factor**t
* ``LIN_DECAY``            eta0 * (1 - t/T), floored at eta_min
* ``COSINE_WARM_RESTARTS`` cosine annealing whose cycles restart at eta_max
* ``CYCLICAL``             triangular wave between eta_base and eta_max
* ``WSDS``                 warmup / stable / exponential-decay
* ``ESCALATING_RESTARTS``  plateau-triggered restarts at (k+1)*eta0, decayed
                           inside each restart segment
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Union

from .errors import ConfigError, DomainError, ScheduleLogicError

LR_FLOOR = 1e-8


class ScheduleKind(str, Enum):
    EXP_DECAY = "exp_decay"
    LIN_DECAY = "lin_decay"
    COSINE_WARM_RESTARTS = "cosine_warm_restarts"
    CYCLICAL = "cyclical"
    WSDS = "wsds"
    ESCALATING_RESTARTS = "escalating_restarts"


class DecayMode(str, Enum):
    EXP = "exp"
    LIN = "lin"


class Event(Enum):
    EPOCH_END = "epoch_end"
    RESTART = "restart"


def _check_positive(name: str, value: float) -> None:
    if not (value > 0 and math.isfinite(value)):
        raise ConfigError(f"{name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True)
class ExpDecayParams:
    decay_factor: float = 0.99

    def __post_init__(self):
        if not 0 < self.decay_factor < 1:
            raise ConfigError(f"decay_factor must lie in (0, 1), got {self.decay_factor}")


@dataclass(frozen=True)
class LinDecayParams:
    budget: int
    eta_min: float = 1e-6

    def __post_init__(self):
        if self.budget < 1:
            raise ConfigError(f"budget must be >= 1, got {self.budget}")
        _check_positive("eta_min", self.eta_min)


@dataclass(frozen=True)
class CosineParams:
    eta_max: float
    t0: int
    eta_min: float = 0.0
    t_mult: int = 1

    def __post_init__(self):
        _check_positive("eta_max", self.eta_max)
        if self.eta_min < 0 or self.eta_min > self.eta_max:
            raise ConfigError("cosine schedule needs 0 <= eta_min <= eta_max")
        if self.t0 < 1 or self.t_mult < 1:
            raise ConfigError("cosine schedule needs t0 >= 1 and t_mult >= 1")


@dataclass(frozen=True)
class CyclicalParams:
    eta_base: float
    eta_max: float
    step_size: int

    def __post_init__(self):
        _check_positive("eta_base", self.eta_base)
        if self.eta_max < self.eta_base:
            raise ConfigError("cyclical schedule needs eta_max >= eta_base")
        if self.step_size < 1:
            raise ConfigError(f"step_size must be >= 1, got {self.step_size}")


@dataclass(frozen=True)
class WSDSParams:
    stable_lr: float
    warmup_epochs: int
    decay_start_epoch: int
    decay_factor: float = 0.99

    def __post_init__(self):
        _check_positive("stable_lr", self.stable_lr)
        if self.warmup_epochs < 0:
            raise ConfigError("warmup_epochs must be >= 0")
        if self.decay_start_epoch < self.warmup_epochs:
            raise ConfigError("decay_start_epoch must not precede the end of warmup")
        if not 0 < self.decay_factor <= 1:
            raise ConfigError(f"decay_factor must lie in (0, 1], got {self.decay_factor}")


@dataclass(frozen=True)
class EscalatingParams:
    """Intra-segment decay for escalating restarts.

    ``decay_factor`` is used in EXP mode, ``intra_budget`` and ``eta_min``
    in LIN mode.  The decay clock restarts with every restart.
    """

    decay_mode: DecayMode = DecayMode.EXP
    decay_factor: float = 0.99
    intra_budget: int = 100
    eta_min: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "decay_mode", DecayMode(self.decay_mode))
        if not 0 < self.decay_factor <= 1:
            raise ConfigError(f"decay_factor must lie in (0, 1], got {self.decay_factor}")
        if self.intra_budget < 1:
            raise ConfigError("intra_budget must be >= 1")
        _check_positive("eta_min", self.eta_min)


SchedulerParams = Union[
    ExpDecayParams, LinDecayParams, CosineParams, CyclicalParams, WSDSParams, EscalatingParams
]

_PARAM_TYPES = {
    ScheduleKind.EXP_DECAY: ExpDecayParams,
    ScheduleKind.LIN_DECAY: LinDecayParams,
    ScheduleKind.COSINE_WARM_RESTARTS: CosineParams,
    ScheduleKind.CYCLICAL: CyclicalParams,
    ScheduleKind.WSDS: WSDSParams,
    ScheduleKind.ESCALATING_RESTARTS: EscalatingParams,
}


# --------------------------------------------------------------------------
# closed-form learning rates
# --------------------------------------------------------------------------


def escalated_lr(k: int, eta0: float) -> float:
    """Segment-start learning rate after ``k`` restarts: ``(k + 1) * eta0``."""
    if not eta0 > 0:
        raise DomainError(f"eta0 must be positive, got {eta0}")
    if k < 0:
        raise DomainError(f"restart index must be >= 0, got {k}")
    return (k + 1) * eta0


def exp_decay_lr(eta0: float, decay_factor: float, t: int, floor: float = LR_FLOOR) -> float:
    if not 0 < decay_factor < 1:
        raise DomainError(f"decay_factor must lie in (0, 1), got {decay_factor}")
    if t < 0:
        raise DomainError("t must be >= 0")
    return max(floor, eta0 * decay_factor**t)


def lin_decay_lr(eta0: float, budget: int, eta_min: float, t: int, floor: float = LR_FLOOR) -> float:
    if budget < 1:
        raise DomainError(f"budget must be >= 1, got {budget}")
    if t < 0:
        raise DomainError("t must be >= 0")
    return max(floor, eta_min, eta0 * (1.0 - t / budget))


def cosine_cycle(t: int, t0: int, t_mult: int = 1) -> tuple[int, int]:
    """Return ``(position_in_cycle, cycle_length)`` for global epoch ``t``."""
    if t0 < 1 or t_mult < 1:
        raise DomainError("need t0 >= 1 and t_mult >= 1")
    if t_mult == 1:
        return t % t0, t0
    length = t0
    while t >= length:
        t -= length
        length *= t_mult
    return t, length


def cosine_warm_restart_lr(
    eta_min: float, eta_max: float, t0: int, t_mult: int, t: int, floor: float = LR_FLOOR
) -> float:
    if not eta_max >= eta_min >= 0:
        raise DomainError("need eta_max >= eta_min >= 0")
    pos, length = cosine_cycle(t, t0, t_mult)
    if pos == 0:
        return max(floor, eta_max)
    lr = eta_min + 0.5 * (eta_max - eta_min) * (1.0 + math.cos(math.pi * pos / length))
    return max(floor, lr)


def cyclical_lr(eta_base: float, eta_max: float, step_size: int, t: int, floor: float = LR_FLOOR) -> float:
    """Triangular policy: ascend for ``step_size`` epochs, descend for as many."""
    if not eta_max >= eta_base > 0:
        raise DomainError("need eta_max >= eta_base > 0")
    if step_size < 1:
        raise DomainError("step_size must be >= 1")
    pos = t % (2 * step_size)
    frac = pos / step_size if pos <= step_size else (2 * step_size - pos) / step_size
    lr = min(eta_max, max(eta_base, (1.0 - frac) * eta_base + frac * eta_max))
    return max(floor, lr)


def wsds_lr(params: WSDSParams, t: int, floor: float = LR_FLOOR) -> float:
    if params.decay_start_epoch < params.warmup_epochs:
        raise ConfigError("decay_start_epoch must not precede the end of warmup")
    if t < params.warmup_epochs:
        lr = params.stable_lr * t / params.warmup_epochs
    elif t < params.decay_start_epoch:
        lr = params.stable_lr
    else:
        lr = params.stable_lr * params.decay_factor ** (t - params.decay_start_epoch)
    return max(floor, lr)


def sgd_er_lr(state: ScheduleState, t_since_restart: int | None = None) -> float:
    """Escalated rate ``(k+1)*eta0`` decayed by the time spent in the segment."""
    if state.kind is not ScheduleKind.ESCALATING_RESTARTS:
        raise ScheduleLogicError(f"sgd_er_lr called on a {state.kind.value} schedule")
    t = state.epoch_in_cycle if t_since_restart is None else t_since_restart
    peak = escalated_lr(state.restart_count, state.eta0)
    p = state.params
    if p.decay_mode is DecayMode.EXP:
        lr = peak * p.decay_factor**t
    else:
        lr = max(p.eta_min, peak * (1.0 - t / p.intra_budget))
    return max(state.floor, lr)


# --------------------------------------------------------------------------
# state machine
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ScheduleState:
    kind: ScheduleKind
    eta0: float
    params: SchedulerParams
    epoch: int = 0
    restart_count: int = 0
    epoch_in_cycle: int = 0
    floor: float = field(default=LR_FLOOR)

    def __post_init__(self):
        object.__setattr__(self, "kind", ScheduleKind(self.kind))
        if not (self.eta0 > 0 and math.isfinite(self.eta0)):
            raise ConfigError(f"eta0 must be positive, got {self.eta0}")
        if not self.floor > 0:
            raise ConfigError("the LR floor must be positive")
        expected = _PARAM_TYPES[self.kind]
        if not isinstance(self.params, expected):
            raise ConfigError(
                f"{self.kind.value} needs {expected.__name__}, got {type(self.params).__name__}"
            )
        if self.restart_count and self.kind is not ScheduleKind.ESCALATING_RESTARTS:
            raise ConfigError(f"{self.kind.value} schedules never restart")

    @property
    def lr(self) -> float:
        return lr_at(self)


def lr_at(state: ScheduleState) -> float:
    """Learning rate to use for the epoch ``state.epoch``."""
    p, t, fl = state.params, state.epoch, state.floor
    kind = state.kind
    if kind is ScheduleKind.EXP_DECAY:
        return exp_decay_lr(state.eta0, p.decay_factor, t, fl)
    if kind is ScheduleKind.LIN_DECAY:
        return lin_decay_lr(state.eta0, p.budget, p.eta_min, t, fl)
    if kind is ScheduleKind.COSINE_WARM_RESTARTS:
        return cosine_warm_restart_lr(p.eta_min, p.eta_max, p.t0, p.t_mult, t, fl)
    if kind is ScheduleKind.CYCLICAL:
        return cyclical_lr(p.eta_base, p.eta_max, p.step_size, t, fl)
    if kind is ScheduleKind.WSDS:
        return wsds_lr(p, t, fl)
    return sgd_er_lr(state)


def advance(state: ScheduleState, event: Event) -> ScheduleState:
    if event is Event.EPOCH_END:
        return replace(state, epoch=state.epoch + 1, epoch_in_cycle=state.epoch_in_cycle + 1)
    if event is Event.RESTART:
        if state.kind is not ScheduleKind.ESCALATING_RESTARTS:
            raise ScheduleLogicError(f"a {state.kind.value} schedule cannot be restarted")
        return replace(state, restart_count=state.restart_count + 1, epoch_in_cycle=0)
    raise ScheduleLogicError(f"unknown event {event!r}")


def replay(state: ScheduleState, events: Iterable[Event]) -> list[float]:
    """Per-epoch LR series produced by feeding ``events`` to ``state``.

    The series has one entry per ``EPOCH_END``.  A ``RESTART`` issued after
    an ``EPOCH_END`` takes effect from the following epoch on.
    """
    lrs = [lr_at(state)]
    for event in events:
        state = advance(state, event)
        if event is Event.EPOCH_END:
            lrs.append(lr_at(state))
        else:
            lrs[-1] = lr_at(state)
    return lrs[:-1]

# --------------------------------------------------------------------------
# construction with documented defaults
# --------------------------------------------------------------------------


def default_params(kind: ScheduleKind | str, eta0: float, budget: int, **overrides) -> SchedulerParams:
    """Build the parameter record for ``kind`` with budget-relative defaults.

    Defaults: decay factor 0.99; cosine cycle length equal to the budget;
    cyclical half-period budget/10 between eta0/10 and eta0; WSDS warmup
    over the first 5% and decay over the last 20% of the budget.
    """
    kind = ScheduleKind(kind)
    if budget < 1:
        raise ConfigError("budget must be >= 1")
    if kind is ScheduleKind.EXP_DECAY:
        base = dict(decay_factor=0.99)
    elif kind is ScheduleKind.LIN_DECAY:
        base = dict(budget=budget, eta_min=1e-6)
    elif kind is ScheduleKind.COSINE_WARM_RESTARTS:
        base = dict(eta_max=eta0, eta_min=0.0, t0=budget, t_mult=1)
    elif kind is ScheduleKind.CYCLICAL:
        base = dict(eta_base=eta0 / 10, eta_max=eta0, step_size=max(1, budget // 10))
    elif kind is ScheduleKind.WSDS:
        base = dict(
            stable_lr=eta0,
            warmup_epochs=int(round(0.05 * budget)),
            decay_start_epoch=int(round(0.8 * budget)),
            decay_factor=0.99,
        )
    else:
        base = dict(decay_mode=DecayMode.EXP, decay_factor=0.99, intra_budget=budget, eta_min=1e-6)
    unknown = set(overrides) - set(base)
    if unknown:
        raise ConfigError(f"unknown parameter(s) for {kind.value}: {sorted(unknown)}")
    base.update(overrides)
    return _PARAM_TYPES[kind](**base)


def make_schedule(kind: ScheduleKind | str, eta0: float, budget: int, **overrides) -> ScheduleState:
    kind = ScheduleKind(kind)
    return ScheduleState(kind=kind, eta0=eta0, params=default_params(kind, eta0, budget, **overrides))
