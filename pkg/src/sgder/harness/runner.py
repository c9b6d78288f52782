"""Epoch loop, run records and multi-seed comparison."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from ..convergence import PlateauDetector, RestartController, Stop, StopReason, Verdict
from ..errors import NumericError
from ..landscapes import MlpObjective, SyntheticDataset, generate_dataset
from ..optimizers import AdamState, adam_step, apply_restart, sgd_step
from ..schedules import Event, ScheduleKind, ScheduleState, advance, lr_at
from .config import RunConfig

log = logging.getLogger(__name__)

RECORD_HEADER = ["epoch", "lr", "train_loss", "val_loss", "test_loss", "test_acc", "restart", "k"]
SUMMARY_HEADER = ["scheduler", "metric", "mean", "std", "n_seeds"]
METRICS = ("best_train_loss", "best_val_loss", "best_test_loss", "best_test_acc")


class EpochRow(NamedTuple):
    epoch: int
    lr: float
    train_loss: float
    val_loss: float
    test_loss: float
    test_acc: float
    restart: int
    k: int


@dataclass
class RunRecord:
    variant: str
    seed: int
    eta0: float
    rows: list[EpochRow] = field(default_factory=list)
    events: list[Event] = field(default_factory=list)
    stop_reason: StopReason = StopReason.BUDGET_EXHAUSTED
    diagnostic: str = ""

    @property
    def epochs_used(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        i = RECORD_HEADER.index(name)
        return np.array([r[i] for r in self.rows])

    def summary(self) -> dict[str, float]:
        if not self.rows:
            return {m: math.nan for m in METRICS}
        return {
            "best_train_loss": float(np.nanmin(self.column("train_loss"))),
            "best_val_loss": float(np.nanmin(self.column("val_loss"))),
            "best_test_loss": float(np.nanmin(self.column("test_loss"))),
            "best_test_acc": float(np.nanmax(self.column("test_acc"))),
        }

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(RECORD_HEADER)
        for r in self.rows:
            w.writerow([r.epoch, repr(r.lr), repr(r.train_loss), repr(r.val_loss),
                        repr(r.test_loss), repr(r.test_acc), r.restart, r.k])
        return buf.getvalue()

    def to_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.csv_text())
        return path


def read_record_csv(path) -> list[EpochRow]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != RECORD_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        return [EpochRow(int(r[0]), *(float(v) for v in r[1:6]), int(r[6]), int(r[7])) for r in reader]


def build_problem(config: RunConfig, rng: np.random.Generator):
    spec = config.landscape
    if spec.data_csv:
        data = SyntheticDataset.from_csv(spec.data_csv, spec.classes)
    else:
        data = generate_dataset(spec.n, spec.dim, spec.classes, spec.separation, spec.fractions, rng, spec.noise)
    objs = {name: MlpObjective(*data.subset(name), spec.hidden, data.n_classes) for name in ("train", "val", "test")}
    return data, objs


def initial_schedule(config: RunConfig) -> ScheduleState:
    return ScheduleState(kind=config.schedule_kind, eta0=config.lr0, params=config.schedule_params())


def train_run(config: RunConfig, seed: int) -> RunRecord:
    """Train one (config, seed) pair and return its per-epoch record.

    The seed feeds one ``SeedSequence`` whose three children drive data
    generation, weight initialisation and mini-batch shuffling separately.
    Plateau detection and restarts apply to escalating-restart variants only;
    every other schedule runs for the full budget.
    """
    data_ss, init_ss, shuffle_ss = np.random.SeedSequence(seed).spawn(3)
    _, objs = build_problem(config, np.random.default_rng(data_ss))
    train, val, test = objs["train"], objs["val"], objs["test"]
    theta = train.init_params(np.random.default_rng(init_ss))
    shuffle_rng = np.random.default_rng(shuffle_ss)

    state = initial_schedule(config)
    adam = AdamState.zeros(train.dim) if config.optimizer == "adam" else None
    escalating = state.kind is ScheduleKind.ESCALATING_RESTARTS
    detector = PlateauDetector(config.patience, config.min_delta)
    controller = RestartController(config.lr0, config.budget)

    record = RunRecord(config.variant, seed, config.lr0)
    n_train = train.X.shape[0]
    bs = config.batch_size if 0 < config.batch_size < n_train else n_train
    restarted = False

    for epoch in range(config.budget):
        lr = lr_at(state)
        try:
            order = shuffle_rng.permutation(n_train)
            for start in range(0, n_train, bs):
                _, g = train.eval(theta, order[start : start + bs])
                if adam is None:
                    theta = sgd_step(theta, g, lr)
                else:
                    adam, theta = adam_step(adam, theta, g, lr)
        except NumericError as exc:
            record.stop_reason, record.diagnostic = StopReason.NUMERIC_ERROR, f"epoch {epoch}: {exc}"
            break

        with np.errstate(all="ignore"):
            losses = (train.loss(theta), val.loss(theta), test.loss(theta))
            acc = test.accuracy(theta)
        record.rows.append(EpochRow(epoch, lr, *losses, acc, int(restarted), state.restart_count))
        restarted = False
        if not all(math.isfinite(v) for v in losses):
            record.stop_reason, record.diagnostic = StopReason.NUMERIC_ERROR, f"epoch {epoch}: non-finite loss {losses}"
            break

        state = advance(state, Event.EPOCH_END)
        record.events.append(Event.EPOCH_END)
        if not escalating:
            continue
        controller.record(losses[1])
        if detector.observe(losses[1]) is Verdict.PLATEAU:
            decision = controller.on_plateau(detector)
            if isinstance(decision, Stop):
                record.stop_reason = decision.reason
                break
            state = advance(state, Event.RESTART)
            record.events.append(Event.RESTART)
            adam = apply_restart(adam)
            restarted = True
            log.debug("%s seed %d: restart %d at epoch %d, lr %g",
                      config.variant, seed, decision.new_k, epoch + 1, decision.new_lr)
    return record


# --------------------------------------------------------------------------
# multi-seed comparison
# --------------------------------------------------------------------------


@dataclass
class ComparisonReport:
    seeds: tuple[int, ...]
    stats: dict[str, dict[str, tuple[float, float, int]]] = field(default_factory=dict)
    failed: dict[str, str] = field(default_factory=dict)
    records: dict[str, list[RunRecord]] = field(default_factory=dict)

    def mean(self, variant: str, metric: str) -> float:
        return self.stats[variant][metric][0]

    def best_variant(self, metric: str = "best_val_loss") -> str:
        pick = max if metric == "best_test_acc" else min
        return pick(self.stats, key=lambda v: self.stats[v][metric][0])

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for variant, metrics in self.stats.items():
            for m in METRICS:
                mean, std, n = metrics[m]
                w.writerow([variant, m, repr(mean), repr(std), n])
        for variant in self.failed:
            w.writerow([variant, "failed", "nan", "nan", 0])
        return buf.getvalue()

    def to_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.csv_text())
        return path


def aggregate(values) -> tuple[float, float, int]:
    """Mean and sample standard deviation (0 for a single value)."""
    arr = np.asarray(values, dtype=np.float64)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return float(arr.mean()), std, int(arr.size)


def compare(configs: dict[str, RunConfig], seeds) -> ComparisonReport:
    """Run every variant on every seed and aggregate best-so-far metrics.

    A variant whose run raises or ends on a numeric error is reported as
    failed; the other variants are unaffected.
    """
    seeds = tuple(seeds)
    report = ComparisonReport(seeds)
    for variant, cfg in configs.items():
        try:
            records = [train_run(cfg, s) for s in seeds]
        except Exception as exc:  # one broken variant must not sink the sweep
            report.failed[variant] = f"{type(exc).__name__}: {exc}"
            continue
        bad = [r for r in records if r.stop_reason is StopReason.NUMERIC_ERROR]
        if bad:
            report.failed[variant] = "; ".join(f"seed {r.seed}: {r.diagnostic}" for r in bad)
            continue
        report.records[variant] = records
        summaries = [r.summary() for r in records]
        report.stats[variant] = {m: aggregate([s[m] for s in summaries]) for m in METRICS}
    return report
