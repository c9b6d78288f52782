"""Run configuration and its key=value file format.

A config file has up to three sections plus optional per-variant overrides::

    [run]
    budget = 300
    patience = 30
    seeds = 0,1,2

    [landscape]
    kind = mlp
    n = 600

    [scheduler]
    kind = ours_exp          # or, for `compare`: variants = all
    decay_factor = 0.99

    [scheduler.cosa]         # overrides applied to one variant only
    t0 = 100

Unknown sections and keys are rejected.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from ..errors import ConfigError
from ..schedules import DecayMode, ScheduleKind, default_params

# variant name -> (optimizer, schedule kind, fixed schedule overrides)
VARIANTS: dict[str, tuple[str, ScheduleKind, dict]] = {
    "sgd_exp": ("sgd", ScheduleKind.EXP_DECAY, {}),
    "sgd_lin": ("sgd", ScheduleKind.LIN_DECAY, {}),
    "adam": ("adam", ScheduleKind.EXP_DECAY, {}),
    "cosa": ("sgd", ScheduleKind.COSINE_WARM_RESTARTS, {}),
    "clr": ("sgd", ScheduleKind.CYCLICAL, {}),
    "wsds": ("sgd", ScheduleKind.WSDS, {}),
    "ours_exp": ("sgd", ScheduleKind.ESCALATING_RESTARTS, {"decay_mode": DecayMode.EXP}),
    "ours_lin": ("sgd", ScheduleKind.ESCALATING_RESTARTS, {"decay_mode": DecayMode.LIN}),
}

DEFAULT_ETA0 = {"sgd": 0.01, "adam": 0.001}

SCHEDULE_KEYS = {
    "decay_factor", "eta_min", "eta_max", "t0", "t_mult", "eta_base", "step_size",
    "stable_lr", "warmup_epochs", "decay_start_epoch", "intra_budget", "budget",
}


def parse_scalar(text: str):
    text = text.strip()
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def parse_seeds(text: str) -> tuple[int, ...]:
    try:
        seeds = tuple(int(s) for s in str(text).split(",") if s.strip())
    except ValueError:
        raise ConfigError(f"seeds must be comma-separated integers, got {text!r}") from None
    if not seeds:
        raise ConfigError("at least one seed is required")
    return seeds


@dataclass(frozen=True)
class LandscapeSpec:
    kind: str = "mlp"
    n: int = 600
    dim: int = 2
    classes: int = 3
    hidden: int = 16
    separation: float = 2.0
    noise: float = 1.0
    train_frac: float = 0.7
    val_frac: float = 0.15
    test_frac: float = 0.15
    data_csv: str = ""

    def __post_init__(self):
        if self.kind != "mlp":
            raise ConfigError(f"training runs support landscape kind 'mlp' only, got {self.kind!r}")
        if self.hidden < 1:
            raise ConfigError("hidden must be >= 1")

    @property
    def fractions(self) -> tuple[float, float, float]:
        return (self.train_frac, self.val_frac, self.test_frac)


@dataclass(frozen=True)
class RunConfig:
    variant: str = "ours_exp"
    eta0: float | None = None
    patience: int = 30
    min_delta: float = 0.0
    budget: int = 300
    seeds: tuple[int, ...] = (0, 1, 2)
    batch_size: int = 32
    out: str = "results"
    landscape: LandscapeSpec = field(default_factory=LandscapeSpec)
    schedule_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown scheduler {self.variant!r}; choose from {', '.join(VARIANTS)}")
        if self.budget < 1:
            raise ConfigError("budget must be >= 1")
        if self.patience < 1:
            raise ConfigError("patience must be >= 1")
        if self.min_delta < 0:
            raise ConfigError("min_delta must be >= 0")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.eta0 is not None and not self.eta0 > 0:
            raise ConfigError("eta0 must be positive")
        if self.batch_size < 0:
            raise ConfigError("batch_size must be >= 0 (0 means full batch)")
        unknown = set(self.schedule_overrides) - SCHEDULE_KEYS
        if unknown:
            raise ConfigError(f"unknown scheduler key(s): {sorted(unknown)}")
        # build once so bad parameters fail at load time, not mid-run
        self.schedule_params()

    @property
    def optimizer(self) -> str:
        return VARIANTS[self.variant][0]

    @property
    def schedule_kind(self) -> ScheduleKind:
        return VARIANTS[self.variant][1]

    @property
    def lr0(self) -> float:
        return DEFAULT_ETA0[self.optimizer] if self.eta0 is None else self.eta0

    def schedule_params(self):
        _, kind, fixed = VARIANTS[self.variant]
        allowed = {f.name for f in fields(type(default_params(kind, self.lr0, self.budget)))}
        overrides = {k: v for k, v in self.schedule_overrides.items() if k in allowed}
        return default_params(kind, self.lr0, self.budget, **{**overrides, **fixed})

    def with_variant(self, variant: str, overrides: dict | None = None) -> "RunConfig":
        merged = dict(self.schedule_overrides)
        merged.update(overrides or {})
        return replace(self, variant=variant, schedule_overrides=merged)


_RUN_KEYS = {"eta0", "patience", "min_delta", "budget", "seeds", "batch_size", "out"}
_LANDSCAPE_KEYS = {f.name for f in fields(LandscapeSpec)}


def read_ini(path) -> configparser.ConfigParser:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(path.read_text())
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return cp


def _section(cp, name: str, allowed: set[str]) -> dict:
    if not cp.has_section(name):
        return {}
    items = dict(cp.items(name))
    unknown = set(items) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in [{name}]: {sorted(unknown)}")
    return items


def load_run_config(path) -> tuple[RunConfig, list[str], dict[str, dict]]:
    """Parse a harness config.

    Returns the base ``RunConfig``, the list of variants to compare, and
    per-variant schedule overrides from ``[scheduler.<variant>]`` sections.
    """
    cp = read_ini(path)
    per_variant = {}
    for sec in cp.sections():
        if sec in ("run", "landscape", "scheduler"):
            continue
        if sec.startswith("scheduler.") and sec.split(".", 1)[1] in VARIANTS:
            per_variant[sec.split(".", 1)[1]] = {
                k: parse_scalar(v) for k, v in _section(cp, sec, SCHEDULE_KEYS).items()
            }
            continue
        raise ConfigError(f"unknown section [{sec}]")

    run = _section(cp, "run", _RUN_KEYS)
    land = _section(cp, "landscape", _LANDSCAPE_KEYS)
    sched = _section(cp, "scheduler", SCHEDULE_KEYS | {"kind", "variants"})

    kwargs = {}
    for key, raw in run.items():
        if key == "seeds":
            kwargs["seeds"] = parse_seeds(raw)
        elif key == "out":
            kwargs["out"] = raw.strip()
        else:
            kwargs[key] = parse_scalar(raw)
    try:
        landscape = LandscapeSpec(**{k: parse_scalar(v) if k not in ("kind", "data_csv") else v.strip()
                                     for k, v in land.items()})
    except TypeError as exc:
        raise ConfigError(str(exc)) from None

    variant = sched.pop("kind", "ours_exp").strip()
    variants_raw = sched.pop("variants", "").strip()
    overrides = {k: parse_scalar(v) for k, v in sched.items()}
    if variants_raw in ("", "all"):
        variants = list(VARIANTS)
    else:
        variants = [v.strip() for v in variants_raw.split(",") if v.strip()]
        bad = [v for v in variants if v not in VARIANTS]
        if bad:
            raise ConfigError(f"unknown scheduler(s) {bad}; choose from {', '.join(VARIANTS)}")
    try:
        cfg = RunConfig(variant=variant, landscape=landscape, schedule_overrides=overrides, **kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    for v in variants:
        cfg.with_variant(v, per_variant.get(v))  # validate each variant's params early
    return cfg, variants, per_variant


@dataclass(frozen=True)
class SaddleSpec:
    eigenvalues: tuple[float, ...] = (1.0, -1.0)
    x0: float = 1e-3
    delta: float = 1.0
    eta0: float = 0.05
    k_min: int = 0
    k_max: int = 9
    t_max: int = 100_000
    projected_only: bool = False


def load_saddle_config(path) -> SaddleSpec:
    """``[landscape]`` carries eigenvalues, x0 and delta; ``[run]`` the sweep."""
    cp = read_ini(path)
    for sec in cp.sections():
        if sec not in ("run", "landscape"):
            raise ConfigError(f"unknown section [{sec}] for a saddle sweep")
    land = _section(cp, "landscape", {"kind", "eigenvalues", "x0", "delta"})
    run = _section(cp, "run", {"eta0", "k_min", "k_max", "t_max", "projected_only"})
    kind = land.pop("kind", "quadratic_saddle").strip()
    if kind != "quadratic_saddle":
        raise ConfigError(f"saddle sweeps need landscape kind 'quadratic_saddle', got {kind!r}")
    kw = {}
    if "eigenvalues" in land:
        try:
            kw["eigenvalues"] = tuple(float(v) for v in land.pop("eigenvalues").split(","))
        except ValueError:
            raise ConfigError("eigenvalues must be comma-separated numbers") from None
    for key, raw in {**land, **run}.items():
        if key == "projected_only":
            kw[key] = raw.strip().lower() in ("1", "true", "yes", "on")
        else:
            kw[key] = parse_scalar(raw)
    return SaddleSpec(**kw)
