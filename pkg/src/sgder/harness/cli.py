"""Command line entry point: ``sgder {run,compare,saddle,gradcheck}``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from ..errors import ConfigError, SgderError
from ..landscapes import QuadraticSaddle
from ..saddle import EscapeConfig, is_boundary_tie, sweep_restarts, write_escape_csv
from .audit import audit_all
from .config import LandscapeSpec, RunConfig, load_run_config, load_saddle_config, parse_seeds, read_ini, SaddleSpec
from .plots import emit_plot_data
from .runner import compare, train_run

log = logging.getLogger("sgder")

GRAD_TOL = 1e-5


def _common(p: argparse.ArgumentParser, config_required: bool) -> None:
    p.add_argument("--config", required=config_required, help="path to a key=value config file")
    p.add_argument("--seed", help="comma-separated seeds, e.g. 0,1,2")
    p.add_argument("--out", help="output directory")
    p.add_argument("--budget", type=int, help="maximum number of epochs")
    p.add_argument("--patience", type=int, help="plateau patience in epochs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sgder", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="train one scheduler variant")
    _common(p, True)
    p.add_argument("--svg", action="store_true", help="also render SVG charts")

    p = sub.add_parser("compare", help="train every scheduler variant and aggregate over seeds")
    _common(p, True)
    p.add_argument("--svg", action="store_true", help="also render SVG charts")

    p = sub.add_parser("saddle", help="escape-time sweep over restart indices")
    _common(p, False)

    p = sub.add_parser("gradcheck", help="finite-difference audit of analytic gradients")
    _common(p, False)
    p.add_argument("--points", type=int, default=100)
    return parser


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    changes = {}
    if args.seed:
        changes["seeds"] = parse_seeds(args.seed)
    if args.out:
        changes["out"] = args.out
    if args.budget is not None:
        changes["budget"] = args.budget
    if args.patience is not None:
        changes["patience"] = args.patience
    return replace(cfg, **changes) if changes else cfg


def cmd_run(args) -> int:
    cfg, _, per_variant = load_run_config(args.config)
    cfg = _apply_overrides(cfg, args).with_variant(cfg.variant, per_variant.get(cfg.variant))
    out = Path(cfg.out)
    records, status = [], 0
    for seed in cfg.seeds:
        rec = train_run(cfg, seed)
        rec.to_csv(out / f"{cfg.variant}_seed{seed}.csv")
        records.append(rec)
        s = rec.summary()
        print(
            f"{cfg.variant} seed={seed} epochs={rec.epochs_used} k={rec.rows[-1].k if rec.rows else 0} "
            f"stop={rec.stop_reason.value} best_val_loss={s['best_val_loss']:.6g} "
            f"best_test_acc={s['best_test_acc']:.4f}"
        )
        if rec.diagnostic:
            print(f"  {rec.diagnostic}", file=sys.stderr)
            status = 1
    emit_plot_data(records, out / "plots", svg=args.svg)
    return status


def cmd_compare(args) -> int:
    cfg, variants, per_variant = load_run_config(args.config)
    cfg = _apply_overrides(cfg, args)
    configs = {v: cfg.with_variant(v, per_variant.get(v)) for v in variants}
    report = compare(configs, cfg.seeds)
    out = Path(cfg.out)
    for variant, recs in report.records.items():
        for rec in recs:
            rec.to_csv(out / "runs" / f"{variant}_seed{rec.seed}.csv")
    report.to_csv(out / "summary.csv")
    all_records = [r for recs in report.records.values() for r in recs]
    if all_records:
        emit_plot_data(all_records, out / "plots", svg=args.svg)

    print(f"{'scheduler':10s} {'best val loss':>24s} {'best test acc':>20s}")
    for variant, stats in report.stats.items():
        vm, vs, _ = stats["best_val_loss"]
        am, as_, _ = stats["best_test_acc"]
        print(f"{variant:10s} {vm:12.5g} (±{vs:8.2g}) {am:9.4f} (±{as_:7.2g})")
    for variant, why in report.failed.items():
        print(f"{variant:10s} FAILED: {why}", file=sys.stderr)
    print(f"summary written to {out / 'summary.csv'}")
    return 1 if report.failed else 0


def cmd_saddle(args) -> int:
    spec = load_saddle_config(args.config) if args.config else SaddleSpec()
    saddle = QuadraticSaddle(spec.eigenvalues)
    econf = EscapeConfig(saddle.gamma, spec.eta0, spec.x0, spec.delta, spec.k_min, spec.k_max, spec.t_max)
    results = sweep_restarts(econf, None if spec.projected_only else saddle)
    path = write_escape_csv(results, Path(args.out or "results") / "saddle.csv")
    print(f"{'k':>3s} {'eta_k':>8s} {'alpha_k':>8s} {'bound':>9s} {'T':>6s}")
    for r in results:
        tie = " (tie)" if is_boundary_tie(r.bound) else ""
        t = r.t_empirical if r.t_empirical is not None else r.status.value
        print(f"{r.k:3d} {r.eta_k:8.4g} {r.alpha_k:8.4g} {r.bound:9.4f} {t!s:>6s}{tie}")
    print(f"written to {path}")
    return 0


def cmd_gradcheck(args) -> int:
    spec = LandscapeSpec()
    if args.config:
        cp = read_ini(args.config)
        if cp.has_section("landscape"):
            cfg, _, _ = load_run_config(args.config)
            spec = cfg.landscape
    seed = parse_seeds(args.seed)[0] if args.seed else 0
    worst = 0.0
    for res in audit_all(spec, args.points, seed):
        flag = "ok" if res.max_rel_err <= GRAD_TOL else "FAIL"
        print(f"{res.name:18s} points={res.points:4d} max_rel_err={res.max_rel_err:.3e} {flag}")
        worst = max(worst, res.max_rel_err)
    return 0 if worst <= GRAD_TOL else 1


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "saddle": cmd_saddle, "gradcheck": cmd_gradcheck}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"sgder: error: {exc}", file=sys.stderr)
        return 2
    except (SgderError, OSError) as exc:
        print(f"sgder: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
