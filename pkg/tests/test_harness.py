import csv
import statistics
from dataclasses import replace

import numpy as np
import pytest

from sgder.convergence import StopReason
from sgder.errors import ConfigError
from sgder.harness import runner
from sgder.harness.cli import main
from sgder.harness.config import VARIANTS, load_run_config, load_saddle_config
from sgder.harness.plots import emit_plot_data
from sgder.harness.runner import (
    RECORD_HEADER,
    aggregate,
    compare,
    initial_schedule,
    read_record_csv,
    train_run,
)
from sgder.landscapes import MlpObjective
from sgder.schedules import replay

CONFIG = """
[run]
budget = 40
patience = 5
seeds = 0,1
batch_size = 16
out = {out}

[landscape]
n = 150
hidden = 8
separation = 3.0

[scheduler]
kind = ours_exp
decay_factor = 0.98

[scheduler.cosa]
t0 = 10
"""


class TestConfig:
    def test_load(self, write_config, tmp_path):
        cfg, variants, per_variant = load_run_config(write_config(CONFIG.format(out=tmp_path)))
        assert cfg.budget == 40 and cfg.patience == 5 and cfg.seeds == (0, 1)
        assert cfg.variant == "ours_exp" and cfg.lr0 == 0.01
        assert cfg.schedule_params().decay_factor == 0.98
        assert variants == list(VARIANTS)
        assert per_variant == {"cosa": {"t0": 10}}
        assert cfg.with_variant("cosa", per_variant["cosa"]).schedule_params().t0 == 10

    def test_adam_default_lr(self, small_config):
        assert small_config.with_variant("adam").lr0 == 0.001

    @pytest.mark.parametrize(
        "text",
        [
            "[run]\nbogus = 1\n",
            "[other]\nx = 1\n",
            "[scheduler]\nkind = sgd_fancy\n",
            "[scheduler]\nvariants = ours_exp,nope\n",
            "[landscape]\nkind = quadratic_saddle\n",
            "[run]\nseeds = a,b\n",
            "[scheduler]\nkind = sgd_exp\ndecay_factor = 1.5\n",
            "not an ini file",
        ],
    )
    def test_rejects_bad_files(self, write_config, text):
        with pytest.raises(ConfigError):
            load_run_config(write_config(text))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_run_config(tmp_path / "nope.cfg")

    def test_saddle_config(self, write_config):
        spec = load_saddle_config(
            write_config("[landscape]\nkind = quadratic_saddle\neigenvalues = 2,-0.5\nx0 = 0.01\n[run]\nk_max = 3\n")
        )
        assert spec.eigenvalues == (2.0, -0.5) and spec.x0 == 0.01 and spec.k_max == 3


class TestTrainRun:
    def test_baseline_runs_full_budget(self, small_config):
        rec = train_run(small_config.with_variant("sgd_exp"), 0)
        assert rec.epochs_used == 60 and rec.stop_reason is StopReason.BUDGET_EXHAUSTED
        assert [r.epoch for r in rec.rows] == list(range(60))
        assert all(r.k == 0 and r.restart == 0 for r in rec.rows)

    def test_deterministic_bytes(self, small_config):
        a = train_run(small_config, 3).csv_text()
        b = train_run(small_config, 3).csv_text()
        assert a == b
        assert a.splitlines()[0] == ",".join(RECORD_HEADER)

    def test_seeds_differ(self, small_config):
        assert train_run(small_config, 1).csv_text() != train_run(small_config, 2).csv_text()

    def test_constant_loss_plateau_wiring(self, small_config, monkeypatch):
        monkeypatch.setattr(MlpObjective, "loss", lambda self, theta, idx=None: 1.0)
        p = small_config.patience
        rec = train_run(small_config, 0)
        restart_rows = [r.epoch for r in rec.rows if r.restart]
        # first observation improves, the next p do not: plateau at epoch p, restart from p + 1
        assert restart_rows == [p + 1]
        assert rec.rows[p + 1].lr == 0.02 and rec.rows[p + 1].k == 1
        # the second segment ties the first, which stops the run at its plateau
        assert rec.stop_reason is StopReason.NO_IMPROVEMENT
        assert rec.epochs_used == 2 * p + 1

    def test_restart_accounting_and_replay(self, small_config):
        cfg = replace(small_config, budget=200, patience=4)
        for seed in range(3):
            rec = train_run(cfg, seed)
            ks = rec.column("k")
            assert np.all(np.diff(ks) >= 0)
            assert int(rec.column("restart").sum()) == int(ks[-1])
            for r in rec.rows:
                if r.restart:
                    assert r.lr == (r.k + 1) * cfg.lr0
            assert replay(initial_schedule(cfg), rec.events) == list(rec.column("lr"))

    def test_numeric_failure_aborts_with_partial_record(self, small_config, monkeypatch):
        real_loss = MlpObjective.loss
        calls = {"n": 0}

        def flaky(self, theta, idx=None):
            calls["n"] += 1
            return float("nan") if calls["n"] > 30 else real_loss(self, theta, idx)

        monkeypatch.setattr(MlpObjective, "loss", flaky)
        rec = train_run(small_config.with_variant("sgd_exp"), 0)
        assert rec.stop_reason is StopReason.NUMERIC_ERROR
        assert rec.epochs_used == 11 and "non-finite" in rec.diagnostic

    def test_csv_round_trip(self, small_config, tmp_path):
        rec = train_run(small_config, 0)
        rows = read_record_csv(rec.to_csv(tmp_path / "r.csv"))
        assert rows == rec.rows


class TestCompare:
    def test_aggregation_matches_csv_recomputation(self, small_config, tmp_path):
        cfg = replace(small_config, budget=30)
        variants = ["sgd_exp", "ours_exp", "clr"]
        report = compare({v: cfg.with_variant(v) for v in variants}, (0, 1, 2))
        for v in variants:
            best_vals = []
            for rec in report.records[v]:
                rows = read_record_csv(rec.to_csv(tmp_path / f"{v}_{rec.seed}.csv"))
                best_vals.append(min(r.val_loss for r in rows))
            mean, std, n = report.stats[v]["best_val_loss"]
            assert mean == pytest.approx(statistics.fmean(best_vals), rel=1e-12)
            assert std == pytest.approx(statistics.stdev(best_vals), rel=1e-12)
            assert n == 3

    def test_single_seed_std_is_zero(self):
        assert aggregate([0.25]) == (0.25, 0.0, 1)

    def test_summary_csv(self, small_config, tmp_path):
        cfg = replace(small_config, budget=10)
        report = compare({"sgd_exp": cfg.with_variant("sgd_exp")}, (0,))
        path = report.to_csv(tmp_path / "summary.csv")
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["scheduler", "metric", "mean", "std", "n_seeds"]
        assert {r[1] for r in rows[1:]} == set(runner.METRICS)

    def test_failed_variant_is_isolated(self, small_config, monkeypatch):
        cfg = replace(small_config, budget=10)
        real = runner.train_run

        def broken(config, seed):
            if config.variant == "clr":
                raise RuntimeError("boom")
            return real(config, seed)

        monkeypatch.setattr(runner, "train_run", broken)
        report = compare({v: cfg.with_variant(v) for v in ("clr", "sgd_lin")}, (0,))
        assert "clr" in report.failed and "boom" in report.failed["clr"]
        assert "sgd_lin" in report.stats
        assert "clr,failed" in report.csv_text()


class TestPlots:
    def test_series_files(self, small_config, tmp_path):
        recs = [train_run(small_config, 0), train_run(small_config.with_variant("cosa", {"t0": 10}), 0)]
        paths = emit_plot_data(recs, tmp_path / "plots")
        names = {p.name for p in paths}
        assert {"ours_exp_seed0_lr.csv", "ours_exp_seed0_acc.csv", "cosa_seed0_lr.csv"} <= names
        lr = [float(r[1]) for r in list(csv.reader((tmp_path / "plots" / "cosa_seed0_lr.csv").open()))[1:]]
        assert lr[0] == lr[10] == lr[20] == 0.01
        assert lr[9] < lr[10]

    def test_sawtooth_peaks(self, small_config, monkeypatch, tmp_path):
        monkeypatch.setattr(MlpObjective, "loss", lambda self, theta, idx=None: 1.0)
        rec = train_run(small_config, 0)
        emit_plot_data([rec], tmp_path)
        rows = list(csv.reader((tmp_path / "ours_exp_seed0_lr.csv").open()))[1:]
        lr = [float(r[1]) for r in rows]
        assert lr[0] == 0.01 and lr[small_config.patience + 1] == 0.02

    def test_svg(self, small_config, tmp_path):
        paths = emit_plot_data([train_run(replace(small_config, budget=5), 0)], tmp_path, svg=True)
        assert (tmp_path / "lr.svg").exists() and (tmp_path / "test_acc.svg").exists()
        assert len(paths) == 4

    def test_empty(self, tmp_path):
        with pytest.raises(ValueError):
            emit_plot_data([], tmp_path)


class TestCli:
    def test_run(self, write_config, tmp_path, capsys):
        out = tmp_path / "res"
        path = write_config(CONFIG.format(out=out))
        assert main(["run", "--config", str(path), "--seed", "4", "--budget", "12"]) == 0
        text = (out / "ours_exp_seed4.csv").read_text().splitlines()
        assert len(text) == 13
        assert (out / "plots" / "ours_exp_seed4_lr.csv").exists()
        assert "ours_exp seed=4" in capsys.readouterr().out

    def test_patience_flag_reaches_detector(self, write_config, tmp_path, monkeypatch):
        seen = []
        real = runner.train_run

        def spy(config, seed):
            seen.append(config.patience)
            return real(replace(config, budget=3), seed)

        monkeypatch.setattr("sgder.harness.cli.train_run", spy)
        path = write_config(CONFIG.format(out=tmp_path / "o"))
        assert main(["run", "--config", str(path), "--patience", "50", "--seed", "0"]) == 0
        assert seen == [50]

    def test_compare(self, write_config, tmp_path):
        out = tmp_path / "cmp"
        path = write_config(CONFIG.format(out=out) + "\n")
        text = path.read_text().replace("kind = ours_exp", "variants = sgd_exp,ours_exp")
        path.write_text(text)
        assert main(["compare", "--config", str(path), "--budget", "8", "--seed", "0,1"]) == 0
        summary = (out / "summary.csv").read_text().splitlines()
        assert summary[0] == "scheduler,metric,mean,std,n_seeds"
        assert len(summary) == 1 + 2 * 4
        assert (out / "runs" / "ours_exp_seed1.csv").exists()

    def test_saddle(self, write_config, tmp_path, capsys):
        path = write_config("[landscape]\nkind = quadratic_saddle\neigenvalues = 1,-1\nx0 = 0.001\ndelta = 1\n[run]\neta0 = 0.05\n")
        assert main(["saddle", "--config", str(path), "--out", str(tmp_path)]) == 0
        rows = list(csv.reader((tmp_path / "saddle.csv").open()))
        assert rows[0] == ["k", "eta_k", "alpha_k", "bound", "T_empirical"]
        assert rows[2][0] == "1" and rows[2][4] == "73"

    def test_gradcheck(self, capsys):
        assert main(["gradcheck", "--points", "5"]) == 0
        out = capsys.readouterr().out
        assert "mlp" in out and "multibasin" in out and "FAIL" not in out

    def test_missing_config_path(self, tmp_path, capsys):
        assert main(["run", "--config", str(tmp_path / "missing.cfg")]) == 2
        assert "usage" in capsys.readouterr().err

    def test_config_required(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["run"])
        assert exc.value.code == 2

    def test_unknown_scheduler(self, write_config, capsys):
        path = write_config("[scheduler]\nkind = sgd_magic\n")
        assert main(["run", "--config", str(path)]) == 2
        assert "sgd_magic" in capsys.readouterr().err
