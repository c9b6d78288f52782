"""Series files (and optional SVG charts) for LR and accuracy trajectories."""

from __future__ import annotations

import csv
from pathlib import Path

from .runner import RunRecord


def _write_series(path: Path, header: list[str], xs, ys) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for x, y in zip(xs, ys):
            w.writerow([int(x), repr(float(y))])
    return path


def emit_plot_data(records: list[RunRecord], out_dir, svg: bool = False) -> list[Path]:
    """Write ``<variant>_seed<s>_lr.csv`` and ``..._acc.csv`` per record.

    With ``svg=True`` two overlay charts (``lr.svg``, ``test_acc.svg``) are
    rendered from the same series.
    """
    if not records:
        raise ValueError("emit_plot_data needs at least one run record")
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc

    written = []
    for rec in records:
        stem = f"{rec.variant}_seed{rec.seed}"
        epochs = rec.column("epoch")
        written.append(_write_series(out_dir / f"{stem}_lr.csv", ["epoch", "lr"], epochs, rec.column("lr")))
        written.append(
            _write_series(out_dir / f"{stem}_acc.csv", ["epoch", "test_acc"], epochs, rec.column("test_acc"))
        )
    if svg:
        written.extend(_render_svg(records, out_dir))
    return written


def _render_svg(records: list[RunRecord], out_dir: Path) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    paths = []
    for column, ylabel, log in (("lr", "learning rate", True), ("test_acc", "test accuracy", False)):
        fig, ax = plt.subplots(figsize=(7, 4))
        for rec in records:
            ax.plot(rec.column("epoch"), rec.column(column), lw=1.2, label=f"{rec.variant} (seed {rec.seed})")
        if log:
            ax.set_yscale("log")
        ax.set_xlabel("epoch")
        ax.set_ylabel(ylabel)
        ax.legend(fontsize=7)
        fig.tight_layout()
        path = out_dir / f"{column}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        paths.append(path)
    return paths
