"""Report emission. CSV is the artifact of record; images are best-effort.

All CSVs share one column order so downstream tooling can concatenate them:
scenario, session_trained, session_eval, metric, value. Values are written
with repr() so they round-trip to the exact float64.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

COLUMNS = ("scenario", "session_trained", "session_eval", "metric", "value")


def _fmt(v) -> str:
    return repr(float(v))


def metric_rows(scenario: str, ledger) -> list[tuple]:
    rows = []
    cells = ledger.matrix()
    for j in range(1, ledger.sessions + 1):
        for i in range(1, j + 1):
            v = cells[j - 1, i - 1]
            if not np.isnan(v):
                rows.append((scenario, j, i, ledger.metric, _fmt(v)))
    reuse = ledger.extras.get("reuse", {})
    for s in sorted(reuse, key=int):
        stats = reuse[s]
        rows.append((scenario, int(s), int(s), "reuse_fraction", _fmt(stats["reuse_fraction"])))
        rows.append((scenario, int(s), int(s), "occupancy", _fmt(stats["occupancy"])))
    return rows


def transfer_rows(scenario: str, metric: str, matrix) -> list[tuple]:
    a = np.asarray(matrix)
    rows = []
    for j in range(1, a.shape[0] + 1):
        for i in range(1, a.shape[1] + 1):
            rows.append((scenario, j, i, f"transfer_{metric}", _fmt(a[j - 1, i - 1])))
    return rows


def write_csv(path: str | Path, rows: list[tuple]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COLUMNS)
        writer.writerows(rows)


def read_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_run_reports(out_dir: str | Path, scenario: str, ledger) -> list[Path]:
    """Emit metrics.csv (and transfer.csv when the run produced a matrix)."""
    out = Path(out_dir)
    written = [out / "metrics.csv"]
    write_csv(written[0], metric_rows(scenario, ledger))
    if "transfer" in ledger.extras:
        path = out / "transfer.csv"
        write_csv(path, transfer_rows(scenario, ledger.metric, ledger.extras["transfer"]))
        written.append(path)
    return written


def emit_plots(out_dir: str | Path, scenario: str, ledger) -> list[Path]:
    """PNG curves when matplotlib is importable; silently none otherwise."""
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except Exception:
        return []
    out = Path(out_dir)
    written = []

    if ledger.losses:
        fig, ax = plt.subplots(figsize=(6, 4))
        for sid in sorted(ledger.losses):
            ax.plot(ledger.losses[sid], label=f"session {sid}")
        ax.set_xlabel("epoch")
        ax.set_ylabel("training loss")
        ax.set_title(f"{scenario}: per-session loss")
        ax.legend()
        path = out / "loss_curves.png"
        fig.savefig(path, dpi=110)
        plt.close(fig)
        written.append(path)

    cells = ledger.matrix()
    if np.isfinite(cells[-1]).all():
        fig, ax = plt.subplots(figsize=(6, 4))
        sessions = np.arange(1, ledger.sessions + 1)
        ax.bar(sessions, cells[-1], color="#4878a8")
        ax.set_xlabel("session")
        ax.set_ylabel(ledger.metric)
        ax.set_title(f"{scenario}: final {ledger.metric} per session")
        path = out / "final_metrics.png"
        fig.savefig(path, dpi=110)
        plt.close(fig)
        written.append(path)

    reuse = ledger.extras.get("reuse")
    if reuse:
        sids = sorted(reuse, key=int)
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot([int(s) for s in sids], [reuse[s]["reuse_fraction"] for s in sids],
                marker="o", label="reuse fraction")
        ax.plot([int(s) for s in sids], [reuse[s]["occupancy"] for s in sids],
                marker="s", label="occupancy")
        ax.set_xlabel("session")
        ax.set_ylim(0, 1)
        ax.legend()
        ax.set_title(f"{scenario}: mask reuse and occupancy")
        path = out / "reuse.png"
        fig.savefig(path, dpi=110)
        plt.close(fig)
        written.append(path)

    if "transfer" in ledger.extras:
        a = np.asarray(ledger.extras["transfer"])
        fig, ax = plt.subplots(figsize=(5, 4.5))
        im = ax.imshow(a, cmap="viridis", origin="upper")
        ax.set_xlabel("eval session")
        ax.set_ylabel("mask/train session")
        ax.set_xticks(range(a.shape[1]), [str(i + 1) for i in range(a.shape[1])])
        ax.set_yticks(range(a.shape[0]), [str(i + 1) for i in range(a.shape[0])])
        fig.colorbar(im, ax=ax, label=ledger.metric)
        ax.set_title(f"{scenario}: transfer matrix")
        path = out / "transfer.png"
        fig.savefig(path, dpi=110)
        plt.close(fig)
        written.append(path)
    return written
