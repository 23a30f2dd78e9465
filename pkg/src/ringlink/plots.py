"""Static PNG companions to the CSV outputs (headless Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def plot_snr_sweep(rows: list[dict], axis: str, path: Path) -> Path:
    x_key = {"distance": "distance_m", "angle": "bend_angle_deg", "power": "input_power_dbm",
             "symbol": "ring_frequency_hz"}[axis]
    fig, ax = plt.subplots(figsize=(6, 4))
    for series in dict.fromkeys(r["series"] for r in rows):
        pts = [r for r in rows if r["series"] == series]
        xs = [r[x_key] * (100 if axis == "distance" else 1e-6 if axis == "symbol" else 1) for r in pts]
        ax.plot(xs, [r["snr"] for r in pts], "o-" if axis != "symbol" else "o", label=series)
    ax.axhline(10, color="grey", lw=0.8, ls="--")
    ax.set_xlabel({"distance": "distance (cm)", "angle": "bend angle (deg)", "power": "input power (dBm)",
                   "symbol": "carrier (MHz)"}[axis])
    ax.set_ylabel("SNR")
    ax.legend(fontsize=7)
    return _save(fig, path)


def plot_confusion(report, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.imshow(report.confusion, cmap="Blues")
    ax.set_xticks(range(len(report.col_labels)), report.col_labels, rotation=45, ha="right", fontsize=7)
    ax.set_yticks(range(len(report.row_labels)), report.row_labels, fontsize=7)
    for i, row in enumerate(report.confusion):
        for j, v in enumerate(row):
            if v:
                ax.text(j, i, str(v), ha="center", va="center", fontsize=6)
    ax.set_xlabel("decoded")
    ax.set_ylabel("sent")
    ax.set_title(f"accuracy {report.accuracy:.4f}")
    return _save(fig, path)


def plot_discharge(traces: dict, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (t, v) in traces.items():
        ax.plot(t, v, label=label)
    ax.set_xlabel("time (h)")
    ax.set_ylabel("battery voltage (V)")
    ax.legend(fontsize=7)
    return _save(fig, path)
