from __future__ import annotations
import math
from typing import Dict, List, Sequence

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

LOSS_SERIES = ("loss_mse", "loss_mag", "loss_sparse", "loss_encode", "total")

def _floats(rows: List[Dict[str, str]], key: str) -> List[float]:
    out = []
    for r in rows:
        try:
            out.append(float(r[key]))
        except (KeyError, ValueError):
            out.append(float("nan"))
    return out

def plot_loss_curves(
    rows: List[Dict[str, str]],
    title: str,
    out_path: str,
    series: Sequence[str] = LOSS_SERIES,
    log_y: bool = True,
) -> None:
    """
    rows: parsed train_log.csv, one dict per epoch.
    Components that are zero or missing everywhere are skipped; log_y needs positive values.
    """
    plt.figure()
    epochs = _floats(rows, "epoch")
    plotted = 0
    for key in series:
        ys = _floats(rows, key)
        if all(math.isnan(y) or y <= 0 for y in ys):
            continue
        plt.plot(epochs, ys, marker="o", label=key)
        plotted += 1

    if log_y and plotted:
        plt.yscale("log")
    plt.xlabel("epoch")
    plt.ylabel("loss")
    plt.title(title)
    if plotted:
        plt.legend()
    plt.tight_layout()
    plt.savefig(out_path)
    plt.close()

def plot_val_metrics(rows: List[Dict[str, str]], title: str, out_path: str) -> None:
    epochs = _floats(rows, "epoch")
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.plot(epochs, _floats(rows, "val_mse"), marker="o", label="MSE")
    ax1.plot(epochs, _floats(rows, "val_mae"), marker="s", label="MAE")
    ax1.set_xlabel("epoch")
    ax1.legend()
    ax2.plot(epochs, _floats(rows, "val_ssim"), marker="o", color="tab:green")
    ax2.set_xlabel("epoch")
    ax2.set_ylabel("SSIM")
    ax2.set_ylim(0.0, 1.0)
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)

# Residual trace of one iterative solve; log scale
def plot_residuals(residuals: Sequence[float], title: str, out_path: str) -> None:
    plt.figure()
    plt.semilogy(range(1, len(residuals) + 1), residuals)
    plt.xlabel("iteration")
    plt.ylabel("|| |F x| - omega ||")
    plt.title(title)
    plt.tight_layout()
    plt.savefig(out_path)
    plt.close()
