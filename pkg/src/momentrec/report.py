"""Figure rendering for dataset and training reports.

Figures are written next to the delimited outputs so a build or training run
leaves both machine-readable files and a visual summary behind.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .dataset import MomentsDataset
from .models import TrainedRegressor


def render_dataset_figures(dataset: MomentsDataset, out_dir: Path) -> list[Path]:
    """Moments-per-hour bar chart and target-feature distribution histogram."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    hours = [s.key.hour for s in dataset.trainable_samples()]
    counts = np.bincount(hours, minlength=24)
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.bar(range(24), counts, color="#4477aa")
    ax.set_xlabel("hour of day")
    ax.set_ylabel("moments")
    ax.set_title("Moments per hour")
    ax.set_xticks(range(0, 24, 2))
    path = out_dir / "moments_per_hour.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    target = dataset.target_feature
    values = [s.features[target] for s in dataset.trainable_samples()]
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.hist(values, bins=40, color="#66ccee", edgecolor="black")
    ax.set_xlabel(target)
    ax.set_ylabel("moments")
    ax.set_title(
        f"{target} across moments (mean {np.mean(values):.3f}, std {np.std(values):.3f})"
    )
    path = out_dir / f"{target}_distribution.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    written.append(path)
    return written


def render_training_report(
    model: TrainedRegressor,
    y_test: np.ndarray,
    predictions: np.ndarray,
    test_rmse: float,
    out_dir: Path,
) -> list[Path]:
    """Predicted-vs-actual scatter plus an rmse_report.csv row for the run."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter(y_test, predictions, s=6, alpha=0.4, color="#4477aa")
    lo = min(float(np.min(y_test)), float(np.min(predictions)))
    hi = max(float(np.max(y_test)), float(np.max(predictions)))
    ax.plot([lo, hi], [lo, hi], color="#bb5566", linewidth=1)
    ax.set_xlabel(f"actual {model.target_feature}")
    ax.set_ylabel(f"predicted {model.target_feature}")
    ax.set_title(f"{model.kind}: test RMSE {test_rmse:.4f}")
    path = out_dir / f"{model.kind}_predicted_vs_actual.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    report_path = out_dir / "rmse_report.csv"
    new_file = not report_path.exists()
    with report_path.open("a", newline="") as fh:
        writer = csv.writer(fh)
        if new_file:
            writer.writerow(["model", "target", "test_rmse", "train_rmse", "seconds"])
        writer.writerow(
            [
                model.kind,
                model.target_feature,
                f"{test_rmse:.6f}",
                f"{model.train_rmse:.6f}",
                f"{model.train_seconds:.3f}",
            ]
        )
    written.append(report_path)
    return written
