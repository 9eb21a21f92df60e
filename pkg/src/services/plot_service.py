"""
Accuracy and loss curves from an epoch-history TSV.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence, Union

from src.models.training import EpochRecord
from src.repositories.history_repo import read_history
from src.utils.exceptions import DataError
from src.utils.logger import logger

PathLike = Union[str, Path]


def plot_records(records: Sequence[EpochRecord], out_path: PathLike, title: str = "") -> Path:
    """Two side-by-side panels (accuracy, loss), train vs validation, saved as PNG."""
    if not records:
        raise DataError("history has no epochs to plot")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    epochs = [r.epoch for r in records]
    fig, (acc_ax, loss_ax) = plt.subplots(1, 2, figsize=(10, 4), constrained_layout=True)
    acc_ax.plot(epochs, [r.train_acc for r in records], label="train")
    acc_ax.plot(epochs, [r.val_acc for r in records], label="validation")
    acc_ax.set_xlabel("epoch")
    acc_ax.set_ylabel("token accuracy")
    acc_ax.legend()
    loss_ax.plot(epochs, [r.train_loss for r in records], label="train")
    loss_ax.plot(epochs, [r.val_loss for r in records], label="validation")
    loss_ax.set_xlabel("epoch")
    loss_ax.set_ylabel("cross-entropy")
    loss_ax.legend()
    if title:
        fig.suptitle(title)

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    logger.info("Saved plot", {"path": str(out_path), "epochs": len(records)})
    return out_path


def plot_history(history_path: PathLike, out_path: PathLike, title: str = "") -> Path:
    return plot_records(read_history(history_path), out_path, title or Path(history_path).stem)
