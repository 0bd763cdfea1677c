"""Training loop: Adam, fixed split, best-validation-epoch selection."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .model import CharacterNet


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    learning_rate: float = 1e-4
    batch_size: int = 128
    split: tuple[float, float, float] = (0.6, 0.2, 0.2)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if abs(sum(self.split) - 1.0) > 1e-9:
            raise ValueError("split fractions must sum to 1")


@dataclass(frozen=True)
class TrainResult:
    model: CharacterNet
    test_accuracy: float
    best_epoch: int
    per_class_accuracy: dict[str, float]

    def metrics_json(self) -> str:
        return json.dumps(
            {
                "test_accuracy": self.test_accuracy,
                "best_epoch": self.best_epoch,
                "per_class_accuracy": self.per_class_accuracy,
            },
            indent=2,
        )


def _split_indices(
    labels: np.ndarray, split: tuple[float, float, float], rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stratified train/validation/test split, deterministic in the rng."""
    train, val, test = [], [], []
    for cls in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == cls))
        n = len(idx)
        n_train = int(round(split[0] * n))
        n_val = int(round(split[1] * n))
        train.extend(idx[:n_train])
        val.extend(idx[n_train : n_train + n_val])
        test.extend(idx[n_train + n_val :])
    return np.sort(train), np.sort(val), np.sort(test)


def _accuracy(model: CharacterNet, x: torch.Tensor, y: torch.Tensor) -> float:
    model.eval()
    with torch.no_grad():
        pred = model(x).argmax(dim=1)
    return float((pred == y).float().mean())


def train(
    images: np.ndarray,
    labels: np.ndarray,
    class_names: list[str],
    config: TrainConfig = TrainConfig(),
) -> TrainResult:
    """Train the classifier; keep the epoch with best validation accuracy.

    Fully deterministic for a fixed config: seeded split, seeded init,
    seeded shuffling, deterministic torch kernels.
    """
    torch.use_deterministic_algorithms(True)
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)

    tr, va, te = _split_indices(labels, config.split, rng)
    x = torch.from_numpy(images.astype(np.float32)).unsqueeze(1)
    y = torch.from_numpy(labels)

    model = CharacterNet()
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    loss_fn = nn.CrossEntropyLoss()

    best_state = copy.deepcopy(model.state_dict())
    best_val = -1.0
    best_epoch = 0
    for epoch in range(1, config.epochs + 1):
        model.train()
        order = rng.permutation(tr)
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            optimizer.zero_grad()
            loss = loss_fn(model(x[batch]), y[batch])
            loss.backward()
            optimizer.step()
        val_acc = _accuracy(model, x[va], y[va])
        if val_acc > best_val:
            best_val = val_acc
            best_epoch = epoch
            best_state = copy.deepcopy(model.state_dict())

    model.load_state_dict(best_state)
    test_acc = _accuracy(model, x[te], y[te])

    per_class: dict[str, float] = {}
    model.eval()
    with torch.no_grad():
        pred = model(x[te]).argmax(dim=1).numpy()
    true = labels[te]
    for index, name in enumerate(class_names):
        mask = true == index
        per_class[name] = float((pred[mask] == index).mean()) if mask.any() else 0.0

    return TrainResult(
        model=model,
        test_accuracy=test_acc,
        best_epoch=best_epoch,
        per_class_accuracy=per_class,
    )
