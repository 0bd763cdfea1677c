"""Trainer CLI: train on a glyph dataset and export HWNET1 weights."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .data import DatasetError, resolve_dataset
from .model import export_weights
from .train import TrainConfig, TrainResult, train


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="hwtrainer")
    parser.add_argument("command", choices=["train"])
    parser.add_argument("--data", required=True, help="dataset directory or 'synthetic'")
    parser.add_argument("--out", required=True, help="output HWNET1 weights path")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--epochs", type=int, default=30)
    parser.add_argument("--lr", type=float, default=1e-4)
    parser.add_argument("--batch-size", type=int, default=128)
    parser.add_argument("--per-class", type=int, default=200, help="samples per class for 'synthetic'")
    parser.add_argument("--metrics", default=None, help="metrics JSON path (default: <out>.metrics.json)")
    args = parser.parse_args(argv)

    try:
        images, labels, names = resolve_dataset(args.data, args.per_class, args.seed)
    except DatasetError as exc:
        print(f"dataset error: {exc}", file=sys.stderr)
        return 3

    config = TrainConfig(
        epochs=args.epochs,
        learning_rate=args.lr,
        batch_size=args.batch_size,
        seed=args.seed,
    )
    result: TrainResult = train(images, labels, names, config)
    export_weights(result.model, args.out)
    metrics_path = Path(args.metrics or f"{args.out}.metrics.json")
    metrics_path.write_text(result.metrics_json())
    print(result.metrics_json())
    return 0


if __name__ == "__main__":
    sys.exit(main())
