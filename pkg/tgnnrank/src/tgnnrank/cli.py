"""Command line front end: train on graph exports, re-rank a day.

Exit codes follow the matcher's convention: 0 success, 1 data or IO
problem, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .data import load_snapshots
from .model import prepare_sequence
from .rerank import score_day, write_reranked_csv
from .train import TrainConfig, load_model, save_model, train


class UsageError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tgnnrank",
        description="train and apply a temporal graph re-ranker over "
        "exported per-day candidate graphs",
    )
    parser.add_argument(
        "--version", action="version", version=f"tgnnrank {__version__}"
    )
    sub = parser.add_subparsers(dest="command")

    train_p = sub.add_parser("train", help="fit the re-ranker on a graph export")
    train_p.add_argument("--graphs", required=True, help="export directory (day_* subdirs)")
    train_p.add_argument("--out", required=True, help="model output directory")
    train_p.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    train_p.add_argument("--lr", type=float, default=TrainConfig.learning_rate)
    train_p.add_argument("--patience", type=int, default=TrainConfig.patience)
    train_p.add_argument("--dropout", type=float, default=TrainConfig.dropout)
    train_p.add_argument(
        "--train-fraction", type=float, default=TrainConfig.train_fraction
    )
    train_p.add_argument("--batch-size", type=int, default=TrainConfig.batch_size)
    train_p.add_argument("--seed", type=int, default=TrainConfig.seed)

    rerank_p = sub.add_parser("rerank", help="score one day's candidate edges")
    rerank_p.add_argument("--graphs", required=True, help="export directory (day_* subdirs)")
    rerank_p.add_argument("--model", required=True, help="directory written by train")
    rerank_p.add_argument("--day", type=int, required=True)
    rerank_p.add_argument("--out", required=True, help="ranked CSV path")
    rerank_p.add_argument(
        "--budget", type=int, default=None, help="keep only the top N rows"
    )
    return parser


def _cmd_train(args: argparse.Namespace) -> None:
    config = TrainConfig(
        epochs=args.epochs,
        learning_rate=args.lr,
        patience=args.patience,
        dropout=args.dropout,
        train_fraction=args.train_fraction,
        batch_size=args.batch_size,
        seed=args.seed,
    )
    sequence = load_snapshots(args.graphs)
    prepared = prepare_sequence(sequence)
    result = train(prepared, config)
    save_model(args.out, result, config)
    last = result.history[-1]
    best = min(entry["validation_loss"] for entry in result.history)
    print(
        f"trained on days {list(result.train_days)} "
        f"(validation {list(result.validation_days)}), "
        f"{len(result.history)} epochs, "
        f"final train loss {last['train_loss']:.6f}, "
        f"best validation loss {best:.6f} -> {args.out}"
    )


def _cmd_rerank(args: argparse.Namespace) -> None:
    if args.budget is not None and args.budget < 1:
        raise UsageError("--budget must be a positive integer")
    model, _ = load_model(args.model)
    sequence = load_snapshots(args.graphs)
    prepared = prepare_sequence(sequence)
    scored = score_day(model, prepared, args.day)
    written = write_reranked_csv(args.out, scored, budget=args.budget)
    skipped = next(
        inputs.skipped_edges for inputs in prepared.days if inputs.day == args.day
    )
    print(
        f"day {args.day}: scored {len(scored)} candidate edges "
        f"({skipped} skipped for unknown endpoints), wrote {written} -> {args.out}"
    )


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        if args.command == "train":
            _cmd_train(args)
        else:
            _cmd_rerank(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
