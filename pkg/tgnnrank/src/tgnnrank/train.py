"""Training: weighted cross-entropy over labeled edges, temporal split.

Days are split 80:20 in time order (first part trains, the rest
validates); hidden state runs through the whole sequence as one
continuous history, so validation days see the state accumulated during
training days. Within each training day the labeled edges are shuffled
and consumed in mini-batches; every batch recomputes that day's forward
pass from the state the day started with, takes one optimizer step, and
the state advances to the next day only after the day's batches finish,
detached so gradients stay within a day. Class weights are inversely
proportional to label frequency in the training split and also weight
the validation loss, so both numbers estimate the same objective. The
history records losses recomputed in evaluation mode after each epoch's
updates, so the reported series is deterministic and unaffected by
dropout.
"""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import torch

from .data import SnapshotSequence
from .model import DayInputs, PreparedSequence, ReRanker, prepare_sequence, run_sequence


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    learning_rate: float = 1e-4
    patience: int = 10  # early stopping, epochs without validation improvement
    plateau_patience: int = 5  # learning-rate halving
    dropout: float = 0.2
    train_fraction: float = 0.8
    batch_size: int = 256  # labeled edges per optimizer step within a day
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must be in (0,1), got {self.train_fraction}")
        if self.epochs < 1 or self.patience < 1:
            raise ValueError("epochs and patience must be >= 1")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass(frozen=True)
class TrainResult:
    model: ReRanker
    history: tuple[dict, ...]
    train_days: tuple[int, ...]
    validation_days: tuple[int, ...]
    positive_weight: float
    negative_weight: float
    stopped_epoch: int


def temporal_split(n_days: int, fraction: float = 0.8) -> int:
    """Days before the cut train, the rest validate; both parts non-empty."""
    if n_days < 2:
        raise ValueError(f"need at least 2 snapshots to split, got {n_days}")
    return min(n_days - 1, max(1, int(n_days * fraction)))


def class_weights(n_positive: int, n_negative: int) -> tuple[float, float]:
    """Per-class weights inversely proportional to frequency; balanced -> 1, 1."""
    total = n_positive + n_negative
    return total / (2.0 * n_positive), total / (2.0 * n_negative)


def _day_edges(
    day: DayInputs, positive_weight: float, negative_weight: float
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    n_pos = day.positive_pairs.shape[0]
    n_neg = day.negative_pairs.shape[0]
    pairs = torch.cat([day.positive_pairs, day.negative_pairs])
    labels = torch.cat(
        [
            torch.ones(n_pos, dtype=torch.float64),
            torch.zeros(n_neg, dtype=torch.float64),
        ]
    )
    weights = torch.cat(
        [
            torch.full((n_pos,), positive_weight, dtype=torch.float64),
            torch.full((n_neg,), negative_weight, dtype=torch.float64),
        ]
    )
    return pairs, labels, weights


def _labeled_loss(
    model: ReRanker,
    days: list[DayInputs],
    embeddings: list[torch.Tensor],
    positive_weight: float,
    negative_weight: float,
) -> torch.Tensor:
    logits, labels, weights = [], [], []
    for day, day_embeddings in zip(days, embeddings):
        pairs, day_labels, day_weights = _day_edges(day, positive_weight, negative_weight)
        if pairs.numel() == 0:
            continue
        logits.append(model.edge_logits(day_embeddings, pairs))
        labels.append(day_labels)
        weights.append(day_weights)
    if not logits:
        raise ValueError("no labeled edges in this split")
    return torch.nn.functional.binary_cross_entropy_with_logits(
        torch.cat(logits), torch.cat(labels), weight=torch.cat(weights)
    )


def train(prepared: PreparedSequence, config: TrainConfig = TrainConfig()) -> TrainResult:
    torch.manual_seed(config.seed)
    cut = temporal_split(len(prepared.days), config.train_fraction)
    train_days = list(prepared.days[:cut])
    val_days = list(prepared.days[cut:])

    n_positive = sum(day.positive_pairs.shape[0] for day in train_days)
    n_negative = sum(day.negative_pairs.shape[0] for day in train_days)
    if n_positive == 0 or n_negative == 0:
        raise ValueError(
            f"training split needs both classes, got {n_positive} positive "
            f"and {n_negative} negative edges"
        )
    positive_weight, negative_weight = class_weights(n_positive, n_negative)

    model = ReRanker(dropout=config.dropout)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    scheduler = torch.optim.lr_scheduler.ReduceLROnPlateau(
        optimizer, factor=0.5, patience=config.plateau_patience
    )

    shuffle = torch.Generator().manual_seed(config.seed)
    history: list[dict] = []
    best_val = float("inf")
    best_state = None
    stale = 0
    stopped = config.epochs
    for epoch in range(config.epochs):
        model.train()
        state = prepared.initial_state(model)
        for day in train_days:
            pairs, labels, weights = _day_edges(day, positive_weight, negative_weight)
            n_edges = pairs.shape[0]
            order = torch.randperm(n_edges, generator=shuffle)
            for start in range(0, n_edges, config.batch_size):
                batch = order[start : start + config.batch_size]
                embeddings, _ = run_sequence(model, [day], state)
                loss = torch.nn.functional.binary_cross_entropy_with_logits(
                    model.edge_logits(embeddings[0], pairs[batch]),
                    labels[batch],
                    weight=weights[batch],
                )
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
            with torch.no_grad():
                _, state = run_sequence(model, [day], state)

        model.eval()
        with torch.no_grad():
            embeddings, state = run_sequence(
                model, train_days, prepared.initial_state(model)
            )
            train_loss = _labeled_loss(
                model, train_days, embeddings, positive_weight, negative_weight
            )
            val_embeddings, _ = run_sequence(model, val_days, state)
            val_loss = _labeled_loss(
                model, val_days, val_embeddings, positive_weight, negative_weight
            )
        history.append(
            {
                "epoch": epoch,
                "train_loss": float(train_loss),
                "validation_loss": float(val_loss),
                "learning_rate": optimizer.param_groups[0]["lr"],
            }
        )
        scheduler.step(val_loss)
        if float(val_loss) < best_val:
            best_val = float(val_loss)
            best_state = copy.deepcopy(model.state_dict())
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                stopped = epoch + 1
                break
    if best_state is not None:
        model.load_state_dict(best_state)
    model.eval()
    return TrainResult(
        model=model,
        history=tuple(history),
        train_days=tuple(day.day for day in train_days),
        validation_days=tuple(day.day for day in val_days),
        positive_weight=positive_weight,
        negative_weight=negative_weight,
        stopped_epoch=stopped,
    )


def train_on_snapshots(
    sequence: SnapshotSequence, config: TrainConfig = TrainConfig()
) -> tuple[TrainResult, PreparedSequence]:
    prepared = prepare_sequence(sequence)
    return train(prepared, config), prepared


def save_model(outdir: str | Path, result: TrainResult, config: TrainConfig) -> None:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    torch.save(result.model.state_dict(), out / "model.pt")
    summary = {
        "config": asdict(config),
        "feature_dim": result.model.feature_dim,
        "hidden": result.model.hidden,
        "embedding": result.model.embedding_dim,
        "train_days": list(result.train_days),
        "validation_days": list(result.validation_days),
        "positive_weight": result.positive_weight,
        "negative_weight": result.negative_weight,
        "stopped_epoch": result.stopped_epoch,
    }
    (out / "training.json").write_text(
        json.dumps(
            {"summary": summary, "history": list(result.history)},
            sort_keys=True,
            indent=2,
        )
        + "\n"
    )


def load_model(model_dir: str | Path) -> tuple[ReRanker, dict]:
    directory = Path(model_dir)
    summary = json.loads((directory / "training.json").read_text())["summary"]
    model = ReRanker(
        feature_dim=summary["feature_dim"],
        hidden=summary["hidden"],
        embedding=summary["embedding"],
        dropout=summary["config"]["dropout"],
    )
    model.load_state_dict(torch.load(directory / "model.pt", weights_only=True))
    model.eval()
    return model, summary
