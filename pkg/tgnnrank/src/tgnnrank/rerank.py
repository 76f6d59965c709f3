"""Score a day's candidate edges and emit a ranked CSV.

The output uses the same column layout the upstream matcher writes, so
its evaluation tooling consumes re-ranked files unchanged: p_value
carries the model's match probability, composite is 1 - probability
(ascending order still means better), gof marks probability > 0.5, and
ks is passed through from the candidate edge file.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import torch

from .model import PreparedSequence, ReRanker, run_sequence

RANKED_COLUMNS = (
    "domain1",
    "profile1",
    "domain2",
    "profile2",
    "ks",
    "p_value",
    "gof",
    "composite",
    "rank",
)


@dataclass(frozen=True)
class ScoredEdge:
    domain1: str
    profile1: str
    domain2: str
    profile2: str
    ks: float
    probability: float


def _split_node(node_id: str) -> tuple[str, str]:
    domain, sep, local = node_id.partition("/")
    if not sep:
        raise ValueError(f"node id {node_id!r} is not of the form domain/local")
    return domain, local


def score_day(
    model: ReRanker, prepared: PreparedSequence, day: int
) -> list[ScoredEdge]:
    """Probability per candidate edge of the requested day.

    The hidden state is rolled forward from the first snapshot through
    the requested one, so scores reflect the full history up to that
    day. Result is sorted best first: descending probability, then
    lexicographic on the endpoint ids.
    """
    history = [inputs for inputs in prepared.days if inputs.day <= day]
    if not history or history[-1].day != day:
        known = [inputs.day for inputs in prepared.days]
        raise ValueError(f"day {day} not in snapshot sequence (have {known})")
    target = history[-1]
    model.eval()
    with torch.no_grad():
        embeddings_by_day, _ = run_sequence(
            model, history, prepared.initial_state(model)
        )
        logits = model.edge_logits(embeddings_by_day[-1], target.candidate_pairs)
        probabilities = torch.sigmoid(logits)
    scored = []
    for edge, probability in zip(target.candidate_edges, probabilities.tolist()):
        left = _split_node(edge.source)
        right = _split_node(edge.target)
        if right < left:
            left, right = right, left
        scored.append(
            ScoredEdge(
                domain1=left[0],
                profile1=left[1],
                domain2=right[0],
                profile2=right[1],
                ks=edge.ks,
                probability=probability,
            )
        )
    scored.sort(
        key=lambda e: (-e.probability, e.domain1, e.profile1, e.domain2, e.profile2)
    )
    return scored


def write_reranked_csv(
    path: str | Path, scored: list[ScoredEdge], budget: int | None = None
) -> int:
    """Top `budget` rows (all when None); returns the number written."""
    rows = scored if budget is None else scored[: max(budget, 0)]
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(RANKED_COLUMNS)
        for rank, edge in enumerate(rows, start=1):
            writer.writerow(
                (
                    edge.domain1,
                    edge.profile1,
                    edge.domain2,
                    edge.profile2,
                    repr(float(edge.ks)),
                    repr(float(edge.probability)),
                    "true" if edge.probability > 0.5 else "false",
                    repr(1.0 - float(edge.probability)),
                    rank,
                )
            )
    return len(rows)
