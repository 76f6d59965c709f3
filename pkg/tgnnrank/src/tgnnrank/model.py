"""Recurrent graph model scoring candidate edges day by day.

Per day t, node features x_t update a per-node hidden state through
gates computed on [h_{t-1}, x_t]:

    z_t = sigmoid(W_z [h_{t-1}, x_t] + b_z)          update gate
    r_t = sigmoid(W_r [h_{t-1}, x_t] + b_r)          reset gate
    g_t = tanh(W_h [r_t * h_{t-1}, x_t] + b_h)       candidate state
    h_t = z_t * h_{t-1} + (1 - z_t) * g_t

then single-head attention over the day's similarity-graph neighbors
(undirected, self-loop included) re-weights states:

    p_i = W_a h_i
    alpha_ij = softmax_j LeakyReLU(a . [p_i || p_j], slope 0.2)
    h'_i = relu(sum_j alpha_ij p_j)

and a linear projection yields 32-dimensional node embeddings. An edge
(s, t) is scored from the 64-dimensional concatenation [e_s || e_t]
through one affine classifier; probability is the logistic of the
logit. Hidden state is carried across days by node id; nodes inactive
on a day keep their state unchanged.

Everything runs in float64 on CPU; with a fixed seed, training and
inference are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch

from .data import GraphDay, SnapshotSequence
from .features import FEATURE_DIMENSION, DayFeatures, day_features

HIDDEN_DIMENSION = 64
EMBEDDING_DIMENSION = 32
ATTENTION_SLOPE = 0.2


class ReRanker(torch.nn.Module):
    def __init__(
        self,
        feature_dim: int = FEATURE_DIMENSION,
        hidden: int = HIDDEN_DIMENSION,
        embedding: int = EMBEDDING_DIMENSION,
        dropout: float = 0.2,
    ) -> None:
        super().__init__()
        self.feature_dim = feature_dim
        self.hidden = hidden
        self.embedding_dim = embedding
        self.gate_z = torch.nn.Linear(hidden + feature_dim, hidden)
        self.gate_r = torch.nn.Linear(hidden + feature_dim, hidden)
        self.gate_h = torch.nn.Linear(hidden + feature_dim, hidden)
        self.attention_w = torch.nn.Linear(hidden, hidden, bias=False)
        self.attention_a = torch.nn.Parameter(torch.empty(2 * hidden))
        self.embed = torch.nn.Linear(hidden, embedding)
        self.classifier = torch.nn.Linear(2 * embedding, 1)
        self.drop = torch.nn.Dropout(dropout)
        torch.nn.init.uniform_(
            self.attention_a, -1.0 / np.sqrt(2 * hidden), 1.0 / np.sqrt(2 * hidden)
        )
        self.double()

    def step(
        self, x: torch.Tensor, h_prev: torch.Tensor, adjacency: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """One day: gated state update, neighbor attention, embedding.

        x (N, feature_dim); h_prev (N, hidden); adjacency (N, N) boolean
        with self-loops. Returns (h_t, embeddings).
        """
        n = x.shape[0]
        assert x.shape == (n, self.feature_dim)
        assert h_prev.shape == (n, self.hidden)
        assert adjacency.shape == (n, n)

        joint = torch.cat([h_prev, x], dim=1)
        z = torch.sigmoid(self.gate_z(joint))
        r = torch.sigmoid(self.gate_r(joint))
        g = torch.tanh(self.gate_h(torch.cat([r * h_prev, x], dim=1)))
        h = z * h_prev + (1.0 - z) * g
        assert h.shape == (n, self.hidden)

        p = self.attention_w(h)
        # a . [p_i || p_j] splits into a_left . p_i + a_right . p_j.
        left = p @ self.attention_a[: self.hidden]
        right = p @ self.attention_a[self.hidden :]
        scores = torch.nn.functional.leaky_relu(
            left[:, None] + right[None, :], negative_slope=ATTENTION_SLOPE
        )
        scores = scores.masked_fill(~adjacency, -torch.inf)
        alpha = torch.softmax(scores, dim=1)
        h_attended = torch.relu(alpha @ p)

        embeddings = self.embed(h_attended)
        assert embeddings.shape == (n, self.embedding_dim)
        return h, embeddings

    def edge_logits(self, embeddings: torch.Tensor, pairs: torch.Tensor) -> torch.Tensor:
        """Logits for pair rows (E, 2) of local node indices."""
        if pairs.numel() == 0:
            return torch.empty(0, dtype=embeddings.dtype)
        edge_features = torch.cat(
            [embeddings[pairs[:, 0]], embeddings[pairs[:, 1]]], dim=1
        )
        assert edge_features.shape[1] == 2 * self.embedding_dim
        return self.classifier(self.drop(edge_features)).squeeze(-1)


@dataclass(frozen=True)
class DayInputs:
    """One day's tensors: features, adjacency, labels, global row map."""

    day: int
    node_ids: tuple[str, ...]
    rows: torch.Tensor  # (N,) global state row per local node
    x: torch.Tensor  # (N, feature_dim)
    adjacency: torch.Tensor  # (N, N) bool, self-loops set
    positive_pairs: torch.Tensor  # (P, 2) local indices
    negative_pairs: torch.Tensor  # (Q, 2)
    candidate_pairs: torch.Tensor  # (C, 2)
    candidate_ks: torch.Tensor  # (C,)
    candidate_edges: tuple  # Edge per candidate row, same order
    skipped_edges: int  # edges naming nodes absent from nodes.csv


def _pair_tensor(
    edges, index_of: dict[str, int]
) -> tuple[torch.Tensor, list, int]:
    rows, kept, skipped = [], [], 0
    for edge in edges:
        try:
            rows.append((index_of[edge.source], index_of[edge.target]))
            kept.append(edge)
        except KeyError:
            skipped += 1
    tensor = torch.tensor(rows, dtype=torch.long).reshape(len(rows), 2)
    return tensor, kept, skipped


def prepare_day(
    graph_day: GraphDay, features: DayFeatures, global_index: dict[str, int]
) -> DayInputs:
    n = len(graph_day.node_ids)
    # Attention runs on the similarity structure: positive and candidate
    # edges. Negative pairs are dissimilar by construction; they carry
    # labels for the classifier but are not neighbors.
    adjacency = torch.eye(n, dtype=torch.bool)
    for group in (graph_day.positive, graph_day.candidate):
        for edge in group:
            i = graph_day.index_of.get(edge.source)
            j = graph_day.index_of.get(edge.target)
            if i is not None and j is not None:
                adjacency[i, j] = adjacency[j, i] = True
    positive, _, skipped_p = _pair_tensor(graph_day.positive, graph_day.index_of)
    negative, _, skipped_n = _pair_tensor(graph_day.negative, graph_day.index_of)
    candidate, kept_candidates, skipped_c = _pair_tensor(
        graph_day.candidate, graph_day.index_of
    )
    return DayInputs(
        day=graph_day.day,
        node_ids=graph_day.node_ids,
        rows=torch.tensor(
            [global_index[node] for node in graph_day.node_ids], dtype=torch.long
        ),
        x=torch.from_numpy(features.matrix),
        adjacency=adjacency,
        positive_pairs=positive,
        negative_pairs=negative,
        candidate_pairs=candidate,
        candidate_ks=torch.tensor(
            [edge.ks for edge in kept_candidates], dtype=torch.float64
        ),
        candidate_edges=tuple(kept_candidates),
        skipped_edges=skipped_p + skipped_n + skipped_c,
    )


@dataclass(frozen=True)
class PreparedSequence:
    """Per-day tensors plus the global node universe they index into."""

    days: tuple[DayInputs, ...]
    node_ids: tuple[str, ...]

    def initial_state(self, model: ReRanker) -> torch.Tensor:
        return torch.zeros(len(self.node_ids), model.hidden, dtype=torch.float64)


def prepare_sequence(sequence: SnapshotSequence) -> PreparedSequence:
    """Feature assembly and tensor conversion for the whole sequence."""
    node_ids = sequence.all_node_ids()
    global_index = {node: i for i, node in enumerate(node_ids)}
    days = tuple(
        prepare_day(day, day_features(day), global_index) for day in sequence.days
    )
    return PreparedSequence(days=days, node_ids=node_ids)


def run_sequence(
    model: ReRanker, days: Sequence[DayInputs], state: torch.Tensor
) -> tuple[list[torch.Tensor], torch.Tensor]:
    """Forward over consecutive days, carrying state by node id.

    Returns the per-day embedding tensors and the updated global state.
    State rows of nodes inactive on a day pass through unchanged.
    """
    embeddings_by_day = []
    for day in days:
        h, embeddings = model.step(day.x, state[day.rows], day.adjacency)
        state = state.clone()
        state[day.rows] = h
        embeddings_by_day.append(embeddings)
    return embeddings_by_day, state
