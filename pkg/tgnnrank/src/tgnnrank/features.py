"""Per-day node feature assembly: 16 raw columns expanded to 34.

Raw features are the exported temporal columns plus six graph metrics
recomputed here from the day's edges (in-degree, out-degree, clustering
coefficient, closeness, betweenness, PageRank). All 16 are robust-scaled
per day (median and interquartile range, so outliers cannot dominate);
the six graph metrics are additionally binned into per-day tertile
one-hot indicators, 16 + 6*3 = 34 dimensions. Nodes that are isolated on
a day keep zeros for the path-based metrics and are counted.
"""

from __future__ import annotations

from dataclasses import dataclass

import networkx as nx
import numpy as np

from .data import GraphDay

GRAPH_METRIC_COLUMNS = (
    "in_degree",
    "out_degree",
    "clustering",
    "closeness",
    "betweenness",
    "pagerank",
)

FEATURE_DIMENSION_RAW = 16
FEATURE_DIMENSION = 34


@dataclass(frozen=True)
class DayFeatures:
    """Scaled and binned node features for one day, row i = node_ids[i]."""

    day: int
    node_ids: tuple[str, ...]
    matrix: np.ndarray  # (nodes, FEATURE_DIMENSION)
    isolated_nodes: int


def graph_metrics(day: GraphDay) -> np.ndarray:
    """Six per-node metrics of the day's similarity graph.

    The similarity structure is the positive and candidate edges;
    negative pairs are dissimilar by construction and stay out of the
    graph. Edges are taken as directed source -> target exactly as
    exported; clustering, closeness, and betweenness use the undirected
    view, PageRank the directed one. An edgeless graph yields uniform
    PageRank 1/N and zeros elsewhere.
    """
    directed = nx.DiGraph()
    directed.add_nodes_from(day.node_ids)
    for group in (day.positive, day.candidate):
        directed.add_edges_from((e.source, e.target) for e in group)
    undirected = directed.to_undirected(as_view=False)

    clustering = nx.clustering(undirected)
    closeness = nx.closeness_centrality(undirected)
    betweenness = nx.betweenness_centrality(undirected, normalized=True)
    pagerank = nx.pagerank(directed)

    rows = [
        (
            directed.in_degree(node),
            directed.out_degree(node),
            clustering[node],
            closeness[node],
            betweenness[node],
            pagerank[node],
        )
        for node in day.node_ids
    ]
    return np.asarray(rows, dtype=np.float64).reshape(len(day.node_ids), 6)


def robust_scale(matrix: np.ndarray) -> np.ndarray:
    """(x - median) / IQR per column; constant columns scale to zero."""
    median = np.median(matrix, axis=0)
    q75, q25 = np.percentile(matrix, [75, 25], axis=0)
    iqr = q75 - q25
    scaled = np.where(iqr > 0, (matrix - median) / np.where(iqr > 0, iqr, 1.0), 0.0)
    return scaled


def tertile_onehot(columns: np.ndarray) -> np.ndarray:
    """Per-column tertile membership as one-hot blocks.

    Bucket boundaries are the day's 1/3 and 2/3 quantiles; values at a
    boundary fall into the lower bucket. A constant column puts every
    node in the lowest tertile.
    """
    n, m = columns.shape
    onehot = np.zeros((n, 3 * m), dtype=np.float64)
    for j in range(m):
        low, high = np.quantile(columns[:, j], [1.0 / 3.0, 2.0 / 3.0])
        bucket = np.zeros(n, dtype=np.int64)
        bucket[columns[:, j] > low] = 1
        bucket[columns[:, j] > high] = 2
        onehot[np.arange(n), 3 * j + bucket] = 1.0
    return onehot


def day_features(day: GraphDay) -> DayFeatures:
    """Assemble the full 34-dimensional feature matrix for one day."""
    metrics = graph_metrics(day)
    raw = np.hstack([day.features, metrics])
    if raw.shape[1] != FEATURE_DIMENSION_RAW:
        raise ValueError(
            f"day {day.day}: expected {FEATURE_DIMENSION_RAW} raw columns, "
            f"got {raw.shape[1]}"
        )
    matrix = np.hstack([robust_scale(raw), tertile_onehot(metrics)])
    assert matrix.shape == (len(day.node_ids), FEATURE_DIMENSION)
    # Degree counts similarity edges only; a node whose edges are all
    # negative is isolated for message passing and is counted as such.
    isolated = int(np.sum(metrics[:, 0] + metrics[:, 1] == 0))
    return DayFeatures(
        day=day.day,
        node_ids=day.node_ids,
        matrix=matrix,
        isolated_nodes=isolated,
    )


def feature_names(temporal_columns: tuple[str, ...]) -> list[str]:
    """Column names of the final 34-dimensional matrix, in order."""
    raw = list(temporal_columns) + list(GRAPH_METRIC_COLUMNS)
    bins = [
        f"{metric}_tertile_{t}" for metric in GRAPH_METRIC_COLUMNS for t in (1, 2, 3)
    ]
    return raw + bins
