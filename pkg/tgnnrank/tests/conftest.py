"""Session fixture: the full file-level contract with the upstream matcher.

The pipeline shells out to the matcher to synthesize a population and
export day snapshots, then trains and re-ranks through this package's
CLI. The two packages communicate only through files, exactly as in
production; no code is shared.
"""

from __future__ import annotations

from types import SimpleNamespace

import pytest

from tgnn_toys import BUDGET, EXPORT_ARGS, RERANK_DAY, SYNTH_ARGS, run_cli


@pytest.fixture(scope="session")
def pipeline(tmp_path_factory):
    """Synthesize, export, train, and re-rank once for the whole session."""
    root = tmp_path_factory.mktemp("pipeline")
    data_dir = root / "data"
    graphs_dir = root / "graphs"
    model_dir = root / "model"
    reranked_csv = root / "reranked.csv"

    run_cli("tfmatch.cli", "synth", *SYNTH_ARGS, "-o", data_dir)
    run_cli(
        "tfmatch.cli",
        "export-tgnn",
        "--in", data_dir / "events.csv",
        *EXPORT_ARGS,
        "-o", graphs_dir,
    )
    run_cli(
        "tgnnrank.cli",
        "train",
        "--graphs", graphs_dir,
        "--out", model_dir,
        "--seed", "0",
    )
    run_cli(
        "tgnnrank.cli",
        "rerank",
        "--graphs", graphs_dir,
        "--model", model_dir,
        "--day", RERANK_DAY,
        "--out", reranked_csv,
        "--budget", BUDGET,
    )
    return SimpleNamespace(
        data_dir=data_dir,
        graphs_dir=graphs_dir,
        model_dir=model_dir,
        reranked_csv=reranked_csv,
        truth_csv=data_dir / "truth.csv",
        day=RERANK_DAY,
        budget=BUDGET,
    )
