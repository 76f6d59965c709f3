#!/usr/bin/env python3
"""Multi-day stability: daily metrics, their aggregate, and KS drift.

One population observed over several days. Every day is matched and
scored independently; per-metric means and standard errors summarize
the window. Drift then follows sampled true pairs over time and, for
each, a random volume-matched impostor: a counterpart-domain profile
whose first-day activity volume lies within +/-10% of the true
counterpart's. Lower drift for true pairs is the stability signal.

Usage:
  python3 scripts/run_stability.py --out results/stability
  python3 scripts/run_stability.py --days 7 --pairs 40 --comparison-seed 1
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from tfmatch.evaluation import RankedPairs, aggregate_days, compute_report, ks_drift
from tfmatch.ingest import build_snapshots
from tfmatch.serialize import write_json, write_rows_csv
from tfmatch.similarity import MatchConfig, match_all
from tfmatch.synth import PopulationSpec, generate_population


def parse_args(argv=None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--entities", type=int, default=120)
    parser.add_argument("--domains", type=int, default=2)
    parser.add_argument("--multi-domain-fraction", type=float, default=0.5)
    parser.add_argument("--events-min", type=int, default=20)
    parser.add_argument("--events-max", type=int, default=4000)
    parser.add_argument("--days", type=int, default=5)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--min-activity", type=int, default=20)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--pairs", type=int, default=30, help="true pairs to trace")
    parser.add_argument(
        "--comparison-seed",
        type=int,
        default=0,
        help="seed for sampling volume-matched impostors",
    )
    parser.add_argument("-o", "--out", default="results/stability")
    return parser.parse_args(argv)


def flatten(report) -> dict[str, float]:
    flat = {"auc": report.auc}
    for n, value in report.precision_top.items():
        flat[f"precision_top.{n}"] = value
    for k, value in report.precision_at_k.items():
        flat[f"precision_at_k.{k}"] = value
    return flat


def main(argv=None) -> int:
    args = parse_args(argv)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    cfg = MatchConfig(workers=args.workers)

    spec = PopulationSpec(
        entities=args.entities,
        domains=args.domains,
        multi_domain_fraction=args.multi_domain_fraction,
        events_per_profile=(args.events_min, args.events_max),
        days=args.days,
        seed=args.seed,
    )
    records, _ = generate_population(spec)
    print(f"population: {len(records)} events over {args.days} days")

    daily = []
    snapshots_by_day = {}
    truth_day0 = None
    start = time.perf_counter()
    for day in range(args.days):
        snapshots, truth = build_snapshots(records, day, min_activity=args.min_activity)
        snapshots_by_day[day] = snapshots
        if day == 0:
            truth_day0 = truth
        scores = match_all(snapshots, cfg)
        report = compute_report(RankedPairs(method="ks", pairs=tuple(scores)), truth)
        write_json(outdir / f"report_day{day}.json", report.to_dict())
        daily.append(flatten(report))
        print(f"day {day}: auc {report.auc:.4f}, p@10 {report.precision_at_k[10]:.3f}")
    match_s = time.perf_counter() - start

    aggregated = aggregate_days(daily)
    write_json(
        outdir / "aggregate.json",
        {
            "days": len(daily),
            "metrics": {
                key: {
                    "mean": agg.mean,
                    "standard_error": agg.standard_error,
                    "days": agg.days,
                }
                for key, agg in sorted(aggregated.items())
            },
        },
    )
    auc_agg = aggregated["auc"]
    se = auc_agg.standard_error
    print(
        f"\naggregate auc {auc_agg.mean:.4f}"
        + (f" +/- {se:.4f} s.e." if se is not None else "")
        + f" over {auc_agg.days} days ({match_s:.1f}s to match)"
    )

    # Drift: true pairs vs volume-matched impostors sampled at +/-10%.
    rng = np.random.default_rng(args.comparison_seed)
    volumes = {
        t.profile: t.event_count
        for s in snapshots_by_day[0]
        for t in s.timelines.values()
    }
    true_pairs = sorted(tuple(sorted(p)) for p in truth_day0.correct_pairs())
    if len(true_pairs) > args.pairs:
        picks = rng.choice(len(true_pairs), size=args.pairs, replace=False)
        true_pairs = [true_pairs[i] for i in sorted(picks)]

    drift_rows = []
    skipped = 0
    for left, right in true_pairs:
        for offset, delta in sorted(ks_drift((left, right), snapshots_by_day).items()):
            drift_rows.append(("true", str(left), str(right), offset, delta))
        target = volumes[right]
        pool = sorted(
            p
            for p, volume in volumes.items()
            if p.domain_id == right.domain_id
            and p != right
            and abs(volume - target) <= 0.1 * target
        )
        if not pool:
            skipped += 1
            continue
        impostor = pool[int(rng.integers(len(pool)))]
        for offset, delta in sorted(ks_drift((left, impostor), snapshots_by_day).items()):
            drift_rows.append(("comparison", str(left), str(impostor), offset, delta))
    write_rows_csv(
        outdir / "drift.csv",
        ("kind", "left", "right", "offset_days", "delta_ks"),
        drift_rows,
    )

    print("\noffset  mean drift (true)  mean drift (comparison)")
    for offset in range(args.days):
        means = {}
        for kind in ("true", "comparison"):
            values = [r[4] for r in drift_rows if r[0] == kind and r[3] == offset]
            means[kind] = float(np.mean(values)) if values else float("nan")
        print(f"{offset:>6}  {means['true']:>17.4f}  {means['comparison']:>23.4f}")
    if skipped:
        print(f"(no volume-matched impostor for {skipped} pairs)")

    write_json(
        outdir / "run.json",
        {
            "spec": {
                "entities": spec.entities,
                "domains": spec.domains,
                "multi_domain_fraction": spec.multi_domain_fraction,
                "events_per_profile": list(spec.events_per_profile),
                "days": spec.days,
                "seed": spec.seed,
            },
            "min_activity": args.min_activity,
            "workers": args.workers,
            "traced_pairs": len(true_pairs),
            "comparison_seed": args.comparison_seed,
            "impostors_skipped": skipped,
            "seconds_match": match_s,
        },
    )
    print(f"\nartifacts -> {outdir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
