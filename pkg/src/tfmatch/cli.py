"""Command-line surface for reproducible matching runs.

Every subcommand writes its artifacts plus a manifest.json capturing the
full configuration, seeds, input digests, and tool version. Manifests
and artifacts carry no timestamps, so re-running a command on identical
inputs reproduces every output byte for byte.

Exit codes: 0 success, 1 data error (bad input content, infeasible
spec), 2 usage error (bad flags).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .baselines import (
    DEFAULT_OVERLAP_RESOLUTION_SECONDS,
    load_embeddings,
    rank_activity_overlap,
    rank_embeddings,
)
from .evaluation import (
    DEFAULT_VOLUME_CATEGORIES,
    RankedPairs,
    compute_report,
    ks_drift,
    aggregate_days,
    precision_curve_points,
    identification_probability,
    roc_points,
)
from .ingest import build_snapshots, parse_events_path, parse_truth
from .model import ProfileId
from .perturb import NoiseSpec, inject_noise_all
from .serialize import (
    read_profiles_csv,
    read_ranked_csv,
    write_events_csv,
    write_json,
    write_manifest,
    write_profiles_csv,
    write_ranked_csv,
    write_rows_csv,
    write_truth_csv,
)
from .similarity import MatchConfig, match_all
from .simnet import ExportThresholds, export_day, write_feature_manifest
from .synth import PopulationSpec, generate_population, parse_population_config


class UsageError(Exception):
    """Bad flag combination or value; maps to exit code 2."""


def _workers_from(args: argparse.Namespace) -> int:
    if args.workers is not None:
        return args.workers
    env = os.environ.get("TFM_WORKERS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"TFM_WORKERS must be an integer, got {env!r}") from None
    return 1


def _parse_int_list(raw: str, flag: str) -> list[int]:
    try:
        values = [int(part) for part in raw.split(",") if part]
    except ValueError:
        raise UsageError(f"{flag} expects comma-separated integers, got {raw!r}") from None
    if not values:
        raise UsageError(f"{flag} must name at least one value")
    return values


def _parse_float_list(raw: str, flag: str) -> list[float]:
    try:
        values = [float(part) for part in raw.split(",") if part]
    except ValueError:
        raise UsageError(f"{flag} expects comma-separated numbers, got {raw!r}") from None
    if not values:
        raise UsageError(f"{flag} must name at least one value")
    return values


def _parse_day_range(raw: str) -> list[int]:
    try:
        if "-" in raw.lstrip("-")[1:] or ("-" in raw and not raw.startswith("-")):
            start_s, _, end_s = raw.partition("-")
            start, end = int(start_s), int(end_s)
        else:
            start = end = int(raw)
    except ValueError:
        raise UsageError(f"--days expects N or START-END, got {raw!r}") from None
    if end < start:
        raise UsageError(f"--days range is empty: {raw!r}")
    return list(range(start, end + 1))


def _events_path(in_path: str) -> Path:
    path = Path(in_path)
    if path.is_dir():
        candidate = path / "events.csv"
        if not candidate.exists():
            raise UsageError(f"{path} contains no events.csv")
        return candidate
    if not path.exists():
        raise UsageError(f"input path {path} does not exist")
    return path


def _parse_profile_ref(raw: str, flag: str) -> ProfileId:
    if "/" not in raw:
        raise UsageError(f"{flag} expects domain/local, got {raw!r}")
    domain, local = raw.split("/", 1)
    return ProfileId(domain, local)


def _load_day(args: argparse.Namespace, day: int):
    events_file = _events_path(args.in_path)
    events = parse_events_path(events_file, args.format)
    extra_truth = None
    if getattr(args, "truth", None):
        with open(args.truth, "rb") as handle:
            extra_truth = parse_truth(handle)
    snapshots, truth = build_snapshots(
        events, day, min_activity=args.min_activity, extra_truth=extra_truth
    )
    return events_file, snapshots, truth


def _rank_snapshots(args: argparse.Namespace, snapshots, inputs: dict) -> tuple[list, dict]:
    extra: dict[str, object] = {}
    if args.method == "ks":
        cfg = MatchConfig(
            alpha=args.alpha,
            prune_threshold=args.prune_threshold,
            workers=_workers_from(args),
        )
        scores = match_all(snapshots, cfg)
        extra["workers"] = cfg.workers
    elif args.method == "ao":
        scores = rank_activity_overlap(snapshots, args.overlap_resolution_seconds)
        extra["overlap_resolution_seconds"] = args.overlap_resolution_seconds
    elif args.method == "regal":
        if not args.embeddings:
            raise UsageError("--method regal requires --embeddings")
        with open(args.embeddings, "rb") as handle:
            table = load_embeddings(handle)
        scores, skipped = rank_embeddings(snapshots, table)
        inputs["embeddings"] = args.embeddings
        extra["embedding_dimension"] = table.dimension
        extra["pairs_without_embeddings"] = skipped
    else:
        raise UsageError(f"unknown method {args.method!r}")
    return scores, extra


def _cmd_synth(args: argparse.Namespace) -> None:
    spec = PopulationSpec(
        entities=args.entities,
        domains=args.domains,
        multi_domain_fraction=args.multi_domain_fraction,
        events_per_profile=(args.events_min, args.events_max),
        fingerprint_family=args.family,
        gap_location_range=(args.gap_location_min, args.gap_location_max),
        gap_shape_range=(args.gap_shape_min, args.gap_shape_max),
        days=args.days,
        seed=args.seed,
    )
    inputs = {}
    if args.config:
        text = Path(args.config).read_text()
        spec = parse_population_config(text, base=spec)
        inputs["config"] = args.config
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    records, truth = generate_population(spec)
    write_events_csv(outdir / "events.csv", records)
    write_truth_csv(outdir / "truth.csv", truth)
    config = asdict(spec)
    config["events"] = len(records)
    config["profiles"] = len(truth)
    write_manifest(outdir, "synth", config, inputs, ["events.csv", "truth.csv"])
    print(f"generated {len(records)} events, {len(truth)} profiles -> {outdir}")


def _cmd_ingest(args: argparse.Namespace) -> None:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    events_file, snapshots, truth = _load_day(args, args.day)
    surviving = {t.profile for s in snapshots for t in s.timelines.values()}
    kept = [
        r
        for r in parse_events_path(events_file, args.format)
        if ProfileId(r.domain_id, r.profile_local_id) in surviving
        and args.day * 86400 <= r.timestamp < (args.day + 1) * 86400
    ]
    write_events_csv(outdir / "events.csv", kept)
    write_truth_csv(outdir / "truth.csv", truth)
    write_profiles_csv(outdir / "profiles.csv", snapshots)
    summary = {
        "day": args.day,
        "domains": {s.domain_id: len(s) for s in snapshots},
        "profiles": sum(len(s) for s in snapshots),
        "events_kept": len(kept),
        "labeled_profiles": len(truth),
        "true_pairs": len(truth.correct_pairs()),
    }
    write_json(outdir / "summary.json", summary)
    inputs = {"events": events_file}
    if args.truth:
        inputs["truth"] = args.truth
    write_manifest(
        outdir,
        "ingest",
        {"day": args.day, "min_activity": args.min_activity, "format": args.format},
        inputs,
        ["events.csv", "truth.csv", "profiles.csv", "summary.json"],
    )
    print(
        f"day {args.day}: {summary['profiles']} profiles across "
        f"{len(snapshots)} domains, {summary['true_pairs']} true pairs -> {outdir}"
    )


def _cmd_match(args: argparse.Namespace) -> None:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    events_file, snapshots, _truth = _load_day(args, args.day)
    inputs = {"events": events_file}
    scores, extra = _rank_snapshots(args, snapshots, inputs)
    write_ranked_csv(outdir / "ranked.csv", scores)
    write_profiles_csv(outdir / "profiles.csv", snapshots)
    config = {
        "method": args.method,
        "day": args.day,
        "min_activity": args.min_activity,
        "alpha": args.alpha,
        "prune_threshold": args.prune_threshold,
        "pairs": len(scores),
        **extra,
    }
    write_manifest(outdir, "match", config, inputs, ["ranked.csv", "profiles.csv"])
    print(f"scored {len(scores)} pairs with method {args.method} -> {outdir}")


def _cmd_noise(args: argparse.Namespace) -> None:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    events_file, snapshots, _truth = _load_day(args, args.day)
    spec = NoiseSpec(sigma=args.noise_sigma_seconds, mu=args.noise_mu, seed=args.noise_seed)
    noisy = inject_noise_all(snapshots, spec)
    inputs = {"events": events_file}
    scores, extra = _rank_snapshots(args, noisy, inputs)
    write_ranked_csv(outdir / "ranked.csv", scores)
    write_profiles_csv(outdir / "profiles.csv", noisy)
    config = {
        "method": args.method,
        "day": args.day,
        "min_activity": args.min_activity,
        "alpha": args.alpha,
        "prune_threshold": args.prune_threshold,
        "noise_sigma_seconds": spec.sigma,
        "noise_mu": spec.mu,
        "noise_seed": spec.seed,
        "pairs": len(scores),
        **extra,
    }
    write_manifest(outdir, "noise", config, inputs, ["ranked.csv", "profiles.csv"])
    print(
        f"scored {len(scores)} pairs under sigma={spec.sigma}s noise -> {outdir}"
    )


def _cmd_eval(args: argparse.Namespace) -> None:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    scores = read_ranked_csv(args.ranked)
    with open(args.truth, "rb") as handle:
        truth_map = parse_truth(handle)
    from .model import GroundTruth

    truth = GroundTruth(entity_of=truth_map)
    ranked = RankedPairs(method=args.method_tag, pairs=tuple(scores))
    volumes = None
    inputs = {"ranked": args.ranked, "truth": args.truth}
    if args.profiles:
        volumes = read_profiles_csv(args.profiles)
        inputs["profiles"] = args.profiles
    k_values = _parse_int_list(args.k, "--k")
    top_n = _parse_int_list(args.top_n, "--top-n")
    rho_values = _parse_float_list(args.rho, "--rho")
    report = compute_report(
        ranked,
        truth,
        top_n=top_n,
        k_values=k_values,
        rho_values=rho_values,
        volumes=volumes,
    )
    write_json(outdir / "report.json", report.to_dict())
    outputs = ["report.json"]
    write_rows_csv(outdir / "roc.csv", ("fpr", "tpr"), roc_points(ranked, truth))
    outputs.append("roc.csv")
    write_rows_csv(
        outdir / "precision_curve.csv",
        ("n", "precision"),
        precision_curve_points(ranked, truth),
    )
    outputs.append("precision_curve.csv")
    write_rows_csv(
        outdir / "precision_at_k.csv",
        ("k", "precision"),
        sorted(report.precision_at_k.items()),
    )
    outputs.append("precision_at_k.csv")
    if volumes is not None:
        pid_rows = []
        for rho in rho_values:
            table = identification_probability(
                ranked, truth, rho, DEFAULT_VOLUME_CATEGORIES, volumes
            )
            for bin_, value in sorted(table.items(), key=lambda kv: kv[0].lower):
                pid_rows.append((rho, bin_.lower, bin_.upper, value))
        write_rows_csv(
            outdir / "pid.csv", ("rho", "volume_lower", "volume_upper", "p_id"), pid_rows
        )
        outputs.append("pid.csv")
    config = {
        "method_tag": args.method_tag,
        "k": k_values,
        "top_n": top_n,
        "rho": rho_values,
        "auc": report.auc,
    }
    write_manifest(outdir, "eval", config, inputs, outputs)
    print(f"auc {report.auc:.4f} over {report.pairs_labeled} labeled pairs -> {outdir}")


def _cmd_export_tgnn(args: argparse.Namespace) -> None:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    days = _parse_day_range(args.days)
    thresholds = ExportThresholds(
        rho_positive=args.rho_p,
        rho_negative=args.rho_n,
        candidate_band=(args.band_low, args.band_high),
    )
    events_file = _events_path(args.in_path)
    events = parse_events_path(events_file, args.format)
    cfg = MatchConfig(alpha=args.alpha, workers=_workers_from(args))
    missing = []
    exported = []
    for day in days:
        snapshots, _truth = build_snapshots(events, day, min_activity=args.min_activity)
        if sum(len(s) for s in snapshots) == 0:
            missing.append(day)
            continue
        scores = match_all(snapshots, cfg)
        export_day(outdir, day, snapshots, scores, thresholds)
        exported.append(day)
    if missing:
        raise ValueError(f"no active profiles on day(s): {', '.join(map(str, missing))}")
    write_feature_manifest(outdir, thresholds)
    config = {
        "days": days,
        "min_activity": args.min_activity,
        "alpha": args.alpha,
        "rho_p": args.rho_p,
        "rho_n": args.rho_n,
        "band_low": args.band_low,
        "band_high": args.band_high,
        "workers": cfg.workers,
    }
    write_manifest(
        outdir, "export-tgnn", config, {"events": events_file}, ["feature_manifest.json"]
    )
    print(f"exported {len(exported)} day snapshots -> {outdir}")


def _cmd_report(args: argparse.Namespace) -> None:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    import json

    inputs = {}
    daily = []
    for index, path in enumerate(args.inputs):
        payload = json.loads(Path(path).read_text())
        flat: dict[str, float] = {"auc": payload["auc"]}
        for n, value in payload.get("precision_top", {}).items():
            flat[f"precision_top.{n}"] = value
        for k, value in payload.get("precision_at_k", {}).items():
            flat[f"precision_at_k.{k}"] = value
        daily.append(flat)
        inputs[f"report_{index}"] = path
    aggregated = aggregate_days(daily)
    payload = {
        "days": len(daily),
        "metrics": {
            key: {
                "mean": agg.mean,
                "standard_error": agg.standard_error,
                "days": agg.days,
            }
            for key, agg in sorted(aggregated.items())
        },
    }
    write_json(outdir / "aggregate.json", payload)
    outputs = ["aggregate.json"]

    if args.drift_pair:
        if not args.drift_in or not args.drift_days:
            raise UsageError("--drift-pair requires --drift-in and --drift-days")
        pair_raw = args.drift_pair.split(",")
        if len(pair_raw) != 2:
            raise UsageError("--drift-pair expects 'domain/local,domain/local'")
        pair = (
            _parse_profile_ref(pair_raw[0], "--drift-pair"),
            _parse_profile_ref(pair_raw[1], "--drift-pair"),
        )
        events_file = _events_path(args.drift_in)
        events = parse_events_path(events_file, None)
        snapshots_by_day = {}
        for day in _parse_day_range(args.drift_days):
            snapshots, _ = build_snapshots(events, day, min_activity=args.min_activity)
            snapshots_by_day[day] = snapshots
        series = ks_drift(pair, snapshots_by_day)
        write_rows_csv(
            outdir / "drift.csv",
            ("offset_days", "delta_ks"),
            sorted(series.items()),
        )
        outputs.append("drift.csv")
        inputs["drift_events"] = events_file
    write_manifest(outdir, "report", {"reports": len(daily)}, inputs, outputs)
    print(f"aggregated {len(daily)} daily reports -> {outdir}")


def _add_day_input_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--in", dest="in_path", required=True, help="event file or directory")
    parser.add_argument("--format", choices=("csv", "jsonl"), help="override format inference")
    parser.add_argument("--day", type=int, required=True, help="UTC day index to analyze")
    parser.add_argument("--min-activity", type=int, default=20)
    parser.add_argument("--truth", help="separate truth mapping CSV")


def _add_method_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--method", choices=("ks", "ao", "regal"), default="ks")
    parser.add_argument("--alpha", type=float, default=0.05)
    parser.add_argument("--prune-threshold", type=float, default=None)
    parser.add_argument("--workers", type=int, default=None, help="default TFM_WORKERS or 1")
    parser.add_argument(
        "--overlap-resolution-seconds",
        type=float,
        default=DEFAULT_OVERLAP_RESOLUTION_SECONDS,
    )
    parser.add_argument("--embeddings", help="embedding CSV for --method regal")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tfmatch",
        description="match profiles across domains by inter-event time distributions",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a labeled synthetic population")
    p_synth.add_argument("--entities", type=int, default=200)
    p_synth.add_argument("--domains", type=int, default=3)
    p_synth.add_argument("--multi-domain-fraction", type=float, default=0.5)
    p_synth.add_argument("--events-min", type=int, default=20)
    p_synth.add_argument("--events-max", type=int, default=11000)
    p_synth.add_argument("--family", choices=("lognormal", "pareto"), default="lognormal")
    p_synth.add_argument("--gap-location-min", type=float, default=8.0)
    p_synth.add_argument("--gap-location-max", type=float, default=60.0)
    p_synth.add_argument("--gap-shape-min", type=float, default=0.3)
    p_synth.add_argument("--gap-shape-max", type=float, default=0.8)
    p_synth.add_argument("--days", type=int, default=1)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--config", help="key = value file overriding flags")
    p_synth.add_argument("-o", "--out", required=True)
    p_synth.set_defaults(func=_cmd_synth)

    p_ingest = sub.add_parser("ingest", help="slice one day into filtered snapshots")
    _add_day_input_flags(p_ingest)
    p_ingest.add_argument("-o", "--out", required=True)
    p_ingest.set_defaults(func=_cmd_ingest)

    p_match = sub.add_parser("match", help="rank cross-domain pairs for one day")
    _add_day_input_flags(p_match)
    _add_method_flags(p_match)
    p_match.add_argument("-o", "--out", required=True)
    p_match.set_defaults(func=_cmd_match)

    p_noise = sub.add_parser("noise", help="match after Gaussian timestamp noise")
    _add_day_input_flags(p_noise)
    _add_method_flags(p_noise)
    p_noise.add_argument("--noise-sigma-seconds", type=float, required=True)
    p_noise.add_argument("--noise-mu", type=float, default=0.0)
    p_noise.add_argument("--noise-seed", type=int, default=0)
    p_noise.add_argument("-o", "--out", required=True)
    p_noise.set_defaults(func=_cmd_noise)

    p_eval = sub.add_parser("eval", help="score a ranked file against ground truth")
    p_eval.add_argument("--ranked", required=True)
    p_eval.add_argument("--truth", required=True)
    p_eval.add_argument("--profiles", help="volume sidecar from match")
    p_eval.add_argument("--method-tag", default="ks")
    p_eval.add_argument("--k", default="1,5,10")
    p_eval.add_argument("--top-n", default="10,100")
    p_eval.add_argument("--rho", default="0.05")
    p_eval.add_argument("-o", "--out", required=True)
    p_eval.set_defaults(func=_cmd_eval)

    p_export = sub.add_parser("export-tgnn", help="export similarity-network snapshots")
    p_export.add_argument("--in", dest="in_path", required=True)
    p_export.add_argument("--format", choices=("csv", "jsonl"))
    p_export.add_argument("--days", required=True, help="day index or START-END range")
    p_export.add_argument("--min-activity", type=int, default=20)
    p_export.add_argument("--alpha", type=float, default=0.05)
    p_export.add_argument("--workers", type=int, default=None)
    p_export.add_argument("--rho-p", type=float, default=0.001)
    p_export.add_argument("--rho-n", type=float, default=0.98)
    p_export.add_argument("--band-low", type=float, default=0.001)
    p_export.add_argument("--band-high", type=float, default=0.02616)
    p_export.add_argument("-o", "--out", required=True)
    p_export.set_defaults(func=_cmd_export_tgnn)

    p_report = sub.add_parser("report", help="aggregate daily reports; optional drift")
    p_report.add_argument("--inputs", nargs="+", required=True, help="report.json files")
    p_report.add_argument("--drift-pair", help="'domain/local,domain/local'")
    p_report.add_argument("--drift-in", help="event file or directory for drift")
    p_report.add_argument("--drift-days", help="day range for drift")
    p_report.add_argument("--min-activity", type=int, default=20)
    p_report.add_argument("-o", "--out", required=True)
    p_report.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
