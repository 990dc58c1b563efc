"""Command-line surface: audit, filter, sweep, simulate.

Exit codes: 0 success, 1 data error (bad file contents, misalignment),
2 usage error (bad flags or flag combinations). Every randomized command
takes an explicit --seed; there is no wall-clock seeding anywhere, so
rerunning a command with the same arguments reproduces its outputs byte
for byte, regardless of --threads.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from .evaluate import TrainConfig, sweep, write_sweep_csv, write_sweep_json
from .entropy import audit_entropy
from .filtering import STRATEGIES, apply_filter
from .ingest import (
    EMBEDDING_FORMATS,
    LabelMapping,
    parse_embeddings,
    parse_judgment_file,
    validate_alignment,
    write_embeddings,
    write_judgment_file,
)
from .model import SchemaError
from .report import build_audit_report
from .silhouette import audit_silhouette
from .synth import SynthConfig, generate, write_mask
from .util import THREADS_ENV


def _write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _load_mapping(args) -> Optional[LabelMapping]:
    return LabelMapping.load(args.mapping) if args.mapping else None


def _load_store_checked(args, parser, dataset, required: bool):
    """Parse embeddings and enforce dataset coverage (orphans are fine)."""
    if not args.embeddings:
        if required:
            parser.error("embeddings required for silhouette metrics")
        return None
    store = parse_embeddings(args.embeddings, args.format)
    alignment = validate_alignment(dataset, store)
    if not alignment.ok:
        raise SchemaError(
            f"embeddings missing for {len(alignment.missing_embeddings)} instances: "
            f"{alignment.missing_embeddings[:5]!r}"
        )
    return store


def cmd_audit(args, parser) -> int:
    want_entropy = args.metric in ("entropy", "both")
    want_silhouette = args.metric in ("silhouette", "both")
    if want_silhouette and not args.embeddings:
        parser.error("embeddings required for silhouette metrics")

    dataset = parse_judgment_file(args.judgments, _load_mapping(args))
    entropy_scores = audit_entropy(dataset) if want_entropy else None
    silhouette_map = None
    if want_silhouette:
        store = _load_store_checked(args, parser, dataset, required=True)
        silhouette_map = audit_silhouette(dataset, store, args.threads)

    report = build_audit_report(dataset, entropy_scores, silhouette_map)
    _write_json(report, args.out)
    print(f"audited {dataset.n_instances} instances -> {args.out}")
    return 0


def cmd_filter(args, parser) -> int:
    if not 0.0 <= args.fraction <= 1.0:
        parser.error(f"--fraction must be in [0, 1], got {args.fraction}")
    if args.strategy.startswith("random") and args.seed is None:
        parser.error(f"--seed is required for strategy {args.strategy}")
    if args.strategy == "silhouette" and not args.embeddings:
        parser.error("embeddings required for silhouette filtering")

    dataset = parse_judgment_file(args.judgments, _load_mapping(args))
    entropy_scores = audit_entropy(dataset) if args.strategy == "entropy" else None
    judgment_scores = None
    if args.strategy == "silhouette":
        store = _load_store_checked(args, parser, dataset, required=True)
        judgment_scores = audit_silhouette(dataset, store, args.threads)

    filtered, log = apply_filter(
        dataset,
        args.strategy,
        args.fraction,
        seed=args.seed,
        entropy_scores=entropy_scores,
        judgment_scores=judgment_scores,
    )
    write_judgment_file(filtered, args.out)
    log_path = args.log or f"{args.out}.removal.json"
    _write_json(log.to_json_dict(), log_path)
    removed = (
        len(log.removed_instances)
        if log.granularity == "instances"
        else len(log.removed_judgments)
    )
    print(f"removed {removed} {log.granularity} -> {args.out}")
    return 0


def cmd_sweep(args, parser) -> int:
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    for strategy in strategies:
        if strategy not in STRATEGIES:
            parser.error(
                f"unknown strategy {strategy!r}, expected one of {','.join(STRATEGIES)}"
            )
    try:
        fractions = [float(x) for x in args.fractions.split(",") if x.strip()]
    except ValueError:
        parser.error(f"--fractions must be a comma-separated float list, got {args.fractions!r}")
    if not strategies or not fractions:
        parser.error("--strategies and --fractions must be non-empty")
    for fraction in fractions:
        if not 0.0 <= fraction <= 1.0:
            parser.error(f"fractions must be in [0, 1], got {fraction}")
    if args.seeds < 1:
        parser.error(f"--seeds must be >= 1, got {args.seeds}")

    dataset = parse_judgment_file(args.judgments, _load_mapping(args))
    store = _load_store_checked(args, parser, dataset, required=True)
    config = TrainConfig(
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        l2_penalty=args.l2_penalty,
    )
    results = sweep(
        dataset,
        store,
        strategies,
        fractions,
        args.seeds,
        config=config,
        master_seed=args.seed,
        threads=args.threads,
        clean_test=args.clean_test,
    )
    meta = {
        "strategies": strategies,
        "fractions": fractions,
        "n_seeds": args.seeds,
        "master_seed": args.seed,
        "epochs": args.epochs,
        "learning_rate": args.learning_rate,
        "batch_size": args.batch_size,
        "l2_penalty": args.l2_penalty,
        "clean_test": args.clean_test,
    }
    write_sweep_csv(results, args.out_csv)
    write_sweep_json(results, args.out_json, meta)
    print(f"swept {len(results)} cells -> {args.out_csv}, {args.out_json}")
    return 0


def cmd_simulate(args, parser) -> int:
    try:
        config = SynthConfig(
            n_labels=args.labels,
            dim=args.dim,
            n_instances=args.instances,
            annotators_per_instance=args.annotators,
            mislabel_rate=args.noise,
            subjective_rate=args.subjective,
            cluster_separation=args.separation,
            seed=args.seed,
        )
    except ValueError as exc:
        parser.error(str(exc))

    dataset, store, mask = generate(config)
    judgments_path = args.out_judgments or f"{args.out_prefix}.judgments.jsonl"
    embeddings_path = args.out_embeddings or (
        f"{args.out_prefix}.embeddings.{'bin' if args.format == 'bin' else 'jsonl'}"
    )
    mask_path = args.out_mask or f"{args.out_prefix}.mask.json"
    write_judgment_file(dataset, judgments_path)
    write_embeddings(store, embeddings_path, args.format)
    write_mask(mask, mask_path)
    print(f"simulated {dataset.n_instances} instances, {dataset.n_judgments} judgments")
    print(f"judgments -> {judgments_path}")
    print(f"embeddings -> {embeddings_path}")
    print(f"mask -> {mask_path}")
    return 0


def _add_common_io(sub, embeddings_help: str) -> None:
    sub.add_argument("--judgments", required=True, help="judgment jsonl path")
    sub.add_argument("--embeddings", help=embeddings_help)
    sub.add_argument(
        "--format",
        choices=EMBEDDING_FORMATS,
        default="jsonl",
        help="embedding file format (default: jsonl)",
    )
    sub.add_argument("--mapping", help="label mapping JSON path")
    sub.add_argument(
        "--threads",
        type=int,
        default=None,
        help=f"worker threads (default: {THREADS_ENV} env var, then all cores); "
        "results are identical for any value",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="annoaudit",
        description=(
            "Audit crowd-annotated datasets for annotation noise, filter the "
            "noisiest data, and benchmark filtered against random removal."
        ),
    )
    commands = parser.add_subparsers(dest="command", required=True)

    audit = commands.add_parser(
        "audit", help="score a dataset and write a JSON audit report"
    )
    _add_common_io(audit, "embedding file (required for silhouette)")
    audit.add_argument(
        "--metric",
        choices=("entropy", "silhouette", "both"),
        default="both",
        help="which metrics to compute (default: both)",
    )
    audit.add_argument("--out", required=True, help="output report JSON path")
    audit.set_defaults(func=cmd_audit, parser=audit)

    filt = commands.add_parser(
        "filter", help="write a refined judgment file and a removal log"
    )
    _add_common_io(filt, "embedding file (required for silhouette strategy)")
    filt.add_argument("--strategy", choices=STRATEGIES, required=True)
    filt.add_argument("--fraction", type=float, required=True)
    filt.add_argument(
        "--seed", type=int, default=None, help="required for random strategies"
    )
    filt.add_argument("--out", required=True, help="refined judgment jsonl path")
    filt.add_argument(
        "--log", help="removal log JSON path (default: <out>.removal.json)"
    )
    filt.set_defaults(func=cmd_filter, parser=filt)

    sweep_cmd = commands.add_parser(
        "sweep", help="run the strategy x fraction x seed evaluation grid"
    )
    _add_common_io(sweep_cmd, "embedding file (required)")
    sweep_cmd.add_argument(
        "--strategies", required=True, help="comma-separated strategy list"
    )
    sweep_cmd.add_argument(
        "--fractions", required=True, help="comma-separated fractions in [0, 1]"
    )
    sweep_cmd.add_argument(
        "--seeds", type=int, required=True, help="number of evaluation seeds"
    )
    sweep_cmd.add_argument("--seed", type=int, required=True, help="master seed")
    sweep_cmd.add_argument("--epochs", type=int, default=5)
    sweep_cmd.add_argument("--learning-rate", type=float, default=0.01)
    sweep_cmd.add_argument("--batch-size", type=int, default=50)
    sweep_cmd.add_argument("--l2-penalty", type=float, default=0.0)
    sweep_cmd.add_argument(
        "--clean-test",
        action="store_true",
        help="deviation mode: split first and filter only the train side",
    )
    sweep_cmd.add_argument("--out-csv", required=True)
    sweep_cmd.add_argument("--out-json", required=True)
    sweep_cmd.set_defaults(func=cmd_sweep, parser=sweep_cmd)

    sim = commands.add_parser(
        "simulate", help="generate a synthetic dataset with known noise"
    )
    sim.add_argument("--labels", type=int, required=True)
    sim.add_argument("--dim", type=int, required=True)
    sim.add_argument("--instances", type=int, required=True)
    sim.add_argument("--annotators", type=int, required=True)
    sim.add_argument("--noise", type=float, required=True, help="mislabel rate")
    sim.add_argument(
        "--subjective", type=float, default=0.0, help="subjective confusion rate"
    )
    sim.add_argument(
        "--separation", type=float, default=8.0, help="cluster centroid separation"
    )
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument(
        "--format",
        choices=EMBEDDING_FORMATS,
        default="bin",
        help="embedding output format (default: bin)",
    )
    sim.add_argument("--out-prefix", default="synth")
    sim.add_argument("--out-judgments")
    sim.add_argument("--out-embeddings")
    sim.add_argument("--out-mask")
    sim.set_defaults(func=cmd_simulate, parser=sim)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, args.parser)
    except (SchemaError, ValueError, KeyError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
