"""embedgen command line: judgment jsonl in, embedding file out."""

from __future__ import annotations

import argparse
import sys

from .encoders import DEFAULT_MODEL, EncoderError
from .job import EmbedJobConfig, run_job
from .writers import FORMATS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embedgen",
        description=(
            "Embed the instance texts of a judgment jsonl file into an "
            "annoaudit-compatible embedding file."
        ),
    )
    parser.add_argument("input", help="judgment jsonl path (instances need text)")
    parser.add_argument("output", help="embedding file path")
    parser.add_argument(
        "--model",
        default=DEFAULT_MODEL,
        help=(
            f"sentence-transformers model id (default: {DEFAULT_MODEL}), or "
            "hash:<dim> for the built-in offline encoder"
        ),
    )
    parser.add_argument(
        "--format", choices=FORMATS, default="jsonl",
        help="output format (default: jsonl)",
    )
    parser.add_argument("--batch-size", type=int, default=32)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.batch_size < 1:
        build_parser().error(f"--batch-size must be >= 1, got {args.batch_size}")
    config = EmbedJobConfig(
        input_path=args.input,
        output_path=args.output,
        output_format=args.format,
        model=args.model,
        batch_size=args.batch_size,
    )
    try:
        count = run_job(config)
    except (EncoderError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"embedded {count} instances -> {config.output_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
