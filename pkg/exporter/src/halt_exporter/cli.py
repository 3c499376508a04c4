"""Command line front end for batch score export."""

from __future__ import annotations

import argparse
import sys

from .datasets import DatasetError
from .export import ExportJob, export_scores
from .scoring import LabelOrderError


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="halt-export-nli",
        description="Run a frozen NLI checkpoint over a dataset and write a score file",
    )
    parser.add_argument("--in", dest="dataset", required=True, help="dataset file")
    parser.add_argument("--task", required=True,
                        choices=("summarization", "qa", "dialogue", "synthetic"))
    parser.add_argument("--model", required=True,
                        help="checkpoint id, e.g. roberta-large-mnli")
    parser.add_argument("--revision", help="checkpoint revision to pin in the header")
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--out", required=True, help="score file to write")
    args = parser.parse_args(argv)

    job = ExportJob(dataset_path=args.dataset, task=args.task, model_id=args.model,
                    output_path=args.out, batch_size=args.batch_size,
                    revision=args.revision)
    try:
        written = export_scores(job)
    except (DatasetError, LabelOrderError, ValueError, OSError, ImportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {written} records to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
