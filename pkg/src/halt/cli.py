"""Pipeline driver: extract features, evaluate with the out-of-fold
protocol, run ablations, and generate synthetic datasets.

All artifacts are deterministic given the config: every random choice
flows from the single --seed through named substreams, files are written
UTF-8 with LF endings, and re-running a command with unchanged inputs
reproduces byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from . import corpus, features, models, nli, oof, policy
from .errors import ConfigError, HaltError
from .seeds import derive_seed

TASK_DEFAULTS = {
    # task -> (classifier, calibration)
    "summarization": ("logreg", "isotonic"),
    "qa": ("linear_svc", "platt"),
    "dialogue": ("logreg", "isotonic"),
    "synthetic": ("logreg", "isotonic"),
}

DEFAULT_ABLATION_VARIANTS = ("full", "no_contradiction", "no_entailment",
                             "no_lexical", "single_backend")


@dataclass
class RunConfig:
    task: str
    classifier: str
    calibration: str
    k: int = 5
    seed: int = 0
    precision_floor: float = 0.70
    coverage_target: float = 0.90
    mask: str = "none"
    scores_a: str = "synthetic"
    scores_b: str = "synthetic"
    input_path: str = ""
    output_path: str = ""


_CONFIG_KEY_ALIASES = {"in": "in_path", "out": "out_path"}


def _read_config_file(path: str) -> dict[str, str]:
    """Parse key=value lines; keys use the flag names (--in -> in=...)."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        values[_CONFIG_KEY_ALIASES.get(key, key)] = value.strip()
    return values


def _merged(args: argparse.Namespace, key: str, cast, default):
    """Flag > config file > default."""
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    file_values = getattr(args, "_config_values", {})
    if key in file_values:
        return cast(file_values[key])
    return default


def _build_run_config(args: argparse.Namespace) -> RunConfig:
    task = _merged(args, "task", str, None)
    if task is None:
        raise ConfigError("a task is required (--task or task= in the config file)")
    if task not in TASK_DEFAULTS:
        raise ConfigError(f"unknown task {task!r}; expected one of {sorted(TASK_DEFAULTS)}")
    default_classifier, default_calibration = TASK_DEFAULTS[task]
    classifier = _merged(args, "classifier", str, default_classifier)
    calibration_method = _merged(args, "calibration", str, default_calibration)
    if classifier not in models.MODEL_KINDS:
        raise ConfigError(f"unknown classifier {classifier!r}; expected one of {models.MODEL_KINDS}")
    if calibration_method not in ("platt", "isotonic"):
        raise ConfigError(f"unknown calibration {calibration_method!r}; expected platt or isotonic")
    return RunConfig(
        task=task,
        classifier=classifier,
        calibration=calibration_method,
        k=_merged(args, "k", int, 5),
        seed=_merged(args, "seed", int, 0),
        precision_floor=_merged(args, "precision_floor", float, 0.70),
        coverage_target=_merged(args, "coverage", float, 0.90),
        mask=_merged(args, "mask", str, "none"),
        scores_a=_merged(args, "scores_a", str, "synthetic"),
        scores_b=_merged(args, "scores_b", str, "synthetic"),
        input_path=_merged(args, "in_path", str, ""),
        output_path=_merged(args, "out_path", str, ""),
    )


def _make_backend(locator: str, which: str, seed: int) -> nli.NliBackend:
    if locator == "synthetic":
        return nli.SyntheticBackend(seed=derive_seed(seed, f"backend-{which}"),
                                    name=f"synthetic-{which}")
    return nli.LookupBackend(nli.load_score_table(locator))


def _load_examples_for(config: RunConfig) -> list[corpus.LabeledExample]:
    if not config.input_path:
        raise ConfigError("an input dataset is required (--in)")
    if config.task == "synthetic":
        return corpus.load_examples(config.input_path)
    return corpus.load_halueval(config.input_path, config.task)


def cmd_extract(config: RunConfig) -> corpus.FeatureMatrix:
    """Build the feature matrix for a dataset and persist it."""
    examples = _load_examples_for(config)
    mask = features.mask_from_name(config.mask)
    backend_a = _make_backend(config.scores_a, "a", config.seed)
    backend_b = _make_backend(config.scores_b, "b", config.seed)
    rows = np.array([
        features.build_feature_vector(ex, backend_a, backend_b, mask) for ex in examples
    ], dtype=float).reshape(len(examples), mask.dim)
    matrix = corpus.FeatureMatrix(
        ids=[ex.id for ex in examples],
        rows=rows,
        labels=np.array([ex.label for ex in examples], dtype=int),
    )
    if not config.output_path:
        raise ConfigError("an output path is required (--out)")
    corpus.save_features(matrix, config.output_path)
    return matrix


def _write_tsv(path: Path, header: list[str], rows: list[tuple]) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")


def _meta_payload(config: RunConfig, report: policy.EvalReport) -> dict:
    floor = f"{config.precision_floor:.2f}"
    meta = {
        "task": config.task,
        "seed": config.seed,
        "threshold": report.policy.threshold,
        f"precision_at_prec_ge_{floor}": report.metrics.precision,
        f"recall_at_prec_ge_{floor}": report.metrics.recall,
        f"f1_at_prec_ge_{floor}": report.metrics.f1,
        f"accuracy_at_prec_ge_{floor}": report.metrics.accuracy,
        "roc_auc": report.roc_auc,
        "ece": report.ece,
        "confusion": {"tp": report.metrics.tp, "fp": report.metrics.fp,
                      "tn": report.metrics.tn, "fn": report.metrics.fn},
        "config": asdict(config),
    }
    if report.selective is not None:
        sel = report.selective
        assert sel.metrics is not None
        meta["selective"] = {
            "coverage_target": sel.coverage_target,
            "realized_coverage": sel.realized_coverage,
            "n_retained": sel.n_retained,
            "n_abstained": sel.n_abstained,
            "precision": sel.metrics.precision,
            "recall": sel.metrics.recall,
            "f1": sel.metrics.f1,
            "accuracy": sel.metrics.accuracy,
            "single_class_retained": sel.single_class_retained,
        }
    return meta


def cmd_evaluate(config: RunConfig) -> policy.EvalReport:
    """Run OOF training + calibration + thresholding; emit the artifact set."""
    if not config.input_path:
        raise ConfigError("a feature file is required (--in)")
    if not config.output_path:
        raise ConfigError("an output directory is required (--out)")
    matrix = corpus.load_features(config.input_path)
    result = oof.run_oof(matrix, oof.OofConfig(
        kind=config.classifier, calibration=config.calibration,
        k=config.k, seed=config.seed,
    ))
    decision = policy.optimize_threshold(result.calibrated, matrix.labels,
                                         pi0=config.precision_floor)
    report = policy.build_report(result.calibrated, matrix.labels, decision,
                                 coverage_target=config.coverage_target)

    out_dir = Path(config.output_path)
    out_dir.mkdir(parents=True, exist_ok=True)

    pred_path = out_dir / f"{config.task}_oof_calibrated_pred.jsonl"
    with pred_path.open("w", encoding="utf-8", newline="\n") as fh:
        for example_id, raw, prob, label in zip(
                matrix.ids, result.raw_scores, result.calibrated, matrix.labels):
            fh.write(json.dumps({
                "id": example_id,
                "raw_score": float(raw),
                "calibrated_prob": float(prob),
                "label": int(label),
            }) + "\n")

    meta_path = out_dir / f"{config.task}_oof_meta.json"
    with meta_path.open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(_meta_payload(config, report), fh, indent=2)
        fh.write("\n")

    models.save_model(result.final_model, out_dir / f"{config.task}_model.txt",
                      calibrator=result.calibrator)

    plots = out_dir / "plots"
    plots.mkdir(exist_ok=True)
    _write_tsv(plots / "pr_curve.tsv", ["threshold", "precision", "recall"], report.pr_points)
    _write_tsv(plots / "roc_curve.tsv", ["threshold", "fpr", "tpr"], report.roc_points)
    _write_tsv(plots / "calibration_curve.tsv",
               ["bin_low", "bin_high", "mean_confidence", "empirical_frequency", "count"],
               report.reliability)
    _write_tsv(plots / "risk_coverage.tsv",
               ["coverage", "realized_coverage", "precision", "f1"],
               [(p.coverage, p.realized_coverage, p.precision, p.f1)
                for p in report.risk_coverage])
    return report


def cmd_ablate(config: RunConfig, variants: list[str]) -> list[tuple]:
    """Evaluate feature-mask variants of a full matrix; emit one summary row each."""
    if not config.input_path:
        raise ConfigError("a feature file is required (--in)")
    matrix = corpus.load_features(config.input_path)
    if matrix.rows.shape[1] != len(features.FEATURE_NAMES):
        raise ConfigError(
            f"ablation needs the full {len(features.FEATURE_NAMES)}-column matrix, "
            f"got {matrix.rows.shape[1]} columns"
        )
    rows = []
    for variant in variants:
        if variant not in features.ABLATION_VARIANTS:
            raise ConfigError(
                f"unknown ablation variant {variant!r}; "
                f"expected one of {sorted(features.ABLATION_VARIANTS)}"
            )
        mask = features.ABLATION_VARIANTS[variant]
        masked = corpus.FeatureMatrix(
            ids=matrix.ids,
            rows=features.apply_mask_to_rows(matrix.rows, mask),
            labels=matrix.labels,
        )
        result = oof.run_oof(masked, oof.OofConfig(
            kind=config.classifier, calibration=config.calibration,
            k=config.k, seed=config.seed,
        ))
        decision = policy.optimize_threshold(result.calibrated, masked.labels,
                                             pi0=config.precision_floor)
        stats = policy.confusion(result.calibrated, masked.labels, decision.threshold)
        rows.append((variant, mask.dim, decision.threshold,
                     stats.precision, stats.recall, stats.f1))
    if config.output_path:
        _write_tsv(Path(config.output_path),
                   ["variant", "dim", "threshold", "precision", "recall", "f1"], rows)
    return rows


def cmd_synth(n: int, seed: int, out_dir: str) -> None:
    """Generate a planted synthetic dataset plus its two score tables."""
    dataset = corpus.generate_synthetic(n, seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus.save_examples(dataset.examples, out / "synthetic_examples.jsonl")
    nli.save_score_table(dataset.scores_a, out / "synthetic_scores_a.tsv")
    nli.save_score_table(dataset.scores_b, out / "synthetic_scores_b.tsv")


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value config file; flags override it")
    parser.add_argument("--task", choices=sorted(TASK_DEFAULTS))
    parser.add_argument("--classifier", choices=models.MODEL_KINDS)
    parser.add_argument("--calibration", choices=("platt", "isotonic"))
    parser.add_argument("--k", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--precision-floor", dest="precision_floor", type=float)
    parser.add_argument("--coverage", type=float)
    parser.add_argument("--mask")
    parser.add_argument("--scores-a", dest="scores_a")
    parser.add_argument("--scores-b", dest="scores_b")
    parser.add_argument("--in", dest="in_path")
    parser.add_argument("--out", dest="out_path")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="halt",
                                     description="Post-hoc hallucination verification pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p_extract = sub.add_parser("extract", help="build and persist a feature matrix")
    _add_common_flags(p_extract)

    p_eval = sub.add_parser("evaluate", help="run OOF training, calibration, and thresholding")
    _add_common_flags(p_eval)

    p_ablate = sub.add_parser("ablate", help="compare feature-mask variants")
    _add_common_flags(p_ablate)
    p_ablate.add_argument("--variants", help="comma-separated variant names")

    p_synth = sub.add_parser("synth", help="generate a synthetic dataset and score tables")
    p_synth.add_argument("--n", type=int, default=2000)
    p_synth.add_argument("--seed", type=int, default=7)
    p_synth.add_argument("--out", dest="out_path", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "synth":
            cmd_synth(args.n, args.seed, args.out_path)
            return 0
        args._config_values = _read_config_file(args.config) if args.config else {}
        config = _build_run_config(args)
        if args.command == "extract":
            matrix = cmd_extract(config)
            print(f"wrote {len(matrix.ids)}x{matrix.rows.shape[1]} feature matrix "
                  f"to {config.output_path}")
        elif args.command == "evaluate":
            report = cmd_evaluate(config)
            print(f"threshold={report.policy.threshold:.4f} "
                  f"precision={report.metrics.precision:.4f} "
                  f"recall={report.metrics.recall:.4f} "
                  f"f1={report.metrics.f1:.4f} "
                  f"roc_auc={report.roc_auc:.4f} ece={report.ece:.4f}")
        elif args.command == "ablate":
            raw = _merged(args, "variants", str, ",".join(DEFAULT_ABLATION_VARIANTS))
            rows = cmd_ablate(config, [v.strip() for v in raw.split(",") if v.strip()])
            for variant, dim, threshold, precision, recall, f1 in rows:
                print(f"{variant}\tdim={dim}\tt={threshold:.4f}\t"
                      f"p={precision:.4f}\tr={recall:.4f}\tf1={f1:.4f}")
    except (HaltError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
