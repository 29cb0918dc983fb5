"""Command-line entry point: validate, synth, score, evaluate, report.

Exit codes: 0 success, 2 input/validation error, 3 runtime computation
error. Error detail goes to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import reports, synth
from .errors import ComputeError, InputError
from .harness import ExperimentSpec, aggregate, compute_score, run_experiment
from .metrics import MetricId
from .tensor_io import STRATEGIES, load_ground_truth, load_hub

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_COMPUTE = 3


def _parse_metric(name: str) -> MetricId:
    try:
        return MetricId(name)
    except ValueError:
        valid = ", ".join(m.value for m in MetricId)
        raise InputError(f"unknown metric {name!r}; valid metrics: {valid}") from None


def cmd_score(args) -> int:
    hub = load_hub(args.manifest)
    metric = _parse_metric(args.metric)
    if args.strategy not in STRATEGIES:
        raise InputError(f"unknown strategy {args.strategy!r}")
    params = json.loads(args.params) if args.params else {}
    rows = []
    for rec in hub.manifest.models:
        if rec.source_dataset == args.target:
            continue
        if (rec.model_id, args.target) not in hub.feature_sets:
            continue
        sv = compute_score(
            hub, rec.model_id, args.target, metric, args.strategy, args.seed, params
        )
        rows.append(sv)
    rows.sort(key=lambda s: (-s.value, s.model_id))
    reports.write_scores_csv(rows, args.out)
    print(f"wrote {len(rows)} scores to {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    try:
        spec_doc = json.loads(Path(args.spec).read_text("utf-8"))
    except FileNotFoundError:
        raise InputError(f"spec file not found: {args.spec}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.spec}: {exc}") from None
    spec = ExperimentSpec.from_dict(spec_doc)
    if args.seed is not None:
        spec.seed = args.seed
    hub = load_hub(args.manifest)
    gt = load_ground_truth(args.ground_truth)
    jobs = args.jobs or int(os.environ.get("XFERBENCH_JOBS", "1"))
    rt = aggregate(run_experiment(spec, hub, gt, jobs=jobs))
    reports.write_outputs(rt, args.out)
    print(
        f"wrote {len(rt.cells)} cells, {len(rt.warnings)} warnings to {args.out}"
    )
    return EXIT_OK


def cmd_synth(args) -> int:
    manifest_path, _ = synth.gen_hub(
        args.out,
        seed=args.seed if args.seed is not None else 42,
        n_models=args.models,
        s_range=(args.s_low, args.s_high),
        n_classes=args.classes,
        dim=args.dim,
        n_samples=args.n_samples,
        head_noise_scale=args.head_noise,
    )
    print(f"wrote synthetic hub manifest to {manifest_path}")
    return EXIT_OK


def cmd_validate(args) -> int:
    hub = load_hub(args.manifest)
    lines = []
    for rec in hub.manifest.models:
        datasets = sorted(rec.feature_paths)
        lines.append(
            f"{rec.model_id}: source={rec.source_dataset} "
            f"params={rec.param_count} datasets={','.join(datasets)}"
        )
    summary = "\n".join(lines)
    print(summary)
    if args.out:
        Path(args.out).write_text(summary + "\n", "utf-8")
    return EXIT_OK


def cmd_report(args) -> int:
    rt = aggregate(reports.read_cells_csv(args.cells))
    Path(args.out).write_text(reports.render_report_md(rt), "utf-8")
    print(f"wrote report to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xferbench",
        description="Transferability estimation engine and benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score all eligible models with one metric")
    p.add_argument("--manifest", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--metric", required=True)
    p.add_argument("--strategy", default="head", choices=list(STRATEGIES))
    p.add_argument("--params", default=None, help="metric params as JSON")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("evaluate", help="run an experiment spec over a hub")
    p.add_argument("--spec", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--ground-truth", required=True)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="override the spec seed")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="generate a synthetic hub")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--models", type=int, default=10)
    p.add_argument("--s-low", type=float, default=0.5)
    p.add_argument("--s-high", type=float, default=5.0)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--n-samples", type=int, default=1000)
    p.add_argument("--head-noise", type=float, default=0.5)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("validate", help="validate a hub manifest and its tensors")
    p.add_argument("--manifest", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default=None, help="optional summary file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("report", help="re-render report.md from cells.csv")
    p.add_argument("--cells", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ComputeError as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
