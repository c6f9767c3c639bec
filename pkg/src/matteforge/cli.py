"""Command-line front end: generate, analyze, evaluate, inspect.

Exit codes: 0 success, 2 configuration problem, 3 file/pipeline I/O
problem, 4 dataset integrity problem. The environment variable
``MATTEFORGE_SEED`` overrides ``--seed`` when set.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass
from io import StringIO
from pathlib import Path

from . import __version__
from .analysis import report_from_manifest, report_from_plan
from .core import EpsilonConfig, TrimapParams
from .errors import ConfigError, MatteforgeError, PipelineIOError
from .io import (
    SUPPORTED_SUFFIXES,
    PoolLayout,
    load_alpha,
    load_pools,
    load_unknown_mask,
    read_manifest,
    write_outputs,
)
from .metrics import evaluate
from .schedulers import (
    Combiner,
    CompositionPlan,
    GcaParams,
    ItemKind,
    Ordering,
    Style,
    execute_plan,
    plan_dim,
    plan_gca,
    plan_quadruplet,
    plan_to_dict,
    plan_triplet,
)

logger = logging.getLogger("matteforge")

SEED_ENV_VAR = "MATTEFORGE_SEED"


def _resolve_seed(flag_value: int) -> int:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return flag_value
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from None


def _resolve_p(style: Style, p: float | None) -> float | None:
    if style is Style.GCA:
        return 0.5 if p is None else p
    if p is not None:
        raise ConfigError(f"--p only applies to the gca style, not {style.value}")
    return None


@dataclass(frozen=True)
class RunConfig:
    """Validated knobs for one generation run."""

    style: Style
    count: int
    seed: int
    combine_probability: float | None
    epsilon: EpsilonConfig
    combiner: Combiner
    ordering: Ordering
    layout: PoolLayout
    out_dir: Path
    workers: int
    allow_remainder: bool
    png16: bool
    write_trimaps: bool
    trimap: TrimapParams

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        style = Style(args.style)
        if args.count < 1:
            raise ConfigError(f"--count must be >= 1, got {args.count}")
        if args.workers < 1:
            raise ConfigError(f"--workers must be >= 1, got {args.workers}")
        if args.allow_remainder and style not in (Style.TRIPLET, Style.QUADRUPLET):
            raise ConfigError(f"--allow-remainder only applies to triplet/quadruplet styles, not {style.value}")
        return cls(
            style=style,
            count=args.count,
            seed=_resolve_seed(args.seed),
            combine_probability=_resolve_p(style, args.p),
            epsilon=EpsilonConfig(args.epsilon),
            combiner=Combiner(args.combiner),
            ordering=Ordering(args.ordering),
            layout=PoolLayout(Path(args.fg_dir), Path(args.alpha_dir), Path(args.bg_dir)),
            out_dir=Path(args.out_dir),
            workers=args.workers,
            allow_remainder=args.allow_remainder,
            png16=args.png16,
            write_trimaps=args.write_trimaps,
            trimap=TrimapParams(args.trimap_fg_threshold, args.trimap_bg_threshold, args.trimap_radius),
        )


def _build_plan(
    style: Style,
    fg_count: int,
    bg_count: int,
    count: int,
    seed: int,
    ordering: Ordering,
    p: float | None,
    allow_remainder: bool,
) -> CompositionPlan:
    if style is Style.DIM:
        return plan_dim(fg_count, bg_count, count, seed, ordering)
    if style is Style.GCA:
        return plan_gca(fg_count, bg_count, count, seed, GcaParams(p if p is not None else 0.5), ordering)
    if style is Style.TRIPLET:
        return plan_triplet(fg_count, bg_count, count, seed, ordering, allow_remainder)
    return plan_quadruplet(fg_count, bg_count, count, seed, ordering, allow_remainder)


def _manifest_header(config: RunConfig, fg_count: int, bg_count: int) -> dict:
    # workers and out_dir are deliberately absent: they never affect the
    # generated bytes, and keeping them out lets identical runs produce
    # byte-identical manifests.
    return {
        "tool": "matteforge",
        "version": __version__,
        "style": config.style.value,
        "count": config.count,
        "seed": config.seed,
        "p": config.combine_probability,
        "epsilon": config.epsilon.epsilon,
        "combiner": config.combiner.value,
        "ordering": config.ordering.value,
        "allow_remainder": config.allow_remainder,
        "png16": config.png16,
        "trimap": (
            {
                "fg_threshold": config.trimap.fg_threshold,
                "bg_threshold": config.trimap.bg_threshold,
                "dilation_radius": config.trimap.dilation_radius,
            }
            if config.write_trimaps
            else None
        ),
        "fg_count": fg_count,
        "bg_count": bg_count,
        "fg_dir": str(config.layout.fg_dir),
        "alpha_dir": str(config.layout.alpha_dir),
        "bg_dir": str(config.layout.bg_dir),
    }


def cmd_generate(args: argparse.Namespace) -> int:
    config = RunConfig.from_args(args)
    fg_pool, bg_pool, report = load_pools(config.layout)
    plan = _build_plan(
        config.style,
        len(fg_pool),
        len(bg_pool),
        config.count,
        config.seed,
        config.ordering,
        config.combine_probability,
        config.allow_remainder,
    )
    records = execute_plan(plan, fg_pool, bg_pool, config.epsilon, config.combiner, config.workers)
    header = _manifest_header(config, len(fg_pool), len(bg_pool))
    manifest = write_outputs(
        records,
        config.out_dir,
        header,
        png16=config.png16,
        trimap=config.trimap if config.write_trimaps else None,
    )
    singles = sum(1 for item in plan.items if item.kind is ItemKind.SINGLE)
    combined = len(plan.items) - singles
    groups = len({item.group_id for item in plan.items if item.group_id is not None})
    print(
        f"wrote {len(plan.items)} samples ({singles} single, {combined} combined, "
        f"{groups} groups) with style={config.style.value} seed={config.seed}"
    )
    if report.skipped:
        print(f"skipped {len(report.skipped)} input files (see warnings)")
    print(f"manifest: {manifest}")
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    if args.manifest is not None:
        header, rows = read_manifest(Path(args.manifest))
        report = report_from_manifest(header, rows)
    else:
        missing = [
            flag
            for flag, value in (
                ("--style", args.style),
                ("--count", args.count),
                ("--fg-count", args.fg_count),
                ("--bg-count", args.bg_count),
            )
            if value is None
        ]
        if missing:
            raise ConfigError(
                "analyze needs either --manifest or a full plan config; missing: " + ", ".join(missing)
            )
        style = Style(args.style)
        plan = _build_plan(
            style,
            args.fg_count,
            args.bg_count,
            args.count,
            _resolve_seed(args.seed),
            Ordering(args.ordering),
            _resolve_p(style, args.p),
            args.allow_remainder,
        )
        report = report_from_plan(plan)
    payload = json.dumps(report.to_dict(), indent=2)
    if args.output is not None:
        Path(args.output).write_text(payload + "\n", encoding="utf-8")
        print(report.summary())
    else:
        print(payload)
        print(report.summary(), file=sys.stderr)
    return 0


def _stem_map(directory: Path) -> dict[str, Path]:
    if not directory.is_dir():
        raise PipelineIOError(f"directory does not exist: {directory}")
    return {
        path.stem: path
        for path in sorted(directory.iterdir())
        if path.is_file() and path.suffix.lower() in SUPPORTED_SUFFIXES
    }


def cmd_evaluate(args: argparse.Namespace) -> int:
    pred_files = _stem_map(Path(args.pred_dir))
    gt_files = _stem_map(Path(args.gt_dir))
    trimap_files = _stem_map(Path(args.trimap_dir)) if args.trimap_dir else None

    stems = sorted(set(pred_files) & set(gt_files))
    for stem in sorted(set(pred_files) ^ set(gt_files)):
        side = "ground truth" if stem in pred_files else "prediction"
        print(f"skipping {stem}: missing {side} file", file=sys.stderr)
    if not stems:
        raise PipelineIOError("no filename stems are shared between the prediction and ground-truth directories")

    rows: list[tuple[str, float, float, int]] = []
    for stem in stems:
        if trimap_files is not None and stem not in trimap_files:
            print(f"skipping {stem}: missing trimap file", file=sys.stderr)
            continue
        pred = load_alpha(pred_files[stem])
        gt = load_alpha(gt_files[stem])
        mask = load_unknown_mask(trimap_files[stem]) if trimap_files is not None else None
        try:
            result = evaluate(pred, gt, mask)
        except ConfigError as exc:
            print(f"skipping {stem}: {exc}", file=sys.stderr)
            continue
        rows.append((stem, result.sad, result.mse, result.pixel_count))
    if not rows:
        raise PipelineIOError("no image pairs could be evaluated")

    buffer = StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["sample_id", "sad", "mse", "pixels"])
    for stem, sad, mse, pixels in rows:
        writer.writerow([stem, f"{sad:.6f}", f"{mse:.8f}", pixels])
    writer.writerow(
        [
            "mean",
            f"{sum(r[1] for r in rows) / len(rows):.6f}",
            f"{sum(r[2] for r in rows) / len(rows):.8f}",
            f"{sum(r[3] for r in rows) / len(rows):.1f}",
        ]
    )
    if args.output is not None:
        Path(args.output).write_text(buffer.getvalue(), encoding="utf-8")
        print(f"wrote {len(rows)} rows to {args.output}")
    else:
        sys.stdout.write(buffer.getvalue())
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    style = Style(args.style)
    plan = _build_plan(
        style,
        args.fg_count,
        args.bg_count,
        args.count,
        _resolve_seed(args.seed),
        Ordering(args.ordering),
        _resolve_p(style, args.p),
        args.allow_remainder,
    )
    if args.json:
        print(json.dumps(plan_to_dict(plan), indent=2))
        return 0
    singles = sum(1 for item in plan.items if item.kind is ItemKind.SINGLE)
    groups = len({item.group_id for item in plan.items if item.group_id is not None})
    print(
        f"plan: style={plan.style.value} count={len(plan.items)} seed={plan.seed} "
        f"ordering={plan.ordering.value} ({singles} single, {len(plan.items) - singles} combined, "
        f"{groups} groups)"
    )
    for position, item in enumerate(plan.items):
        group = "-" if item.group_id is None else str(item.group_id)
        fgs = ",".join(str(fg) for fg in item.fg_ids)
        print(f"{position:6d} item={item.sample_index:<6d} {item.kind.value:<8s} fg=[{fgs}] bg={item.bg_id} group={group}")
    return 0


def _add_plan_config_args(parser: argparse.ArgumentParser, required: bool) -> None:
    parser.add_argument("--style", choices=[s.value for s in Style], required=required, help="composition style")
    parser.add_argument("--count", type=int, required=required, help="number of samples to plan")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed (default: 0; env %s overrides)" % SEED_ENV_VAR)
    parser.add_argument("--fg-count", type=int, required=required, help="foreground pool size")
    parser.add_argument("--bg-count", type=int, required=required, help="background pool size")
    parser.add_argument("--p", type=float, default=None, help="combine probability, gca style only (default: 0.5)")
    parser.add_argument(
        "--ordering",
        choices=[o.value for o in Ordering],
        default=Ordering.SHUFFLED.value,
        help="emit samples shuffled or in generation order (default: shuffled)",
    )
    parser.add_argument(
        "--ordered",
        dest="ordering",
        action="store_const",
        const=Ordering.ORDERED.value,
        help="shorthand for --ordering ordered",
    )
    parser.add_argument(
        "--allow-remainder",
        action="store_true",
        help="pad a count not divisible by the group size with dim-style singles",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matteforge",
        description="Synthesize alpha-matting training data from foreground/background pools.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="plan, composite, and write a dataset")
    gen.add_argument("--style", choices=[s.value for s in Style], required=True, help="composition style")
    gen.add_argument("--count", type=int, required=True, help="number of samples to generate")
    gen.add_argument("--seed", type=int, default=0, help="RNG seed (default: 0; env %s overrides)" % SEED_ENV_VAR)
    gen.add_argument("--p", type=float, default=None, help="combine probability, gca style only (default: 0.5)")
    gen.add_argument("--epsilon", type=float, default=1e-6, help="division guard for the layered combiner (default: 1e-6)")
    gen.add_argument(
        "--combiner",
        choices=[c.value for c in Combiner],
        default=Combiner.RCF.value,
        help="foreground combination operator (default: rcf)",
    )
    gen.add_argument(
        "--ordering",
        choices=[o.value for o in Ordering],
        default=Ordering.SHUFFLED.value,
        help="emit samples shuffled or in generation order (default: shuffled)",
    )
    gen.add_argument(
        "--ordered",
        dest="ordering",
        action="store_const",
        const=Ordering.ORDERED.value,
        help="shorthand for --ordering ordered",
    )
    gen.add_argument("--fg-dir", required=True, help="directory of foreground images")
    gen.add_argument("--alpha-dir", required=True, help="directory of alpha mattes paired by filename stem")
    gen.add_argument("--bg-dir", required=True, help="directory of background images")
    gen.add_argument("--out-dir", required=True, help="output directory")
    gen.add_argument(
        "--workers",
        type=int,
        default=os.cpu_count() or 1,
        help="parallel render workers; never changes output bytes (default: available parallelism)",
    )
    gen.add_argument(
        "--allow-remainder",
        action="store_true",
        help="pad a count not divisible by the group size with dim-style singles",
    )
    gen.add_argument("--png16", action="store_true", help="write 16-bit alpha PNGs instead of 8-bit")
    gen.add_argument("--write-trimaps", action="store_true", help="also derive and write trimaps per sample")
    gen.add_argument("--trimap-fg-threshold", type=float, default=0.95, help="alpha at or above this is foreground (default: 0.95)")
    gen.add_argument("--trimap-bg-threshold", type=float, default=0.05, help="alpha at or below this is background (default: 0.05)")
    gen.add_argument("--trimap-radius", type=int, default=10, help="square dilation radius of the unknown band (default: 10)")
    gen.set_defaults(func=cmd_generate)

    ana = sub.add_parser("analyze", help="foreground-component statistics for a manifest or plan config")
    ana.add_argument("--manifest", default=None, help="manifest.jsonl produced by generate")
    _add_plan_config_args(ana, required=False)
    ana.add_argument("--output", default=None, help="write the JSON report here instead of stdout")
    ana.set_defaults(func=cmd_analyze)

    ev = sub.add_parser("evaluate", help="SAD/MSE of predicted mattes against ground truth")
    ev.add_argument("--pred-dir", required=True, help="directory of predicted alpha mattes")
    ev.add_argument("--gt-dir", required=True, help="directory of ground-truth alpha mattes")
    ev.add_argument("--trimap-dir", default=None, help="optional trimaps; evaluation restricted to unknown regions")
    ev.add_argument("--output", default=None, help="write the CSV report here instead of stdout")
    ev.set_defaults(func=cmd_evaluate)

    ins = sub.add_parser("inspect", help="print a plan without executing it")
    _add_plan_config_args(ins, required=True)
    ins.add_argument("--json", action="store_true", help="print the plan as JSON")
    ins.set_defaults(func=cmd_inspect)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MatteforgeError as exc:
        logger.error("%s", exc)
        return exc.exit_code
    except OSError as exc:
        logger.error("%s", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
