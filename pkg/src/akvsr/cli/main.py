"""``akvsr`` command line: corpus generation, both training stages, evaluation,
ablation sweeps, the gradient suite and the end-to-end pipeline.

Exit codes: 0 ok, 1 stage failure, 2 configuration error, 3 checkpoint
integrity error. ``AKVSR_SEED`` overrides the configured seed.
"""

import argparse
import json
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any, Optional

from pydantic import ValidationError

from akvsr.config import AkvsrSettings, RunConfig
from akvsr.corpus import generate_corpus, load_corpus
from akvsr.errors import AkvsrError, ConfigError
from akvsr.evaluation.ablation import assess_abm_benefit, run_ablation
from akvsr.models.base.types import AblationAxis
from akvsr.services import Pipeline, run_gradcheck
from akvsr.tensor.ops import DIFFERENTIABLE_OPS
from akvsr.utils import get_logger, setup_logging

logger = get_logger(__name__)


def _print_json(data: Any) -> None:
    print(json.dumps(data, indent=2, sort_keys=True))


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config", type=Path, help="YAML or JSON run configuration (default: built-in)"
    )
    parser.add_argument("--run-dir", type=Path, help="Override paths.run_dir")
    parser.add_argument("--corpus-dir", type=Path, help="Override paths.corpus_dir")
    parser.add_argument("--log-level", help="Logging level (default: AKVSR_LOG_LEVEL or INFO)")


def _add_stage_two(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--abm-depth", type=int, help="Override model.abm_depth")
    parser.add_argument(
        "--unfreeze-memory",
        action="store_true",
        help="Control run: train the memory slots in stage 2",
    )
    parser.add_argument(
        "--zero-memory",
        action="store_true",
        help="Control run: replace the memory with all-zero slots",
    )


def build_parser() -> argparse.ArgumentParser:
    """Parser with one subcommand per stage."""
    parser = argparse.ArgumentParser(
        prog="akvsr",
        description="Compact audio memory and audio bridging for visual speech recognition.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen-corpus", help="Write the synthetic train/test/quantfit splits")
    _add_common(gen)
    gen.add_argument("--out", type=Path, help="Output directory (default: paths.corpus_dir)")

    fit = commands.add_parser("fit-quantizer", help="Fit k-means on the single-speaker split")
    _add_common(fit)

    memory = commands.add_parser("train-memory", help="Stage 1: train the memory by ASR")
    _add_common(memory)

    vsr = commands.add_parser("train-vsr", help="Stage 2: train the VSR model with a frozen memory")
    _add_common(vsr)
    _add_stage_two(vsr)

    ev = commands.add_parser("eval", help="Test-split WER and retrieval statistics")
    _add_common(ev)
    ev.add_argument("--checkpoint", type=Path, help="VSR checkpoint (default: paths.vsr_checkpoint)")

    ablate = commands.add_parser("ablate", help="Sweep one axis over values and seeds")
    _add_common(ablate)
    ablate.add_argument(
        "--axis", required=True, choices=[a.value for a in AblationAxis], help="Swept axis"
    )
    ablate.add_argument("--values", type=int, nargs="+", required=True, help="At least two values")
    ablate.add_argument("--seeds", type=int, nargs="+", help="At least three (default: training.seeds)")
    ablate.add_argument("--workers", type=int, help="Worker processes (default: AKVSR_WORKERS)")
    ablate.add_argument("--out", type=Path, help="CSV directory (default: paths.run_dir)")

    benefit = commands.add_parser(
        "benefit", help="ABM vs no-ABM baseline vs zero-memory control over seeds"
    )
    _add_common(benefit)
    benefit.add_argument("--depth", type=int, default=2, help="ABM depth to assess")
    benefit.add_argument("--seeds", type=int, nargs="+", help="Default: training.seeds")
    benefit.add_argument("--workers", type=int, help="Worker processes (default: AKVSR_WORKERS)")
    benefit.add_argument(
        "--with-kd",
        action="store_true",
        help="Also train the logit and feature distillation baselines",
    )

    grad = commands.add_parser("gradcheck", help="Finite-difference check of every gradient rule")
    grad.add_argument("--log-level", help="Logging level")
    grad.add_argument("--seed", type=int, default=0, help="Seed of the random inputs")
    grad.add_argument("--trials", type=int, default=3, help="Random trials per primitive")
    grad.add_argument(
        "--inject-sign-flip",
        metavar="OP",
        choices=sorted(op.name for op in DIFFERENTIABLE_OPS),
        help="Mutation test: negate OP's backward rule; the suite must then fail",
    )

    pipe = commands.add_parser("pipeline", help="fit-quantizer, train-memory, train-vsr, eval")
    _add_common(pipe)
    _add_stage_two(pipe)
    pipe.add_argument(
        "--baseline", action="store_true", help="Also train and report the depth-0 baseline"
    )
    return parser


def load_run_config(args: argparse.Namespace, settings: AkvsrSettings) -> RunConfig:
    """Config file, then ``AKVSR_*`` settings, then command-line overrides.

    Raises:
        ConfigError: if the result violates any invariant.
    """
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    config = config.with_env_overrides(settings)

    paths: dict[str, Any] = {}
    if args.run_dir:
        paths["run_dir"] = str(args.run_dir)
    if args.corpus_dir:
        paths["corpus_dir"] = str(args.corpus_dir)
    model: dict[str, Any] = {}
    training: dict[str, Any] = {}
    if getattr(args, "abm_depth", None) is not None:
        model["abm_depth"] = args.abm_depth
    if getattr(args, "unfreeze_memory", False):
        training["unfreeze_memory"] = True
    if getattr(args, "zero_memory", False):
        training["zero_memory"] = True
    updates = {k: v for k, v in (("paths", paths), ("model", model), ("training", training)) if v}
    return config.with_updates(**updates) if updates else config


def _gen_corpus(config: RunConfig, args: argparse.Namespace) -> int:
    paths = generate_corpus(config.corpus, args.out or config.paths.corpus_dir)
    for split, path in paths.items():
        with path.open() as handle:
            print(f"{split.value}: {sum(1 for _ in handle)} samples -> {path}")
    return 0


def _fit_quantizer(config: RunConfig, args: argparse.Namespace) -> int:
    model, report = Pipeline(config).fit_quantizer()
    _print_json({"iterations": model.iterations, **report.model_dump()})
    return 0


def _train_memory(config: RunConfig, args: argparse.Namespace) -> int:
    _, report = Pipeline(config).train_memory()
    _print_json({"asr_wer": report.eval_wer, "final_loss": report.final_loss})
    return 0


def _train_vsr(config: RunConfig, args: argparse.Namespace) -> int:
    _, report = Pipeline(config).train_vsr()
    _print_json(
        {
            "abm_depth": config.model.abm_depth,
            "vsr_wer": report.eval_wer,
            "final_loss": report.final_loss,
            "dropped_elements": report.dropped_elements,
        }
    )
    return 0


def _eval(config: RunConfig, args: argparse.Namespace) -> int:
    _print_json(Pipeline(config).evaluate(args.checkpoint))
    return 0


def _ablate(config: RunConfig, args: argparse.Namespace, settings: AkvsrSettings) -> int:
    result = run_ablation(
        args.axis,
        args.values,
        args.seeds or config.training.seeds,
        config,
        load_corpus(config.paths.corpus_dir),
        out_dir=args.out or config.paths.run_dir,
        workers=args.workers or settings.workers,
    )
    for summary in result.summary():
        print(
            f"{result.axis.value}={summary.axis_value}: "
            f"WER {summary.mean_wer:.4f} +/- {summary.std_wer:.4f} ({summary.seeds} seeds)"
        )
    return 0


def _benefit(config: RunConfig, args: argparse.Namespace, settings: AkvsrSettings) -> int:
    report = assess_abm_benefit(
        load_corpus(config.paths.corpus_dir),
        config,
        depth=args.depth,
        seeds=args.seeds,
        workers=args.workers or settings.workers,
        with_kd=args.with_kd,
    )
    _print_json({"finding": report.finding, **report.model_dump()})
    return 0


def _gradcheck(args: argparse.Namespace) -> int:
    summary = run_gradcheck(args.seed, args.trials, args.inject_sign_flip)
    if summary.injected_sign_flip:
        print(f"sign flip injected into '{summary.injected_sign_flip}'")
    for report in summary.reports:
        status = "ok" if report.passed else "FAIL"
        print(f"{report.label:<28} max rel err {report.max_rel_error:.3e}  tol {report.tol:.0e}  {status}")
    print("PASS" if summary.passed else f"FAIL ({len(summary.failures)} checks)")
    return 0 if summary.passed else 1


def _pipeline(config: RunConfig, args: argparse.Namespace) -> int:
    report = Pipeline(config).run(include_baseline=args.baseline)
    _print_json(report.model_dump())
    print(f"report written to {config.paths.report}")
    return 0


def _settings() -> AkvsrSettings:
    try:
        return AkvsrSettings()
    except ValidationError as e:
        raise ConfigError.from_validation_errors(e.errors()) from e


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv``, run the command and return its exit code."""
    args = build_parser().parse_args(argv)
    try:
        settings = _settings()
        setup_logging(args.log_level or settings.log_level)
        if args.command == "gradcheck":
            return _gradcheck(args)

        config = load_run_config(args, settings)
        if args.command == "gen-corpus":
            return _gen_corpus(config, args)
        if args.command == "fit-quantizer":
            return _fit_quantizer(config, args)
        if args.command == "train-memory":
            return _train_memory(config, args)
        if args.command == "train-vsr":
            return _train_vsr(config, args)
        if args.command == "eval":
            return _eval(config, args)
        if args.command == "ablate":
            return _ablate(config, args, settings)
        if args.command == "benefit":
            return _benefit(config, args, settings)
        return _pipeline(config, args)
    except AkvsrError as e:
        logger.debug("Command failed", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
