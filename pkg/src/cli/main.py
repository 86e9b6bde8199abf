"""tensor-impute command line: impute, rank, test, simulate, bench."""

import argparse
import json
import logging
import sys
import time
from collections.abc import Sequence
from pathlib import Path

from pydantic import ValidationError

from bench.runner import BenchSuite, run_suite, write_results
from cli.formats import (
    inference_report_dict,
    model_dict,
    rank_report_dict,
    read_long_csv,
    write_completed,
    write_json,
    write_long_csv,
    write_series,
)
from cli.manifest import RunManifest
from grading.bench_grader import grade_bench
from imputation.errors import InputError, TensorImputeError
from imputation.factors import ImputationResult
from imputation.inference import row_test, row_tests
from imputation.pipeline import initial_rank_reports, refine_ranks, reimpute
from imputation.tensor import TensorSeries
from simulation.config import SimConfig
from simulation.generate import gen_dataset

logger = logging.getLogger(__name__)


def _parse_ranks(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"ranks must be comma-separated integers, got {text!r}") from None


def _parse_beta(text: str) -> int | str:
    if text == "auto":
        return text
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"beta must be an integer or 'auto', got {text!r}") from None


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def _manifest(args: argparse.Namespace) -> RunManifest:
    ranks = "auto" if getattr(args, "auto_ranks", False) else getattr(args, "ranks", None)
    return RunManifest.load(
        args.manifest,
        ranks=ranks,
        c_xi=args.c_xi,
        center=args.center,
        reimpute=getattr(args, "reimpute", None),
        beta=getattr(args, "beta", None),
        rank_extra=getattr(args, "refine", None),
        varimax=getattr(args, "varimax", None) or None,
        seed=getattr(args, "seed", None),
        threads=getattr(args, "threads", None),
    )


def _load(args: argparse.Namespace, manifest: RunManifest) -> TensorSeries:
    series = read_long_csv(args.data, manifest.dims, manifest.T)
    manifest.check_series(series)
    return series


def _out(args: argparse.Namespace, name: str) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def _fit(series: TensorSeries, manifest: RunManifest) -> ImputationResult:
    return reimpute(
        series,
        manifest.ranks,
        max_passes=manifest.reimpute,
        tol=manifest.tol,
        c_xi=manifest.c_xi,
        center=manifest.center,
    )


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_impute(args: argparse.Namespace) -> int:
    manifest = _manifest(args)
    series = _load(args, manifest)
    started = time.perf_counter()
    result = _fit(series, manifest)
    seconds = time.perf_counter() - started

    paths = manifest.outputs
    write_completed(_out(args, paths.completed), result.completed, series)
    write_json(_out(args, paths.model), model_dict(result.model, rotate=manifest.varimax))
    write_json(
        _out(args, paths.report),
        {
            "T": series.T,
            "dims": list(series.dims),
            "missing_entries": int((~series.mask).sum()),
            "ranks": list(result.model.ranks),
            "seed": manifest.seed,
            "threads": manifest.threads,
            "iterations": result.iterations,
            "changes": list(result.changes),
            "seconds": seconds,
            "modes": [
                {"mode": cov.k + 1, "dropped_terms": cov.dropped_terms, "min_overlap": cov.min_overlap}
                for cov in result.covariances
            ],
            "rank_reports": [rank_report_dict(r) for r in result.rank_reports],
        },
    )
    logger.info("imputed %d entries in %.2fs", int((~series.mask).sum()), seconds)
    return 0


def cmd_rank(args: argparse.Namespace) -> int:
    manifest = _manifest(args)
    series = _load(args, manifest)
    if manifest.rank_extra is None:
        reports = initial_rank_reports(series, c_xi=manifest.c_xi, center=manifest.center)
        document = {"ranks": [r.selected for r in reports], "modes": [rank_report_dict(r) for r in reports]}
    else:
        refinement = refine_ranks(series, manifest.rank_extra, c_xi=manifest.c_xi, center=manifest.center)
        document = {
            "ranks": list(refinement.refined_ranks),
            "modes": [rank_report_dict(r) for r in refinement.initial],
            "refined": {
                "r_extra": manifest.rank_extra,
                "fit_ranks": list(refinement.result.model.ranks),
                "ranks": list(refinement.refined_ranks),
                "modes": [rank_report_dict(r) for r in refinement.refined],
            },
        }
    write_json(_out(args, manifest.outputs.ranks), {**document, "seed": manifest.seed})
    logger.info("ranks %s", document["ranks"])
    return 0


def cmd_test(args: argparse.Namespace) -> int:
    manifest = _manifest(args)
    series = _load(args, manifest)
    if not 1 <= args.mode <= series.order:
        raise InputError(f"--mode {args.mode} must lie in [1, {series.order}]")
    result = _fit(series, manifest)
    tested = series.centered()[0] if manifest.center else series
    k = args.mode - 1
    if args.row is None:
        reports = row_tests(tested, result.model, k, manifest.beta, alpha=manifest.alpha, threads=manifest.threads)
    else:
        reports = [row_test(tested, result.model, k, args.row - 1, manifest.beta, alpha=manifest.alpha)]
    write_json(
        _out(args, manifest.outputs.inference),
        {
            "mode": args.mode,
            "ranks": list(result.model.ranks),
            "beta": reports[0].beta,
            "seed": manifest.seed,
            "threads": manifest.threads,
            "tests": [inference_report_dict(r) for r in reports],
        },
    )
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    config = SimConfig.from_file(args.config)
    if args.seed is not None:
        config = SimConfig.model_validate({**config.model_dump(), "seed": args.seed})
    truth = gen_dataset(config)
    paths = RunManifest.load(args.manifest).outputs
    write_series(_out(args, paths.data), truth.data)
    write_long_csv(_out(args, paths.truth), truth.full_data)
    write_long_csv(_out(args, paths.common), truth.common)
    write_json(
        _out(args, paths.truth_model),
        {"config": config.model_dump(mode="json"), "loadings": [a.tolist() for a in truth.loadings]},
    )
    logger.info("simulated T=%d dims=%s", config.T, config.dims)
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    suite = BenchSuite.from_file(args.suite)
    if args.seed is not None:
        suite = suite.model_copy(update={"seed": args.seed})
    results = run_suite(suite, threads=args.threads)
    json_path, _ = write_results(results, args.out)
    if args.expected:
        score = grade_bench(str(json_path), args.expected)
        logger.info("bench score %.3f", score)
        print(json.dumps({"score": score}))
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_data_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("data", help="Long-format CSV with header t,i1,...,iK,value")
    parser.add_argument("manifest", nargs="?", default=None, help="Run manifest JSON")
    parser.add_argument("--c-xi", type=float, default=None, help="Rank-penalty constant")
    parser.add_argument(
        "--center",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="Subtract per-cell observed means before fitting",
    )
    parser.add_argument("--seed", type=int, default=None, help="Seed recorded in the run outputs")
    parser.add_argument("--threads", type=int, default=None, help="Worker threads")
    parser.add_argument("--out", default=".", help="Output directory")


def _add_fit_arguments(parser: argparse.ArgumentParser) -> None:
    ranks = parser.add_mutually_exclusive_group()
    ranks.add_argument("--ranks", type=_parse_ranks, default=None, help="Comma-separated ranks, e.g. 1,2")
    ranks.add_argument("--auto-ranks", action="store_true", help="Select ranks by the eigenvalue-ratio rule")
    parser.add_argument("--reimpute", type=int, default=None, metavar="N", help="Extra re-imputation passes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tensor-impute", description="Tensor time series imputation")
    parser.add_argument("--log-level", default="INFO", help="Logging level")
    commands = parser.add_subparsers(dest="command", required=True)

    impute = commands.add_parser("impute", help="Impute missing entries")
    _add_data_arguments(impute)
    _add_fit_arguments(impute)
    impute.add_argument("--varimax", action="store_true", help="Also emit varimax-rotated loadings")
    impute.set_defaults(handler=cmd_impute)

    rank = commands.add_parser("rank", help="Estimate the number of factors per mode")
    _add_data_arguments(rank)
    rank.add_argument("--refine", type=int, default=None, metavar="R", help="Re-estimate after fitting r + R factors")
    rank.set_defaults(handler=cmd_rank)

    test = commands.add_parser("test", help="Test whether loading rows are zero")
    _add_data_arguments(test)
    _add_fit_arguments(test)
    test.add_argument("--mode", type=int, default=1, help="Mode (1-based)")
    test.add_argument("--row", type=int, default=None, help="Row (1-based); all rows when omitted")
    test.add_argument(
        "--beta",
        type=_parse_beta,
        default=None,
        help="HAC lag truncation or 'auto'",
    )
    test.set_defaults(handler=cmd_test)

    simulate = commands.add_parser("simulate", help="Generate a synthetic dataset")
    simulate.add_argument("config", help="Simulation config JSON")
    simulate.add_argument("manifest", nargs="?", default=None, help="Run manifest JSON (output names)")
    simulate.add_argument("--seed", type=int, default=None)
    simulate.add_argument("--out", default=".", help="Output directory")
    simulate.set_defaults(handler=cmd_simulate)

    bench = commands.add_parser("bench", help="Run a Monte-Carlo bench suite")
    bench.add_argument("suite", help="Bench suite JSON")
    bench.add_argument("--seed", type=int, default=None)
    bench.add_argument("--threads", type=int, default=None, help="Worker processes")
    bench.add_argument("--expected", default=None, help="expected.json of metric bounds to grade against")
    bench.add_argument("--out", default=".", help="Output directory")
    bench.set_defaults(handler=cmd_bench)
    return parser


def _report_error(name: str, message: str, exit_code: int) -> int:
    print(json.dumps({"error": name, "message": message, "exit_code": exit_code}), file=sys.stderr)
    return exit_code


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args)
    except TensorImputeError as exc:
        return _report_error(type(exc).__name__, str(exc), exc.exit_code)
    except ValidationError as exc:
        return _report_error("ValidationError", str(exc), InputError.exit_code)
    except OSError as exc:
        return _report_error(type(exc).__name__, str(exc), InputError.exit_code)


if __name__ == "__main__":
    sys.exit(main())
