import argparse
import json
import logging
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv
from pydantic import ValidationError

from ..common.errors import InputError, RipalmError
from ..common.models import (
    BenchRow,
    GeneratorSpec,
    MethodName,
    ProblemKind,
    RunConfig,
    SizeSpec,
    SolveStatus,
    SweepSpec,
)
from ..common.store import instance_store
from ..common.utils import instance_id, setup_logging, time_execution
from ..problems.qrot.model import QrotInstance
from .runner import (
    SolveOutcome,
    certify,
    generate_instance,
    load_instance,
    load_solution,
    run,
    save_instance,
    write_outcome,
)
from .tables import aggregate_rows, read_csv, render_table, write_csv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NOT_CONVERGED = 1
EXIT_INPUT_ERROR = 2


def _load_json(path: Optional[str]) -> Dict[str, Any]:
    if not path:
        return {}
    try:
        with open(path) as handle:
            return json.load(handle)
    except (OSError, ValueError) as e:
        raise InputError(f"cannot read config {path}: {e}") from e


def _merge(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    merged.update({key: value for key, value in overrides.items() if value is not None})
    return merged


def generator_spec_from_args(args: argparse.Namespace) -> GeneratorSpec:
    data = _merge(
        _load_json(args.config),
        {
            "problem": args.problem,
            "generator": args.generator,
            "m": args.m,
            "n": args.n,
            "s_count": args.s,
            "delta": args.delta,
            "lam": args.lam,
            "seed": args.seed,
            "image_a": args.image_a,
            "image_b": args.image_b,
            "matrix_path": args.matrix,
            "vector_path": args.vector,
        },
    )
    return GeneratorSpec.model_validate(data)


def run_config_from_args(args: argparse.Namespace) -> RunConfig:
    data = _merge(
        _load_json(args.config),
        {
            "problem": args.problem,
            "method": args.method,
            "instance_dir": args.instance,
            "tol": args.tol,
            "rho": args.rho,
            "tau": args.tau,
            "sigma_max": args.sigma_max,
            "criterion": args.criterion,
            "max_outer": args.max_outer,
            "max_iter": args.max_iter,
            "output_dir": args.out,
        },
    )
    if args.no_warmstart:
        data["warmstart"] = False
    return RunConfig.model_validate(data)


def sweep_from_args(args: argparse.Namespace) -> SweepSpec:
    data = _merge(
        _load_json(args.config),
        {
            "problem": args.problem,
            "generator": args.generator,
            "sizes": [SizeSpec.parse(s).model_dump() for s in args.sizes] if args.sizes else None,
            "seeds": args.seeds,
            "methods": args.methods,
            "lam": args.lam,
            "delta": args.delta,
            "tol": args.tol,
            "rho": args.rho,
            "tau": args.tau,
            "sigma_max": args.sigma_max,
            "max_outer": args.max_outer,
            "max_iter": args.max_iter,
            "output_dir": args.out,
            "workers": args.workers,
        },
    )
    if args.no_warmstart:
        data["warmstart"] = False
    return SweepSpec.model_validate(data)


@time_execution
def cmd_generate(spec: GeneratorSpec, out: str) -> int:
    generated = generate_instance(spec)
    manifest = save_instance(generated, out)
    if isinstance(generated.instance, QrotInstance):
        logger.info(f"Generated qrot instance m={generated.instance.m}, n={generated.instance.n} in {out}")
    else:
        logger.info(f"Generated bpdn instance with kappa_hat={manifest.parameters['kappa_hat']:.6e} in {out}")
    return EXIT_OK


@time_execution
def cmd_solve(cfg: RunConfig) -> int:
    outcome = run(cfg)
    write_outcome(outcome, cfg.output_dir)
    outcome.vectors, outcome.matrices = load_solution(cfg.problem, cfg.output_dir)
    outcome = certify(outcome, outcome.instance, cfg.tol)
    instance_store.write_report(cfg.output_dir, outcome.report)
    report = outcome.report
    logger.info(
        f"{cfg.method.value} on {cfg.problem.value}: status={report.status.value}, "
        f"res={report.certificate.residuals.res:.3e}, outer={report.outer_iterations}, inner={report.inner_iterations}"
    )
    return EXIT_OK if report.status == SolveStatus.CONVERGED else EXIT_NOT_CONVERGED


@time_execution
def cmd_certify(problem: ProblemKind, instance_dir: str, solution_dir: str, tol: Optional[float] = None) -> int:
    """Recertify a written solution against its instance and rewrite its report."""
    inst, manifest = load_instance(instance_dir)
    if manifest.problem != problem:
        raise InputError(f"instance in {instance_dir} is {manifest.problem.value}, not {problem.value}")
    report = instance_store.read_report(solution_dir)
    if tol is None:
        tol = report.hyperparameters.get("tol", RunConfig.model_fields["tol"].default)
    vectors, matrices = load_solution(problem, solution_dir)
    outcome = certify(SolveOutcome(report, report.breakdown, vectors, matrices, inst), inst, tol)
    instance_store.write_report(solution_dir, outcome.report)
    res = outcome.report.certificate.residuals.res
    logger.info(f"certificate for {solution_dir}: status={outcome.report.status.value}, res={res:.3e}, tol={tol:.1e}")
    return EXIT_OK if outcome.report.status == SolveStatus.CONVERGED else EXIT_NOT_CONVERGED



def run_bench_case(sweep: SweepSpec, size: SizeSpec, seed: int, method: MethodName) -> BenchRow:
    """Solve one (size, seed, method) cell; failures become rows with an error."""
    label = size.label()
    row = BenchRow(
        instance_id=instance_id(sweep.problem.value, label, seed),
        problem=sweep.problem,
        method=method,
        size=label,
        seed=seed,
        rho=sweep.rho,
        tau=sweep.tau,
        sigma_max=sweep.sigma_max,
    )
    try:
        spec = GeneratorSpec(
            problem=sweep.problem,
            generator=sweep.generator,
            m=size.m,
            n=size.n,
            s_count=size.s_count,
            delta=sweep.delta,
            lam=sweep.lam,
            seed=seed,
        )
        cfg = RunConfig(
            problem=sweep.problem,
            method=method,
            generator=spec,
            tol=sweep.tol,
            rho=sweep.rho,
            tau=sweep.tau,
            sigma_max=sweep.sigma_max,
            warmstart=sweep.warmstart,
            max_outer=sweep.max_outer,
            max_iter=sweep.max_iter,
        )
        outcome = run(cfg)
    except Exception as e:
        logger.error(f"bench case {row.instance_id}/{method.value} failed: {e}")
        row.error = str(e)
        return row

    report, breakdown = outcome.report, outcome.breakdown
    row.res = breakdown.res
    row.outer_iterations = report.outer_iterations
    row.inner_iterations = report.inner_iterations
    row.time = report.total_time
    row.warmstart_time = report.warmstart_time
    row.status = report.status
    row.primal = breakdown.primal
    row.dual = breakdown.dual
    row.complementarity = breakdown.complementarity if breakdown.complementarity is not None else float("nan")
    row.gap = breakdown.gap
    return row


@time_execution
def cmd_bench(sweep: SweepSpec) -> List[BenchRow]:
    cases = [(sweep, size, seed, method) for size in sweep.sizes for seed in sweep.seeds for method in sweep.methods]
    logger.info(f"Running {len(cases)} bench cases with {sweep.workers} worker(s)")
    if sweep.workers > 1 and cases:
        with ProcessPoolExecutor(max_workers=sweep.workers) as pool:
            rows = list(pool.map(run_bench_case, *zip(*cases)))
    else:
        rows = [run_bench_case(*case) for case in cases]
    rows = rows + aggregate_rows(rows)

    os.makedirs(sweep.output_dir, exist_ok=True)
    write_csv(rows, os.path.join(sweep.output_dir, "bench.csv"))
    with open(os.path.join(sweep.output_dir, "bench.txt"), "w") as handle:
        handle.write(render_table(rows) + "\n")
    return rows


def cmd_report(path: str, out: Optional[str] = None) -> int:
    text = render_table(read_csv(path))
    if out:
        with open(out, "w") as handle:
            handle.write(text + "\n")
    print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ripalm", description="ripALM solver toolkit for QROT and BPDN")
    parser.add_argument("--log-level", default=None, help="logging level (default: RIPALM_LOG_LEVEL or INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    problems = [p.value for p in ProblemKind]
    methods = [m.value for m in MethodName]

    gen = sub.add_parser("generate", help="generate an instance and its manifest")
    gen.add_argument("--config", help="JSON generator spec; flags override its fields")
    gen.add_argument("--problem", choices=problems)
    gen.add_argument("--generator", choices=["gaussian-mixture", "image", "synthetic", "dataset"])
    gen.add_argument("--m", type=int)
    gen.add_argument("--n", type=int)
    gen.add_argument("--s", type=int, help="sparsity of the synthetic signal")
    gen.add_argument("--delta", type=float)
    gen.add_argument("--lam", type=float)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--image-a")
    gen.add_argument("--image-b")
    gen.add_argument("--matrix", help="dataset matrix file")
    gen.add_argument("--vector", help="dataset vector file")
    gen.add_argument("--out", required=True, help="instance directory")

    solve = sub.add_parser("solve", help="solve an instance")
    solve.add_argument("--config", help="JSON run config; flags override its fields")
    solve.add_argument("--problem", choices=problems)
    solve.add_argument("--method", choices=methods)
    solve.add_argument("--instance", help="instance directory")
    solve.add_argument("--tol", type=float)
    solve.add_argument("--rho", type=float)
    solve.add_argument("--tau", type=float)
    solve.add_argument("--sigma-max", type=float)
    solve.add_argument("--criterion", choices=["relative", "absolute", "corrected"])
    solve.add_argument("--max-outer", type=int)
    solve.add_argument("--max-iter", type=int)
    solve.add_argument("--no-warmstart", action="store_true")
    solve.add_argument("--out", help="output directory")

    bench = sub.add_parser("bench", help="run a benchmark sweep")
    bench.add_argument("--config", help="JSON sweep spec; flags override its fields")
    bench.add_argument("--problem", choices=problems)
    bench.add_argument("--generator", choices=["gaussian-mixture", "synthetic"])
    bench.add_argument("--sizes", nargs="+", help="MxN or MxNxS")
    bench.add_argument("--seeds", nargs="+", type=int)
    bench.add_argument("--methods", nargs="+", choices=methods)
    bench.add_argument("--lam", type=float)
    bench.add_argument("--delta", type=float)
    bench.add_argument("--tol", type=float)
    bench.add_argument("--rho", type=float)
    bench.add_argument("--tau", type=float)
    bench.add_argument("--sigma-max", type=float)
    bench.add_argument("--max-outer", type=int)
    bench.add_argument("--max-iter", type=int)
    bench.add_argument("--workers", type=int)
    bench.add_argument("--no-warmstart", action="store_true")
    bench.add_argument("--out", help="output directory")

    cert = sub.add_parser("certify", help="recertify a written solution against its instance")
    cert.add_argument("--problem", choices=problems, required=True)
    cert.add_argument("--instance", required=True, help="instance directory")
    cert.add_argument("--solution", required=True, help="solution directory written by solve")
    cert.add_argument("--tol", type=float, help="tolerance (default: the one recorded in the report)")

    report = sub.add_parser("report", help="render a bench CSV as a table")
    report.add_argument("csv")
    report.add_argument("--out", help="also write the table to this file")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    try:
        if args.command == "generate":
            return cmd_generate(generator_spec_from_args(args), args.out)
        if args.command == "solve":
            return cmd_solve(run_config_from_args(args))
        if args.command == "bench":
            rows = cmd_bench(sweep_from_args(args))
            failed = any(r.status != SolveStatus.CONVERGED for r in rows if not r.aggregate)
            return EXIT_NOT_CONVERGED if failed else EXIT_OK
        if args.command == "certify":
            return cmd_certify(ProblemKind(args.problem), args.instance, args.solution, args.tol)
        return cmd_report(args.csv, args.out)
    except (InputError, ValidationError, ValueError) as e:
        logger.error(f"Input error: {e}")
        return EXIT_INPUT_ERROR
    except RipalmError as e:
        logger.error(f"Solver error: {e}")
        logger.error(traceback.format_exc())
        return EXIT_NOT_CONVERGED


if __name__ == "__main__":
    sys.exit(main())
