"""Instance I/O, method dispatch and certification behind the CLI commands."""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple, Union

from ..baselines.admm_bpdn import dadmm_bpdn_solve
from ..baselines.admm_qrot import dadmm_qrot_solve
from ..baselines.ibpgm import IbpgmConfig, ibpgm_warmstart
from ..baselines.penalty import AdmmConfig
from ..common.errors import InputError
from ..common.models import (
    CriterionKind,
    GeneratorKind,
    GeneratorSpec,
    KktResiduals,
    Manifest,
    MethodName,
    ProblemKind,
    RunConfig,
    SolveReport,
    SolveStatus,
)
from ..common.numerics import DenseMatrix, DenseVector
from ..common.store import InstanceStore, instance_store, read_grid, read_matrix, read_vector
from ..core.ripalm import RipalmConfig, ripalm_solve
from ..problems.bpdn.generators import bpdn_from_dataset, gen_synthetic_bpdn
from ..problems.bpdn.model import BpdnInstance, BpdnPrimalPoint, BpdnProblem
from ..problems.bpdn.residuals import kkt_residuals_bpdn
from ..problems.qrot.generators import gen_gaussian_mixture_instance, gen_image_instance
from ..problems.qrot.model import QrotDualPoint, QrotInstance, QrotProblem
from ..problems.qrot.residuals import kkt_residuals_qrot
from .certificate import certificate_for

logger = logging.getLogger(__name__)

Instance = Union[QrotInstance, BpdnInstance]

# dADMM warm start for BPDN
BPDN_WARMSTART = AdmmConfig(sigma0=1.0, max_iter=100, tol=1e-3)
# rho used by the corrected acceptance rule unless overridden
CORRECTED_RHO = 0.3
# array files making up a written solution, as (vectors, matrices)
SOLUTION_ARRAYS = {ProblemKind.QROT: (("u", "v"), ("X",)), ProblemKind.BPDN: (("s", "t", "y"), ())}


@dataclass
class GeneratedInstance:
    instance: Instance
    spec: GeneratorSpec
    signal: Optional[DenseVector] = None


@dataclass
class SolveOutcome:
    report: SolveReport
    breakdown: Optional[KktResiduals]
    vectors: Dict[str, DenseVector] = field(default_factory=dict)
    matrices: Dict[str, DenseMatrix] = field(default_factory=dict)
    instance: Optional[Instance] = None


def generate_instance(spec: GeneratorSpec) -> GeneratedInstance:
    if spec.generator == GeneratorKind.GAUSSIAN_MIXTURE:
        return GeneratedInstance(gen_gaussian_mixture_instance(spec.m, spec.n, spec.seed, lam=spec.lam), spec)
    if spec.generator == GeneratorKind.IMAGE:
        inst = gen_image_instance(read_grid(spec.image_a), read_grid(spec.image_b), lam=spec.lam)
        return GeneratedInstance(inst, spec)
    if spec.generator == GeneratorKind.SYNTHETIC:
        inst, signal = gen_synthetic_bpdn(spec.m, spec.n, spec.s_count, spec.delta, spec.seed)
        return GeneratedInstance(inst, spec, signal)
    inst = bpdn_from_dataset(read_matrix(spec.matrix_path), read_vector(spec.vector_path), spec.delta)
    return GeneratedInstance(inst, spec)


def save_instance(generated: GeneratedInstance, directory: str, store: InstanceStore = instance_store) -> Manifest:
    inst, spec = generated.instance, generated.spec
    if isinstance(inst, QrotInstance):
        vectors = {"alpha": inst.alpha, "beta": inst.beta}
        matrices = {"C": inst.C}
        parameters = {"lam": inst.lam, "m": inst.m, "n": inst.n}
        problem = ProblemKind.QROT
    else:
        vectors = {"b": inst.b}
        if generated.signal is not None:
            vectors["signal"] = generated.signal
        matrices = {"D": inst.D}
        parameters = {"kappa_hat": inst.kappa_hat, "m": inst.m, "n": inst.n, "delta": spec.delta}
        problem = ProblemKind.BPDN
    manifest = Manifest(problem=problem, generator=spec, seed=spec.seed, parameters=parameters)
    return store.save_arrays(directory, vectors, matrices, manifest)


def load_instance(directory: str, store: InstanceStore = instance_store) -> Tuple[Instance, Manifest]:
    manifest = store.read_manifest(directory)
    store.verify_checksums(directory, manifest)
    if manifest.problem == ProblemKind.QROT:
        vectors = store.load_vectors(directory, ["alpha", "beta"])
        C = store.load_matrices(directory, ["C"])["C"]
        inst = QrotInstance(C=C, alpha=vectors["alpha"], beta=vectors["beta"], lam=manifest.parameters["lam"])
    else:
        b = store.load_vectors(directory, ["b"])["b"]
        D = store.load_matrices(directory, ["D"])["D"]
        inst = BpdnInstance(D=D, b=b, kappa_hat=manifest.parameters["kappa_hat"])
    logger.info(f"Loaded {manifest.problem.value} instance from {directory}")
    return inst, manifest


def resolve_instance(cfg: RunConfig, store: InstanceStore = instance_store) -> Tuple[Instance, Optional[int]]:
    if cfg.instance_dir is not None:
        inst, manifest = load_instance(cfg.instance_dir, store)
        if manifest.problem != cfg.problem:
            raise InputError(f"instance in {cfg.instance_dir} is {manifest.problem.value}, not {cfg.problem.value}")
        return inst, manifest.seed
    generated = generate_instance(cfg.generator)
    return generated.instance, cfg.generator.seed


def ripalm_config(cfg: RunConfig) -> RipalmConfig:
    criterion = {
        MethodName.RIPALM_ABSOLUTE: CriterionKind.ABSOLUTE,
        MethodName.RIPALM_CORRECTED: CriterionKind.CORRECTED,
    }.get(cfg.method, cfg.criterion)
    overrides = {"tol": cfg.tol, "max_outer": cfg.max_outer, "criterion": criterion}
    if cfg.rho is not None:
        overrides["rho"] = cfg.rho
    elif criterion == CriterionKind.CORRECTED:
        overrides["rho"] = CORRECTED_RHO
    if cfg.tau is not None:
        overrides["tau"] = cfg.tau
    if cfg.sigma_max is not None:
        overrides["sigma_max"] = cfg.sigma_max
    return RipalmConfig(**overrides)


def _status_for(residual: float, tol: float) -> SolveStatus:
    return SolveStatus.CONVERGED if residual < tol else SolveStatus.MAX_ITERATIONS


def solve_qrot(inst: QrotInstance, cfg: RunConfig) -> SolveOutcome:
    if cfg.method == MethodName.DADMM:
        state, report = dadmm_qrot_solve(inst, AdmmConfig(tol=cfg.tol, max_iter=cfg.max_iter))
        point, X = QrotDualPoint(state.u, state.v), state.X
    elif cfg.method == MethodName.IBPGM:
        warm = ibpgm_warmstart(inst, IbpgmConfig())
        point, X = QrotDualPoint(warm.u, warm.v), warm.X
        report = SolveReport(
            method=cfg.method,
            status=_status_for(warm.residual, cfg.tol),
            outer_iterations=warm.iterations,
            residual=warm.residual,
            best_residual=warm.residual,
            wall_time=warm.seconds,
        )
    else:
        problem = QrotProblem(inst)
        init, warm = None, None
        if cfg.warmstart:
            warm = ibpgm_warmstart(inst)
            y0, X0 = warm.as_init()
            init = (y0, X0, None)

        def residual_fn(state) -> float:
            return kkt_residuals_qrot(inst, problem.split(state.y), state.x).res

        state, report = ripalm_solve(problem, ripalm_config(cfg), residual_fn, init)
        if warm is not None:
            report.warmstart_time = warm.seconds
            report.warmstart_iterations = warm.iterations
        point, X = problem.split(state.y), state.x

    return SolveOutcome(
        report=report,
        breakdown=kkt_residuals_qrot(inst, point, X),
        vectors={"u": point.u, "v": point.v},
        matrices={"X": X},
    )


def solve_bpdn(inst: BpdnInstance, cfg: RunConfig) -> SolveOutcome:
    if cfg.method == MethodName.DADMM:
        state, report = dadmm_bpdn_solve(inst, AdmmConfig(tol=cfg.tol, max_iter=cfg.max_iter))
        point, y = BpdnPrimalPoint(state.s, state.t), state.y
    else:
        problem = BpdnProblem(inst)
        init, warm_report = None, None
        if cfg.warmstart:
            warm_state, warm_report = dadmm_bpdn_solve(inst, BPDN_WARMSTART)
            init = (warm_state.y, problem.primal_point(warm_state.s, warm_state.t), None)

        def residual_fn(state) -> float:
            return kkt_residuals_bpdn(inst, problem.split(state.x), state.y).res

        state, report = ripalm_solve(problem, ripalm_config(cfg), residual_fn, init)
        if warm_report is not None:
            report.warmstart_time = warm_report.wall_time
            report.warmstart_iterations = warm_report.outer_iterations
        point, y = problem.split(state.x), state.y

    return SolveOutcome(
        report=report,
        breakdown=kkt_residuals_bpdn(inst, point, y),
        vectors={"s": point.s, "t": point.t, "y": y},
    )


def certify(outcome: SolveOutcome, inst: Instance, tol: float) -> SolveOutcome:
    """Decide the final status on a certificate recomputed from the solution arrays."""
    report = outcome.report
    certificate = certificate_for(inst, outcome.vectors, outcome.matrices)
    report.breakdown = outcome.breakdown
    report.certificate = certificate
    recomputed = certificate.residuals.res
    if outcome.breakdown is not None and not math.isclose(outcome.breakdown.res, recomputed, rel_tol=1e-6, abs_tol=1e-12):
        logger.warning(f"solver residual {outcome.breakdown.res:.3e} disagrees with certificate {recomputed:.3e}")
    if report.status == SolveStatus.CONVERGED and not recomputed < tol:
        logger.error(f"recomputed residual {recomputed:.3e} does not certify tol {tol:.1e}")
        report.status = SolveStatus.FAILED
    return outcome


def load_solution(
    problem: ProblemKind, directory: str, store: InstanceStore = instance_store
) -> Tuple[Dict[str, DenseVector], Dict[str, DenseMatrix]]:
    vector_names, matrix_names = SOLUTION_ARRAYS[problem]
    return store.load_vectors(directory, vector_names), store.load_matrices(directory, matrix_names)


def run(cfg: RunConfig, store: InstanceStore = instance_store) -> SolveOutcome:
    inst, seed = resolve_instance(cfg, store)
    if isinstance(inst, QrotInstance):
        outcome = solve_qrot(inst, cfg)
    else:
        outcome = solve_bpdn(inst, cfg)
    outcome.report.problem = cfg.problem
    outcome.report.method = cfg.method
    outcome.report.seed = seed
    outcome.report.hyperparameters.update(cfg.hyperparameters())
    outcome.instance = inst
    return certify(outcome, inst, cfg.tol)


def write_outcome(outcome: SolveOutcome, directory: str, store: InstanceStore = instance_store) -> None:
    store.save_arrays(directory, outcome.vectors, outcome.matrices)
    store.write_report(directory, outcome.report)
    logger.info(f"Wrote solution and report to {directory}")
