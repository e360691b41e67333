from pydantic import BaseModel, Field, field_validator, model_validator
from typing import List, Optional, Dict, Any
from enum import Enum
import time


class ProblemKind(str, Enum):
    QROT = "qrot"
    BPDN = "bpdn"


class MethodName(str, Enum):
    RIPALM = "ripalm"
    RIPALM_ABSOLUTE = "ripalm-absolute"
    RIPALM_CORRECTED = "ripalm-corrected"
    DADMM = "dadmm"
    IBPGM = "ibpgm-warmstart-only"


class SolveStatus(str, Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    STALLED = "stalled"
    FAILED = "failed"


class CriterionKind(str, Enum):
    RELATIVE = "relative"
    ABSOLUTE = "absolute"
    CORRECTED = "corrected"


class GeneratorKind(str, Enum):
    GAUSSIAN_MIXTURE = "gaussian-mixture"
    IMAGE = "image"
    SYNTHETIC = "synthetic"
    DATASET = "dataset"


class KktResiduals(BaseModel):
    primal: float
    dual: float
    complementarity: Optional[float] = None  # QROT only
    gap: float
    res: float


class Certificate(BaseModel):
    residuals: KktResiduals
    # distance of the written primal from the prox map applied at the written duals
    reconstruction: float


class IterationRecord(BaseModel):
    k: int
    sigma: float
    tau: float
    inner_iterations: int = 0
    criterion_lhs: float = 0.0
    criterion_rhs: float = 0.0
    residual: float = float("inf")
    y_norm: float = 0.0
    x_norm: float = 0.0
    w_norm: float = 0.0
    delta_norm: float = 0.0
    theta_norm: float = 0.0
    xi_norm: float = 0.0


class SolveReport(BaseModel):
    method: MethodName = MethodName.RIPALM
    problem: Optional[ProblemKind] = None
    status: SolveStatus
    records: List[IterationRecord] = Field(default_factory=list)
    outer_iterations: int = 0
    inner_iterations: int = 0
    residual: float = float("inf")
    best_residual: float = float("inf")
    wall_time: float = 0.0
    warmstart_time: float = 0.0
    warmstart_iterations: int = 0
    breakdown: Optional[KktResiduals] = None
    certificate: Optional[Certificate] = None
    seed: Optional[int] = None
    hyperparameters: Dict[str, Any] = Field(default_factory=dict)

    @property
    def total_time(self) -> float:
        return self.wall_time + self.warmstart_time


class GeneratorSpec(BaseModel):
    problem: ProblemKind
    generator: GeneratorKind
    m: int = Field(default=1, ge=1)
    n: int = Field(default=1, ge=1)
    s_count: int = Field(default=0, ge=0)
    delta: float = Field(default=0.1, ge=0.0)
    lam: float = Field(default=1.0, ge=0.0)
    seed: int = 0
    image_a: Optional[str] = None
    image_b: Optional[str] = None
    matrix_path: Optional[str] = None
    vector_path: Optional[str] = None

    @model_validator(mode="after")
    def check_generator(self) -> "GeneratorSpec":
        qrot_kinds = {GeneratorKind.GAUSSIAN_MIXTURE, GeneratorKind.IMAGE}
        if self.problem == ProblemKind.QROT and self.generator not in qrot_kinds:
            raise ValueError(f"generator {self.generator.value} does not produce qrot instances")
        if self.problem == ProblemKind.BPDN and self.generator in qrot_kinds:
            raise ValueError(f"generator {self.generator.value} does not produce bpdn instances")
        if self.generator == GeneratorKind.SYNTHETIC and self.s_count > self.n:
            raise ValueError(f"sparsity {self.s_count} exceeds signal length {self.n}")
        if self.generator == GeneratorKind.IMAGE and not (self.image_a and self.image_b):
            raise ValueError("image generator needs two image paths")
        if self.generator == GeneratorKind.DATASET and not (self.matrix_path and self.vector_path):
            raise ValueError("dataset generator needs a matrix and a vector path")
        return self


class RunConfig(BaseModel):
    problem: ProblemKind
    method: MethodName = MethodName.RIPALM
    instance_dir: Optional[str] = None
    generator: Optional[GeneratorSpec] = None
    tol: float = 1e-6
    rho: Optional[float] = None
    tau: Optional[float] = None
    sigma_max: Optional[float] = None
    criterion: CriterionKind = CriterionKind.RELATIVE
    warmstart: bool = True
    max_outer: int = Field(default=200, ge=0)
    max_iter: int = Field(default=10000, ge=1)
    output_dir: str = "results"
    seed: Optional[int] = None

    @field_validator("tol")
    @classmethod
    def tol_positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("tolerance must be positive")
        return value

    @model_validator(mode="after")
    def check_source(self) -> "RunConfig":
        if self.instance_dir is None and self.generator is None:
            raise ValueError("either instance_dir or generator is required")
        if self.generator is not None and self.generator.problem != self.problem:
            raise ValueError("generator problem does not match run problem")
        if self.method == MethodName.IBPGM and self.problem != ProblemKind.QROT:
            raise ValueError("ibpgm-warmstart-only applies to qrot")
        if self.seed is None and self.generator is not None:
            self.seed = self.generator.seed
        return self

    def hyperparameters(self) -> Dict[str, Any]:
        return {
            "tol": self.tol,
            "rho": self.rho,
            "tau": self.tau,
            "sigma_max": self.sigma_max,
            "criterion": self.criterion.value,
            "warmstart": self.warmstart,
        }


class SizeSpec(BaseModel):
    m: int = Field(ge=1)
    n: int = Field(ge=1)
    s_count: int = Field(default=0, ge=0)

    @classmethod
    def parse(cls, text: str) -> "SizeSpec":
        """Parse 'MxN' or 'MxNxS'."""
        parts = [int(p) for p in text.lower().split("x")]
        if len(parts) == 2:
            return cls(m=parts[0], n=parts[1])
        if len(parts) == 3:
            return cls(m=parts[0], n=parts[1], s_count=parts[2])
        raise ValueError(f"cannot parse size {text!r}")

    def label(self) -> str:
        base = f"{self.m}x{self.n}"
        return f"{base}x{self.s_count}" if self.s_count else base


class SweepSpec(BaseModel):
    problem: ProblemKind
    generator: GeneratorKind
    sizes: List[SizeSpec]
    seeds: List[int] = Field(default_factory=lambda: [0])
    methods: List[MethodName] = Field(default_factory=lambda: [MethodName.RIPALM])
    lam: float = 1.0
    delta: float = 0.1
    tol: float = 1e-6
    rho: Optional[float] = None
    tau: Optional[float] = None
    sigma_max: Optional[float] = None
    warmstart: bool = True
    max_outer: int = 200
    max_iter: int = 10000
    output_dir: str = "bench"
    workers: int = Field(default=1, ge=1)


class Manifest(BaseModel):
    problem: ProblemKind
    generator: Optional[GeneratorSpec] = None
    seed: Optional[int] = None
    parameters: Dict[str, Any] = Field(default_factory=dict)
    checksums: Dict[str, str] = Field(default_factory=dict)
    created_at: int = Field(default_factory=lambda: int(time.time()))


class BenchRow(BaseModel):
    instance_id: str
    problem: ProblemKind
    method: MethodName
    size: str
    seed: Optional[int] = None
    res: float = float("nan")
    outer_iterations: int = 0
    inner_iterations: int = 0
    time: float = 0.0
    status: SolveStatus = SolveStatus.FAILED
    primal: float = float("nan")
    dual: float = float("nan")
    complementarity: float = float("nan")
    gap: float = float("nan")
    warmstart_time: float = 0.0
    rho: Optional[float] = None
    tau: Optional[float] = None
    sigma_max: Optional[float] = None
    aggregate: bool = False
    error: str = ""
