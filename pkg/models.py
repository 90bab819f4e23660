from typing import Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


# ===== 예외 =====
class RelaxSplitError(Exception):
    """패키지 공통 예외"""


class DimensionError(RelaxSplitError, ValueError):
    """벡터/연산자 차원 불일치"""


class InfeasibleError(RelaxSplitError, ValueError):
    """예산(τ) 또는 가중치 초기값이 허용 집합 밖"""


class InnerSolveError(RelaxSplitError, RuntimeError):
    """부분 최소화(내부 선형 시스템) 실패"""

    def __init__(self, message: str, iteration: Optional[int] = None):
        super().__init__(message)
        self.iteration = iteration


class ConvergenceError(RelaxSplitError, RuntimeError):
    """반복 상한 내 수렴 실패 (SVD, 가치 반복, 오라클 등)"""

    def __init__(self, message: str, iteration: Optional[int] = None):
        super().__init__(message)
        self.iteration = iteration


class UsageError(RelaxSplitError):
    """CLI 사용법 오류"""


# ===== 옵션 =====
class SolveOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_iter: int = Field(500, ge=1)
    tol_optimality: float = Field(1e-10, ge=0.0)
    tol_objective_delta: float = Field(0.0, ge=0.0)
    record_trace: bool = True
    record_timing: bool = True  # False면 ms 열을 0으로 기록 (재현 가능한 출력)
    seed: int = 0


class ContinuationSchedule(BaseModel):
    model_config = ConfigDict(frozen=True)

    nu0: float = Field(..., gt=0.0)
    factor: float = Field(..., gt=0.0, lt=1.0)
    nu_min: float = Field(..., gt=0.0)
    stage_options: SolveOptions = SolveOptions()

    @model_validator(mode="after")
    def _check_order(self):
        if self.nu_min >= self.nu0:
            raise ValueError(f"nu_min({self.nu_min})은 nu0({self.nu0})보다 작아야 합니다")
        return self

    def stages(self) -> List[float]:
        """ν0, ν0·factor, ... (ν ≥ nu_min인 동안)"""
        nus = []
        nu = self.nu0
        while nu >= self.nu_min:
            nus.append(nu)
            nu *= self.factor
        return nus


# ===== 실행 기록 =====
class TraceRow(BaseModel):
    iter: int = Field(..., ge=0)
    objective: float
    optimality: float
    gap: float = 0.0
    inner_iters: int = 0
    ms: float = 0.0


TRACE_COLUMNS = ("iter", "objective", "optimality", "gap", "inner_iters", "ms")


class SolverTrace(BaseModel):
    rows: List[TraceRow] = Field(default_factory=list)
    converged: bool = False
    stop_reason: str = ""

    def append(self, row: TraceRow) -> None:
        if self.rows and row.iter <= self.rows[-1].iter:
            raise ValueError(f"반복 번호는 증가해야 합니다: {self.rows[-1].iter} -> {row.iter}")
        self.rows.append(row)

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        if name not in TRACE_COLUMNS:
            raise KeyError(name)
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    @property
    def iterations(self) -> int:
        return self.rows[-1].iter if self.rows else 0

    @property
    def final_objective(self) -> float:
        return self.rows[-1].objective if self.rows else float("nan")

    @property
    def final_gap(self) -> float:
        return self.rows[-1].gap if self.rows else float("nan")

    @property
    def total_inner_iters(self) -> int:
        return int(sum(r.inner_iters for r in self.rows))


class RunSummary(BaseModel):
    iterations: int
    final_objective: float
    final_gap: float
    converged: bool
    wall_ms: float
    extra: Dict[str, float] = Field(default_factory=dict)


class OracleReport(BaseModel):
    quantity: str
    oracle_value: float
    artifact_value: float
    tolerance: float = Field(..., ge=0.0)
    abs_gap: float = 0.0
    rel_gap: float = 0.0
    passed: bool = False
    detail: str = ""

    @model_validator(mode="after")
    def _fill_gaps(self):
        self.abs_gap = abs(self.artifact_value - self.oracle_value)
        self.rel_gap = self.abs_gap / (1.0 + abs(self.oracle_value))
        self.passed = bool(self.abs_gap <= self.tolerance)
        return self


# ===== 실험 설정 (CLI) =====
Subcommand = Literal[
    "lad", "phase", "phase-trimmed", "sslr", "ssp", "cluster", "rpca",
    "admm-compare", "continuation",
]

# 하위 명령별 필수 플래그
REQUIRED_FLAGS: Dict[str, tuple] = {
    "lad": ("m", "n"),
    "phase": ("n",),
    "phase-trimmed": ("n",),
    "sslr": ("m", "n"),
    "ssp": ("n",),
    "cluster": (),
    "rpca": (),
    "admm-compare": ("m", "n"),
    "continuation": ("m", "n"),
}


class ExperimentConfig(BaseModel):
    subcommand: Subcommand
    nu: float = Field(1.0, gt=0.0)
    lam: Optional[float] = Field(None, ge=0.0)
    gamma: Optional[float] = Field(None, ge=0.0)
    tau: Optional[float] = Field(None, ge=0.0)
    kappa: Optional[float] = Field(None, gt=0.0)
    rank: int = Field(2, ge=1)
    m: Optional[int] = Field(None, ge=1)
    n: Optional[int] = Field(None, ge=1)
    k: int = Field(4, ge=1)
    seed: int = 0
    seeds: int = Field(1, ge=1)
    max_iter: int = Field(500, ge=1)
    tol: float = Field(1e-10, ge=0.0)
    schedule: Optional[ContinuationSchedule] = None
    corrupt: Optional[float] = Field(None, ge=0.0, lt=1.0)  # None이면 하위 명령별 기본값
    init_iters: int = Field(10, ge=1)
    penalty: Literal["l2", "scad"] = "l2"
    ls_method: Literal["direct", "cg", "lsqr", "orthogonal"] = "direct"
    data: Optional[str] = None
    deterministic: bool = False
    save_instance: bool = False

    @model_validator(mode="after")
    def _check_required(self):
        # --data가 있으면 차원은 파일에서 읽는다
        required = REQUIRED_FLAGS[self.subcommand] if self.data is None else ()
        missing = [f for f in required if getattr(self, f) is None]
        if missing:
            flags = ", ".join(f"--{f}" for f in missing)
            raise ValueError(f"{self.subcommand}: 필수 플래그 누락: {flags}")
        if self.subcommand == "cluster" and self.penalty == "scad" and self.kappa is None:
            raise ValueError("cluster: --penalty scad에는 --kappa가 필요합니다")
        if self.subcommand in ("phase", "phase-trimmed") and self.n is not None and self.n & (self.n - 1):
            raise ValueError(f"{self.subcommand}: --n은 2의 거듭제곱이어야 합니다 ({self.n})")
        if self.subcommand == "phase-trimmed" and self.tau is not None and self.tau > self.k * self.n:
            raise ValueError(f"phase-trimmed: --tau {self.tau} > m={self.k * self.n}")
        if self.subcommand in ("lad", "admm-compare", "continuation") and self.data is None and self.m <= self.n:
            raise ValueError(f"{self.subcommand}: --m은 --n보다 커야 합니다")
        return self

    def solve_options(self) -> SolveOptions:
        return SolveOptions(
            max_iter=self.max_iter,
            tol_optimality=self.tol,
            seed=self.seed,
            record_timing=not self.deterministic,
        )
