"""
완화(relax)된 문제 min_{x,w} h(w) + g(x) + (1/2ν)‖Ax − w‖²

축소 목적함수 p_ν(w) = h(w) + g_ν(w),
g_ν(w) = min_x g(x) + (1/2ν)‖Ax − w‖²,  ∇g_ν(w) = (w − A x(w))/ν
"""

from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .linops import LinearOperator, LsSolvePolicy, QuadraticRegularizer, solve_partial
from .models import DimensionError
from .prox import SeparableNonsmooth


class RelaxedProblem(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    h: SeparableNonsmooth
    A: LinearOperator
    g: QuadraticRegularizer = Field(default_factory=QuadraticRegularizer.zero)
    nu: float = Field(..., gt=0.0)
    policy: LsSolvePolicy = Field(default_factory=LsSolvePolicy)

    @model_validator(mode="after")
    def _check_dimensions(self):
        if self.h.size != self.A.rows:
            raise DimensionError(f"h 차원 {self.h.size} != A 행 수 {self.A.rows}")
        if self.g.dimension is not None and self.g.dimension != self.A.cols:
            raise DimensionError(f"g 차원 {self.g.dimension} != A 열 수 {self.A.cols}")
        return self

    @property
    def m(self) -> int:
        return self.A.rows

    @property
    def n(self) -> int:
        return self.A.cols

    def with_nu(self, nu: float) -> "RelaxedProblem":
        """ν만 바꾼 복사본 (풀이 정책과 분해 캐시 공유, 캐시 키가 ν를 포함)"""
        if not nu > 0.0:
            raise ValueError(f"ν는 양수여야 합니다: {nu}")
        return self.model_copy(update={"nu": float(nu)})


def partial_minimize(p: RelaxedProblem, w: np.ndarray, x0: Optional[np.ndarray] = None) -> np.ndarray:
    return solve_partial(p.A, p.g, w, p.nu, p.policy, x0=x0)


def partial_minimize_info(
    p: RelaxedProblem, w: np.ndarray, x0: Optional[np.ndarray] = None
) -> Tuple[np.ndarray, int]:
    """(x(w), 내부 반복 수)"""
    return solve_partial(p.A, p.g, w, p.nu, p.policy, x0=x0, return_info=True)


def coupling_residual(p: RelaxedProblem, w: np.ndarray, x: np.ndarray) -> np.ndarray:
    return p.A.matvec(x) - w


def grad_g_nu(p: RelaxedProblem, w: np.ndarray, x: np.ndarray) -> np.ndarray:
    """∇g_ν(w) = (w − Ax)/ν, x = x(w)"""
    return (np.asarray(w, dtype=float) - p.A.matvec(x)) / p.nu


def objective(p: RelaxedProblem, w: np.ndarray, x: np.ndarray) -> float:
    """h(w) + g(x) + (1/2ν)‖Ax − w‖²"""
    r = coupling_residual(p, w, x)
    return p.h.value(w) + p.g.value(x) + float(r @ r) / (2.0 * p.nu)


def g_nu_value(p: RelaxedProblem, w: np.ndarray, x: Optional[np.ndarray] = None) -> float:
    x = partial_minimize(p, w) if x is None else x
    r = coupling_residual(p, w, x)
    return p.g.value(x) + float(r @ r) / (2.0 * p.nu)


def reduced_objective(p: RelaxedProblem, w: np.ndarray, x: Optional[np.ndarray] = None) -> float:
    """p_ν(w) = h(w) + g_ν(w)"""
    return p.h.value(w) + g_nu_value(p, w, x)


def optimality_witness(p: RelaxedProblem, x_prev: np.ndarray, x_cur: np.ndarray) -> float:
    """T = ‖A(x_prev − x_cur)/ν‖²"""
    d = p.A.matvec(np.asarray(x_prev, dtype=float) - x_cur) / p.nu
    return float(d @ d)


def coupling_gap(p: RelaxedProblem, w: np.ndarray, x: np.ndarray) -> float:
    """‖Ax − w‖ (정류점에서 ν·L 이하)"""
    return float(np.linalg.norm(coupling_residual(p, w, x)))
