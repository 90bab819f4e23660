"""
완화 분할(relax-and-split) 솔버

- rs_pgd: 축소 목적함수 p_ν에 대한 근접 경사법 w ← prox_{νh}(A x(w))
- rs_fista: 가속 변형 (볼록 h에서만 이론 보장)
- trs_bcd: 절삭(trimmed) 목적함수의 블록 좌표 하강
- admm: 비교용 교대 방향 승수법
- continuation: ν를 줄여가며 rs_pgd 반복 (warm start)
"""

import math
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .linops import LinearOperator, LsSolvePolicy, QuadraticRegularizer, solve_partial
from .logger_config import RunLogger, solver_logger
from .models import (
    ContinuationSchedule,
    InfeasibleError,
    InnerSolveError,
    SolveOptions,
    SolverTrace,
    TraceRow,
)
from .prox import SeparableNonsmooth, project_capped_simplex, prox_separable
from .relax import (
    RelaxedProblem,
    coupling_gap,
    objective,
    optimality_witness,
    partial_minimize_info,
)
from .utils import elapsed_ms, new_run_id, now_ms

STALL_PATIENCE = 3
FEASIBILITY_TOL = 1e-8


class _StopRule:
    """최적성 측도 ≤ tol 또는 목적값 변화 ≤ tol이 연속 3회"""

    def __init__(self, opts: SolveOptions):
        self.opts = opts
        self.flat = 0

    def check(self, optimality: float, delta: float) -> Optional[str]:
        if optimality <= self.opts.tol_optimality:
            return "최적성 허용 오차 도달"
        self.flat = self.flat + 1 if abs(delta) <= self.opts.tol_objective_delta else 0
        if self.flat >= STALL_PATIENCE:
            return f"목적값 변화 {STALL_PATIENCE}회 연속 허용 오차 이하"
        return None


class _TraceRecorder:
    """반복 기록 + 실행 로깅. record_trace=False면 첫 행과 마지막 행만 남긴다."""

    def __init__(self, opts: SolveOptions, solver: str, run_id: Optional[str], **params):
        self.opts = opts
        self.trace = SolverTrace()
        self.run = RunLogger(solver_logger, run_id or new_run_id())
        self.t0 = now_ms()
        self._pending: Optional[TraceRow] = None
        self.run.log_run_start(solver, **params)

    def record(self, k: int, objective_value: float, optimality: float, gap: float, inner: int) -> None:
        if not math.isfinite(objective_value):
            error = InnerSolveError(f"반복 {k}: 목적값이 유한하지 않습니다 ({objective_value})", iteration=k)
            self.run.log_error(error, "발산")
            raise error
        row = TraceRow(
            iter=k, objective=objective_value, optimality=optimality, gap=gap,
            inner_iters=inner, ms=elapsed_ms(self.t0, self.opts.record_timing),
        )
        self.run.log_progress(k, objective_value, optimality, gap)
        if self.opts.record_trace or k == 0:
            self.trace.append(row)
            self._pending = None
        else:
            self._pending = row

    def finish(self, k: int, reason: Optional[str]) -> SolverTrace:
        if self._pending is not None:
            self.trace.append(self._pending)
        converged = reason is not None
        self.trace.converged = converged
        self.trace.stop_reason = reason or "최대 반복 수 도달"
        self.run.log_stop(k, self.trace.stop_reason, converged)
        self.run.log_timings({
            "iterations": k,
            "inner_iters": self.trace.total_inner_iters,
            "final_objective": self.trace.final_objective,
            "total_ms": elapsed_ms(self.t0, self.opts.record_timing),
        })
        self.run.log_run_end(True)
        return self.trace


def _partial(p: RelaxedProblem, w: np.ndarray, x0: Optional[np.ndarray], k: int) -> Tuple[np.ndarray, int]:
    try:
        return partial_minimize_info(p, w, x0)
    except (InnerSolveError, np.linalg.LinAlgError) as exc:
        raise InnerSolveError(f"반복 {k}: 부분 최소화 실패: {exc}", iteration=k) from exc


# ===== 근접 경사법 =====
def rs_pgd(
    p: RelaxedProblem,
    w0: np.ndarray,
    opts: Optional[SolveOptions] = None,
    x0: Optional[np.ndarray] = None,
    run_id: Optional[str] = None,
) -> Tuple[np.ndarray, np.ndarray, SolverTrace]:
    """
    w^{k+1} = prox_{νh}(w^k − ν∇g_ν(w^k)) = prox_{νh}(A x(w^k))

    각 반복은 p_ν를 (1/2ν)‖A(x^k − x^{k+1})‖² 이상 감소시킨다.
    trace의 optimality 열은 T = ‖A(x^k − x^{k+1})/ν‖², gap 열은 ‖Ax − w‖.
    """
    opts = opts or SolveOptions()
    rec = _TraceRecorder(
        opts, "rs_pgd", run_id, m=p.m, n=p.n, nu=p.nu, h=p.h.kinds, g=p.g.kind,
        ls=p.policy.method, max_iter=opts.max_iter, tol=opts.tol_optimality,
    )
    w = p.h.check_input(w0).copy()
    x, inner = _partial(p, w, x0, 0)
    current = objective(p, w, x)
    rec.record(0, current, float("nan"), coupling_gap(p, w, x), inner)

    stop = _StopRule(opts)
    reason = None
    k = 0
    for k in range(1, opts.max_iter + 1):
        w = prox_separable(p.h, p.A.matvec(x), p.nu)
        x_new, inner = _partial(p, w, x, k)
        witness = optimality_witness(p, x, x_new)
        x = x_new
        updated = objective(p, w, x)
        rec.record(k, updated, witness, coupling_gap(p, w, x), inner)
        reason = stop.check(witness, updated - current)
        current = updated
        if reason:
            break
    return w, x, rec.finish(k, reason)


def rs_fista(
    p: RelaxedProblem,
    w0: np.ndarray,
    opts: Optional[SolveOptions] = None,
    run_id: Optional[str] = None,
) -> Tuple[np.ndarray, np.ndarray, SolverTrace]:
    """
    가속 근접 경사법. 외삽 계수 (a_k − 1)/a_{k+1}, a_{k+1} = (1 + √(1 + 4a_k²))/2.
    목적값 단조성은 보장되지 않는다.
    """
    opts = opts or SolveOptions()
    if not p.h.is_convex:
        solver_logger.warning(f"⚠️ rs_fista: 비볼록 h {p.h.kinds} — 가속 수렴 보장 없음")
    rec = _TraceRecorder(
        opts, "rs_fista", run_id, m=p.m, n=p.n, nu=p.nu, h=p.h.kinds, g=p.g.kind,
        ls=p.policy.method, max_iter=opts.max_iter, tol=opts.tol_optimality,
    )
    w = p.h.check_input(w0).copy()
    x, inner = _partial(p, w, None, 0)
    current = objective(p, w, x)
    rec.record(0, current, float("nan"), coupling_gap(p, w, x), inner)

    a = 1.0
    extrapolated = w.copy()
    x_extrapolated = x
    stop = _StopRule(opts)
    reason = None
    k = 0
    for k in range(1, opts.max_iter + 1):
        if k > 1:
            x_extrapolated, _ = _partial(p, extrapolated, x_extrapolated, k)
        w_new = prox_separable(p.h, p.A.matvec(x_extrapolated), p.nu)
        x_new, inner = _partial(p, w_new, x, k)
        a_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * a * a))
        extrapolated = w_new + ((a - 1.0) / a_next) * (w_new - w)
        witness = optimality_witness(p, x, x_new)
        w, x, a = w_new, x_new, a_next
        updated = objective(p, w, x)
        rec.record(k, updated, witness, coupling_gap(p, w, x), inner)
        reason = stop.check(witness, updated - current)
        current = updated
        if reason:
            break
    return w, x, rec.finish(k, reason)


def continuation(
    p: RelaxedProblem,
    w0: np.ndarray,
    schedule: ContinuationSchedule,
    run_id: Optional[str] = None,
) -> Tuple[np.ndarray, np.ndarray, List[SolverTrace]]:
    """ν0, ν0·factor, ... 단계마다 rs_pgd (이전 단계 해로 warm start)"""
    run_id = run_id or new_run_id()
    nus = schedule.stages()
    solver_logger.info(f"📉 [{run_id}] continuation: {len(nus)}단계, ν {nus[0]:.3g} → {nus[-1]:.3g}")
    w = np.asarray(w0, dtype=float).copy()
    x = None
    traces: List[SolverTrace] = []
    for stage, nu in enumerate(nus):
        w, x, trace = rs_pgd(p.with_nu(nu), w, schedule.stage_options, x0=x, run_id=f"{run_id}-s{stage}")
        traces.append(trace)
    return w, x, traces


# ===== 절삭 목적함수 =====
class TrimmedProblem(BaseModel):
    """
    min_{w, v ∈ Δ_τ} Σ v_i h_i(w_i) + g_ν(w)
    Δ_τ = {0 ≤ v ≤ 1, Σv = τ}
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    relaxed: RelaxedProblem
    tau: float = Field(..., ge=0.0)
    gamma: float = Field(..., gt=0.0)

    @model_validator(mode="after")
    def _check(self):
        if self.tau > self.relaxed.m:
            raise InfeasibleError(f"τ={self.tau} > m={self.relaxed.m}")
        if not self.relaxed.h.is_coordinate_wise:
            raise ValueError(f"절삭에는 좌표 분리 h가 필요합니다: {self.relaxed.h.kinds}")
        return self


def trimmed_objective(tp: TrimmedProblem, w: np.ndarray, x: np.ndarray, v: np.ndarray) -> float:
    p = tp.relaxed
    r = p.A.matvec(x) - w
    return float(v @ p.h.coordinate_values(w)) + p.g.value(x) + float(r @ r) / (2.0 * p.nu)


def trs_bcd(
    tp: TrimmedProblem,
    w0: np.ndarray,
    v0: np.ndarray,
    opts: Optional[SolveOptions] = None,
    run_id: Optional[str] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, SolverTrace]:
    """
    w ← 가중 prox_{ν·Σ v_i h_i}(A x(w)),  v ← proj_{Δτ}(v − γ H(w))

    optimality 열: (ν/2)‖A(x^k − x^{k+1})/ν‖² + γ‖(v^{k+1} − v^k)/γ‖²
    (한 반복의 목적값 감소량 이하)
    """
    opts = opts or SolveOptions()
    p = tp.relaxed
    v = np.asarray(v0, dtype=float).copy()
    if v.shape != (p.m,) or v.min() < -FEASIBILITY_TOL or v.max() > 1.0 + FEASIBILITY_TOL \
            or abs(v.sum() - tp.tau) > FEASIBILITY_TOL:
        raise InfeasibleError(f"v0가 Δ_τ(τ={tp.tau})에 속하지 않습니다")
    rec = _TraceRecorder(
        opts, "trs_bcd", run_id, m=p.m, n=p.n, nu=p.nu, tau=tp.tau, gamma=tp.gamma,
        h=p.h.kinds, max_iter=opts.max_iter, tol=opts.tol_optimality,
    )
    w = p.h.check_input(w0).copy()
    x, inner = _partial(p, w, None, 0)
    current = trimmed_objective(tp, w, x, v)
    rec.record(0, current, float("nan"), coupling_gap(p, w, x), inner)

    stop = _StopRule(opts)
    reason = None
    k = 0
    for k in range(1, opts.max_iter + 1):
        w = prox_separable(p.h, p.A.matvec(x), p.nu, weights=v)
        x_new, inner = _partial(p, w, x, k)
        v_new = project_capped_simplex(v - tp.gamma * p.h.coordinate_values(w), tp.tau)
        dv = v_new - v
        stationarity = 0.5 * p.nu * optimality_witness(p, x, x_new) + float(dv @ dv) / tp.gamma
        x, v = x_new, v_new
        updated = trimmed_objective(tp, w, x, v)
        rec.record(k, updated, stationarity, coupling_gap(p, w, x), inner)
        reason = stop.check(stationarity, updated - current)
        current = updated
        if reason:
            break
    return w, x, v, rec.finish(k, reason)


# ===== ADMM =====
def admm(
    h: SeparableNonsmooth,
    A: LinearOperator,
    g: QuadraticRegularizer,
    rho: float,
    alpha: float,
    x0: np.ndarray,
    opts: Optional[SolveOptions] = None,
    policy: Optional[LsSolvePolicy] = None,
    allow_nonconvex: bool = False,
    run_id: Optional[str] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, SolverTrace]:
    """
    min h(w) + g(x) s.t. Ax = w 의 ADMM:
      x ← argmin g(x) + (ρ/2)‖Ax − (w + u/ρ)‖²
      w ← prox_{h/ρ}(Ax − u/ρ)
      u ← u − α(Ax − w)

    optimality 열: ‖A(x^{k+1} − x^k)‖, gap 열: ‖Ax − w‖ (둘 다 tol 이하면 종료)
    objective 열: 원래 목적함수 h(Ax) + g(x)

    Returns:
        (x, w, u, trace)
    """
    opts = opts or SolveOptions()
    if not (rho > 0.0 and alpha > 0.0):
        raise ValueError(f"ρ, α는 양수여야 합니다: ρ={rho}, α={alpha}")
    if not h.is_convex:
        if not allow_nonconvex:
            raise ValueError(f"ADMM은 볼록 h만 지원합니다 (allow_nonconvex=True로 허용): {h.kinds}")
        solver_logger.warning(f"⚠️ admm: 비볼록 h {h.kinds} — 수렴 보장 없음")
    policy = policy or LsSolvePolicy()
    rec = _TraceRecorder(
        opts, "admm", run_id, m=A.rows, n=A.cols, rho=rho, alpha=alpha, h=h.kinds,
        ls=policy.method, max_iter=opts.max_iter, tol=opts.tol_optimality,
    )
    x = np.asarray(x0, dtype=float).copy()
    Ax = A.matvec(x)
    w = Ax.copy()
    u = np.zeros(A.rows)
    rec.record(0, h.value(Ax) + g.value(x), float("nan"), 0.0, 0)

    reason = None
    k = 0
    for k in range(1, opts.max_iter + 1):
        try:
            x, inner = solve_partial(A, g, w + u / rho, 1.0 / rho, policy, x0=x, return_info=True)
        except InnerSolveError as exc:
            raise InnerSolveError(f"반복 {k}: x 갱신 실패: {exc}", iteration=k) from exc
        Ax_new = A.matvec(x)
        movement = float(np.linalg.norm(Ax_new - Ax))
        Ax = Ax_new
        w = prox_separable(h, Ax - u / rho, 1.0 / rho)
        residual = Ax - w
        u = u - alpha * residual
        primal = float(np.linalg.norm(residual))
        rec.record(k, h.value(Ax) + g.value(x), movement, primal, inner)
        if movement <= opts.tol_optimality and primal <= opts.tol_optimality:
            reason = "원시 잔차와 이동량이 허용 오차 이하"
            break
    return x, w, u, rec.finish(k, reason)
