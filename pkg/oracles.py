"""
검증 오라클: 솔버 코드 경로를 쓰지 않는 독립 구현

- 유한 차분 기울기, capped simplex 무차별 열거
- 고정밀 LAD 기준해 (ADMM) 와 부분기울기 인증서
- 로지스틱 회귀 기준해 (Newton)
- 감소 부등식 감사
"""

import os
import logging
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.linalg
from scipy.special import expit

from .file_io import append_oracle_report
from .models import ConvergenceError, InfeasibleError, OracleReport, SolverTrace

logger = logging.getLogger(__name__)

AUDIT_LOG = os.getenv("RS_AUDIT_LOG") or None
BRUTEFORCE_MAX_DIM = 12


def record_report(report: OracleReport) -> OracleReport:
    """RS_AUDIT_LOG가 설정되어 있으면 CSV에 추가"""
    if AUDIT_LOG:
        append_oracle_report(report, AUDIT_LOG)
    if not report.passed:
        logger.warning(f"⚠️ 오라클 불일치: {report.quantity} gap={report.abs_gap:.3e} > tol={report.tolerance:.1e}")
    return report


def finite_difference_grad(fn: Callable[[np.ndarray], float], w: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """중심 차분 기울기 (오차 O(step²))"""
    w = np.asarray(w, dtype=float)
    grad = np.empty_like(w)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = step
        grad[i] = (fn(w + e) - fn(w - e)) / (2.0 * step)
    return grad


def capped_simplex_bruteforce(v: np.ndarray, tau: float, tol: float = 1e-12) -> np.ndarray:
    """
    {0 ≤ u ≤ 1, Σu = τ} 사영을 활성 집합 3^m 열거로 계산 (m ≤ 12).
    각 패턴(하한/상한/자유)의 KKT 해 중 가능해이면서 거리가 최소인 것.
    """
    v = np.asarray(v, dtype=float)
    m = v.size
    if m > BRUTEFORCE_MAX_DIM:
        raise ValueError(f"무차별 열거는 m ≤ {BRUTEFORCE_MAX_DIM}만 지원합니다: m={m}")
    if not 0.0 <= tau <= m:
        raise InfeasibleError(f"τ={tau}는 [0, {m}] 밖입니다")
    patterns = np.indices((3,) * m).reshape(m, -1).T  # 0: 하한, 1: 상한, 2: 자유
    free = patterns == 2
    upper = patterns == 1
    n_free = free.sum(axis=1)
    n_upper = upper.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = ((free * v).sum(axis=1) + n_upper - tau) / n_free
    u = np.where(free, v[None, :] - theta[:, None], upper.astype(float))
    in_box = np.all(~free | ((u >= -tol) & (u <= 1.0 + tol)), axis=1)
    feasible = np.where(n_free > 0, in_box, np.abs(n_upper - tau) <= tol)
    distance = np.where(feasible, ((u - v) ** 2).sum(axis=1), np.inf)
    best = int(np.argmin(distance))
    if not np.isfinite(distance[best]):
        raise InfeasibleError(f"가능한 패턴이 없습니다 (τ={tau})")
    return np.clip(u[best], 0.0, 1.0)


def lad_reference(
    A: np.ndarray,
    b: np.ndarray,
    rho: float = 1.0,
    tol: float = 1e-12,
    max_iter: int = 1_000_000,
) -> Tuple[np.ndarray, float]:
    """
    min ‖Ax − b‖₁ 고정밀 ADMM (r = Ax − b 분할, 스케일된 쌍대 y).
    원시/쌍대 잔차 ≤ tol·(1 + ‖b‖) 까지 반복.

    Returns:
        (x, ‖Ax − b‖₁)
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    factor = scipy.linalg.cho_factor(A.T @ A)
    scale = 1.0 + float(np.linalg.norm(b))
    x = scipy.linalg.cho_solve(factor, A.T @ b)
    r = A @ x - b
    y = np.zeros_like(b)
    for k in range(1, max_iter + 1):
        x = scipy.linalg.cho_solve(factor, A.T @ (b + r - y))
        Axb = A @ x - b
        r_prev = r
        shifted = Axb + y
        r = np.sign(shifted) * np.maximum(np.abs(shifted) - 1.0 / rho, 0.0)
        primal = Axb - r
        y = y + primal
        dual = rho * np.linalg.norm(A.T @ (r - r_prev))
        if np.linalg.norm(primal) <= tol * scale and dual <= tol * scale:
            logger.debug(f"🔎 lad_reference 수렴: {k}회")
            return x, float(np.abs(A @ x - b).sum())
    raise ConvergenceError(f"lad_reference가 {max_iter}회 내에 수렴하지 않았습니다", iteration=max_iter)


def lad_certificate(A: np.ndarray, b: np.ndarray, x: np.ndarray, zero_tol: float = 1e-8) -> Tuple[np.ndarray, float]:
    """
    LAD 최적성 인증: s ∈ ∂‖·‖₁(Ax − b) 중 ‖Aᵀs‖를 최소화하는 s.
    |r_i| > zero_tol이면 s_i = sign(r_i), 나머지는 최소제곱으로 결정.

    Returns:
        (s, ‖Aᵀs‖). 최적이면 ‖Aᵀs‖ ≈ 0 이고 max|s| ≤ 1.
    """
    A = np.asarray(A, dtype=float)
    r = A @ np.asarray(x, dtype=float) - np.asarray(b, dtype=float)
    nonzero = np.abs(r) > zero_tol
    s = np.sign(r) * nonzero
    if np.any(~nonzero):
        fixed = A[nonzero].T @ s[nonzero]
        s_zero, *_ = scipy.linalg.lstsq(A[~nonzero].T, -fixed)
        s[~nonzero] = s_zero
    return s, float(np.linalg.norm(A.T @ s))


def logistic_reference(
    features: np.ndarray,
    labels: np.ndarray,
    lam: float,
    tol: float = 1e-12,
    max_iter: int = 100,
) -> Tuple[np.ndarray, float]:
    """
    min Σ log(1 + exp(−y_i a_iᵀx)) + (λ/2)‖x‖², 감쇠 Newton.

    Returns:
        (x, 목적값)
    """
    F = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=float)

    def value(x):
        return float(np.logaddexp(0.0, -y * (F @ x)).sum() + 0.5 * lam * x @ x)

    x = np.zeros(F.shape[1])
    for k in range(max_iter):
        margin = y * (F @ x)
        grad = -F.T @ (y * expit(-margin)) + lam * x
        if np.linalg.norm(grad) <= tol:
            return x, value(x)
        curvature = expit(margin) * expit(-margin)
        hessian = F.T @ (F * curvature[:, None]) + lam * np.eye(F.shape[1])
        step = scipy.linalg.solve(hessian, grad, assume_a="pos")
        t = 1.0
        current = value(x)
        while value(x - t * step) > current - 0.25 * t * (grad @ step) and t > 1e-12:
            t *= 0.5
        x = x - t * step
    raise ConvergenceError(f"logistic_reference가 {max_iter}회 내에 수렴하지 않았습니다", iteration=max_iter)


def descent_auditor(trace: SolverTrace, nu: float, slack: float = 1e-9) -> OracleReport:
    """
    p(w^k) − p(w^{k−1}) ≤ −(ν/2)·T_k 를 모든 k에서 확인 (T_k = optimality 열).
    artifact_value: 최대 위반량 (양수 부분).
    """
    objective = trace.column("objective")
    optimality = trace.column("optimality")
    tolerance = slack * (1.0 + abs(objective[0])) if objective.size else slack
    violations = np.zeros(0)
    if objective.size > 1:
        violations = (objective[1:] - objective[:-1]) + 0.5 * nu * optimality[1:]
    worst = float(np.max(violations, initial=0.0))
    detail = ""
    bad = np.flatnonzero(violations > tolerance)
    if bad.size:
        detail = f"첫 위반 iter={trace.rows[int(bad[0]) + 1].iter}"
    return record_report(OracleReport(
        quantity="sufficient_decrease",
        oracle_value=0.0,
        artifact_value=max(worst, 0.0),
        tolerance=tolerance,
        detail=detail,
    ))


def compare(quantity: str, oracle_value: float, artifact_value: float, tolerance: float) -> OracleReport:
    return record_report(OracleReport(
        quantity=quantity, oracle_value=oracle_value, artifact_value=artifact_value, tolerance=tolerance,
    ))


def trimmed_rate_auditor(trace: SolverTrace, slack: float = 1e-9) -> OracleReport:
    """(1/k) Σ_{i≤k} T_i ≤ (1/k)[p(w⁰,v⁰) − p(w^k,v^k)] 를 모든 k에서 확인"""
    objective = trace.column("objective")
    stationarity = trace.column("optimality")[1:]
    tolerance = slack * (1.0 + abs(objective[0])) if objective.size else slack
    excess = np.cumsum(stationarity) - (objective[0] - objective[1:])
    worst = float(np.max(excess, initial=0.0))
    return record_report(OracleReport(
        quantity="trimmed_average_stationarity",
        oracle_value=0.0,
        artifact_value=max(worst, 0.0),
        tolerance=tolerance,
    ))


def bound_check(quantity: str, value: float, bound: float, slack: float = 0.0) -> OracleReport:
    """value ≤ bound 검증 (artifact_value는 초과분)"""
    return record_report(OracleReport(
        quantity=f"{quantity}_excess",
        oracle_value=0.0,
        artifact_value=max(value - bound, 0.0),
        tolerance=slack,
        detail=f"value={value:.6e} bound={bound:.6e}",
    ))
