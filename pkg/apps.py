"""
응용 드라이버

- LAD 회귀 (이상치 포함 생성기, 최소제곱 기준선)
- 위상 복원 (Hadamard 스택, 스펙트럴 초기화, 절삭 변형)
- 준지도 로지스틱 회귀 (SSLR)
- 확률적 최단 경로 (SSP, 가치 반복)
- 볼록 / SCAD 군집화
- 정확한 RPCA (교대 최소화 + 절단 SVD)
"""

import os
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg as spla
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.sparse.csgraph import connected_components

from .linops import (
    Dense,
    HadamardStack,
    LinearOperator,
    LsSolvePolicy,
    PairwiseDifference,
    QuadraticRegularizer,
    Stack,
    solve_partial,
)
from .logger_config import app_logger
from .models import ContinuationSchedule, ConvergenceError, DimensionError, SolveOptions, SolverTrace, TraceRow
from .prox import (
    GroupL2,
    Logistic,
    MinAbsPair,
    ScadTruncated,
    SeparableNonsmooth,
    SymmetricLogistic,
    prox_abs_deviation,
)
from .relax import RelaxedProblem
from .solvers import TrimmedProblem, continuation, rs_pgd, trs_bcd
from .utils import elapsed_ms, is_power_of_two, make_rng, new_run_id, now_ms, phase_error, sign_nonneg

SVD_MAX_ITER = int(os.getenv("RS_SVD_MAX_ITER", "1000"))
VALUE_ITERATION_MAX_ITER = 1_000_000
CLUSTER_TOL = 1e-3


# ===== LAD 회귀 =====
def generate_lad_data(
    m: int,
    n: int,
    outlier_fraction: float = 0.1,
    noise: float = 0.1,
    outlier_magnitude: float = 10.0,
    cond: Optional[float] = None,
    seed: int = 0,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    b = A x_t + ε + o (ε ~ N(0, noise²), o는 ±outlier_magnitude 희소 이상치)
    cond를 주면 A의 특이값을 [1/cond, 1]·√m 로 등비 배치 (부정확 내부 풀이 실험용)

    Returns:
        (A, b, x_true)
    """
    if m <= n:
        raise DimensionError(f"LAD는 m > n이어야 합니다: m={m}, n={n}")
    if not 0.0 <= outlier_fraction <= 1.0:
        raise ValueError(f"이상치 비율은 [0, 1]: {outlier_fraction}")
    rng = make_rng(seed)
    A = rng.standard_normal((m, n))
    if cond is not None:
        U, _, Vt = scipy.linalg.svd(A, full_matrices=False)
        A = (U * (np.geomspace(1.0, 1.0 / cond, n) * np.sqrt(m))) @ Vt
    x_true = rng.standard_normal(n)
    b = A @ x_true + noise * rng.standard_normal(m)
    count = int(round(outlier_fraction * m))
    if count:
        idx = rng.choice(m, size=count, replace=False)
        b[idx] += outlier_magnitude * rng.choice([-1.0, 1.0], size=count)
    return A, b, x_true


def lad_setup(A: np.ndarray, b: np.ndarray, nu: float, policy: Optional[LsSolvePolicy] = None) -> RelaxedProblem:
    """h = Σ|w_i − b_i|, g = 0"""
    A = np.asarray(A, dtype=float)
    if A.shape[0] <= A.shape[1]:
        raise DimensionError(f"LAD는 m > n이어야 합니다: {A.shape}")
    return RelaxedProblem(
        h=SeparableNonsmooth.abs_deviation(b), A=Dense(A), nu=nu, policy=policy or LsSolvePolicy(),
    )


def generate_lad(
    m: int, n: int, nu: float = 1.0, outlier_fraction: float = 0.1, seed: int = 0,
    policy: Optional[LsSolvePolicy] = None, **kwargs,
) -> Tuple[RelaxedProblem, np.ndarray]:
    A, b, x_true = generate_lad_data(m, n, outlier_fraction=outlier_fraction, seed=seed, **kwargs)
    return lad_setup(A, b, nu, policy), x_true


def lad_observations(p: RelaxedProblem) -> np.ndarray:
    """LAD 문제의 관측값 b"""
    return p.h.spans[0].params["b"]


def least_squares_baseline(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    return solve_partial(Dense(A), QuadraticRegularizer.zero(), b, 1.0)


def l1_objective(A: np.ndarray, b: np.ndarray, x: np.ndarray) -> float:
    return float(np.abs(np.asarray(A) @ x - b).sum())


# ===== 위상 복원 =====
class PhaseRetrievalInstance(BaseModel):
    """b = |A x*|, A = [H_n S_1; ...; H_n S_k] (실수, 잡음 없음)"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    operator: LinearOperator
    b: np.ndarray
    x_true: Optional[np.ndarray] = None

    @model_validator(mode="after")
    def _check(self):
        if self.b.shape != (self.operator.rows,):
            raise DimensionError(f"b 길이 {self.b.shape} != m={self.operator.rows}")
        if np.any(self.b < 0.0):
            raise ValueError("측정값 b는 음수일 수 없습니다")
        return self

    @property
    def n(self) -> int:
        return self.operator.cols

    @property
    def m(self) -> int:
        return self.operator.rows

    @property
    def k(self) -> int:
        return getattr(self.operator, "k", 1)

    @property
    def signs(self) -> Optional[np.ndarray]:
        return getattr(self.operator, "signs", None)

    def with_measurements(self, b: np.ndarray) -> "PhaseRetrievalInstance":
        return PhaseRetrievalInstance(operator=self.operator, b=np.asarray(b, dtype=float), x_true=self.x_true)


def phase_problem(
    inst: PhaseRetrievalInstance, nu: float = 1.0, squared: bool = False, policy: Optional[LsSolvePolicy] = None,
) -> RelaxedProblem:
    h = SeparableNonsmooth.squared_modulus(inst.b) if squared else SeparableNonsmooth.modulus_deviation(inst.b)
    if policy is None:
        policy = LsSolvePolicy(method="orthogonal" if isinstance(inst.operator, HadamardStack) else "direct")
    return RelaxedProblem(h=h, A=inst.operator, nu=nu, policy=policy)


def phase_setup(
    x_true: np.ndarray, k: int = 4, seed: int = 0, nu: float = 1.0,
) -> Tuple[PhaseRetrievalInstance, RelaxedProblem]:
    """부호 대각 S_j를 seed로 생성, b = |A x_true| (FHT로 계산)"""
    x_true = np.asarray(x_true, dtype=float)
    if not is_power_of_two(x_true.size):
        raise DimensionError(f"신호 길이가 2의 거듭제곱이 아닙니다: {x_true.size}")
    signs = make_rng(seed).choice([-1.0, 1.0], size=(k, x_true.size))
    op = HadamardStack(signs)
    inst = PhaseRetrievalInstance(operator=op, b=np.abs(op.matvec(x_true)), x_true=x_true)
    return inst, phase_problem(inst, nu)


def spectral_init(
    inst: PhaseRetrievalInstance, iters: int = 10, seed: int = 0, mask: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    M = Aᵀ diag(b²) A 의 주 고유벡터를 거듭제곱 반복으로 추정, ‖A x₀‖ = ‖b‖가 되도록 스케일.
    mask가 주어지면 그 측정만 사용 (절삭 초기화).
    """
    if iters < 1:
        raise ValueError(f"iters ≥ 1이어야 합니다: {iters}")
    A = inst.operator
    weights = inst.b ** 2
    if mask is not None:
        weights = np.where(mask, weights, 0.0)
    z = make_rng(seed).standard_normal(inst.n)
    for _ in range(iters):
        z = A.rmatvec(weights * A.matvec(z))
        norm = np.linalg.norm(z)
        if norm == 0.0:
            break
        z /= norm
    # mask가 있으면 사용한 측정끼리 에너지를 맞춘다
    keep = np.ones(inst.m, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    Az_norm = np.linalg.norm(A.matvec(z)[keep])
    b_norm = np.linalg.norm(inst.b[keep])
    return z * (b_norm / Az_norm) if Az_norm > 0.0 else z


def phase_solve(
    inst: PhaseRetrievalInstance,
    problem: RelaxedProblem,
    init_iters: int = 10,
    seed: int = 0,
    opts: Optional[SolveOptions] = None,
) -> Tuple[np.ndarray, SolverTrace, dict]:
    """스펙트럴 초기화 → w⁰ = A x⁰ → rs_pgd. info: phase_error, fht_count"""
    opts = opts or SolveOptions(max_iter=50, tol_optimality=1e-20)
    start_count = getattr(inst.operator, "transform_count", 0)
    x0 = spectral_init(inst, init_iters, seed)
    w, x, trace = rs_pgd(problem, problem.A.matvec(x0), opts, x0=x0)
    info = {"fht_count": float(getattr(inst.operator, "transform_count", 0) - start_count)}
    if inst.x_true is not None:
        info["phase_error"] = phase_error(x, inst.x_true)
        info["init_phase_error"] = phase_error(x0, inst.x_true)
    app_logger.info(f"🌊 phase_solve: iters={trace.iterations} " + " ".join(f"{k}={v:.3e}" for k, v in info.items()))
    return x, trace, info


def corrupt_measurements(
    b: np.ndarray, fraction: float = 0.3, value: float = 1000.0, seed: int = 0,
) -> Tuple[np.ndarray, np.ndarray]:
    """측정의 fraction 비율(내림)을 상수 value로 교체. (오염된 b, 오염 인덱스)"""
    b = np.asarray(b, dtype=float).copy()
    # 내림: 깨끗한 측정 수가 (1 − fraction)·m 이상
    count = int(np.floor(fraction * b.size))
    idx = np.sort(make_rng(seed).choice(b.size, size=count, replace=False))
    b[idx] = value
    return b, idx


def trimmed_phase(
    inst: PhaseRetrievalInstance,
    tau: float,
    gamma: float = 1.0,
    opts: Optional[SolveOptions] = None,
    nu: float = 1.0,
    init_iters: int = 10,
    seed: int = 0,
    squared: bool = True,
) -> Tuple[np.ndarray, np.ndarray, SolverTrace]:
    """
    절삭 위상 복원: trs_bcd with h_i(w) = ½(|w| − b_i)² (squared=False면 ||w| − b_i|).
    초기화는 b가 작은 τ개 측정만 쓰는 스펙트럴 초기화, v⁰도 같은 측정에 가중치 1 (나머지 0).
    """
    m = inst.m
    if not 0.0 <= tau <= m:
        raise ValueError(f"τ={tau}는 [0, {m}] 밖입니다")
    opts = opts or SolveOptions(max_iter=200, tol_optimality=1e-20)
    problem = phase_problem(inst, nu, squared=squared)
    tp = TrimmedProblem(relaxed=problem, tau=tau, gamma=gamma)
    order = np.argsort(inst.b, kind="stable")
    whole = int(np.floor(tau))
    v0 = np.zeros(m)
    v0[order[:whole]] = 1.0
    if whole < m:
        v0[order[whole]] = tau - whole
    x0 = spectral_init(inst, init_iters, seed, mask=v0 > 0.0)
    _, x, v, trace = trs_bcd(tp, problem.A.matvec(x0), v0, opts)
    return x, v, trace


# ===== 준지도 로지스틱 회귀 =====
def sslr_setup(
    features: np.ndarray,
    labels: np.ndarray,
    lam: float,
    gamma_weight: float,
    nu: float,
    policy: Optional[LsSolvePolicy] = None,
) -> RelaxedProblem:
    """
    앞 l개 행: log(1 + exp(−b_i w_i)) (가중치 1), 나머지: γ·log(1 + exp(−|w_i|)), g = (λ/2)‖x‖²
    """
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=float)
    m = features.shape[0]
    l = labels.size
    if l > m:
        raise DimensionError(f"라벨 수 {l} > 행 수 {m}")
    if not np.all(np.isin(labels, (-1.0, 1.0))):
        raise ValueError("라벨은 ±1이어야 합니다")
    if gamma_weight < 0.0:
        raise ValueError(f"γ는 음수일 수 없습니다: {gamma_weight}")
    spans = []
    if l:
        spans.append(Logistic(np.arange(l), labels, weight=1.0))
    if l < m:
        spans.append(SymmetricLogistic(np.arange(l, m), weight=gamma_weight))
    return RelaxedProblem(
        h=SeparableNonsmooth(spans, size=m), A=Dense(features), g=QuadraticRegularizer.ridge(lam),
        nu=nu, policy=policy or LsSolvePolicy(),
    )


def generate_sslr_data(
    m: int,
    n: int,
    labeled_fraction: float = 0.02,
    separation: float = 3.0,
    test_size: int = 1000,
    seed: int = 0,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    두 가우시안 (평균 ±(separation/2)·d, d는 임의 단위 벡터) 혼합.
    학습 행은 라벨 있는 행이 앞에 오도록 정렬.

    Returns:
        (features, labels_for_first_l, test_features, test_labels)
    """
    rng = make_rng(seed)
    direction = rng.standard_normal(n)
    direction /= np.linalg.norm(direction)

    def draw(count):
        y = rng.choice([-1.0, 1.0], size=count)
        return rng.standard_normal((count, n)) + np.outer(y, 0.5 * separation * direction), y

    features, y = draw(m)
    l = max(2, int(round(labeled_fraction * m)))
    # 라벨 있는 행에 두 부호가 모두 있도록
    y[0], y[1] = 1.0, -1.0
    features[0] = rng.standard_normal(n) + 0.5 * separation * direction
    features[1] = rng.standard_normal(n) - 0.5 * separation * direction
    test_features, test_labels = draw(test_size)
    return features, y[:l], test_features, test_labels


def sslr_accuracy(x: np.ndarray, features: np.ndarray, labels: np.ndarray) -> float:
    """sign⟨a, x⟩ = label 비율 (sign(0) = +1)"""
    predicted = sign_nonneg(np.asarray(features, dtype=float) @ x)
    return float(np.mean(predicted == np.asarray(labels, dtype=float)))


def sslr_solve(p: RelaxedProblem, opts: Optional[SolveOptions] = None) -> Tuple[np.ndarray, SolverTrace]:
    _, x, trace = rs_pgd(p, np.zeros(p.m), opts or SolveOptions(max_iter=2000, tol_optimality=1e-12))
    return x, trace


# ===== 확률적 최단 경로 =====
class SspInstance(BaseModel):
    """두 그래프(행동) U¹, U², 비용 C¹, C², 흡수 목표 노드"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    U1: np.ndarray
    U2: np.ndarray
    C1: np.ndarray
    C2: np.ndarray
    target: int = Field(..., ge=0)

    @model_validator(mode="after")
    def _check(self):
        n = self.U1.shape[0]
        for name in ("U1", "U2", "C1", "C2"):
            if getattr(self, name).shape != (n, n):
                raise DimensionError(f"{name} 크기가 ({n}, {n})이 아닙니다")
        for name in ("U1", "U2"):
            U = getattr(self, name)
            if np.any(U < 0.0) or np.any(np.abs(U.sum(axis=1) - 1.0) > 1e-12):
                raise ValueError(f"{name}의 각 행은 합이 1인 확률 분포여야 합니다")
            if U[self.target, self.target] != 1.0:
                raise ValueError(f"목표 노드 {self.target}는 흡수 상태여야 합니다 ({name})")
        if np.any(self.C1 < 0.0) or np.any(self.C2 < 0.0):
            raise ValueError("비용은 음수일 수 없습니다")
        if np.any(self.C1[self.target] != 0.0) or np.any(self.C2[self.target] != 0.0):
            raise ValueError("목표 노드의 비용은 0이어야 합니다")
        return self

    @property
    def n(self) -> int:
        return self.U1.shape[0]

    @property
    def v1(self) -> np.ndarray:
        return np.sum(self.U1 * self.C1, axis=1)

    @property
    def v2(self) -> np.ndarray:
        return np.sum(self.U2 * self.C2, axis=1)

    @property
    def free_nodes(self) -> np.ndarray:
        return np.delete(np.arange(self.n), self.target)


def generate_ssp(n: int = 25, seed: int = 0, degree: int = 3, cost_range: Tuple[float, float] = (1.0, 10.0)) -> SspInstance:
    """
    임의 SSP. 목표 = n−1. 그래프 1에서는 모든 i < n−1이 i+1로 가는 간선을 가지므로
    "항상 행동 1" 정책이 proper (구성에 의해 proper 정책 존재).
    """
    if n < 2:
        raise ValueError(f"노드가 2개 이상 필요합니다: {n}")
    rng = make_rng(seed)
    target = n - 1
    degree = min(degree, n)
    mats = []
    for graph in range(2):
        U = np.zeros((n, n))
        C = np.zeros((n, n))
        for i in range(n - 1):
            succ = rng.choice(n, size=degree, replace=False)
            if graph == 0 and i + 1 not in succ:
                succ[0] = i + 1
            U[i, succ] = rng.dirichlet(np.ones(degree))
            C[i, succ] = rng.uniform(*cost_range, size=degree)
        U[target, target] = 1.0
        mats.append((U, C))
    (U1, C1), (U2, C2) = mats
    return SspInstance(U1=U1, U2=U2, C1=C1, C2=C2, target=target)


def value_iteration(inst: SspInstance, tol: float = 1e-12, max_iter: int = VALUE_ITERATION_MAX_ITER) -> np.ndarray:
    """x ← min_k(U^k x + v^k), sup-norm 변화 ≤ tol까지"""
    x = np.zeros(inst.n)
    v1, v2 = inst.v1, inst.v2
    for k in range(1, max_iter + 1):
        x_new = np.minimum(inst.U1 @ x + v1, inst.U2 @ x + v2)
        change = float(np.max(np.abs(x_new - x)))
        x = x_new
        if change <= tol:
            return x
    raise ConvergenceError(f"가치 반복이 {max_iter}회 내에 수렴하지 않았습니다 (improper?)", iteration=max_iter)


def extract_policy(x: np.ndarray, inst: SspInstance) -> np.ndarray:
    """action_i = argmin_k ⟨u_i^k, x⟩ + v_i^k (동률이면 1)"""
    q1 = inst.U1 @ x + inst.v1
    q2 = inst.U2 @ x + inst.v2
    return np.where(q2 < q1, 2, 1)


def policy_evaluation(inst: SspInstance, policy: np.ndarray) -> np.ndarray:
    """고정 정책의 기대 비용: (I − U_π) x = v_π (목표 노드 x = 0)"""
    policy = np.asarray(policy)
    U = np.where((policy == 2)[:, None], inst.U2, inst.U1)
    v = np.where(policy == 2, inst.v2, inst.v1)
    free = inst.free_nodes
    x = np.zeros(inst.n)
    system = np.eye(free.size) - U[np.ix_(free, free)]
    x[free] = scipy.linalg.solve(system, v[free])
    return x


def ssp_setup(inst: SspInstance, nu: float, policy: Optional[LsSolvePolicy] = None) -> RelaxedProblem:
    """
    A = Stack(U¹ − I, U² − I)를 비목표 노드 열로 제한 (x_target ≡ 0),
    h = Σ_i |min(w_i¹ + v_i¹, w_i² + v_i²)|, g = 0
    """
    free = inst.free_nodes
    eye = np.eye(inst.n)
    A = Stack([Dense((inst.U1 - eye)[:, free]), Dense((inst.U2 - eye)[:, free])])
    h = SeparableNonsmooth([MinAbsPair(np.arange(inst.n), inst.n + np.arange(inst.n), inst.v1, inst.v2)])
    return RelaxedProblem(h=h, A=A, nu=nu, policy=policy or LsSolvePolicy())


def ssp_expand(x_free: np.ndarray, inst: SspInstance) -> np.ndarray:
    x = np.zeros(inst.n)
    x[inst.free_nodes] = x_free
    return x


def ssp_solve(
    inst: SspInstance, schedule: Optional[ContinuationSchedule] = None,
) -> Tuple[np.ndarray, List[SolverTrace]]:
    """x⁰ = 0에서 continuation, 전체 노드 값 벡터 반환"""
    schedule = schedule or ContinuationSchedule(
        nu0=1.0, factor=0.1, nu_min=1e-3, stage_options=SolveOptions(max_iter=5000, tol_optimality=1e-20),
    )
    p = ssp_setup(inst, schedule.nu0)
    _, x, traces = continuation(p, np.zeros(p.m), schedule)
    return ssp_expand(x, inst), traces


# ===== 군집화 =====
def clustering_setup(
    points: np.ndarray,
    lam: float,
    nu: float,
    rho: str = "l2",
    kappa: Optional[float] = None,
) -> RelaxedProblem:
    """
    ½Σ‖x_i − u_i‖² + λ Σ_{i<j} ρ(w_ij) + (1/2ν)Σ‖x_i − x_j − w_ij‖²
    ρ = "l2" (GroupL2) 또는 "scad" (ScadTruncated, κ 필요)
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] < 2:
        raise DimensionError(f"점 행렬 (m_p ≥ 2, d) 필요: {points.shape}")
    m_p, d = points.shape
    D = PairwiseDifference(m_p, d)
    blocks = np.arange(D.rows).reshape(D.num_pairs, d)
    if rho == "l2":
        span = GroupL2(blocks, weight=lam)
    elif rho == "scad":
        if kappa is None:
            raise ValueError("SCAD 군집화에는 κ가 필요합니다")
        span = ScadTruncated(blocks, kappa, weight=lam)
    else:
        raise ValueError(f"알 수 없는 ρ: {rho}")
    return RelaxedProblem(
        h=SeparableNonsmooth([span]), A=D, g=QuadraticRegularizer.tracking(points), nu=nu,
        policy=LsSolvePolicy(method="direct"),
    )


def clusters_from_w(w: np.ndarray, tol: float = CLUSTER_TOL, num_points: Optional[int] = None) -> np.ndarray:
    """‖w_ij‖ ≤ tol인 쌍을 간선으로 하는 그래프의 연결 성분 (첫 등장 순서로 라벨)"""
    if not tol > 0.0:
        raise ValueError(f"tol은 양수여야 합니다: {tol}")
    w = np.asarray(w, dtype=float)
    if num_points is None:
        pairs = w.shape[0] if w.ndim == 2 else None
        if pairs is None:
            raise ValueError("1차원 w에는 num_points가 필요합니다")
        num_points = int(round((1.0 + np.sqrt(1.0 + 8.0 * pairs)) / 2.0))
    first, second = np.triu_indices(num_points, k=1)
    blocks = w.reshape(first.size, -1)
    linked = np.linalg.norm(blocks, axis=1) <= tol
    graph = scipy.sparse.coo_matrix(
        (np.ones(np.count_nonzero(linked)), (first[linked], second[linked])), shape=(num_points, num_points),
    )
    _, labels = connected_components(graph, directed=False)
    _, first_seen = np.unique(labels, return_index=True)
    relabel = np.empty_like(labels)
    relabel[labels[np.sort(first_seen)]] = np.arange(first_seen.size)
    return relabel[labels]


def generate_clusters(
    num_clusters: int = 3,
    per_cluster: int = 10,
    dim: int = 2,
    separation: float = 20.0,
    spread: float = 0.1,
    seed: int = 0,
) -> Tuple[np.ndarray, np.ndarray]:
    """정다각형 꼭짓점(변 길이 = separation) 중심의 가우시안 군집. (points, planted labels)"""
    rng = make_rng(seed)
    angles = 2.0 * np.pi * np.arange(num_clusters) / num_clusters
    radius = separation / (2.0 * np.sin(np.pi / num_clusters)) if num_clusters > 1 else 0.0
    centers = np.zeros((num_clusters, dim))
    centers[:, 0] = radius * np.cos(angles)
    if dim > 1:
        centers[:, 1] = radius * np.sin(angles)
    labels = np.repeat(np.arange(num_clusters), per_cluster)
    points = centers[labels] + spread * rng.standard_normal((labels.size, dim))
    return points, labels


def clustering_solve(
    points: np.ndarray,
    lam: float,
    nu: float = 1.0,
    rho: str = "l2",
    kappa: Optional[float] = None,
    opts: Optional[SolveOptions] = None,
    w0: Optional[np.ndarray] = None,
    tol: float = CLUSTER_TOL,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, SolverTrace]:
    """
    x = U에서 시작 (w⁰ = DU). Returns: (x (m_p×d), w (쌍×d), labels, trace)
    """
    points = np.asarray(points, dtype=float)
    p = clustering_setup(points, lam, nu, rho, kappa)
    if w0 is None:
        w0 = p.A.matvec(points.reshape(-1))
    opts = opts or SolveOptions(max_iter=5000, tol_optimality=1e-16)
    w, x, trace = rs_pgd(p, w0, opts, x0=points.reshape(-1))
    labels = clusters_from_w(w.reshape(-1, points.shape[1]), tol, num_points=points.shape[0])
    return x.reshape(points.shape), w.reshape(-1, points.shape[1]), labels, trace


def clustering_path(
    points: np.ndarray,
    lambdas: List[float],
    nu: float = 1.0,
    rho: str = "l2",
    kappa: Optional[float] = None,
    opts: Optional[SolveOptions] = None,
) -> List[Tuple[float, np.ndarray, np.ndarray]]:
    """λ 격자를 따라 warm start. [(λ, labels, x), ...]"""
    path = []
    w = None
    for lam in lambdas:
        x, w_blocks, labels, _ = clustering_solve(points, lam, nu, rho, kappa, opts, w0=w)
        w = w_blocks.reshape(-1)
        path.append((float(lam), labels, x))
        app_logger.info(f"🧩 clustering_path λ={lam:.4g}: 군집 {labels.max() + 1}개")
    return path


# ===== RPCA =====
class RpcaInstance(BaseModel):
    """min ‖D − W‖₁ + (1/2ν)‖W − LR‖_F², rank(LR) ≤ k"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    D: np.ndarray
    rank: int = Field(..., ge=1)
    nu: float = Field(1.0, gt=0.0)

    @model_validator(mode="after")
    def _check(self):
        if self.D.ndim != 2 or self.rank > min(self.D.shape):
            raise DimensionError(f"rank {self.rank}는 1..min{self.D.shape} 범위여야 합니다")
        return self


def truncated_svd(
    M: np.ndarray, k: int, tol: float = 0.0, method: str = "auto",
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    랭크 k 절단 SVD (U, Σ, V): M ≈ U diag(Σ) Vᵀ, Σ 내림차순.
    method: "full" (LAPACK), "arpack" (scipy svds), "auto"는 크기로 선택.
    """
    M = np.asarray(M, dtype=float)
    if not 1 <= k <= min(M.shape):
        raise DimensionError(f"k={k}는 1..{min(M.shape)} 범위여야 합니다")
    if method == "auto":
        method = "arpack" if min(M.shape) > 200 and k < min(M.shape) // 4 else "full"
    if method == "full":
        try:
            U, s, Vt = scipy.linalg.svd(M, full_matrices=False)
        except np.linalg.LinAlgError:
            U, s, Vt = scipy.linalg.svd(M, full_matrices=False, lapack_driver="gesvd")
        return U[:, :k], s[:k], Vt[:k].T
    if method == "arpack":
        try:
            U, s, Vt = spla.svds(M, k=k, tol=tol, maxiter=SVD_MAX_ITER)
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceError(f"ARPACK SVD가 {SVD_MAX_ITER}회 내에 수렴하지 않았습니다") from exc
        order = np.argsort(s)[::-1]
        return U[:, order], s[order], Vt[order].T
    raise ValueError(f"알 수 없는 SVD 방식: {method}")


def rpca_objective(D: np.ndarray, W: np.ndarray, L: np.ndarray, R: np.ndarray, nu: float) -> float:
    r = W - L @ R
    return float(np.abs(D - W).sum() + np.sum(r * r) / (2.0 * nu))


def rpca_solve(
    inst: RpcaInstance,
    opts: Optional[SolveOptions] = None,
    nu_decay: float = 1.0,
    nu_min: float = 0.0,
    run_id: Optional[str] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, SolverTrace]:
    """
    교대 정확 최소화:
      W ← D + soft(LR − D, ν)      (‖· − D‖₁의 prox at LR)
      (L, R) ← W의 랭크 k 절단 SVD, L = UΣ^{1/2}, R = Σ^{1/2}Vᵀ
    초기값: (L, R) = truncated_svd(D, k), W = D.
    nu_decay < 1이면 매 sweep 후 ν ← max(ν·nu_decay, nu_min).
    각 sweep은 그 sweep의 ν에서 목적값을 늘리지 않는다 (고정 ν이면 목적값 열이 단조).
    """
    opts = opts or SolveOptions(max_iter=25, tol_optimality=1e-12)
    if not 0.0 < nu_decay <= 1.0:
        raise ValueError(f"nu_decay는 (0, 1]: {nu_decay}")
    run_id = run_id or new_run_id()
    app_logger.info(f"🎬 [{run_id}] rpca_solve: D={inst.D.shape}, rank={inst.rank}, ν={inst.nu}, decay={nu_decay}")
    t0 = now_ms()
    D = inst.D
    k = inst.rank
    nu = inst.nu

    def split(M, iteration):
        try:
            U, s, V = truncated_svd(M, k)
        except ConvergenceError as exc:
            raise ConvergenceError(f"sweep {iteration}: {exc}", iteration=iteration) from exc
        root = np.sqrt(s)
        return U * root, root[:, None] * V.T

    L, R = split(D, 0)
    W = D.copy()
    trace = SolverTrace()
    current = rpca_objective(D, W, L, R, nu)
    trace.append(TraceRow(iter=0, objective=current, optimality=float("nan"), ms=elapsed_ms(t0, opts.record_timing)))
    reason = None
    sweep = 0
    for sweep in range(1, opts.max_iter + 1):
        LR_prev = L @ R
        W = prox_abs_deviation(LR_prev, nu, D)
        L, R = split(W, sweep)
        change = float(np.linalg.norm(L @ R - LR_prev)) / max(float(np.linalg.norm(LR_prev)), 1e-300)
        current = rpca_objective(D, W, L, R, nu)
        trace.append(TraceRow(
            iter=sweep, objective=current, optimality=change,
            gap=float(np.linalg.norm(W - L @ R)), ms=elapsed_ms(t0, opts.record_timing),
        ))
        if change <= opts.tol_optimality:
            reason = "배경 변화량 허용 오차 이하"
            break
        nu = max(nu * nu_decay, nu_min) if nu_decay < 1.0 else nu
    trace.converged = reason is not None
    trace.stop_reason = reason or "최대 sweep 수 도달"
    app_logger.info(f"✅ [{run_id}] rpca_solve 종료: sweeps={sweep}, objective={current:.6e}, {trace.stop_reason}")
    return L, R, W, trace


def rpca_foreground(D: np.ndarray, L: np.ndarray, R: np.ndarray) -> np.ndarray:
    """전경 = D − LR (배경 LR을 뺀 잔차)"""
    return np.asarray(D, dtype=float) - L @ R


def foreground_mask(foreground: np.ndarray, D: np.ndarray, level: Optional[float] = None) -> np.ndarray:
    """이진 임계값 전경 마스크. 기본 level = 3 × median|D − median(D)|"""
    if level is None:
        level = 3.0 * float(np.median(np.abs(D - np.median(D))))
    return np.abs(foreground) >= level


def generate_rpca(
    m: int = 20, n: int = 30, rank: int = 2, spike_fraction: float = 0.05, magnitude: float = 10.0, seed: int = 0,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """D = L₀R₀ + 희소 스파이크. (D, L₀R₀, 스파이크 마스크)"""
    rng = make_rng(seed)
    low_rank = rng.standard_normal((m, rank)) @ rng.standard_normal((rank, n))
    mask = np.zeros(m * n, dtype=bool)
    mask[rng.choice(m * n, size=int(round(spike_fraction * m * n)), replace=False)] = True
    mask = mask.reshape(m, n)
    spikes = np.where(mask, magnitude * rng.choice([-1.0, 1.0], size=(m, n)), 0.0)
    return low_rank + spikes, low_rank, mask
