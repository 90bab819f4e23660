"""
선형 연산자와 부분 최소화 선형 시스템

- Dense / HadamardStack / Stack / PairwiseDifference / Identity 연산자
- 빠른 Walsh-Hadamard 변환 (정규화된 직교 변환)
- 이차 정규화항 g (Zero / Ridge / Tracking)
- x(w) = argmin_x g(x) + (1/2ν)‖Ax − w‖² 풀이 (direct / cg / lsqr / orthogonal)
"""

import os
import logging
import threading
from abc import ABC, abstractmethod
from typing import Any, Dict, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator

from .models import DimensionError, InnerSolveError
from .utils import is_power_of_two

logger = logging.getLogger(__name__)

CG_TOL = float(os.getenv("RS_CG_TOL", "1e-10"))
CG_MAX_ITER = int(os.getenv("RS_CG_MAX_ITER", "1000"))

# Cholesky 대각 성분 비율이 이 값보다 작으면 특이 행렬로 취급
SINGULAR_PIVOT_RATIO = 1e-7


# ===== 빠른 Hadamard 변환 =====
def _butterfly(values: np.ndarray) -> np.ndarray:
    y = np.array(values, dtype=float)
    n = y.shape[-1]
    lead = y.shape[:-1]
    h = 1
    while h < n:
        y = y.reshape(*lead, n // (2 * h), 2, h)
        top = y[..., 0, :]
        bottom = y[..., 1, :]
        y = np.stack((top + bottom, top - bottom), axis=-2)
        h *= 2
    return y.reshape(*lead, n) / np.sqrt(n)


def fast_hadamard(v: np.ndarray) -> np.ndarray:
    """정규화된 Walsh-Hadamard 변환 H_n v (H_n은 대칭, 직교, 자기 역원)"""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise DimensionError(f"1차원 벡터가 필요합니다: shape={v.shape}")
    if not is_power_of_two(v.size):
        raise DimensionError(f"길이가 2의 거듭제곱이 아닙니다: {v.size}")
    return _butterfly(v)


# ===== 연산자 =====
class LinearOperator(ABC):
    """A: R^n -> R^m. 생성 후 불변."""

    kind: str = "abstract"

    @property
    @abstractmethod
    def shape(self) -> Tuple[int, int]:
        ...

    @property
    def rows(self) -> int:
        return self.shape[0]

    @property
    def cols(self) -> int:
        return self.shape[1]

    @abstractmethod
    def matvec(self, x: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def gram_diagonal(self) -> np.ndarray:
        """diag(AᵀA) (Jacobi 전처리용)"""

    def to_dense(self) -> np.ndarray:
        return np.column_stack([self.matvec(e) for e in np.eye(self.cols)]) if self.cols else np.zeros(self.shape)

    def solve_normal(self, rhs: np.ndarray, shift: float) -> Optional[np.ndarray]:
        """구조적 닫힌 형태로 (AᵀA + shift·I) x = rhs 풀이. 없으면 None."""
        return None

    def as_scipy(self) -> spla.LinearOperator:
        return spla.LinearOperator(self.shape, matvec=self.matvec, rmatvec=self.rmatvec, dtype=float)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(shape={self.shape})"


def apply(op: LinearOperator, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (op.cols,):
        raise DimensionError(f"{op!r}: 입력 길이 {x.shape} != ({op.cols},)")
    return op.matvec(x)


def adjoint(op: LinearOperator, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (op.rows,):
        raise DimensionError(f"{op!r}: 입력 길이 {y.shape} != ({op.rows},)")
    return op.rmatvec(y)


class Dense(LinearOperator):
    kind = "dense"

    def __init__(self, matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2:
            raise DimensionError(f"2차원 행렬이 필요합니다: shape={matrix.shape}")
        # 열 우선 저장
        self.matrix = np.asfortranarray(matrix)
        self.matrix.setflags(write=False)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.matrix.shape

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        return self.matrix.T @ y

    def gram_diagonal(self) -> np.ndarray:
        return np.einsum("ij,ij->j", self.matrix, self.matrix)

    def to_dense(self) -> np.ndarray:
        return np.array(self.matrix)


class Identity(LinearOperator):
    kind = "identity"

    def __init__(self, n: int):
        self.n = int(n)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.n, self.n)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return np.array(x, dtype=float)

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        return np.array(y, dtype=float)

    def gram_diagonal(self) -> np.ndarray:
        return np.ones(self.n)

    def to_dense(self) -> np.ndarray:
        return np.eye(self.n)

    def solve_normal(self, rhs: np.ndarray, shift: float) -> Optional[np.ndarray]:
        return rhs / (1.0 + shift)


class HadamardStack(LinearOperator):
    """
    A = [H_n S_1; ...; H_n S_k], S_j = diag(±1)
    AᵀA = k·I 이므로 부분 최소화는 닫힌 형태.
    transform_count: 지금까지 수행한 FHT 횟수 (진단용)
    """

    kind = "hadamard_stack"

    def __init__(self, signs: np.ndarray):
        signs = np.atleast_2d(np.asarray(signs, dtype=float))
        if not np.all(np.abs(signs) == 1.0):
            raise ValueError("부호 대각 성분은 ±1이어야 합니다")
        if not is_power_of_two(signs.shape[1]):
            raise DimensionError(f"n이 2의 거듭제곱이 아닙니다: {signs.shape[1]}")
        self.signs = signs
        self.signs.setflags(write=False)
        self.k, self.n = signs.shape
        self.transform_count = 0
        self._count_lock = threading.Lock()

    def _count(self, transforms: int) -> None:
        with self._count_lock:
            self.transform_count += transforms

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.k * self.n, self.n)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        self._count(self.k)
        return _butterfly(self.signs * x[None, :]).reshape(-1)

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        self._count(self.k)
        blocks = _butterfly(y.reshape(self.k, self.n))
        return np.sum(self.signs * blocks, axis=0)

    def gram_diagonal(self) -> np.ndarray:
        return np.full(self.n, float(self.k))

    def solve_normal(self, rhs: np.ndarray, shift: float) -> Optional[np.ndarray]:
        return rhs / (self.k + shift)


class Stack(LinearOperator):
    """세로로 쌓은 연산자 [A_1; A_2; ...]"""

    kind = "stack"

    def __init__(self, ops: Sequence[LinearOperator]):
        ops = list(ops)
        if not ops:
            raise ValueError("빈 Stack")
        cols = {op.cols for op in ops}
        if len(cols) != 1:
            raise DimensionError(f"열 수가 서로 다릅니다: {sorted(cols)}")
        self.ops = tuple(ops)
        self._offsets = np.cumsum([0] + [op.rows for op in ops])

    @property
    def shape(self) -> Tuple[int, int]:
        return (int(self._offsets[-1]), self.ops[0].cols)

    def blocks(self, y: np.ndarray):
        return [y[self._offsets[i]:self._offsets[i + 1]] for i in range(len(self.ops))]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return np.concatenate([op.matvec(x) for op in self.ops])

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        return sum(op.rmatvec(block) for op, block in zip(self.ops, self.blocks(y)))

    def gram_diagonal(self) -> np.ndarray:
        return sum(op.gram_diagonal() for op in self.ops)

    def to_dense(self) -> np.ndarray:
        return np.vstack([op.to_dense() for op in self.ops])


class PairwiseDifference(LinearOperator):
    """
    군집화용 차분 연산자 D: X (m_p×d, 행 우선으로 펼침) -> (x_i − x_j)_{i<j}
    쌍 순서는 사전식 (0,1), (0,2), ..., (m_p−2, m_p−1).
    DᵀD = m_p·I − 𝟙𝟙ᵀ (특성별)
    """

    kind = "pairwise_difference"

    def __init__(self, num_points: int, dim: int):
        if num_points < 2:
            raise ValueError(f"점이 2개 이상 필요합니다: {num_points}")
        self.num_points = int(num_points)
        self.dim = int(dim)
        self.first, self.second = np.triu_indices(self.num_points, k=1)
        self.num_pairs = self.first.size

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.num_pairs * self.dim, self.num_points * self.dim)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        points = x.reshape(self.num_points, self.dim)
        return (points[self.first] - points[self.second]).reshape(-1)

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        diffs = y.reshape(self.num_pairs, self.dim)
        out = np.zeros((self.num_points, self.dim))
        np.add.at(out, self.first, diffs)
        np.add.at(out, self.second, -diffs)
        return out.reshape(-1)

    def gram_diagonal(self) -> np.ndarray:
        return np.full(self.num_points * self.dim, float(self.num_points - 1))

    def solve_normal(self, rhs: np.ndarray, shift: float) -> Optional[np.ndarray]:
        # (m_p + s)I − 𝟙𝟙ᵀ 의 역행렬 (Sherman-Morrison), s = 0이면 특이
        if shift <= 0.0:
            return None
        r = rhs.reshape(self.num_points, self.dim)
        total = r.sum(axis=0, keepdims=True)
        x = (r + total / shift) / (self.num_points + shift)
        return x.reshape(-1)


# ===== 이차 정규화항 =====
class QuadraticRegularizer(BaseModel):
    """
    g(x):
      zero     — 0
      ridge    — (λ/2)‖x‖²
      tracking — ½‖x − U‖²  (U는 펼친 기준점)
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    kind: Literal["zero", "ridge", "tracking"] = "zero"
    lam: float = Field(0.0, ge=0.0)
    reference: Optional[np.ndarray] = None

    @model_validator(mode="after")
    def _check_reference(self):
        if self.kind == "tracking" and self.reference is None:
            raise ValueError("tracking 정규화항에는 reference가 필요합니다")
        return self

    @classmethod
    def zero(cls) -> "QuadraticRegularizer":
        return cls(kind="zero")

    @classmethod
    def ridge(cls, lam: float) -> "QuadraticRegularizer":
        return cls(kind="ridge", lam=lam)

    @classmethod
    def tracking(cls, reference: np.ndarray) -> "QuadraticRegularizer":
        return cls(kind="tracking", lam=1.0, reference=np.asarray(reference, dtype=float).reshape(-1))

    @property
    def curvature(self) -> float:
        """∇²g = c·I 의 c"""
        if self.kind == "zero":
            return 0.0
        return 1.0 if self.kind == "tracking" else float(self.lam)

    @property
    def dimension(self) -> Optional[int]:
        return None if self.reference is None else int(self.reference.size)

    def center(self, n: int) -> np.ndarray:
        return self.reference if self.reference is not None else np.zeros(n)

    def value(self, x: np.ndarray) -> float:
        if self.kind == "zero":
            return 0.0
        if self.kind == "ridge":
            return 0.5 * self.lam * float(x @ x)
        d = x - self.reference
        return 0.5 * float(d @ d)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return self.curvature * (x - self.center(x.size))


# ===== 부분 최소화 풀이 정책 =====
LsMethod = Literal["direct", "cg", "lsqr", "orthogonal"]


class LsSolvePolicy(BaseModel):
    """
    부분 최소화 선형 시스템 풀이 방식.
    direct: 구조적 닫힌 형태 또는 Cholesky 분해 (ν, λ가 바뀔 때까지 캐시)
    cg: Jacobi 전처리 켤레 기울기, lsqr: 감쇠 LSQR, orthogonal: AᵀA = kI 전용
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    method: LsMethod = "direct"
    tol: float = Field(CG_TOL, gt=0.0)
    max_iter: int = Field(CG_MAX_ITER, ge=1)

    _factor: Dict[str, Any] = PrivateAttr(default_factory=dict)
    _lock: Any = PrivateAttr(default_factory=threading.Lock)

    def cached_factor(self, op: LinearOperator, shift: float):
        """(AᵀA + shift·I)의 Cholesky 인자. 캐시 키가 바뀌면 다시 분해, 특이하면 None."""
        key = (id(op), float(shift))
        with self._lock:
            if self._factor.get("key") == key:
                return self._factor["factor"]
            gram = op.to_dense()
            gram = gram.T @ gram
            gram[np.diag_indices_from(gram)] += shift
            factor = None
            try:
                c, lower = scipy.linalg.cho_factor(gram, check_finite=False)
                pivots = np.abs(np.diag(c))
                if pivots.size and pivots.min() > SINGULAR_PIVOT_RATIO * pivots.max():
                    factor = (c, lower)
            except np.linalg.LinAlgError:
                factor = None
            self._factor.clear()
            self._factor.update(key=key, factor=factor)
            return factor

    def clear_cache(self) -> None:
        with self._lock:
            self._factor.clear()


def _check_partial_inputs(op: LinearOperator, g: QuadraticRegularizer, w: np.ndarray, nu: float) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (op.rows,):
        raise DimensionError(f"w 길이 {w.shape} != A 행 수 ({op.rows},)")
    if g.dimension is not None and g.dimension != op.cols:
        raise DimensionError(f"g 기준점 길이 {g.dimension} != A 열 수 {op.cols}")
    if not nu > 0.0:
        raise ValueError(f"ν는 양수여야 합니다: {nu}")
    return w


def _min_norm_lsqr(op: LinearOperator, rhs_target: np.ndarray, max_iter: int) -> Tuple[np.ndarray, int]:
    result = spla.lsqr(op.as_scipy(), rhs_target, atol=1e-14, btol=1e-14, iter_lim=max(max_iter, 10 * op.cols))
    return result[0], int(result[2])


def solve_partial(
    op: LinearOperator,
    g: QuadraticRegularizer,
    w: np.ndarray,
    nu: float,
    policy: Optional[LsSolvePolicy] = None,
    x0: Optional[np.ndarray] = None,
    return_info: bool = False,
) -> Union[np.ndarray, Tuple[np.ndarray, int]]:
    """
    x(w) = argmin_x g(x) + (1/2ν)‖Ax − w‖²
    정규 방정식: (AᵀA + ν·c·I) x = Aᵀw + ν·c·u

    Args:
        x0: 반복법 warm start
        return_info: True면 (x, 내부 반복 수) 반환

    Raises:
        DimensionError, InnerSolveError
    """
    policy = policy or LsSolvePolicy()
    w = _check_partial_inputs(op, g, w, nu)
    n = op.cols
    c = g.curvature
    shift = nu * c
    center = g.center(n)
    rhs = op.rmatvec(w) + shift * center
    inner = 0

    if policy.method == "orthogonal":
        if not isinstance(op, (HadamardStack, Identity)):
            raise ValueError(f"orthogonal 풀이는 HadamardStack/Identity 전용입니다: {op!r}")
        x = op.solve_normal(rhs, shift)

    elif policy.method == "direct":
        x = op.solve_normal(rhs, shift)
        if x is None:
            factor = policy.cached_factor(op, shift)
            if factor is not None:
                x = scipy.linalg.cho_solve(factor, rhs, check_finite=False)
            else:
                # g = 0이고 A가 열 랭크 부족: 최소 노름 해
                logger.warning(f"⚠️ 특이 정규 행렬 ({op!r}), 최소 노름 LSQR로 대체")
                x, inner = _min_norm_lsqr(op, w, policy.max_iter)

    elif policy.method == "cg":
        diag = op.gram_diagonal() + shift
        diag = np.where(diag > 0.0, diag, 1.0)
        normal = spla.LinearOperator(
            (n, n), matvec=lambda z: op.rmatvec(op.matvec(z)) + shift * z, dtype=float
        )
        preconditioner = spla.LinearOperator((n, n), matvec=lambda z: z / diag, dtype=float)
        counter = {"iters": 0}

        def _count(_):
            counter["iters"] += 1

        # ‖∇_x‖ = ‖Mx − b‖/ν ≤ tol
        x, status = spla.cg(
            normal, rhs, x0=x0, rtol=0.0, atol=policy.tol * nu,
            maxiter=policy.max_iter, M=preconditioner, callback=_count,
        )
        inner = counter["iters"]
        if status < 0:
            raise InnerSolveError(f"CG 입력 오류 (status={status})")
        if status > 0:
            logger.warning(f"⚠️ CG가 {policy.max_iter}회 내에 허용 오차에 도달하지 못함")

    elif policy.method == "lsqr":
        # x = u + z, min ‖Az − (w − Au)‖² + (ν c)‖z‖²
        target = w - op.matvec(center) if c > 0.0 else w
        z0 = None if x0 is None else np.asarray(x0, dtype=float) - center
        result = spla.lsqr(
            op.as_scipy(), target, damp=float(np.sqrt(shift)), atol=policy.tol, btol=policy.tol,
            iter_lim=policy.max_iter, x0=z0,
        )
        x = result[0] + (center if c > 0.0 else 0.0)
        inner = int(result[2])

    else:
        raise ValueError(f"알 수 없는 풀이 방식: {policy.method}")

    if not np.all(np.isfinite(x)):
        raise InnerSolveError(f"부분 최소화 결과에 NaN/Inf ({policy.method})")
    return (x, inner) if return_info else x


def projection_residual(op: LinearOperator, w: np.ndarray, policy: Optional[LsSolvePolicy] = None) -> np.ndarray:
    """(I − A A†) w : range(A)에 직교하는 성분"""
    x = solve_partial(op, QuadraticRegularizer.zero(), w, 1.0, policy)
    return np.asarray(w, dtype=float) - op.matvec(x)
