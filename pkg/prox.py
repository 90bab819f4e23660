"""
분리 가능한 비매끄러운 항 h와 근접 연산자(prox)

스칼라/블록 커널은 모두 numpy 벡터화. 비볼록 커널은 후보 열거로 전역 최소점을 구한다.
"""

import os
import logging
from abc import ABC, abstractmethod
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from .models import DimensionError, InfeasibleError
from .utils import sign_nonneg

logger = logging.getLogger(__name__)

NEWTON_MAX_ITER = int(os.getenv("RS_NEWTON_MAX_ITER", "50"))
NEWTON_TOL = 1e-12
BISECTION_ITERS = 200
TIE_RTOL = 1e-14
WEIGHT_TOL = 1e-8


def _flat(*args) -> Tuple[Tuple[int, ...], List[np.ndarray]]:
    arrays = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in args))
    return arrays[0].shape, [a.ravel() for a in arrays]


def _shaped(result: np.ndarray, shape: Tuple[int, ...]):
    return float(result[0]) if shape == () else result.reshape(shape)


def _pick_candidates(candidates: np.ndarray, objective: np.ndarray, direction: np.ndarray) -> np.ndarray:
    """
    후보 (K, N) 중 목적값 최소를 선택.
    동률이면 direction과 같은 부호인 후보, 그다음 direction 방향으로 더 큰 값.
    """
    best = np.min(objective, axis=0)
    tied = objective <= best + TIE_RTOL * (1.0 + np.abs(best))
    matched = tied & (candidates * direction >= 0.0)
    pool = np.where(np.any(matched, axis=0), matched, tied)
    score = np.where(pool, candidates * direction, -np.inf)
    choice = np.argmax(score, axis=0)
    return np.take_along_axis(candidates, choice[None, :], axis=0)[0]


# ===== 스칼라 커널 =====
def prox_abs_deviation(v, mu, b):
    """argmin_w (1/2μ)(w−v)² + |w − b| (b만큼 이동한 soft-threshold)"""
    shape, (v, mu, b) = _flat(v, mu, b)
    d = v - b
    return _shaped(b + np.sign(d) * np.maximum(np.abs(d) - mu, 0.0), shape)


def prox_elastic_deviation(v, mu, b, alpha):
    """argmin_w (1/2μ)(w−v)² + |w − b| + (α/2)(w − b)²"""
    shape, (v, mu, b, alpha) = _flat(v, mu, b, alpha)
    d = v - b
    return _shaped(b + np.sign(d) * np.maximum(np.abs(d) - mu, 0.0) / (1.0 + alpha * mu), shape)


def prox_modulus_deviation(v, mu, b):
    """argmin_w (1/2μ)(w−v)² + ||w| − b|, 구간별 정류점 + 꺾인 점(±b, 0) 열거"""
    shape, (v, mu, b) = _flat(v, mu, b)
    always = np.ones_like(v, dtype=bool)
    candidates = np.stack([v - mu, v + mu, v - mu, v + mu, b, -b, np.zeros_like(v)])
    valid = np.stack([
        v - mu >= b,                               # w ≥ b
        (v + mu >= 0.0) & (v + mu <= b),           # 0 ≤ w ≤ b
        (v - mu >= -b) & (v - mu <= 0.0),          # −b ≤ w ≤ 0
        v + mu <= -b,                              # w ≤ −b
        always, always, always,
    ])
    objective = (candidates - v) ** 2 / (2.0 * mu) + np.abs(np.abs(candidates) - b)
    objective = np.where(valid, objective, np.inf)
    return _shaped(_pick_candidates(candidates, objective, sign_nonneg(v)), shape)


def prox_squared_modulus(v, mu, b):
    """argmin_w (1/2μ)(w−v)² + ½(|w| − b)²"""
    shape, (v, mu, b) = _flat(v, mu, b)
    positive = (v + mu * b) / (1.0 + mu)
    negative = (v - mu * b) / (1.0 + mu)
    candidates = np.stack([positive, negative, np.zeros_like(v)])
    valid = np.stack([positive >= 0.0, negative <= 0.0, np.ones_like(v, dtype=bool)])
    objective = (candidates - v) ** 2 / (2.0 * mu) + 0.5 * (np.abs(candidates) - b) ** 2
    objective = np.where(valid, objective, np.inf)
    return _shaped(_pick_candidates(candidates, objective, sign_nonneg(v)), shape)


def _logistic_root(s: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """(t − s)/μ − σ(−t) = 0 의 유일근, 안전장치 Newton (근 ∈ (s, s + μ))"""
    lo = s.copy()
    hi = s + mu
    t = s + 0.5 * mu
    for _ in range(NEWTON_MAX_ITER):
        residual = (t - s) / mu - expit(-t)
        if np.all(np.abs(residual) <= NEWTON_TOL * (1.0 + np.abs(s) / mu)):
            break
        lo = np.where(residual < 0.0, t, lo)
        hi = np.where(residual > 0.0, t, hi)
        slope = 1.0 / mu + expit(t) * expit(-t)
        step = t - residual / slope
        t = np.where((step > lo) & (step < hi), step, 0.5 * (lo + hi))
    return t


def prox_logistic(v, mu, label):
    """argmin_w (1/2μ)(w−v)² + log(1 + exp(−label·w)), label ∈ {±1}"""
    shape, (v, mu, label) = _flat(v, mu, label)
    if not np.all(np.abs(label) == 1.0):
        raise ValueError("label은 ±1이어야 합니다")
    # t = label·w 좌표에서 풀어 (−v, −label) 대칭을 정확히 유지
    return _shaped(label * _logistic_root(label * v, mu), shape)


def prox_symmetric_logistic(v, mu):
    """argmin_w (1/2μ)(w−v)² + log(1 + exp(−|w|)) = sign(v)·t̂, t̂ ∈ (|v|, |v| + μ/2]"""
    shape, (v, mu) = _flat(v, mu)
    return _shaped(sign_nonneg(v) * _logistic_root(np.abs(v), mu), shape)


def _soft(x, threshold):
    return np.sign(x) * np.maximum(np.abs(x) - threshold, 0.0)


def prox_min_abs_pair(v1, v2, mu, a, b):
    """
    argmin_{z1,z2} (1/2μ)[(z1−v1)² + (z2−v2)²] + |min(z1 + a, z2 + b)|
    후보: 첫 항 활성 / 둘째 항 활성 / 경계 z1 + a = z2 + b. 동률이면 (z1, z2) 사전식 최소.
    """
    shape, (v1, v2, mu, a, b) = _flat(v1, v2, mu, a, b)
    p_target = v1 + a
    q_target = v2 + b
    seam = _soft(0.5 * (p_target + q_target), 0.5 * mu)
    p_cands = np.stack([_soft(p_target, mu), p_target, seam])
    q_cands = np.stack([q_target, _soft(q_target, mu), seam])
    valid = np.stack([p_cands[0] <= q_cands[0], q_cands[1] <= p_cands[1], np.ones_like(seam, dtype=bool)])
    objective = ((p_cands - p_target) ** 2 + (q_cands - q_target) ** 2) / (2.0 * mu)
    objective = np.where(valid, objective + np.abs(np.minimum(p_cands, q_cands)), np.inf)

    z1_cands = p_cands - a
    z2_cands = q_cands - b
    best = objective.min(axis=0)
    tied = objective <= best + TIE_RTOL * (1.0 + np.abs(best))
    key1 = np.where(tied, z1_cands, np.inf)
    key2 = np.where(tied & (key1 <= key1.min(axis=0)), z2_cands, np.inf)
    choice = np.argmin(key2, axis=0)[None, :]
    z1 = np.take_along_axis(z1_cands, choice, axis=0)[0]
    z2 = np.take_along_axis(z2_cands, choice, axis=0)[0]
    return _shaped(z1, shape), _shaped(z2, shape)


def _block_column(mu):
    return np.asarray(mu, dtype=float).reshape(-1, 1) if np.ndim(mu) else float(mu)


def prox_group_l2(v, mu):
    """블록 축소 v·max(1 − μ/‖v‖, 0). v는 (d,) 또는 (B, d)"""
    v = np.asarray(v, dtype=float)
    blocks = np.atleast_2d(v)
    norms = np.linalg.norm(blocks, axis=1, keepdims=True)
    scale = np.maximum(1.0 - _block_column(mu) / np.maximum(norms, np.finfo(float).tiny), 0.0)
    return (blocks * scale).reshape(v.shape)


def scad_truncated_value(d, kappa) -> np.ndarray:
    """ρ(d; κ) = ‖d‖ (‖d‖ ≤ κ), 0 (‖d‖ > κ). d는 (d,) 또는 (B, d)"""
    norms = np.linalg.norm(np.atleast_2d(d), axis=1)
    return np.where(norms <= kappa, norms, 0.0)


def prox_scad_truncated(v, mu, kappa):
    """
    argmin_d (1/2μ)‖d − v‖² + ρ(d; κ)
    후보: 공 ‖d‖ ≤ κ 안의 축소 해, ‖v‖ > κ일 때 항등(목적값 0). 동률이면 항등.
    """
    v = np.asarray(v, dtype=float)
    blocks = np.atleast_2d(v)
    mu_col = _block_column(mu)
    norms = np.linalg.norm(blocks, axis=1, keepdims=True)
    radius = np.clip(norms - mu_col, 0.0, kappa)
    shrunk = blocks * (radius / np.maximum(norms, np.finfo(float).tiny))
    # ‖v‖ > κ이면 항등의 목적값 0이 축소 해의 목적값 이하
    return np.where(norms > kappa, blocks, shrunk).reshape(v.shape)


# 격자 오라클용 스칼라 페널티
SCALAR_PENALTIES = {
    "abs_deviation": lambda w, b=0.0: np.abs(w - b),
    "elastic_deviation": lambda w, b=0.0, alpha=0.0: np.abs(w - b) + 0.5 * alpha * (w - b) ** 2,
    "modulus_deviation": lambda w, b=0.0: np.abs(np.abs(w) - b),
    "squared_modulus": lambda w, b=0.0: 0.5 * (np.abs(w) - b) ** 2,
    "logistic": lambda w, label=1.0: np.logaddexp(0.0, -label * w),
    "symmetric_logistic": lambda w: np.logaddexp(0.0, -np.abs(w)),
}


def grid_prox_oracle(kind: str, v: float, mu: float, lo: float, hi: float, step: float, **params) -> float:
    """
    [lo, hi] 격자 위 (1/2μ)(w−v)² + h(w) 최소 격자점 (무차별 대입 검증용).
    격자는 양 끝점을 포함하고, step을 절반으로 줄여도 기존 격자점을 포함한다.
    """
    if kind not in SCALAR_PENALTIES:
        raise ValueError(f"알 수 없는 커널: {kind}")
    if not (hi > lo and step > 0.0 and mu > 0.0):
        raise ValueError(f"잘못된 격자: lo={lo}, hi={hi}, step={step}, μ={mu}")
    grid = np.linspace(lo, hi, int(round((hi - lo) / step)) + 1)
    values = (grid - v) ** 2 / (2.0 * mu) + SCALAR_PENALTIES[kind](grid, **params)
    return float(grid[int(np.argmin(values))])


# ===== 분리 가능한 h의 구성 요소 =====
class ProxSpan(ABC):
    """
    h의 한 구간: 단위(좌표, 쌍, 블록) 집합과 커널 종류, 단위별 가중치 μ ≥ 0.
    h_span(w) = Σ μ_i · h_i(w_i)
    """

    kind: str = "abstract"
    convex: bool = True
    coordinate_wise: bool = True
    unit_lipschitz: float = 1.0

    def __init__(self, indices: np.ndarray, weight=1.0):
        self.indices = np.asarray(indices, dtype=int)
        self.weight = np.broadcast_to(np.asarray(weight, dtype=float), (self.num_units,)).copy()
        if np.any(self.weight < 0.0):
            raise ValueError(f"{self.kind}: 가중치는 음수일 수 없습니다")

    @property
    def num_units(self) -> int:
        return self.indices.shape[0]

    @property
    def all_indices(self) -> np.ndarray:
        return self.indices.reshape(-1)

    @abstractmethod
    def unit_values(self, w: np.ndarray) -> np.ndarray:
        """가중치를 곱하지 않은 h_i(w) (단위별). w는 전체 벡터."""

    @abstractmethod
    def unit_prox(self, v: np.ndarray, mu: np.ndarray, active: np.ndarray) -> np.ndarray:
        """active 단위들의 prox. v는 이 구간 값 v[indices][active], mu > 0"""

    def value(self, w: np.ndarray) -> float:
        return float(np.sum(self.weight * self.unit_values(w)))

    def lipschitz_sq(self) -> float:
        return float(np.sum((self.weight * self.unit_lipschitz) ** 2))

    def prox_into(self, out: np.ndarray, v: np.ndarray, mu: np.ndarray) -> None:
        local = v[self.indices].copy()
        active = mu > 0.0
        if np.any(active):
            local[active] = self.unit_prox(local[active], mu[active], active)
        out[self.indices] = local


class _CoordinateSpan(ProxSpan):
    """좌표별 커널 공통부: 좌표별 파라미터 배열 보관"""

    def __init__(self, indices, weight=1.0, **params):
        super().__init__(np.asarray(indices, dtype=int).reshape(-1), weight)
        self.params = {
            name: np.broadcast_to(np.asarray(value, dtype=float), (self.num_units,)).copy()
            for name, value in params.items()
        }

    def unit_prox(self, v, mu, active):
        return self.kernel(v, mu, **{k: p[active] for k, p in self.params.items()})

    def unit_values(self, w):
        return self.penalty(w[self.indices], **self.params)

    @abstractmethod
    def kernel(self, v, mu, **params):
        ...

    @abstractmethod
    def penalty(self, z, **params):
        ...


class AbsDeviation(_CoordinateSpan):
    kind = "abs_deviation"

    def __init__(self, indices, b, weight=1.0):
        super().__init__(indices, weight, b=b)

    def kernel(self, v, mu, b):
        return prox_abs_deviation(v, mu, b)

    def penalty(self, z, b):
        return np.abs(z - b)


class ElasticDeviation(_CoordinateSpan):
    kind = "elastic_deviation"
    unit_lipschitz = np.inf

    def __init__(self, indices, b, alpha, weight=1.0):
        super().__init__(indices, weight, b=b, alpha=alpha)

    def kernel(self, v, mu, b, alpha):
        return prox_elastic_deviation(v, mu, b, alpha)

    def penalty(self, z, b, alpha):
        return np.abs(z - b) + 0.5 * alpha * (z - b) ** 2


class ModulusDeviation(_CoordinateSpan):
    kind = "modulus_deviation"
    convex = False

    def __init__(self, indices, b, weight=1.0):
        super().__init__(indices, weight, b=b)

    def kernel(self, v, mu, b):
        return prox_modulus_deviation(v, mu, b)

    def penalty(self, z, b):
        return np.abs(np.abs(z) - b)


class SquaredModulus(_CoordinateSpan):
    kind = "squared_modulus"
    convex = False
    unit_lipschitz = np.inf

    def __init__(self, indices, b, weight=1.0):
        super().__init__(indices, weight, b=b)

    def kernel(self, v, mu, b):
        return prox_squared_modulus(v, mu, b)

    def penalty(self, z, b):
        return 0.5 * (np.abs(z) - b) ** 2


class Logistic(_CoordinateSpan):
    kind = "logistic"

    def __init__(self, indices, labels, weight=1.0):
        super().__init__(indices, weight, label=labels)

    def kernel(self, v, mu, label):
        return prox_logistic(v, mu, label)

    def penalty(self, z, label):
        return np.logaddexp(0.0, -label * z)


class SymmetricLogistic(_CoordinateSpan):
    kind = "symmetric_logistic"
    convex = False
    unit_lipschitz = 0.5

    def __init__(self, indices, weight=1.0):
        super().__init__(indices, weight)

    def kernel(self, v, mu):
        return prox_symmetric_logistic(v, mu)

    def penalty(self, z):
        return np.logaddexp(0.0, -np.abs(z))


class MinAbsPair(ProxSpan):
    """|min(w_first + a, w_second + b)| (쌍 단위)"""

    kind = "min_abs_pair"
    convex = False
    coordinate_wise = False

    def __init__(self, first, second, a, b, weight=1.0):
        first = np.asarray(first, dtype=int).reshape(-1)
        second = np.asarray(second, dtype=int).reshape(-1)
        if first.shape != second.shape:
            raise DimensionError("쌍 인덱스 길이가 다릅니다")
        super().__init__(np.column_stack([first, second]), weight)
        self.a = np.broadcast_to(np.asarray(a, dtype=float), first.shape).copy()
        self.b = np.broadcast_to(np.asarray(b, dtype=float), first.shape).copy()

    def unit_values(self, w):
        return np.abs(np.minimum(w[self.indices[:, 0]] + self.a, w[self.indices[:, 1]] + self.b))

    def unit_prox(self, v, mu, active):
        z1, z2 = prox_min_abs_pair(v[:, 0], v[:, 1], mu, self.a[active], self.b[active])
        return np.column_stack([z1, z2])


class GroupL2(ProxSpan):
    """‖w_block‖₂ (블록 단위), blocks: (B, d) 인덱스"""

    kind = "group_l2"
    coordinate_wise = False

    def __init__(self, blocks, weight=1.0):
        super().__init__(np.atleast_2d(np.asarray(blocks, dtype=int)), weight)

    def unit_values(self, w):
        return np.linalg.norm(w[self.indices], axis=1)

    def unit_prox(self, v, mu, active):
        return prox_group_l2(v, mu)


class ScadTruncated(ProxSpan):
    """ρ(w_block; κ) (블록 단위, 비볼록, 불연속)"""

    kind = "scad_truncated"
    convex = False
    coordinate_wise = False
    unit_lipschitz = np.inf

    def __init__(self, blocks, kappa, weight=1.0):
        super().__init__(np.atleast_2d(np.asarray(blocks, dtype=int)), weight)
        if not kappa > 0.0:
            raise ValueError(f"κ는 양수여야 합니다: {kappa}")
        self.kappa = float(kappa)

    def unit_values(self, w):
        return scad_truncated_value(w[self.indices], self.kappa)

    def unit_prox(self, v, mu, active):
        return prox_scad_truncated(v, mu, self.kappa)


class SeparableNonsmooth:
    """h(w) = Σ_span h_span(w). 구간들은 {0, ..., m−1}을 정확히 분할해야 한다."""

    def __init__(self, spans: Sequence[ProxSpan], size: Optional[int] = None):
        self.spans: List[ProxSpan] = list(spans)
        covered = np.concatenate([s.all_indices for s in self.spans]) if self.spans else np.zeros(0, dtype=int)
        self.size = int(size if size is not None else covered.size)
        if covered.size != self.size or not np.array_equal(np.sort(covered), np.arange(self.size)):
            raise DimensionError(f"구간들이 0..{self.size - 1}을 정확히 분할하지 않습니다")

    @classmethod
    def abs_deviation(cls, b, weight=1.0) -> "SeparableNonsmooth":
        b = np.asarray(b, dtype=float)
        return cls([AbsDeviation(np.arange(b.size), b, weight)])

    @classmethod
    def modulus_deviation(cls, b, weight=1.0) -> "SeparableNonsmooth":
        b = np.asarray(b, dtype=float)
        return cls([ModulusDeviation(np.arange(b.size), b, weight)])

    @classmethod
    def squared_modulus(cls, b, weight=1.0) -> "SeparableNonsmooth":
        b = np.asarray(b, dtype=float)
        return cls([SquaredModulus(np.arange(b.size), b, weight)])

    @property
    def is_convex(self) -> bool:
        return all(s.convex for s in self.spans)

    @property
    def is_coordinate_wise(self) -> bool:
        return all(s.coordinate_wise for s in self.spans)

    @property
    def kinds(self) -> List[str]:
        return [s.kind for s in self.spans]

    @property
    def lipschitz(self) -> float:
        """ℓ2 기준 Lipschitz 상수 (무한대 가능)"""
        return float(np.sqrt(sum(s.lipschitz_sq() for s in self.spans)))

    def check_input(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if w.shape != (self.size,):
            raise DimensionError(f"h 입력 길이 {w.shape} != ({self.size},)")
        return w

    def value(self, w: np.ndarray) -> float:
        w = self.check_input(w)
        return float(sum(s.value(w) for s in self.spans))

    def coordinate_values(self, w: np.ndarray) -> np.ndarray:
        """H(w) = (μ_i h_i(w_i))_i, 좌표 분리 커널에서만 정의"""
        w = self.check_input(w)
        if not self.is_coordinate_wise:
            raise ValueError(f"좌표별 값은 좌표 분리 커널에서만 정의됩니다: {self.kinds}")
        out = np.empty(self.size)
        for s in self.spans:
            out[s.indices] = s.weight * s.unit_values(w)
        return out


def prox_separable(
    h: SeparableNonsmooth,
    v: np.ndarray,
    step: float,
    weights: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    prox_{step·h}(v). weights가 있으면 좌표별 prox_{step·weights_i·h_i}.
    유효 스텝이 0인 좌표는 입력 그대로 반환.
    """
    v = h.check_input(v)
    if not step > 0.0:
        raise ValueError(f"step은 양수여야 합니다: {step}")
    if weights is not None:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (h.size,):
            raise DimensionError(f"가중치 길이 {weights.shape} != ({h.size},)")
        if not h.is_coordinate_wise:
            raise ValueError("가중 prox는 좌표 분리 커널에서만 지원합니다")
        if not np.all(np.isfinite(weights)) or weights.min() < -WEIGHT_TOL or weights.max() > 1.0 + WEIGHT_TOL:
            raise ValueError(f"가중치는 [0, 1] 범위여야 합니다: [{weights.min()}, {weights.max()}]")
        weights = np.clip(weights, 0.0, 1.0)
    out = np.empty_like(v)
    for span in h.spans:
        mu = step * span.weight
        if weights is not None:
            mu = mu * weights[span.indices]
        span.prox_into(out, v, mu)
    return out


def project_capped_simplex(v: np.ndarray, tau: float) -> np.ndarray:
    """
    Δ_τ = {u : 0 ≤ u ≤ 1, Σu = τ} 로의 유클리드 사영.
    u = clip(v − θ, 0, 1), Σu = τ 인 θ를 이분법으로 찾는다.
    """
    v = np.asarray(v, dtype=float)
    m = v.size
    if not 0.0 <= tau <= m:
        raise InfeasibleError(f"τ={tau}는 [0, {m}] 밖입니다")
    if tau == 0.0:
        return np.zeros(m)
    if tau == m:
        return np.ones(m)
    lo = float(v.min()) - 1.0   # 합 = m
    hi = float(v.max())         # 합 = 0
    for _ in range(BISECTION_ITERS):
        theta = 0.5 * (lo + hi)
        if np.clip(v - theta, 0.0, 1.0).sum() > tau:
            lo = theta
        else:
            hi = theta
        if hi - lo <= 1e-15 * max(1.0, abs(theta)):
            break
    u = np.clip(v - 0.5 * (lo + hi), 0.0, 1.0)
    # 자유 좌표에 잔차를 나눠 합을 맞춘다
    free = (u > 0.0) & (u < 1.0)
    if np.any(free):
        u[free] = np.clip(u[free] + (tau - u.sum()) / np.count_nonzero(free), 0.0, 1.0)
    return u
