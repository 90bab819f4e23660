import os
import time
import uuid
from typing import Optional, Sequence

import numpy as np

DETERMINISTIC = os.getenv("RS_DETERMINISTIC", "0").lower() in ("1", "true", "yes")


# ===== 수치 헬퍼 =====
def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def make_rng(seed: Optional[int]) -> np.random.Generator:
    return np.random.default_rng(seed)


def sign_nonneg(v: np.ndarray) -> np.ndarray:
    """sign(v), 단 sign(0) = +1"""
    return np.where(np.asarray(v) >= 0.0, 1.0, -1.0)


def relative_error(x: np.ndarray, ref: np.ndarray) -> float:
    ref_norm = float(np.linalg.norm(ref))
    return float(np.linalg.norm(np.asarray(x) - ref)) / max(ref_norm, np.finfo(float).tiny)


def phase_error(x: np.ndarray, x_true: np.ndarray) -> float:
    """전역 부호 모호성을 제거한 상대 오차 min_s ‖x − s·x_true‖/‖x_true‖"""
    if not np.linalg.norm(x_true) > 0.0:
        raise ValueError("x_true가 0 벡터이면 위상 오차가 정의되지 않습니다")
    return min(relative_error(x, x_true), relative_error(x, -np.asarray(x_true)))


def same_partition(a: Sequence[int], b: Sequence[int]) -> bool:
    """라벨 번호와 무관하게 두 분할이 같은지"""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        return False
    forward, backward = {}, {}
    for x, y in zip(a.tolist(), b.tolist()):
        if forward.setdefault(x, y) != y or backward.setdefault(y, x) != x:
            return False
    return True


# ===== 타이밍 =====
def now_ms() -> float:
    return time.perf_counter() * 1000.0


def elapsed_ms(t0_ms: float, record: bool = True) -> float:
    if not record or DETERMINISTIC:
        return 0.0
    return round(now_ms() - t0_ms, 1)


def new_run_id() -> str:
    return str(uuid.uuid4())[:8]
