"""
근접 연산자 테스트 (닫힌 형태 예제 + 격자 무차별 대입 비교)
"""

import numpy as np
import pytest

from .models import DimensionError, InfeasibleError
from .oracles import capped_simplex_bruteforce
from .prox import (
    SCALAR_PENALTIES,
    AbsDeviation,
    GroupL2,
    MinAbsPair,
    SeparableNonsmooth,
    SymmetricLogistic,
    grid_prox_oracle,
    project_capped_simplex,
    prox_abs_deviation,
    prox_elastic_deviation,
    prox_group_l2,
    prox_logistic,
    prox_min_abs_pair,
    prox_modulus_deviation,
    prox_scad_truncated,
    prox_separable,
    prox_squared_modulus,
    prox_symmetric_logistic,
    scad_truncated_value,
)

KERNELS = {
    "abs_deviation": lambda v, mu, p: prox_abs_deviation(v, mu, **p),
    "elastic_deviation": lambda v, mu, p: prox_elastic_deviation(v, mu, **p),
    "modulus_deviation": lambda v, mu, p: prox_modulus_deviation(v, mu, **p),
    "squared_modulus": lambda v, mu, p: prox_squared_modulus(v, mu, **p),
    "logistic": lambda v, mu, p: prox_logistic(v, mu, **p),
    "symmetric_logistic": lambda v, mu, p: prox_symmetric_logistic(v, mu),
}


def _params(kind, rng):
    if kind in ("abs_deviation", "modulus_deviation", "squared_modulus"):
        return {"b": float(rng.uniform(0.0, 5.0))}
    if kind == "elastic_deviation":
        return {"b": float(rng.uniform(-3.0, 3.0)), "alpha": float(rng.uniform(0.0, 2.0))}
    if kind == "logistic":
        return {"label": float(rng.choice([-1.0, 1.0]))}
    return {}


def test_scalar_kernel_examples():
    assert prox_abs_deviation(3.0, 1.0, 1.0) == pytest.approx(2.0)
    assert prox_abs_deviation(1.5, 1.0, 1.0) == pytest.approx(1.0)
    assert prox_elastic_deviation(4.0, 1.0, 0.0, 1.0) == pytest.approx(1.5)
    assert prox_modulus_deviation(3.0, 0.5, 2.0) == pytest.approx(2.5)
    assert prox_modulus_deviation(-2.2, 0.5, 2.0) == pytest.approx(-2.0)
    assert prox_squared_modulus(2.0, 1.0, 1.0) == pytest.approx(1.5)
    assert prox_squared_modulus(-2.0, 1.0, 1.0) == pytest.approx(-1.5)


def test_modulus_tie_prefers_sign_of_input():
    """v = 0에서 ±b 후보가 동률이면 +쪽"""
    assert prox_modulus_deviation(0.0, 5.0, 1.0) == pytest.approx(1.0)
    assert prox_squared_modulus(0.0, 1.0, 2.0) == pytest.approx(1.0)


def test_kernels_vectorized_shapes():
    v = np.linspace(-3.0, 3.0, 7)
    assert prox_abs_deviation(v, 0.5, 0.0).shape == (7,)
    assert prox_modulus_deviation(v.reshape(7, 1), 0.5, 1.0).shape == (7, 1)
    assert isinstance(prox_logistic(0.3, 1.0, 1.0), float)


@pytest.mark.parametrize("kind", sorted(KERNELS))
def test_kernel_beats_grid_oracle(kind):
    """격자 [−15, 15], 간격 1e-3 최소점보다 목적값이 (1e-5 이내로) 크지 않다"""
    rng = np.random.default_rng(sorted(KERNELS).index(kind))
    penalty = SCALAR_PENALTIES[kind]
    for _ in range(1000):
        v = float(rng.uniform(-10.0, 10.0))
        mu = float(rng.uniform(0.1, 3.0))
        params = _params(kind, rng)
        w = KERNELS[kind](v, mu, params)
        grid_w = grid_prox_oracle(kind, v, mu, -15.0, 15.0, 1e-3, **params)

        def value(z):
            return (z - v) ** 2 / (2.0 * mu) + float(penalty(np.asarray(z), **params))

        assert value(w) <= value(grid_w) + 1e-5, (kind, v, mu, params)


def test_grid_oracle_rejects_bad_grid():
    with pytest.raises(ValueError):
        grid_prox_oracle("abs_deviation", 0.0, 1.0, 1.0, -1.0, 0.1)
    with pytest.raises(ValueError):
        grid_prox_oracle("unknown", 0.0, 1.0, -1.0, 1.0, 0.1)


def test_logistic_root_bracket():
    """label=+1이면 해는 (v, v + μ)"""
    for v, mu in [(-4.0, 1.0), (0.0, 2.0), (5.0, 0.3)]:
        w = prox_logistic(v, mu, 1.0)
        assert v < w < v + mu
        assert prox_logistic(-v, mu, -1.0) == pytest.approx(-w, abs=1e-12)


def test_symmetric_logistic_bracket():
    """|w| ∈ (|v|, |v| + μ/2], 부호는 v와 같음 (0은 +)"""
    for v, mu in [(-3.0, 1.0), (0.0, 1.0), (2.0, 4.0)]:
        w = prox_symmetric_logistic(v, mu)
        assert abs(v) < abs(w) <= abs(v) + 0.5 * mu + 1e-12
        assert w >= 0.0 if v >= 0.0 else w < 0.0


def test_min_abs_pair_matches_2d_grid(rng):
    grid = np.linspace(-6.0, 6.0, 601)
    Z1, Z2 = np.meshgrid(grid, grid, indexing="ij")
    for _ in range(1000):
        v1, v2 = rng.uniform(-4.0, 4.0, size=2)
        mu = float(rng.uniform(0.2, 2.0))
        a, b = rng.uniform(-1.0, 1.0, size=2)

        def value(z1, z2):
            return ((z1 - v1) ** 2 + (z2 - v2) ** 2) / (2.0 * mu) + np.abs(np.minimum(z1 + a, z2 + b))

        z1, z2 = prox_min_abs_pair(v1, v2, mu, a, b)
        assert value(z1, z2) <= value(Z1, Z2).min() + 1e-5


def test_min_abs_pair_example():
    """둘째 항이 활성이면 그 좌표만 soft-threshold"""
    z1, z2 = prox_min_abs_pair(5.0, 2.0, 1.0, 0.0, 0.0)
    assert (z1, z2) == (pytest.approx(5.0), pytest.approx(1.0))


def test_group_l2_example():
    np.testing.assert_allclose(prox_group_l2(np.array([3.0, 4.0]), 1.0), [2.4, 3.2])
    np.testing.assert_allclose(prox_group_l2(np.array([0.3, 0.4]), 1.0), [0.0, 0.0])


def test_scad_truncated_cases():
    kappa = 1.0
    # ‖v‖ > κ: 항등
    np.testing.assert_allclose(prox_scad_truncated(np.array([3.0, 4.0]), 0.5, kappa), [3.0, 4.0])
    # ‖v‖ ≤ κ: 블록 축소
    np.testing.assert_allclose(prox_scad_truncated(np.array([0.6, 0.8]), 0.5, kappa), [0.3, 0.4])
    np.testing.assert_allclose(prox_scad_truncated(np.array([0.06, 0.08]), 0.5, kappa), [0.0, 0.0])


@pytest.mark.parametrize("kind", ["group_l2", "scad_truncated"])
def test_block_kernel_beats_radial_grid(kind):
    """
    블록 벌점은 ‖d‖만의 함수이므로 최소점은 v/‖v‖ 방향 위에 있다.
    반직선 위 간격 1e-3 격자 최소점보다 목적값이 (1e-5 이내로) 크지 않다.
    scad_truncated는 공 ‖d‖ ≤ κ 안의 격자와 항등 후보(‖v‖ > κ일 때)를 비교.
    """
    rng = np.random.default_rng(100 if kind == "group_l2" else 101)
    for _ in range(1000):
        dim = int(rng.integers(2, 5))
        v = rng.uniform(-4.0, 4.0, size=dim)
        mu = float(rng.uniform(0.1, 3.0))
        kappa = float(rng.uniform(0.2, 5.0))
        norm = float(np.linalg.norm(v))
        t = np.linspace(0.0, norm + 2.0, int(round((norm + 2.0) / 1e-3)) + 1)
        grid_values = (t - norm) ** 2 / (2.0 * mu) + t
        if kind == "group_l2":
            d = prox_group_l2(v, mu)
            penalty = float(np.linalg.norm(d))
        else:
            grid_values = grid_values[t <= kappa]
            if norm > kappa:
                grid_values = np.append(grid_values, 0.0)
            d = prox_scad_truncated(v, mu, kappa)
            penalty = float(scad_truncated_value(d, kappa)[0])
        value = float(np.sum((d - v) ** 2)) / (2.0 * mu) + penalty
        assert value <= grid_values.min() + 1e-5, (kind, v, mu, kappa)


@pytest.mark.parametrize("kind", ["abs_deviation", "elastic_deviation", "logistic"])
def test_convex_kernels_nonexpansive(kind, rng):
    for _ in range(1000):
        v1, v2 = rng.uniform(-10.0, 10.0, size=2)
        mu = float(rng.uniform(0.1, 3.0))
        params = _params(kind, rng)
        w1 = KERNELS[kind](float(v1), mu, params)
        w2 = KERNELS[kind](float(v2), mu, params)
        assert abs(w1 - w2) <= abs(v1 - v2) + 1e-10


def test_group_l2_nonexpansive(rng):
    for _ in range(1000):
        v1, v2 = rng.uniform(-4.0, 4.0, size=(2, 3))
        mu = float(rng.uniform(0.1, 3.0))
        gap = np.linalg.norm(prox_group_l2(v1, mu) - prox_group_l2(v2, mu))
        assert gap <= np.linalg.norm(v1 - v2) + 1e-10


@pytest.mark.parametrize("kind", ["modulus_deviation", "squared_modulus", "symmetric_logistic"])
def test_symmetric_kernels_sign_equivariant(kind, rng):
    """짝함수 벌점: v ≠ 0이면 prox(−v) = −prox(v)"""
    for _ in range(1000):
        v = float(rng.uniform(0.01, 10.0))
        mu = float(rng.uniform(0.1, 3.0))
        params = _params(kind, rng)
        assert KERNELS[kind](-v, mu, params) == pytest.approx(-KERNELS[kind](v, mu, params), abs=1e-12)


def test_separable_requires_exact_partition():
    with pytest.raises(DimensionError):
        SeparableNonsmooth([AbsDeviation([0, 1], [0.0, 0.0]), AbsDeviation([1, 2], [0.0, 0.0])])
    with pytest.raises(DimensionError):
        SeparableNonsmooth([AbsDeviation([0, 2], [0.0, 0.0])])


def test_prox_separable_mixed_spans():
    h = SeparableNonsmooth([
        AbsDeviation([0, 1], [0.0, 1.0]),
        GroupL2([[2, 3]]),
        SymmetricLogistic([4]),
    ])
    v = np.array([2.0, 0.5, 3.0, 4.0, 1.0])
    out = prox_separable(h, v, 1.0)
    np.testing.assert_allclose(out[:4], [1.0, 1.0, 2.4, 3.2])
    assert out[4] == pytest.approx(prox_symmetric_logistic(1.0, 1.0))
    assert not h.is_convex
    assert not h.is_coordinate_wise
    with pytest.raises(ValueError):
        prox_separable(h, v, 1.0, weights=np.ones(5))


def test_zero_weight_passthrough():
    """유효 스텝 0인 좌표는 입력 그대로"""
    h = SeparableNonsmooth.abs_deviation(np.zeros(3))
    v = np.array([2.0, -2.0, 0.5])
    out = prox_separable(h, v, 1.0, weights=np.array([0.0, 1.0, 0.0]))
    np.testing.assert_allclose(out, [2.0, -1.0, 0.5])


def test_capped_simplex_variational_inequality(rng):
    """P = proj(z)이면 모든 y ∈ Δ_τ에 대해 ⟨z − P, y − P⟩ ≤ 0"""
    for _ in range(1000):
        m = int(rng.integers(1, 12))
        tau = float(rng.uniform(0.0, m))
        z = rng.uniform(-3.0, 3.0, size=m)
        P = project_capped_simplex(z, tau)
        for _ in range(5):
            y = project_capped_simplex(rng.uniform(-3.0, 3.0, size=m), tau)
            assert float((z - P) @ (y - P)) <= 1e-9


def test_weights_outside_unit_interval_rejected():
    h = SeparableNonsmooth.abs_deviation(np.zeros(3))
    v = np.array([2.0, -2.0, 0.5])
    with pytest.raises(ValueError):
        prox_separable(h, v, 1.0, weights=np.array([0.0, 1.5, 0.0]))
    with pytest.raises(ValueError):
        prox_separable(h, v, 1.0, weights=np.array([-0.1, 1.0, 0.0]))
    with pytest.raises(ValueError):
        prox_separable(h, v, 1.0, weights=np.array([np.nan, 1.0, 0.0]))
    # 반올림 수준의 초과는 [0, 1]로 자름
    out = prox_separable(h, v, 1.0, weights=np.array([1.0 + 1e-12, -1e-12, 1.0]))
    np.testing.assert_allclose(out, [1.0, -2.0, 0.0])


def test_min_abs_pair_value():
    h = SeparableNonsmooth([MinAbsPair([0], [1], 1.0, -2.0)])
    assert h.value(np.array([0.0, 0.0])) == pytest.approx(2.0)


def test_capped_simplex_examples():
    np.testing.assert_allclose(project_capped_simplex(np.array([0.2, 0.9, 0.5]), 2.0), [0.35, 1.0, 0.65], atol=1e-12)
    np.testing.assert_allclose(project_capped_simplex(np.array([5.0, -5.0]), 1.0), [1.0, 0.0])
    np.testing.assert_allclose(project_capped_simplex(np.array([1.0, 2.0]), 0.0), [0.0, 0.0])
    np.testing.assert_allclose(project_capped_simplex(np.array([1.0, 2.0]), 2.0), [1.0, 1.0])


def test_capped_simplex_matches_bruteforce(rng):
    for _ in range(200):
        m = int(rng.integers(1, 9))
        v = rng.uniform(-2.0, 3.0, size=m)
        tau = float(rng.uniform(0.0, m))
        u = project_capped_simplex(v, tau)
        assert u.sum() == pytest.approx(tau, abs=1e-9)
        assert u.min() >= 0.0 and u.max() <= 1.0
        np.testing.assert_allclose(u, capped_simplex_bruteforce(v, tau), atol=1e-8)


def test_capped_simplex_infeasible_tau():
    with pytest.raises(InfeasibleError):
        project_capped_simplex(np.zeros(3), 3.5)
    with pytest.raises(InfeasibleError):
        project_capped_simplex(np.zeros(3), -0.1)
