"""
검증 오라클 자체에 대한 테스트
"""

import numpy as np
import pytest

from .models import InfeasibleError, SolverTrace, TraceRow
from .oracles import (
    bound_check,
    capped_simplex_bruteforce,
    compare,
    descent_auditor,
    finite_difference_grad,
    lad_certificate,
    lad_reference,
    logistic_reference,
    trimmed_rate_auditor,
)


def _trace(objectives, optimality):
    trace = SolverTrace()
    for k, (f, t) in enumerate(zip(objectives, optimality)):
        trace.append(TraceRow(iter=k, objective=f, optimality=t))
    return trace


def test_finite_difference_linear_is_exact():
    c = np.array([1.0, -2.0, 3.0])
    grad = finite_difference_grad(lambda z: float(c @ z), np.zeros(3), step=1e-2)
    np.testing.assert_allclose(grad, c, atol=1e-12)


def test_finite_difference_quadratic(rng):
    Q = rng.standard_normal((4, 4))
    Q = Q @ Q.T
    w = rng.standard_normal(4)
    grad = finite_difference_grad(lambda z: 0.5 * float(z @ Q @ z), w)
    np.testing.assert_allclose(grad, Q @ w, atol=1e-6)


def test_bruteforce_examples():
    np.testing.assert_allclose(capped_simplex_bruteforce(np.array([0.5, 0.5]), 1.0), [0.5, 0.5])
    np.testing.assert_allclose(capped_simplex_bruteforce(np.array([3.0, 0.0, -1.0]), 1.0), [1.0, 0.0, 0.0])
    np.testing.assert_allclose(capped_simplex_bruteforce(np.array([0.0, 0.0, 0.0]), 3.0), [1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        capped_simplex_bruteforce(np.zeros(13), 1.0)
    with pytest.raises(InfeasibleError):
        capped_simplex_bruteforce(np.zeros(3), 4.0)


def test_lad_reference_exact_fit(rng):
    """b ∈ range(A)이면 ℓ1 최소값 0"""
    A = rng.standard_normal((20, 3))
    x_true = rng.standard_normal(3)
    x, value = lad_reference(A, A @ x_true)
    assert value <= 1e-8
    np.testing.assert_allclose(x, x_true, atol=1e-8)


def test_lad_reference_is_median():
    """A = 𝟙이면 해는 중앙값"""
    b = np.array([1.0, 2.0, 7.0, 3.0, 100.0])
    x, value = lad_reference(np.ones((5, 1)), b)
    assert x[0] == pytest.approx(3.0, abs=1e-7)
    assert value == pytest.approx(np.abs(b - 3.0).sum(), abs=1e-6)


def test_lad_certificate_at_reference(small_lad):
    A, b, _ = small_lad
    x, _ = lad_reference(A, b)
    s, norm = lad_certificate(A, b, x)
    assert norm <= 1e-6
    assert np.max(np.abs(s)) <= 1.0 + 1e-6


def test_lad_certificate_rejects_least_squares(small_lad):
    A, b, _ = small_lad
    x_ls = np.linalg.lstsq(A, b, rcond=None)[0]
    _, norm = lad_certificate(A, b, x_ls)
    assert norm > 1e-3


def test_logistic_reference_gradient_vanishes(rng):
    F = rng.standard_normal((40, 3))
    y = np.where(rng.standard_normal(40) > 0.0, 1.0, -1.0)
    x, value = logistic_reference(F, y, lam=0.5)
    grad = finite_difference_grad(
        lambda z: float(np.logaddexp(0.0, -y * (F @ z)).sum() + 0.25 * z @ z), x, step=1e-5,
    )
    assert np.linalg.norm(grad) <= 1e-6
    assert value == pytest.approx(float(np.logaddexp(0.0, -y * (F @ x)).sum() + 0.25 * x @ x))


def test_descent_auditor_pass_and_fail():
    good = _trace([10.0, 8.0, 7.0], [np.nan, 2.0, 1.0])
    assert descent_auditor(good, nu=1.0).passed
    # 두 번째 감소가 요구량 (ν/2)·T = 1.5에 못 미침
    bad = _trace([10.0, 8.0, 7.0], [np.nan, 2.0, 3.0])
    report = descent_auditor(bad, nu=1.0)
    assert not report.passed
    assert report.artifact_value == pytest.approx(0.5)
    assert "iter=2" in report.detail


def test_trimmed_rate_auditor():
    good = _trace([5.0, 4.0, 3.5], [np.nan, 1.0, 0.5])
    assert trimmed_rate_auditor(good).passed
    bad = _trace([5.0, 4.0, 3.5], [np.nan, 1.0, 0.7])
    assert not trimmed_rate_auditor(bad).passed


def test_bound_check_and_compare():
    assert bound_check("gap", 0.5, 1.0).passed
    report = bound_check("gap", 1.5, 1.0)
    assert not report.passed and report.artifact_value == pytest.approx(0.5)
    assert compare("value", 1.0, 1.0 + 1e-9, 1e-8).passed
    assert not compare("value", 1.0, 1.1, 1e-8).passed


def test_reports_appended_to_audit_log(audit_log):
    bound_check("first", 0.0, 1.0)
    compare("second", 2.0, 3.0, 0.1)
    lines = audit_log.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("quantity,oracle_value,artifact_value,tolerance")
    assert len(lines) == 3
    assert lines[1].startswith("first_excess,")
    assert lines[2].startswith("second,") and lines[2].endswith(",")  # detail 빈 칸
