"""
공통 테스트 픽스처
"""

import numpy as np
import pytest

from .apps import generate_lad_data


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_lad():
    """50×10 LAD 인스턴스 (이상치 10%)"""
    return generate_lad_data(50, 10, seed=3)


@pytest.fixture
def audit_log(tmp_path, monkeypatch):
    """오라클 보고서를 임시 CSV로 기록"""
    from . import oracles

    path = tmp_path / "audit.csv"
    monkeypatch.setattr(oracles, "AUDIT_LOG", str(path))
    return path
