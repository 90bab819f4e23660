"""
CLI 테스트 (main을 직접 호출)
"""

import csv
import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from .cli import EXIT_NOT_CONVERGED, EXIT_OK, EXIT_USAGE, build_parser, config_from_args, main
from .apps import generate_sslr_data
from .file_io import read_partition, read_trace_csv, write_matrix_market
from .models import UsageError


def _summary(out):
    return json.loads((out / "summary.json").read_text(encoding="utf-8"))


def _table(out):
    with (out / "table.csv").open(encoding="utf-8") as f:
        return list(csv.DictReader(f))


def test_missing_required_flag_writes_nothing(tmp_path):
    out = tmp_path / "run"
    assert main(["lad", "--n", "5", "--out", str(out)]) == EXIT_USAGE
    assert not out.exists()


def test_usage_errors(tmp_path):
    out = str(tmp_path / "run")
    assert main([]) == EXIT_USAGE
    assert main(["lad", "--m", "50", "--n", "5", "--schedule", "1:0.5", "--out", out]) == EXIT_USAGE
    assert main(["lad", "--m", "50", "--n", "5", "--grid", "alpha=1,2", "--out", out]) == EXIT_USAGE
    assert main(["lad", "--m", "5", "--n", "5", "--out", out]) == EXIT_USAGE
    assert main(["phase", "--n", "48", "--out", out]) == EXIT_USAGE
    assert main(["cluster", "--penalty", "scad", "--out", out]) == EXIT_USAGE
    assert main(["lad", "--data", str(tmp_path / "missing.mtx"), "--out", out]) == EXIT_USAGE


def test_config_from_args_parses_schedule():
    args = build_parser().parse_args(["continuation", "--m", "60", "--n", "5", "--schedule", "1:0.5:0.01"])
    cfg = config_from_args(args)
    assert cfg.schedule.stages()[-1] == pytest.approx(0.015625)
    with pytest.raises(UsageError):
        config_from_args(build_parser().parse_args(["continuation", "--m", "60", "--n", "5", "--schedule", "0.01:0.5:1"]))


def test_lad_run_writes_outputs(tmp_path):
    out = tmp_path / "lad"
    code = main(["lad", "--m", "60", "--n", "5", "--nu", "1", "--seed", "7", "--max-iter", "5000",
                 "--tol", "1e-6", "--out", str(out)])
    assert code == EXIT_OK
    trace = read_trace_csv(out / "trace.csv")
    objective = trace.column("objective")
    assert all(b <= a + 1e-9 * (1.0 + abs(objective[0])) for a, b in zip(objective, objective[1:]))
    summary = _summary(out)
    assert summary["converged"] is True
    assert summary["iterations"] == trace.iterations
    assert summary["extra"]["descent_violation"] <= 1e-9 * (1.0 + abs(objective[0]))
    assert summary["extra"]["error"] < summary["extra"]["ls_error"]
    assert (out / "trace_plot.csv").exists()


def test_trace_out_flag(tmp_path):
    target = tmp_path / "custom.csv"
    main(["lad", "--m", "40", "--n", "4", "--max-iter", "20", "--trace-out", str(target), "--out", str(tmp_path / "o")])
    assert target.exists()
    assert not (tmp_path / "o" / "trace.csv").exists()


def test_phase_run_recovers_signal(tmp_path):
    recovered = 0
    for seed in (1, 2, 3):
        out = tmp_path / f"phase{seed}"
        main(["phase", "--n", "64", "--k", "4", "--seed", str(seed), "--init-iters", "10",
              "--max-iter", "50", "--out", str(out)])
        if _summary(out)["extra"]["error"] <= 1e-6:
            recovered += 1
    assert recovered >= 2


def test_deterministic_rerun_is_byte_identical(tmp_path):
    args = ["lad", "--m", "40", "--n", "4", "--seed", "3", "--max-iter", "50", "--deterministic"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    for name in ("trace.csv", "trace_plot.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    trace = read_trace_csv(tmp_path / "a" / "trace.csv")
    assert all(r.ms == 0.0 for r in trace.rows)


def test_single_point_grid_matches_run(tmp_path):
    base = ["lad", "--m", "40", "--n", "4", "--seed", "5", "--max-iter", "200", "--deterministic"]
    main(base + ["--out", str(tmp_path / "run")])
    main(base + ["--grid", "nu=1", "--out", str(tmp_path / "sweep")])
    summary = _summary(tmp_path / "run")
    (row,) = _table(tmp_path / "sweep")
    assert float(row["nu"]) == 1.0
    assert float(row["iterations_mean"]) == summary["iterations"]
    assert float(row["final_objective_mean"]) == summary["final_objective"]
    assert float(row["iterations_var"]) == 0.0


def test_admm_compare_sweep(tmp_path):
    out = tmp_path / "admm"
    code = main(["admm-compare", "--m", "50", "--n", "10", "--grid", "rho=1,10", "--tol", "1e-6",
                 "--max-iter", "20000", "--out", str(out)])
    assert code in (EXIT_OK, EXIT_NOT_CONVERGED)
    rows = _table(out)
    assert [float(r["rho"]) for r in rows] == [1.0, 10.0]
    for r in rows:
        assert float(r["rho_mean"]) == pytest.approx(float(r["rho"]))
        assert float(r["rs_iters_mean"]) <= float(r["admm_iters_mean"])


def test_sweep_over_seeds_reports_variance(tmp_path):
    out = tmp_path / "sslr"
    main(["sslr", "--m", "100", "--n", "4", "--grid", "gamma=0,0.1", "--seeds", "3", "--max-iter", "200",
          "--out", str(out)])
    rows = _table(out)
    assert len(rows) == 2
    for r in rows:
        assert 0.0 <= float(r["accuracy_mean"]) <= 1.0
        assert float(r["accuracy_var"]) >= 0.0


def test_cluster_run_writes_partition(tmp_path):
    out = tmp_path / "cluster"
    main(["cluster", "--lambda", "0.5", "--nu", "1", "--max-iter", "5000", "--tol", "1e-14", "--out", str(out)])
    labels = read_partition(out / "partition.txt")
    assert labels.size == 30
    summary = _summary(out)
    assert summary["extra"]["partition_match"] == 1.0
    assert summary["extra"]["num_clusters"] == 3.0


def test_continuation_run_respects_gap_bound(tmp_path):
    out = tmp_path / "cont"
    main(["continuation", "--m", "60", "--n", "5", "--schedule", "1:0.5:0.01", "--max-iter", "2000",
          "--out", str(out)])
    extra = _summary(out)["extra"]
    assert extra["final_gap"] <= extra["gap_bound"] * (1.0 + 1e-12)
    assert extra["l1_objective"] >= extra["oracle_objective"] - 1e-8
    trace = read_trace_csv(out / "trace.csv")
    assert [r.iter for r in trace.rows] == sorted({r.iter for r in trace.rows})


def test_rpca_run_writes_images(tmp_path):
    out = tmp_path / "rpca"
    main(["rpca", "--rank", "2", "--max-iter", "25", "--tol", "1e-12", "--out", str(out)])
    for name in ("background.pgm", "foreground.pgm", "mask.pgm"):
        assert (out / name).exists()
    assert _summary(out)["extra"]["error"] <= 1e-4


def test_saved_instance_reloads_with_data_flag(tmp_path):
    first = tmp_path / "gen"
    main(["lad", "--m", "40", "--n", "4", "--seed", "2", "--max-iter", "100", "--save-instance", "--out", str(first)])
    header = json.loads((first / "instance.json").read_text(encoding="utf-8"))
    assert header == {"kernel": "abs_deviation", "kind": "dense", "m": 40, "n": 4, "nu": 1.0, "subcommand": "lad"}
    second = tmp_path / "reload"
    main(["lad", "--data", str(first / "instance_data.mtx"), "--max-iter", "100", "--out", str(second)])
    assert _summary(second)["iterations"] == _summary(first)["iterations"]
    assert _summary(second)["final_objective"] == pytest.approx(_summary(first)["final_objective"], rel=1e-12)
    assert not (second / "instance.json").exists()


def test_phase_save_instance_writes_operator(tmp_path):
    from .file_io import read_hadamard_stack, read_matrix_market

    out = tmp_path / "phase"
    main(["phase", "--n", "16", "--k", "4", "--max-iter", "5", "--save-instance", "--out", str(out)])
    signs = read_hadamard_stack(out / "instance_operator.txt")
    assert signs.shape == (4, 16)
    assert read_matrix_market(out / "instance_b.mtx").shape == (64, 1)


def test_dotenv_settings_apply_before_module_import(tmp_path):
    """작업 디렉터리의 .env 값이 import 시점 설정(CG_TOL)에 반영된다"""
    (tmp_path / ".env").write_text("RS_CG_TOL=1e-6\n", encoding="utf-8")
    env = {k: v for k, v in os.environ.items() if k != "RS_CG_TOL"}
    root = str(Path(__file__).resolve().parent.parent)
    env["PYTHONPATH"] = os.pathsep.join(filter(None, [root, env.get("PYTHONPATH")]))
    result = subprocess.run(
        [sys.executable, "-c", f"import {__package__}.linops as m; print(repr(m.CG_TOL))"],
        cwd=tmp_path, env=env, capture_output=True, text=True, check=True,
    )
    assert float(result.stdout.strip()) == 1e-6


def test_data_with_bad_dimensions_exits_with_usage_code(tmp_path):
    path = write_matrix_market(tmp_path / "wide.mtx", np.arange(18.0).reshape(3, 6))
    out = tmp_path / "run"
    assert main(["lad", "--data", str(path), "--out", str(out)]) == EXIT_USAGE
    assert not (out / "summary.json").exists()


def test_sslr_data_scores_held_out_labels(tmp_path):
    """--data의 라벨 행 절반은 학습에서 라벨을 숨기고 정확도 평가에만 쓴다"""
    F, y, _, _ = generate_sslr_data(200, 5, labeled_fraction=0.2, seed=4)
    labels = np.zeros(200)
    labels[: y.size] = y
    path = write_matrix_market(tmp_path / "sslr.mtx", np.column_stack([labels, F]))
    out = tmp_path / "sslr"
    main(["sslr", "--data", str(path), "--max-iter", "500", "--out", str(out)])
    accuracy = _summary(out)["extra"]["accuracy"]
    held = y.size // 2
    assert accuracy * held == pytest.approx(round(accuracy * held))
    assert accuracy >= 0.7

    labels[1 : y.size] = 0.0
    write_matrix_market(path, np.column_stack([labels, F]))
    assert main(["sslr", "--data", str(path), "--out", str(tmp_path / "one")]) == EXIT_USAGE
