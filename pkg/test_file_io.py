"""
파일 입출력 테스트
"""

import json

import numpy as np
import pytest

from .file_io import (
    append_oracle_report,
    read_hadamard_stack,
    read_matrix_market,
    read_partition,
    read_pgm,
    read_trace_csv,
    write_hadamard_stack,
    write_instance_header,
    write_matrix_market,
    write_partition,
    write_pgm,
    write_plot_csv,
    write_summary_json,
    write_table_csv,
    write_trace_csv,
)
from .models import OracleReport, RunSummary, SolverTrace, TraceRow


def _trace():
    trace = SolverTrace(converged=True, stop_reason="tol")
    trace.append(TraceRow(iter=0, objective=3.0, optimality=0.0))
    trace.append(TraceRow(iter=1, objective=1.0 / 3.0, optimality=0.25, gap=0.1, inner_iters=4, ms=1.5))
    trace.append(TraceRow(iter=2, objective=-0.5, optimality=1e-300, gap=0.0))
    return trace


def test_trace_csv_header_and_values(tmp_path):
    path = write_trace_csv(_trace(), tmp_path / "trace.csv")
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "iter,objective,optimality,gap,inner_iters,ms"
    assert len(lines) == 4
    back = read_trace_csv(path)
    assert back.iterations == 2
    assert back.rows[1].objective == 1.0 / 3.0
    assert back.rows[1].inner_iters == 4
    assert back.rows[2].optimality == 1e-300


def test_trace_csv_rejects_wrong_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("iter,objective\n0,1\n", encoding="utf-8")
    with pytest.raises(ValueError):
        read_trace_csv(path)


def test_trace_rejects_non_increasing_iter():
    trace = _trace()
    with pytest.raises(ValueError):
        trace.append(TraceRow(iter=2, objective=0.0, optimality=0.0))


def test_plot_csv_blanks_nonpositive_logs(tmp_path):
    lines = write_plot_csv(_trace(), tmp_path / "plot.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "iter,objective,optimality,log10_objective,log10_optimality,log10_gap"
    first = lines[1].split(",")
    assert first[3] == format(np.log10(3.0), ".17g")
    assert first[4] == "" and first[5] == ""
    last = lines[3].split(",")
    assert last[3] == ""  # 음수 목적값
    assert float(last[4]) == pytest.approx(-300.0)


def test_summary_json(tmp_path):
    summary = RunSummary(iterations=3, final_objective=0.5, final_gap=0.0, converged=True, wall_ms=0.0, extra={"error": 1e-9})
    data = json.loads(write_summary_json(summary, tmp_path / "s.json").read_text(encoding="utf-8"))
    assert data["iterations"] == 3
    assert data["extra"] == {"error": 1e-9}


def test_table_csv_keeps_column_order(tmp_path):
    rows = [{"nu": 1.0, "converged": 1.0, "iterations_mean": 10.0}, {"nu": 0.5, "converged": 0.0, "iterations_mean": 20.5}]
    lines = write_table_csv(rows, tmp_path / "t.csv").read_text(encoding="utf-8").splitlines()
    assert lines == ["nu,converged,iterations_mean", "1,1,10", "0.5,0,20.5"]


def test_instance_header_sorted(tmp_path):
    path = write_instance_header(tmp_path / "h.json", nu=0.5, m=10, kind="dense")
    assert list(json.loads(path.read_text(encoding="utf-8"))) == ["kind", "m", "nu"]


def test_partition_one_label_per_line(tmp_path):
    path = write_partition(np.array([0, 0, 2, 1]), tmp_path / "p.txt")
    assert path.read_text(encoding="utf-8") == "0\n0\n2\n1\n"
    np.testing.assert_array_equal(read_partition(path), [0, 0, 2, 1])


def test_oracle_report_appends_rows(tmp_path):
    path = tmp_path / "audit.csv"
    append_oracle_report(OracleReport(quantity="a", oracle_value=1.0, artifact_value=1.5, tolerance=1.0), path)
    append_oracle_report(OracleReport(quantity="b", oracle_value=0.0, artifact_value=0.0, tolerance=0.0), path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "quantity,oracle_value,artifact_value,tolerance,abs_gap,rel_gap,passed,detail"
    assert len(lines) == 3
    assert lines[1].startswith("a,1.0,1.5,1.0,0.5,")


def test_matrix_market_exact(tmp_path, rng):
    matrix = rng.standard_normal((5, 3))
    path = write_matrix_market(tmp_path / "a.mtx", matrix)
    np.testing.assert_array_equal(read_matrix_market(path), matrix)


def test_matrix_market_coordinate_format(tmp_path):
    path = tmp_path / "sparse.mtx"
    path.write_text(
        "%%MatrixMarket matrix coordinate real general\n3 2 2\n1 1 4.5\n3 2 -1\n", encoding="utf-8",
    )
    np.testing.assert_array_equal(read_matrix_market(path), [[4.5, 0.0], [0.0, 0.0], [0.0, -1.0]])


def test_hadamard_stack_file(tmp_path):
    signs = np.array([[1, -1, 1, 1], [-1, -1, 1, -1]])
    path = write_hadamard_stack(tmp_path / "op.txt", signs)
    assert path.read_text(encoding="utf-8").splitlines()[0] == "4 2"
    np.testing.assert_array_equal(read_hadamard_stack(path), signs)


def test_hadamard_stack_rejects_bad_signs(tmp_path):
    path = tmp_path / "op.txt"
    path.write_text("2 1\n1 0\n", encoding="utf-8")
    with pytest.raises(ValueError):
        read_hadamard_stack(path)


def test_pgm_scaling(tmp_path):
    image = np.array([[0.0, 0.5], [1.0, 0.25]])
    path = write_pgm(tmp_path / "img.pgm", image)
    assert path.read_bytes().startswith(b"P5")
    np.testing.assert_array_equal(read_pgm(path), [[0.0, 128.0], [255.0, 64.0]])
    flat = read_pgm(write_pgm(tmp_path / "flat.pgm", np.full((2, 3), 7.0)))
    np.testing.assert_array_equal(flat, np.zeros((2, 3)))
