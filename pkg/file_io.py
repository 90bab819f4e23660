import csv
import json
import math
from pathlib import Path
from typing import Any, Dict, Sequence, Union

import numpy as np
import scipy.io
import scipy.sparse
from PIL import Image

from .models import TRACE_COLUMNS, OracleReport, RunSummary, SolverTrace, TraceRow

PathLike = Union[str, Path]


def _num(x: float) -> str:
    # 재실행 시 바이트 단위로 같은 출력
    return format(float(x), ".17g")


# ===== 실행 기록 =====
def write_trace_csv(trace: SolverTrace, path: PathLike) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for r in trace.rows:
            writer.writerow([r.iter, _num(r.objective), _num(r.optimality), _num(r.gap), r.inner_iters, _num(r.ms)])
    return path


def read_trace_csv(path: PathLike) -> SolverTrace:
    with Path(path).open(encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != TRACE_COLUMNS:
            raise ValueError(f"trace 헤더 불일치: {reader.fieldnames}")
        trace = SolverTrace()
        for rec in reader:
            trace.append(TraceRow(
                iter=int(rec["iter"]), objective=float(rec["objective"]), optimality=float(rec["optimality"]),
                gap=float(rec["gap"]), inner_iters=int(rec["inner_iters"]), ms=float(rec["ms"]),
            ))
    return trace


def write_plot_csv(trace: SolverTrace, path: PathLike) -> Path:
    """그래프용: iter, objective, optimality, log10 열 (0 이하 값은 빈 칸)"""

    def log10(x: float) -> str:
        return _num(math.log10(x)) if x > 0.0 and math.isfinite(x) else ""

    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(("iter", "objective", "optimality", "log10_objective", "log10_optimality", "log10_gap"))
        for r in trace.rows:
            writer.writerow([r.iter, _num(r.objective), _num(r.optimality), log10(r.objective), log10(r.optimality), log10(r.gap)])
    return path


def write_summary_json(summary: RunSummary, path: PathLike) -> Path:
    path = Path(path)
    path.write_text(summary.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


def write_table_csv(rows: Sequence[Dict[str, Any]], path: PathLike) -> Path:
    """sweep 결과 표 (열 순서는 첫 행 기준)"""
    path = Path(path)
    columns = list(rows[0].keys()) if rows else []
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_num(row[c]) if isinstance(row[c], float) else row[c] for c in columns])
    return path


def write_instance_header(path: PathLike, **fields) -> Path:
    """인스턴스 헤더 (차원, ν, 커널 종류 등)"""
    path = Path(path)
    path.write_text(json.dumps(fields, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_partition(labels: Sequence[int], path: PathLike) -> Path:
    path = Path(path)
    path.write_text("".join(f"{int(label)}\n" for label in labels), encoding="utf-8")
    return path


def read_partition(path: PathLike) -> np.ndarray:
    return np.array([int(line) for line in Path(path).read_text(encoding="utf-8").split()], dtype=int)


def append_oracle_report(report: OracleReport, path: PathLike) -> Path:
    path = Path(path)
    fields = list(OracleReport.model_fields.keys())
    new_file = not path.exists()
    with path.open("a", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=fields, lineterminator="\n")
        if new_file:
            writer.writeheader()
        writer.writerow(report.model_dump())
    return path


# ===== 행렬 / 연산자 =====
def read_matrix_market(path: PathLike) -> np.ndarray:
    data = scipy.io.mmread(str(path))
    if scipy.sparse.issparse(data):
        data = data.toarray()
    return np.asarray(data, dtype=float)


def write_matrix_market(path: PathLike, matrix: np.ndarray) -> Path:
    path = Path(path)
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    scipy.io.mmwrite(str(path), matrix, precision=17)
    return path


def write_hadamard_stack(path: PathLike, signs: np.ndarray) -> Path:
    """첫 줄 'n k', 이어서 블록별 ±1 부호 k줄"""
    signs = np.atleast_2d(np.asarray(signs, dtype=int))
    k, n = signs.shape
    lines = [f"{n} {k}"] + [" ".join(str(int(s)) for s in row) for row in signs]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_hadamard_stack(path: PathLike) -> np.ndarray:
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    n, k = (int(t) for t in lines[0].split())
    signs = np.array([[int(t) for t in line.split()] for line in lines[1:1 + k]], dtype=float)
    if signs.shape != (k, n) or not np.all(np.abs(signs) == 1.0):
        raise ValueError(f"잘못된 Hadamard 스택 파일: {path}")
    return signs


# ===== 이미지 =====
def read_pgm(path: PathLike) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("L"), dtype=float)


def write_pgm(path: PathLike, image: np.ndarray) -> Path:
    """값 범위를 0..255로 선형 변환해 8비트 PGM으로 저장"""
    image = np.asarray(image, dtype=float)
    lo, hi = float(image.min()), float(image.max())
    scaled = np.zeros_like(image) if hi <= lo else (image - lo) / (hi - lo) * 255.0
    path = Path(path)
    Image.fromarray(np.round(scaled).astype(np.uint8)).save(path, format="PPM")
    return path
