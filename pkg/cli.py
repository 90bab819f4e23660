"""
실험 실행기 (CLI)

    python -m relax_split lad --m 500 --n 200 --nu 1 --seed 7 --out runs/lad
    python -m relax_split admm-compare --m 200 --n 20 --grid rho=1,10,100 --tol 1e-6
    python -m relax_split sslr --m 500 --n 10 --grid gamma=0,0.1 --seeds 20

종료 코드: 0 수렴, 2 미수렴, 1 사용법/입출력 오류
"""

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from . import apps, file_io, oracles
from .linops import LsSolvePolicy
from .logger_config import cli_logger as logger
from .models import (
    ContinuationSchedule,
    ExperimentConfig,
    RelaxSplitError,
    RunSummary,
    SolverTrace,
    UsageError,
)
from .solvers import admm, continuation, rs_pgd
from .utils import DETERMINISTIC, elapsed_ms, make_rng, now_ms, relative_error, same_partition

SWEEP_WORKERS = int(os.getenv("RS_SWEEP_WORKERS", "1"))

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NOT_CONVERGED = 2

# --grid 이름 → ExperimentConfig 필드 (rho는 ν = 1/ρ)
GRID_PARAMS = {
    "nu": "nu", "lambda": "lam", "gamma": "gamma", "tau": "tau", "kappa": "kappa",
    "rank": "rank", "corrupt": "corrupt", "rho": "nu",
}


class RunOutcome(BaseModel):
    """하위 명령 한 번의 결과 (파일 쓰기 전)"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    trace: SolverTrace
    extra: Dict[str, float] = Field(default_factory=dict)
    side_traces: Dict[str, SolverTrace] = Field(default_factory=dict)
    images: Dict[str, np.ndarray] = Field(default_factory=dict)
    partition: Optional[np.ndarray] = None
    instance: Dict[str, np.ndarray] = Field(default_factory=dict)  # 이름 → 행렬 (hadamard_signs는 부호 파일)
    instance_header: Dict[str, Any] = Field(default_factory=dict)
    wall_ms: float = 0.0


class _Parser(argparse.ArgumentParser):
    """argparse의 sys.exit 대신 UsageError를 던진다"""

    def error(self, message):
        raise UsageError(message)


def _schedule(text: str) -> Tuple[float, float, float]:
    try:
        nu0, factor, nu_min = (float(t) for t in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--schedule은 nu0:factor:numin 형식이어야 합니다: {text!r}")
    return nu0, factor, nu_min


def _grid(text: str) -> Tuple[str, List[float]]:
    name, _, values = text.partition("=")
    name = name.strip()
    if name not in GRID_PARAMS or not values:
        raise argparse.ArgumentTypeError(f"--grid는 name=v1,v2,... 형식 ({', '.join(GRID_PARAMS)}): {text!r}")
    try:
        points = [float(v) for v in values.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--grid 값이 숫자가 아닙니다: {values!r}")
    if not points:
        raise argparse.ArgumentTypeError("--grid가 비어 있습니다")
    return name, points


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--nu", type=float, default=1.0)
    common.add_argument("--lambda", dest="lam", type=float)
    common.add_argument("--gamma", type=float)
    common.add_argument("--tau", type=float)
    common.add_argument("--kappa", type=float)
    common.add_argument("--rank", type=int, default=2)
    common.add_argument("--m", type=int)
    common.add_argument("--n", type=int)
    common.add_argument("--k", type=int, default=4)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--seeds", type=int, default=1, help="격자점마다 seed, seed+1, ... 반복")
    common.add_argument("--max-iter", dest="max_iter", type=int, default=500)
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--schedule", type=_schedule, help="nu0:factor:numin")
    common.add_argument("--corrupt", type=float, help="오염 비율 (lad 기본 0.1, phase-trimmed 기본 0.3)")
    common.add_argument("--init-iters", dest="init_iters", type=int, default=10)
    common.add_argument("--penalty", choices=("l2", "scad"), default="l2")
    common.add_argument("--ls-method", dest="ls_method", choices=("direct", "cg", "lsqr", "orthogonal"), default="direct")
    common.add_argument("--data", help="입력 파일 (MatrixMarket 또는 PGM)")
    common.add_argument("--trace-out", dest="trace_out", help="trace CSV 경로 (기본: OUT/trace.csv)")
    common.add_argument("--out", default=".", help="출력 디렉터리")
    common.add_argument("--grid", type=_grid, help="name=v1,v2,... 로 sweep")
    common.add_argument("--deterministic", action="store_true", help="타이밍 열을 0으로 (재실행 시 동일 출력)")
    common.add_argument("--save-instance", dest="save_instance", action="store_true", help="생성한 인스턴스를 OUT/instance.* 로 저장")

    parser = _Parser(prog="relax_split", description="relax-and-split 실험 실행기")
    sub = parser.add_subparsers(dest="subcommand", parser_class=_Parser)
    for name in ("lad", "phase", "phase-trimmed", "sslr", "ssp", "cluster", "rpca", "admm-compare", "continuation"):
        sub.add_parser(name, parents=[common])
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    if not args.subcommand:
        raise UsageError("하위 명령이 필요합니다")
    fields = {
        key: getattr(args, key)
        for key in ExperimentConfig.model_fields
        if key not in ("schedule", "deterministic") and getattr(args, key, None) is not None
    }
    fields["deterministic"] = bool(args.deterministic or DETERMINISTIC)
    try:
        if args.schedule is not None:
            nu0, factor, nu_min = args.schedule
            fields["schedule"] = ContinuationSchedule(nu0=nu0, factor=factor, nu_min=nu_min)
        return ExperimentConfig(**fields)
    except ValidationError as exc:
        problems = "; ".join(
            f"--{'.'.join(str(p) for p in err['loc']) or args.subcommand}: {err['msg']}" for err in exc.errors()
        )
        raise UsageError(problems) from exc


def _policy(cfg: ExperimentConfig) -> LsSolvePolicy:
    return LsSolvePolicy(method=cfg.ls_method)


def _concat(traces: Sequence[SolverTrace]) -> SolverTrace:
    """continuation 단계 trace를 하나로 (각 단계의 iter 0 행은 첫 단계만 유지)"""
    merged = SolverTrace()
    offset = 0
    for stage, trace in enumerate(traces):
        for row in trace.rows:
            if stage and row.iter == 0:
                continue
            merged.append(row.model_copy(update={"iter": offset + row.iter}))
        offset += trace.iterations
    merged.converged = bool(traces) and traces[-1].converged
    merged.stop_reason = traces[-1].stop_reason if traces else ""
    return merged


def _read_data(cfg: ExperimentConfig) -> np.ndarray:
    path = Path(cfg.data)
    try:
        if path.suffix.lower() in (".pgm", ".pnm"):
            return file_io.read_pgm(path)
        return file_io.read_matrix_market(path)
    except (OSError, ValueError) as exc:
        raise UsageError(f"입력 파일을 읽을 수 없습니다: {path} ({exc})") from exc


def _lad_data(cfg: ExperimentConfig, seed: int) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    """--data는 [A | b] 행렬 (마지막 열이 b)"""
    if cfg.data:
        Ab = _read_data(cfg)
        return Ab[:, :-1], Ab[:, -1], None
    fraction = 0.1 if cfg.corrupt is None else cfg.corrupt
    return apps.generate_lad_data(cfg.m, cfg.n, outlier_fraction=fraction, seed=seed)


def _instance_header(cfg: ExperimentConfig, m: int, n: int, kind: str, kernel: str) -> Dict[str, Any]:
    return {"subcommand": cfg.subcommand, "m": int(m), "n": int(n), "nu": cfg.nu, "kind": kind, "kernel": kernel}


def _lad_instance(cfg: ExperimentConfig, A: np.ndarray, b: np.ndarray) -> Dict[str, Any]:
    """--save-instance용: [A | b] 행렬과 헤더 (--data로 다시 읽을 수 있는 형식)"""
    return {
        "instance": {"data": np.column_stack([A, b])},
        "instance_header": _instance_header(cfg, A.shape[0], A.shape[1], "dense", "abs_deviation"),
    }


def _phase_instance_files(cfg: ExperimentConfig, inst: apps.PhaseRetrievalInstance, kernel: str) -> Dict[str, Any]:
    return {
        "instance": {"hadamard_signs": inst.operator.signs, "b": inst.b[:, None]},
        "instance_header": _instance_header(cfg, inst.m, inst.n, "hadamard_stack", kernel),
    }


# ===== 하위 명령 =====
def run_lad(cfg: ExperimentConfig, seed: int) -> RunOutcome:
    A, b, x_true = _lad_data(cfg, seed)
    p = apps.lad_setup(A, b, cfg.nu, _policy(cfg))
    _, x, trace = rs_pgd(p, b, cfg.solve_options())
    extra = {
        "l1_objective": apps.l1_objective(A, b, x),
        "descent_violation": oracles.descent_auditor(trace, cfg.nu).artifact_value,
    }
    if x_true is not None:
        extra["error"] = relative_error(x, x_true)
        extra["ls_error"] = relative_error(apps.least_squares_baseline(A, b), x_true)
    return RunOutcome(trace=trace, extra=extra, **_lad_instance(cfg, A, b))


def _phase_instance(cfg: ExperimentConfig, seed: int) -> apps.PhaseRetrievalInstance:
    if cfg.data:
        x_true = _read_data(cfg).reshape(-1)
    else:
        x_true = make_rng(seed).standard_normal(cfg.n)
        x_true *= np.sqrt(cfg.n) / np.linalg.norm(x_true)
    inst, _ = apps.phase_setup(x_true, cfg.k, seed, cfg.nu)
    return inst


def run_phase(cfg: ExperimentConfig, seed: int) -> RunOutcome:
    inst = _phase_instance(cfg, seed)
    p = apps.phase_problem(inst, cfg.nu)
    x, trace, info = apps.phase_solve(inst, p, cfg.init_iters, seed, cfg.solve_options())
    outcome = RunOutcome(
        trace=trace, extra={**info, "error": info["phase_error"]}, **_phase_instance_files(cfg, inst, "modulus_deviation"),
    )
    if cfg.data:
        outcome.images["recovered"] = x.reshape(_read_data(cfg).shape)
    return outcome


def run_phase_trimmed(cfg: ExperimentConfig, seed: int) -> RunOutcome:
    inst = _phase_instance(cfg, seed)
    fraction = 0.3 if cfg.corrupt is None else cfg.corrupt
    b_bad, bad = apps.corrupt_measurements(inst.b, fraction, 1000.0, seed)
    corrupted = inst.with_measurements(b_bad)
    tau = (1.0 - fraction) * inst.m if cfg.tau is None else cfg.tau
    gamma = 1.0 if cfg.gamma is None else cfg.gamma
    opts = cfg.solve_options()
    x, v, trace = apps.trimmed_phase(corrupted, tau, gamma, opts, cfg.nu, cfg.init_iters, seed)
    x_plain, _, _ = apps.phase_solve(corrupted, apps.phase_problem(corrupted, cfg.nu), cfg.init_iters, seed, opts)
    extra = {
        "error": apps.phase_error(x, inst.x_true),
        "untrimmed_error": apps.phase_error(x_plain, inst.x_true),
        "corrupted_weight_mean": float(v[bad].mean()) if bad.size else 0.0,
        "stationarity_violation": oracles.trimmed_rate_auditor(trace).artifact_value,
    }
    return RunOutcome(trace=trace, extra=extra, **_phase_instance_files(cfg, corrupted, "squared_modulus"))


def run_sslr(cfg: ExperimentConfig, seed: int) -> RunOutcome:
    lam = 1e-2 if cfg.lam is None else cfg.lam
    gamma = 0.1 if cfg.gamma is None else cfg.gamma
    if cfg.data:
        # 첫 열: 라벨 (±1, 0은 라벨 없음). 라벨 행의 절반(시드 고정)은 라벨을 숨기고 정확도 평가에 사용
        table = _read_data(cfg)
        labeled_rows = np.flatnonzero(table[:, 0] != 0.0)
        if labeled_rows.size < 2:
            raise UsageError("sslr --data 에는 라벨 행이 2개 이상 필요합니다")
        held = make_rng(seed).permutation(labeled_rows)[: labeled_rows.size // 2]
        train = np.setdiff1d(labeled_rows, held)
        rest = np.setdiff1d(np.arange(table.shape[0]), train)
        features = np.vstack([table[train, 1:], table[rest, 1:]])
        labels = table[train, 0]
        test_features, test_labels = table[held, 1:], table[held, 0]
        logger.info(f"📊 sslr --data: 학습 라벨 {train.size}개, 평가 라벨 {held.size}개")
    else:
        features, labels, test_features, test_labels = apps.generate_sslr_data(cfg.m, cfg.n, seed=seed)
    p = apps.sslr_setup(features, labels, lam, gamma, cfg.nu, _policy(cfg))
    x, trace = apps.sslr_solve(p, cfg.solve_options())
    accuracy = apps.sslr_accuracy(x, test_features, test_labels)
    return RunOutcome(trace=trace, extra={"accuracy": accuracy, "error": 1.0 - accuracy})


def _schedule_or(cfg: ExperimentConfig, nu0: float, factor: float, nu_min: float) -> ContinuationSchedule:
    base = cfg.schedule or ContinuationSchedule(nu0=nu0, factor=factor, nu_min=nu_min)
    return base.model_copy(update={"stage_options": cfg.solve_options()})


def run_ssp(cfg: ExperimentConfig, seed: int) -> RunOutcome:
    inst = apps.generate_ssp(cfg.n, seed)
    x, traces = apps.ssp_solve(inst, _schedule_or(cfg, 1.0, 0.1, 1e-3))
    x_star = apps.value_iteration(inst)
    policy = apps.extract_policy(x, inst)
    extra = {
        "error": float(np.max(np.abs(x - x_star))),
        "policy_greedy": float(np.array_equal(policy, apps.extract_policy(x_star, inst))),
    }
    return RunOutcome(trace=_concat(traces), extra=extra)


def run_cluster(cfg: ExperimentConfig, seed: int) -> RunOutcome:
    planted = None
    if cfg.data:
        points = _read_data(cfg)
    else:
        points, planted = apps.generate_clusters(seed=seed)
    lam = 0.5 if cfg.lam is None else cfg.lam
    _, _, labels, trace = apps.clustering_solve(
        points, lam, cfg.nu, cfg.penalty, cfg.kappa, cfg.solve_options(),
    )
    extra = {"num_clusters": float(labels.max() + 1)}
    if planted is not None:
        extra["partition_match"] = float(same_partition(labels, planted))
        extra["error"] = 1.0 - extra["partition_match"]
    return RunOutcome(trace=trace, extra=extra, partition=labels)


def run_rpca(cfg: ExperimentConfig, seed: int) -> RunOutcome:
    background = None
    if cfg.data:
        D = _read_data(cfg)
    else:
        m = cfg.m or 20
        n = cfg.n or 30
        D, background, _ = apps.generate_rpca(m, n, cfg.rank, seed=seed)
    try:
        inst = apps.RpcaInstance(D=D, rank=cfg.rank, nu=cfg.nu)
    except ValidationError as exc:
        raise UsageError(f"--rank: {exc.errors()[0]['msg']}") from exc
    decay, nu_min = (cfg.schedule.factor, cfg.schedule.nu_min) if cfg.schedule else (0.5, 1e-8)
    L, R, _, trace = apps.rpca_solve(inst, cfg.solve_options(), nu_decay=decay, nu_min=nu_min)
    foreground = apps.rpca_foreground(D, L, R)
    mask = apps.foreground_mask(foreground, D)
    extra = {"foreground_fraction": float(mask.mean())}
    if background is not None:
        extra["error"] = relative_error(L @ R, background)
    images = {"background": L @ R, "foreground": foreground, "mask": mask.astype(float)}
    return RunOutcome(trace=trace, extra=extra, images=images)


def run_admm_compare(cfg: ExperimentConfig, seed: int) -> RunOutcome:
    """
    같은 LAD 인스턴스에서 rs_pgd(ν)와 ADMM(ρ = 1/ν)의 iterations-to-tol 비교.
    공통 기준: ‖A(x^{k+1} − x^k)‖ ≤ tol (rs_pgd에서는 optimality ≤ (tol/ν)²)
    """
    A, b, _ = _lad_data(cfg, seed)
    p = apps.lad_setup(A, b, cfg.nu, _policy(cfg))
    opts = cfg.solve_options()
    rs_opts = opts.model_copy(update={"tol_optimality": (cfg.tol / cfg.nu) ** 2})
    x0 = apps.least_squares_baseline(A, b)
    _, _, rs_trace = rs_pgd(p, A @ x0, rs_opts, x0=x0)
    rho = 1.0 / cfg.nu
    _, _, _, admm_trace = admm(p.h, p.A, p.g, rho, rho, x0, opts, _policy(cfg))
    extra = {
        "rho": rho,
        "rs_iters": float(rs_trace.iterations),
        "admm_iters": float(admm_trace.iterations),
    }
    trace = rs_trace.model_copy(update={"converged": rs_trace.converged and admm_trace.converged})
    return RunOutcome(
        trace=trace, extra=extra, side_traces={"admm_trace.csv": admm_trace}, **_lad_instance(cfg, A, b),
    )


def run_continuation(cfg: ExperimentConfig, seed: int) -> RunOutcome:
    A, b, _ = _lad_data(cfg, seed)
    schedule = _schedule_or(cfg, 1.0, 0.5, 0.01)
    p = apps.lad_setup(A, b, schedule.nu0, _policy(cfg))
    w, x, traces = continuation(p, b, schedule)
    nu_final = schedule.stages()[-1]
    l1 = apps.l1_objective(A, b, x)
    extra = {
        "nu_final": nu_final,
        "final_gap": float(np.linalg.norm(A @ x - w)),
        "gap_bound": float(np.sqrt(A.shape[0]) * nu_final),
        "l1_objective": l1,
    }
    if A.shape[0] * A.shape[1] <= 200_000:
        _, reference = oracles.lad_reference(A, b)
        extra["oracle_objective"] = reference
        extra["error"] = (l1 - reference) / (1.0 + abs(reference))
    return RunOutcome(trace=_concat(traces), extra=extra, **_lad_instance(cfg, A, b))


RUNNERS = {
    "lad": run_lad,
    "phase": run_phase,
    "phase-trimmed": run_phase_trimmed,
    "sslr": run_sslr,
    "ssp": run_ssp,
    "cluster": run_cluster,
    "rpca": run_rpca,
    "admm-compare": run_admm_compare,
    "continuation": run_continuation,
}


def execute(cfg: ExperimentConfig, seed: Optional[int] = None) -> RunOutcome:
    t0 = now_ms()
    outcome = RUNNERS[cfg.subcommand](cfg, cfg.seed if seed is None else seed)
    outcome.wall_ms = elapsed_ms(t0, not cfg.deterministic)
    if not cfg.save_instance:
        outcome.instance, outcome.instance_header = {}, {}
    return outcome


def summarize(outcome: RunOutcome) -> RunSummary:
    return RunSummary(
        iterations=outcome.trace.iterations,
        final_objective=outcome.trace.final_objective,
        final_gap=outcome.trace.final_gap,
        converged=outcome.trace.converged,
        wall_ms=outcome.wall_ms,
        extra=outcome.extra,
    )


def write_outputs(outcome: RunOutcome, out_dir: Path, trace_out: Optional[str]) -> List[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [
        file_io.write_trace_csv(outcome.trace, trace_out or out_dir / "trace.csv"),
        file_io.write_plot_csv(outcome.trace, out_dir / "trace_plot.csv"),
        file_io.write_summary_json(summarize(outcome), out_dir / "summary.json"),
    ]
    for name, trace in outcome.side_traces.items():
        written.append(file_io.write_trace_csv(trace, out_dir / name))
    for name, image in outcome.images.items():
        written.append(file_io.write_pgm(out_dir / f"{name}.pgm", image))
    if outcome.partition is not None:
        written.append(file_io.write_partition(outcome.partition, out_dir / "partition.txt"))
    if outcome.instance_header:
        written.append(file_io.write_instance_header(out_dir / "instance.json", **outcome.instance_header))
    for name, matrix in outcome.instance.items():
        if name == "hadamard_signs":
            written.append(file_io.write_hadamard_stack(out_dir / "instance_operator.txt", matrix))
        else:
            written.append(file_io.write_matrix_market(out_dir / f"instance_{name}.mtx", matrix))
    return written


def run(cfg: ExperimentConfig, out_dir: Path, trace_out: Optional[str] = None) -> int:
    """단일 실행: 파일 기록 후 종료 코드 반환"""
    outcome = execute(cfg)
    for path in write_outputs(outcome, out_dir, trace_out):
        logger.info(f"💾 {path}")
    summary = summarize(outcome)
    icon = "✅" if summary.converged else "⚠️"
    logger.info(
        f"{icon} {cfg.subcommand}: iterations={summary.iterations} objective={summary.final_objective:.6e} "
        f"converged={summary.converged}"
    )
    return EXIT_OK if summary.converged else EXIT_NOT_CONVERGED


def _grid_config(cfg: ExperimentConfig, name: str, value: float) -> ExperimentConfig:
    field = GRID_PARAMS[name]
    if name == "rho":
        if value <= 0.0:
            raise UsageError(f"--grid rho 값은 양수여야 합니다: {value}")
        value = 1.0 / value
    if field == "rank":
        value = int(value)
    try:
        return ExperimentConfig(**{**cfg.model_dump(), field: value})
    except ValidationError as exc:
        raise UsageError(f"--grid {name}={value}: {exc.errors()[0]['msg']}") from exc


def sweep(cfg: ExperimentConfig, grid: Tuple[str, List[float]], out_dir: Path) -> int:
    """
    격자점 × seed 실행 후 격자 순서대로 한 행씩 table.csv에 기록.
    열: 격자값, converged 비율, iterations / final_objective / 부가 지표의 평균과 분산
    """
    name, values = grid
    configs = [_grid_config(cfg, name, v) for v in values]
    seeds = [cfg.seed + i for i in range(cfg.seeds)]
    jobs = [(c, s) for c in configs for s in seeds]
    logger.info(f"🧪 sweep {cfg.subcommand}: {name} × {len(values)}점 × seed {len(seeds)}개 (workers={SWEEP_WORKERS})")

    with ThreadPoolExecutor(max_workers=max(SWEEP_WORKERS, 1)) as pool:
        outcomes = list(pool.map(lambda job: execute(*job), jobs))

    rows = []
    for i, value in enumerate(values):
        group = outcomes[i * len(seeds):(i + 1) * len(seeds)]
        metrics: Dict[str, List[float]] = {
            "iterations": [float(o.trace.iterations) for o in group],
            "final_objective": [o.trace.final_objective for o in group],
        }
        for o in group:
            for key, val in o.extra.items():
                metrics.setdefault(key, []).append(float(val))
        row = {name: float(value), "converged": float(np.mean([o.trace.converged for o in group]))}
        for key, vals in metrics.items():
            row[f"{key}_mean"] = float(np.mean(vals))
            row[f"{key}_var"] = float(np.var(vals))
        rows.append(row)

    out_dir.mkdir(parents=True, exist_ok=True)
    path = file_io.write_table_csv(rows, out_dir / "table.csv")
    logger.info(f"💾 {path}")
    return EXIT_OK if all(o.trace.converged for o in outcomes) else EXIT_NOT_CONVERGED


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = config_from_args(args)
        out_dir = Path(args.out)
        if args.grid:
            return sweep(cfg, args.grid, out_dir)
        return run(cfg, out_dir, args.trace_out)
    except UsageError as exc:
        logger.error(f"❌ 사용법 오류: {exc}")
        print(f"relax_split: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        logger.error(f"❌ 입출력 오류: {getattr(exc, 'filename', None) or ''} {exc}")
        print(f"relax_split: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # 입력 데이터 차원 불일치, 실행 불가능한 설정, pydantic 검증 실패
        logger.error(f"❌ 입력 오류: {type(exc).__name__}: {exc}")
        print(f"relax_split: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RelaxSplitError as exc:
        logger.error(f"❌ 실행 실패: {type(exc).__name__}: {exc}")
        return EXIT_NOT_CONVERGED
