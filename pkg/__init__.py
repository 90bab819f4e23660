"""
relax_split 패키지 초기화

비평활 비볼록 합성 문제 min_x h(Ax) + g(x)를 위한 relax-and-split 솔버 모음
"""

from dotenv import find_dotenv, load_dotenv

# 하위 모듈이 import 시점에 RS_* 환경변수를 읽으므로 그보다 먼저 (작업 디렉터리 기준 .env)
load_dotenv(find_dotenv(usecwd=True))

from .linops import (
    Dense,
    HadamardStack,
    Identity,
    LinearOperator,
    LsSolvePolicy,
    PairwiseDifference,
    QuadraticRegularizer,
    Stack,
    solve_partial,
)
from .models import (
    ContinuationSchedule,
    ConvergenceError,
    DimensionError,
    InfeasibleError,
    InnerSolveError,
    RelaxSplitError,
    SolveOptions,
    SolverTrace,
)
from .prox import SeparableNonsmooth, project_capped_simplex, prox_separable
from .relax import RelaxedProblem, reduced_objective
from .solvers import TrimmedProblem, admm, continuation, rs_fista, rs_pgd, trs_bcd

__version__ = "0.1.0"
