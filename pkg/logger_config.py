"""
솔버 로깅 시스템
- 환경변수로 로그 레벨 제어 (LOG_LEVEL)
- DEBUG 모드에서 반복별 진행 상황 상세 로깅
- 실행(run)별 고유 ID로 구조화된 로그 포맷
- 파라미터, 종료 사유, 타이밍, 요약 기록
"""

import os
import logging
import traceback
from typing import Any, Dict, Optional
from datetime import datetime

LOG_EVERY = int(os.getenv("RS_LOG_EVERY", "50"))


class ColoredFormatter(logging.Formatter):
    """컬러 로그 포맷터 (터미널에서 보기 좋게)"""

    COLORS = {
        'DEBUG': '\033[36m',      # Cyan
        'INFO': '\033[32m',       # Green
        'WARNING': '\033[33m',    # Yellow
        'ERROR': '\033[31m',      # Red
        'CRITICAL': '\033[35m',   # Magenta
    }
    RESET = '\033[0m'

    def format(self, record):
        # 파일 핸들러와 레코드를 공유하므로 원본 levelname은 건드리지 않는다
        original = record.levelname
        log_color = self.COLORS.get(original, self.RESET)
        record.levelname = f"{log_color}{original}{self.RESET}"
        try:
            return super().format(record)
        finally:
            record.levelname = original


def setup_logger(name: str, log_file: Optional[str] = None) -> logging.Logger:
    """
    로거 설정

    Args:
        name: 로거 이름
        log_file: 로그 파일 경로 (선택)

    Returns:
        설정된 로거
    """
    logger = logging.getLogger(name)

    # 환경변수에서 로그 레벨 읽기 (기본값: INFO)
    log_level = os.getenv("LOG_LEVEL", "INFO").upper()
    level = getattr(logging, log_level, logging.INFO)
    logger.setLevel(level)

    # 기존 핸들러 제거
    logger.handlers.clear()

    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)

    detailed_format = '%(asctime)s - %(name)s - %(levelname)s - [%(funcName)s:%(lineno)d] - %(message)s'
    simple_format = '%(asctime)s - %(levelname)s - %(message)s'

    format_str = detailed_format if level == logging.DEBUG else simple_format

    colored_formatter = ColoredFormatter(format_str, datefmt='%Y-%m-%d %H:%M:%S')
    console_handler.setFormatter(colored_formatter)
    logger.addHandler(console_handler)

    # 파일 핸들러 (옵션)
    if log_file:
        file_handler = logging.FileHandler(log_file, encoding='utf-8')
        file_handler.setLevel(level)
        plain_formatter = logging.Formatter(format_str, datefmt='%Y-%m-%d %H:%M:%S')
        file_handler.setFormatter(plain_formatter)
        logger.addHandler(file_handler)

    return logger


class RunLogger:
    """솔버 실행별 상세 로깅 클래스"""

    def __init__(self, logger: logging.Logger, run_id: str, log_every: int = LOG_EVERY):
        self.logger = logger
        self.run_id = run_id
        self.log_every = max(int(log_every), 1)
        self.start_time = datetime.now()

    def log_run_start(self, solver: str, **params):
        """실행 시작 로깅"""
        self.logger.info(f"🚀 [{self.run_id}] ===== 실행 시작: {solver} =====")
        if params:
            self.logger.info(f"⚙️ [{self.run_id}] 파라미터:")
            for key, value in params.items():
                self.logger.info(f"   - {key}: {value}")

    def log_progress(self, iteration: int, objective: float, optimality: float, gap: float):
        """반복 진행 로깅 (DEBUG, log_every 간격)"""
        if self.logger.isEnabledFor(logging.DEBUG) and iteration % self.log_every == 0:
            self.logger.debug(
                f"🔁 [{self.run_id}] iter={iteration} objective={objective:.6e} "
                f"optimality={optimality:.3e} gap={gap:.3e}"
            )

    def log_stop(self, iteration: int, reason: str, converged: bool):
        """종료 사유 로깅"""
        icon = "✅" if converged else "⚠️"
        message = f"{icon} [{self.run_id}] 종료 (iter={iteration}): {reason}"
        if converged:
            self.logger.info(message)
        else:
            self.logger.warning(message)

    def log_timings(self, timings: Dict[str, Any]):
        """타이밍 정보 로깅"""
        self.logger.info(f"⏱️ [{self.run_id}] 성능 지표:")
        for key, value in timings.items():
            if key.endswith('_ms'):
                self.logger.info(f"   - {key}: {value}ms")
            else:
                self.logger.info(f"   - {key}: {value}")

    def log_error(self, error: Exception, context: str = ""):
        """에러 로깅"""
        context_label = f" - {context}" if context else ""
        self.logger.error(f"❌ [{self.run_id}] 오류 발생{context_label}: {type(error).__name__}: {str(error)}")

        if self.logger.isEnabledFor(logging.DEBUG):
            self.logger.debug(f"🔍 [{self.run_id}] 스택 트레이스:\n{traceback.format_exc()}")

    def log_run_end(self, success: bool = True):
        """실행 종료 로깅"""
        duration = (datetime.now() - self.start_time).total_seconds()
        status_icon = "✅" if success else "❌"
        status_text = "완료" if success else "실패"
        self.logger.info(f"{status_icon} [{self.run_id}] ===== 실행 {status_text} ({duration:.3f}초) =====")


# 전역 로거 인스턴스
_LOG_FILE = os.getenv("RS_LOG_FILE") or None
solver_logger = setup_logger('relax_split.solvers', log_file=_LOG_FILE)
app_logger = setup_logger('relax_split.apps', log_file=_LOG_FILE)
cli_logger = setup_logger('relax_split.cli', log_file=_LOG_FILE)
