"""
Logging configuration for the experiment harness.
Sets up a timestamped run log and console output on the root logger.
"""
import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Optional

from config.settings import LOGS_DIR

DETAILED_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
CONSOLE_FORMAT = "%(levelname)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def setup_logging(
    stage_name: str = "growthfrag",
    log_level: int = logging.INFO,
    console_level: Optional[int] = None,
    logs_dir: Optional[Path] = None,
) -> str:
    """
    Configure logging for one run.

    Args:
        stage_name: Name of the suite or run (used in the log filename)
        log_level: Level for the file handler
        console_level: Level for the console (defaults to log_level)
        logs_dir: Directory of the log file (defaults to LOGS_DIR)

    Returns:
        Path to the created log file
    """
    if console_level is None:
        console_level = log_level

    logs_dir = Path(logs_dir or LOGS_DIR)
    logs_dir.mkdir(parents=True, exist_ok=True)

    # Run times live here only, never in result files.
    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    log_file = logs_dir / f"{stage_name}_{timestamp}.log"

    root_logger = logging.getLogger()
    root_logger.setLevel(logging.DEBUG)
    for handler in list(root_logger.handlers):
        root_logger.removeHandler(handler)
        handler.close()

    file_handler = logging.FileHandler(log_file, encoding="utf-8")
    file_handler.setLevel(log_level)
    file_handler.setFormatter(logging.Formatter(fmt=DETAILED_FORMAT, datefmt=DATE_FORMAT))
    root_logger.addHandler(file_handler)

    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(console_level)
    console_handler.setFormatter(logging.Formatter(fmt=CONSOLE_FORMAT))
    root_logger.addHandler(console_handler)

    # matplotlib's font manager is chatty at DEBUG
    logging.getLogger("matplotlib").setLevel(logging.WARNING)

    logger = logging.getLogger(__name__)
    logger.info("=" * 70)
    logger.info("Logging initialized: %s", stage_name)
    logger.info("Log file: %s", log_file)
    logger.info("File log level: %s", logging.getLevelName(log_level))
    logger.info("Console log level: %s", logging.getLevelName(console_level))
    logger.info("=" * 70)

    return str(log_file)


def add_error_log_file(error_log_path: Optional[str] = None, logs_dir: Optional[Path] = None) -> str:
    """
    Add a separate ERROR-only log file to the root logger.

    Returns:
        Path to the error log file
    """
    if error_log_path:
        error_file = Path(error_log_path)
    else:
        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        error_file = Path(logs_dir or LOGS_DIR) / f"error_{timestamp}.log"
    error_file.parent.mkdir(parents=True, exist_ok=True)

    error_handler = logging.FileHandler(error_file, encoding="utf-8")
    error_handler.setLevel(logging.ERROR)
    error_handler.setFormatter(
        logging.Formatter(
            fmt=DETAILED_FORMAT + "\n%(pathname)s:%(lineno)d\n",
            datefmt=DATE_FORMAT,
        )
    )
    logging.getLogger().addHandler(error_handler)

    logging.getLogger(__name__).info("Error log file added: %s", error_file)
    return str(error_file)
