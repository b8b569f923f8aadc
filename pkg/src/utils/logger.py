import sys
from pathlib import Path
from typing import Optional

from loguru import logger

CONSOLE_FORMAT = (
    "<green>{elapsed}</green> | <level>{level: <8}</level> | "
    "<cyan>{name}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>"
)
FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <8} | {name}:{function}:{line} - {message}"


def setup_logger(log_file: Optional[str] = "./logs/dnlse.log", log_level: str = "INFO"):
    """
    Route loguru to stderr and, when log_file is set, to a rotating file

    stdout stays free for command output (`reduce` prints its report there).

    Args:
        log_file: Path of the file sink; empty or None disables it
        log_level: Minimum level for both sinks
    """
    logger.remove()
    logger.add(sys.stderr, format=CONSOLE_FORMAT, level=log_level, colorize=True, backtrace=False)

    if not log_file:
        return logger

    Path(log_file).parent.mkdir(parents=True, exist_ok=True)
    logger.add(log_file, format=FILE_FORMAT, level=log_level, rotation="20 MB", retention=5, compression="zip")
    return logger
