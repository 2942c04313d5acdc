import sys
import time
import psutil
import logging
import functools
from typing import Any
from typing import Callable
from typing import Optional

LOGGER_NAME = "rolecluster"


def setup_logger(log_file: Optional[str] = None,
                 level: int = logging.INFO) -> logging.Logger:
    """
    Set up the package logger.

    Messages go to ``log_file`` when given, to standard error otherwise. The
    logger's level is set to ``level`` and a formatter is applied to ensure
    that log messages include timestamps.

    :param log_file: The path to the log file where logs will be written.
        If not provided, logs are written to standard error.
    :type log_file: Optional[str]

    :param level: Logging level, defaults to INFO.
    :type level: int

    :return: A configured `logging.Logger` instance.
    :rtype: logging.Logger

    .. note::
        If the logger already has handlers, they will be cleared before
        adding the new handler.
    """
    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(level)

    if logger.hasHandlers():
        logger.handlers.clear()

    if log_file:
        handler = logging.FileHandler(log_file)
    else:
        handler = logging.StreamHandler(sys.stderr)

    handler.setFormatter(logging.Formatter('%(asctime)s - %(message)s'))
    logger.addHandler(handler)

    return logger


class StageMonitor:
    """
    Logs start, duration, memory and failures of pipeline stages.

    :param logger: Logger to write to, defaults to the package logger.
    :type logger: Optional[logging.Logger]
    """

    def __init__(self, logger: Optional[logging.Logger] = None):
        self._logger = logger or logging.getLogger(LOGGER_NAME)

    @staticmethod
    def _memory_gb() -> float:
        return psutil.Process().memory_info().rss / (1024 * 1024 * 1024)

    def run(self, stage: str, func: Callable, *args, **kwargs) -> Any:
        """
        Call ``func`` and log around it.

        :param stage: Stage name used in the log lines.
        :type stage: str

        :param func: Callable to run.
        :type func: Callable

        :return: Whatever ``func`` returns.
        :rtype: Any
        """
        self._logger.info(f"Started {stage}")
        start = time.perf_counter()
        try:
            result = func(*args, **kwargs)
        except Exception as e:
            self._logger.error(f"Error in {stage}: {e}")
            raise
        self._logger.info(
            f"Finished {stage} in {time.perf_counter() - start:.3f} s "
            f"(rss {self._memory_gb():.2f} GB)")
        return result

    def stage(self, name: Optional[str] = None) -> Callable:
        """
        Decorator form of :meth:`run`.

        :param name: Stage name, defaults to the function name.
        :type name: Optional[str]

        :return: Decorator.
        :rtype: Callable
        """
        def decorator(func: Callable) -> Callable:
            @functools.wraps(func)
            def wrapper(*args, **kwargs) -> Any:
                return self.run(name or func.__name__, func, *args, **kwargs)
            return wrapper
        return decorator
