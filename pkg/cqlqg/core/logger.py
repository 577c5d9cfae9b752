import os
import logging
from os.path import join as pjoin

from ..utils import display

ROOT_LOGGER_NAME = "cqlqg"
FORMAT = "%(asctime)s : %(levelname)s : %(name)s : %(message)s"


class Logger:
    def __init__(self, log_path: str, level: str = "INFO") -> None:
        self.log_path = pjoin(log_path, "cqlqg.log")
        self.prefix = ""
        self.level = logging.getLevelName(level.upper())
        self.logger = self.listener_configurer()

    def set_msg_prefix(self, prefix: str) -> None:
        self.prefix = prefix

    def _log(self, level, msg: str, prefix: str = None, cml: bool = False) -> None:
        if prefix is None:
            prefix = self.prefix
        if prefix:
            msg = f"{prefix} - {msg}"
        self.logger.log(level, msg)
        if cml:
            color = "red" if level >= logging.ERROR else "yellow" if level >= logging.WARNING else "white"
            display(msg, color=color)

    def info(self, msg: str, prefix: str = None, cml: bool = False) -> None:
        """INFO Logging"""
        self._log(logging.INFO, msg, prefix, cml)

    def warning(self, msg: str, prefix: str = None, cml: bool = False) -> None:
        """WARNING Logging"""
        self._log(logging.WARNING, msg, prefix, cml)

    def error(self, msg: str, prefix: str = None, cml: bool = False) -> None:
        """ERROR Logging"""
        self._log(logging.ERROR, msg, prefix, cml)

    def debug(self, msg: str, prefix: str = None, cml: bool = False) -> None:
        """DEBUG Logging"""
        self._log(logging.DEBUG, msg, prefix, cml)

    def listener_configurer(self) -> logging.Logger:
        """Configures the package logger with a single file handler
        Returns:
            logger: configured logging object
        """
        logger = logging.getLogger(ROOT_LOGGER_NAME)
        logger.setLevel(self.level)

        target = os.path.abspath(self.log_path)
        for h in logger.handlers:
            if isinstance(h, logging.FileHandler) and h.baseFilename == target:
                return logger

        os.makedirs(os.path.dirname(target), exist_ok=True)
        fh = logging.FileHandler(target, mode="w", encoding="utf-8")
        fh.setFormatter(logging.Formatter(FORMAT))
        logger.addHandler(fh)
        return logger

    def close(self) -> None:
        """Detaches and closes the file handlers installed by this logger"""
        target = os.path.abspath(self.log_path)
        for h in list(self.logger.handlers):
            if isinstance(h, logging.FileHandler) and h.baseFilename == target:
                self.logger.removeHandler(h)
                h.close()


def get_logger(name: str) -> logging.Logger:
    """Returns a child of the package logger for library modules"""
    if not name.startswith(ROOT_LOGGER_NAME):
        name = f"{ROOT_LOGGER_NAME}.{name}"
    return logging.getLogger(name)
