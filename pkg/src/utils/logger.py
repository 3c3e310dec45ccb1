"""Logging configuration with Rich formatting"""
import logging
import sys
from pathlib import Path
from typing import Optional

from rich.console import Console
from rich.logging import RichHandler


class FaaeLogger:
    """Named logger with a Rich console handler and optional file output"""

    _instances: dict[str, logging.Logger] = {}

    def __init__(
        self,
        name: str = "faae",
        level: str = "INFO",
        log_file: Optional[Path] = None,
        enable_rich: bool = True,
    ):
        self.name = name
        self.level = level.upper()
        self.log_file = log_file
        self.enable_rich = enable_rich

        self.logger = logging.getLogger(f"faae.{name}")
        self.logger.setLevel(getattr(logging, self.level))
        self.logger.handlers.clear()
        self.logger.propagate = False

        self._setup_handlers()

    def _setup_handlers(self) -> None:
        """Attach console and file handlers"""
        if self.enable_rich:
            console = Console(stderr=True)
            console_handler: logging.Handler = RichHandler(
                console=console,
                show_time=True,
                show_path=False,
                markup=False,
                rich_tracebacks=True,
                tracebacks_show_locals=False,
            )
        else:
            console_handler = logging.StreamHandler(sys.stderr)
            console_handler.setFormatter(
                logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")
            )
        console_handler.setLevel(getattr(logging, self.level))
        self.logger.addHandler(console_handler)

        if self.log_file:
            self._setup_file_handler()

    def _setup_file_handler(self) -> None:
        """Log everything at DEBUG level to the configured file"""
        if not self.log_file:
            return
        self.log_file.parent.mkdir(parents=True, exist_ok=True)

        file_handler = logging.FileHandler(self.log_file, encoding="utf-8")
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(
            logging.Formatter(
                "%(asctime)s - %(name)s - %(levelname)s - %(module)s:%(lineno)d - %(message)s"
            )
        )
        self.logger.addHandler(file_handler)

    def get_logger(self) -> logging.Logger:
        return self.logger


def get_logger(name: str = "faae") -> logging.Logger:
    """
    Get a configured logger instance

    Args:
        name: Logger name, also used for the log file name

    Returns:
        Configured logger instance
    """
    if name in FaaeLogger._instances:
        return FaaeLogger._instances[name]

    try:
        from src.config.settings import get_settings

        settings = get_settings()

        log_file = None
        if settings.enable_file_logging:
            log_file = settings.log_directory / f"{name}.log"

        logger = FaaeLogger(
            name=name,
            level=settings.log_level,
            log_file=log_file,
            enable_rich=not settings.debug_mode,
        ).get_logger()

        FaaeLogger._instances[name] = logger
        return logger

    except Exception as e:
        fallback_logger = logging.getLogger(f"faae.{name}")
        fallback_logger.setLevel(logging.INFO)
        if not fallback_logger.handlers:
            handler = logging.StreamHandler()
            handler.setFormatter(
                logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")
            )
            fallback_logger.addHandler(handler)
        fallback_logger.warning(f"Failed to load settings, using fallback logger: {e}")
        return fallback_logger

