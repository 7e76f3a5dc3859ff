import logging
import sys
from pathlib import Path

import yaml

PROJECT_ROOT = Path(__file__).resolve().parents[3]
ROOT_LOGGER = "indoor_behaviour_ai"
LOG_FORMAT = "%(asctime)s | %(levelname)-7s | %(name)s | %(message)s"


def _monitoring_section() -> dict:
    """`monitoring` block of config/config.yaml; empty when the file is absent."""
    config_path = PROJECT_ROOT / "config" / "config.yaml"
    if not config_path.exists():
        return {}
    with open(config_path, encoding="utf-8") as f:
        return (yaml.safe_load(f) or {}).get("monitoring", {}) or {}


def setup_logger(name: str = ROOT_LOGGER) -> logging.Logger:
    """Attach the stdout and file handlers once; later calls return the configured logger."""
    logger = logging.getLogger(name)
    if logger.handlers:
        return logger

    monitoring = _monitoring_section()
    set_level(monitoring.get("log_level", "INFO"), name)
    formatter = logging.Formatter(fmt=LOG_FORMAT, datefmt="%Y-%m-%d %H:%M:%S")

    console = logging.StreamHandler(sys.stdout)
    console.setFormatter(formatter)
    logger.addHandler(console)

    # log_file: null keeps logs on stdout only
    log_file = monitoring.get("log_file", "logs/pipeline.log")
    if log_file:
        log_path = Path(log_file)
        if not log_path.is_absolute():
            log_path = PROJECT_ROOT / log_path
        log_path.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_path, encoding="utf-8")
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    return logger


def set_level(level: str, name: str = ROOT_LOGGER) -> None:
    logging.getLogger(name).setLevel(getattr(logging, str(level).upper(), logging.INFO))


def get_logger(module_name: str) -> logging.Logger:
    """Child logger of the package logger.

    Usage in any module:
        from indoor_behaviour_ai.monitoring.logger import get_logger
        logger = get_logger("kmm.solver")
        logger.info("Solving %d-point problem", n)
    """
    setup_logger()
    return logging.getLogger(f"{ROOT_LOGGER}.{module_name}")
