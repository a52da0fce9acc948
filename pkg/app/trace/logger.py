"""Project logger ``DPL``, configured from the ``logging.yml`` next to this file.

Warnings raised through ``warnings.warn`` (scipy's ``LinAlgWarning``, numpy's
``RuntimeWarning`` on overflow in a badly scaled block) go to the same console.
"""
from __future__ import annotations

import logging
import os
from logging.config import dictConfig
from pathlib import Path

import yaml

LOGGING_CONFIG = Path(__file__).with_name("logging.yml")

# Load logging configuration
with open(LOGGING_CONFIG, "r") as f:
    dictConfig(yaml.safe_load(f.read()))

logging.captureWarnings(True)

logger = logging.getLogger("DPL")


def set_level(level: str | int) -> None:
    """Change the project level, from ``LOG_LEVEL`` or the command line."""
    logger.setLevel(level.upper() if isinstance(level, str) else level)


if os.getenv("LOG_LEVEL"):
    set_level(os.environ["LOG_LEVEL"])
