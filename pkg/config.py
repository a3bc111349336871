"""
Runtime configuration for the payload-aware consensus task allocator
"""
import logging
import os
import sys

import structlog
from dotenv import load_dotenv

load_dotenv()


def _env_float(name, default):
    return float(os.getenv(name, default))


def _env_int(name, default):
    return int(os.getenv(name, default))


class Config:
    """Allocator configuration class"""

    # Application Settings
    APP_NAME = "cbpa"
    APP_VERSION = "1.0.0"
    DEBUG = os.getenv("DEBUG", "False").lower() == "true"

    # Algorithm constants (cost weights, sentinels, safety bound)
    ALPHA = _env_float("CBPA_ALPHA", 1e4)
    BETA = _env_float("CBPA_BETA", 1e4)
    BIG_N = _env_float("CBPA_BIG_N", 1e6)
    BIG_C = _env_float("CBPA_BIG_C", 1e9)
    TOLERANCE = _env_float("CBPA_TOLERANCE", 1e-9)
    MAX_ROUNDS_FACTOR = _env_int("CBPA_MAX_ROUNDS_FACTOR", 10)

    # Fleet defaults (not listed in the Case 1 table)
    DEFAULT_VELOCITY = _env_float("CBPA_DEFAULT_VELOCITY", 5.0)
    DEFAULT_DURATION = _env_float("CBPA_DEFAULT_DURATION", 10.0)
    DEFAULT_SEED = _env_int("CBPA_SEED", 2024)

    # Mission area, meters
    AREA_WIDTH = 2400.0
    AREA_HEIGHT = 1500.0

    # Case 2 (strike-only gains experiment)
    CASE2_PAYLOAD = 100.0
    CASE2_DEMAND = 30.0
    CASE2_STATIC_GAIN = 100.0
    CASE2_LAMBDA = 0.01
    CASE2_TASK_RANGE = (10, 20)
    CASE2_REPEATS = 20

    # Logging
    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
    LOG_FORMAT = os.getenv("LOG_FORMAT", "console")

    # Output
    OUTPUT_DIR = os.getenv("CBPA_OUTPUT_DIR", "results")
    CSV_FLOAT_FORMAT = "%.6g"

    @classmethod
    def validate(cls):
        """Validate numeric settings"""
        positive = ["ALPHA", "BETA", "BIG_N", "BIG_C", "TOLERANCE",
                    "DEFAULT_VELOCITY", "MAX_ROUNDS_FACTOR"]

        bad = [name for name in positive if not getattr(cls, name) > 0]
        if cls.DEFAULT_DURATION < 0:
            bad.append("DEFAULT_DURATION")
        if cls.CASE2_LAMBDA < 0:
            bad.append("CASE2_LAMBDA")
        if cls.LOG_FORMAT not in ("console", "json"):
            bad.append("LOG_FORMAT")

        if bad:
            raise ValueError(f"Invalid configuration values: {', '.join(bad)}")

        return True

    @classmethod
    def max_rounds_for(cls, n_tasks, n_robots):
        return max(1, cls.MAX_ROUNDS_FACTOR * n_tasks * n_robots)


def configure_logging(level=None, fmt=None):
    """Route stdlib logging and structlog through one renderer"""
    level = (level or config.LOG_LEVEL).upper()
    fmt = fmt or config.LOG_FORMAT

    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(message)s",
        stream=sys.stderr,
    )

    renderer = (
        structlog.processors.JSONRenderer(sort_keys=True)
        if fmt == "json"
        else structlog.dev.ConsoleRenderer(colors=False)
    )
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            renderer,
        ],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )


# Shared configuration instance
config = Config()
