"""Process-level settings read from the environment (optionally a .env file)."""

import logging
import os

from dotenv import load_dotenv

load_dotenv()

LOG_LEVEL = os.getenv("PBFTPERF_LOG_LEVEL", "INFO").upper()
WORKERS = int(os.getenv("PBFTPERF_WORKERS", "1"))
OUTPUT_DIR = os.getenv("PBFTPERF_OUTPUT_DIR", "results")
API_PORT = int(os.getenv("PBFTPERF_API_PORT", "8090"))

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def configure_logging(level: str | None = None) -> None:
    """Configure root logging once per entry point."""
    logging.basicConfig(level=(level or LOG_LEVEL).upper(), format=LOG_FORMAT)
