# riots/core/config.py
import os
import logging
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger(__name__)

PACKAGE_DIR = Path(__file__).resolve().parent.parent
FIXTURE_DIR = PACKAGE_DIR / "fixtures"


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        logger.warning(f"⚠️ {name}={raw!r} is not an integer, using {default}")
        return default
    if value < 1:
        logger.warning(f"⚠️ {name}={value} must be positive, using {default}")
        return default
    return value


class Settings:
    """
    Runtime knobs. Read from the environment (and a local .env) at construction,
    so a fresh Settings() picks up overrides made after import.
    """
    VERSION: str = "1.0.0"

    def __init__(self):
        # 1. Exact backend: above this many basic events only the mincut backend runs
        self.EXACT_LIMIT: int = _int_env("RIOTS_EXACT_LIMIT", 24)

        # 2. MOCUS guard against intermediate blow-up
        self.MAX_SETS: int = _int_env("RIOTS_MAX_SETS", 1_000_000)

        # 3. Parallelism for branch expansion and per-event importance
        self.WORKERS: int = _int_env("RIOTS_WORKERS", 1)

        self.LOG_LEVEL: str = os.getenv("RIOTS_LOG_LEVEL", "WARNING").upper()


settings = Settings()
