import os
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field

load_dotenv()


class Settings(BaseModel):
    """Process-level settings read from the environment (.env supported)"""

    database_url: Optional[str] = None
    threads: int = Field(default=1, ge=1)
    log_level: str = "INFO"
    out_dir: str = "out"


def get_settings() -> Settings:
    threads = os.getenv("QICT_THREADS")
    return Settings(
        database_url=os.getenv("QICT_DATABASE_URL") or None,
        threads=int(threads) if threads else (os.cpu_count() or 1),
        log_level=os.getenv("QICT_LOG_LEVEL", "INFO").upper(),
        out_dir=os.getenv("QICT_OUT_DIR", "out"),
    )
