from typing import Optional

from sqlalchemy import create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.orm import sessionmaker
from sqlalchemy.pool import StaticPool

from qict.config import get_settings

DATABASE_URL = get_settings().database_url


def make_engine(url: str) -> Engine:
    """Engine for the run ledger; SQLite gets thread-sharing and, in memory, a single connection"""
    if not url.startswith("sqlite"):
        return create_engine(url)
    if url in ("sqlite://", "sqlite:///:memory:"):
        return create_engine(url, connect_args={"check_same_thread": False}, poolclass=StaticPool)
    return create_engine(url, connect_args={"check_same_thread": False})


# No URL configured means the ledger is disabled
engine: Optional[Engine] = make_engine(DATABASE_URL) if DATABASE_URL else None

SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)
