from typing import Iterator, Optional

from sqlalchemy.orm import Session

from qict.db.session import SessionLocal, engine


def get_db() -> Iterator[Optional[Session]]:
    """Ledger session for the duration of one command; None when no ledger is configured"""
    if engine is None:
        yield None
        return
    db = SessionLocal()
    try:
        yield db
    finally:
        db.close()
