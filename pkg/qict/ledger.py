"""
Run ledger: one row per ``run`` invocation plus the artifacts it wrote.

Ledger writes happen after artifacts are on disk and never touch them.
"""
import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Sequence

from sqlalchemy.engine import Engine
from sqlalchemy.exc import SQLAlchemyError
from sqlalchemy.orm import Session

from qict.db.base import Base
from qict.db.models import Run, RunArtifact, RunStatus
from qict.schemas import Scenario

logger = logging.getLogger(__name__)


def create_tables(bind: Engine):
    Base.metadata.create_all(bind=bind)


def start_run(db: Session, scenario: Scenario, out_dir: Path) -> Run:
    run = Run(
        scenario=scenario.name,
        kind=scenario.kind,
        seed=str(scenario.seed),
        status=RunStatus.RUNNING,
        out_dir=str(out_dir),
    )
    db.add(run)
    db.commit()
    db.refresh(run)
    return run


def finish_run(db: Session, run: Run, summary: Dict[str, Any], artifacts: Sequence[Path]) -> Run:
    """Mark a run succeeded and record its artifacts; all or nothing"""
    try:
        run.status = RunStatus.SUCCEEDED
        run.summary = json.dumps(summary, sort_keys=True, default=str)
        run.finished_at = datetime.utcnow()
        for path in artifacts:
            db.add(RunArtifact(run_id=run.id, path=str(path), kind=path.suffix.lstrip(".") or "file"))
        db.commit()
    except SQLAlchemyError:
        db.rollback()
        raise
    return run


def fail_run(db: Session, run: Run, error: str) -> Run:
    run.status = RunStatus.FAILED
    run.error = error
    run.finished_at = datetime.utcnow()
    db.commit()
    return run


def recent_runs(db: Session, limit: int = 20) -> List[Run]:
    return db.query(Run).order_by(Run.id.desc()).limit(limit).all()
