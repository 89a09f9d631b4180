import enum
from datetime import datetime

from sqlalchemy import Column, DateTime, Enum, ForeignKey, Integer, String, Text
from sqlalchemy.orm import relationship

from qict.db.base import Base


class RunStatus(str, enum.Enum):
    RUNNING = "running"
    SUCCEEDED = "succeeded"
    FAILED = "failed"


class Run(Base):
    __tablename__ = "runs"

    id = Column(Integer, primary_key=True, index=True)
    scenario = Column(String(100), nullable=False, index=True)
    kind = Column(String(30), nullable=False)
    seed = Column(String(20), nullable=False)  # up to 2**64 - 1
    status = Column(Enum(RunStatus), nullable=False, default=RunStatus.RUNNING)
    out_dir = Column(String(500), nullable=False)
    summary = Column(Text)  # summary.json contents
    error = Column(Text)
    started_at = Column(DateTime, default=datetime.utcnow)
    finished_at = Column(DateTime)

    artifacts = relationship("RunArtifact", back_populates="run", cascade="all, delete-orphan")


class RunArtifact(Base):
    __tablename__ = "run_artifacts"

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey("runs.id"), nullable=False, index=True)
    path = Column(String(500), nullable=False)
    kind = Column(String(20), nullable=False)  # csv, pgm, json

    run = relationship("Run", back_populates="artifacts")
