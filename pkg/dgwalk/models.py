# dgwalk/models.py
from sqlalchemy import Column, Integer, String, Text, DateTime
from datetime import datetime

from dgwalk.database import Base


class ExperimentRun(Base):
    __tablename__ = "experiment_runs"

    id = Column(Integer, primary_key=True, index=True)
    subcommand = Column(String(20), nullable=False)
    seed = Column(String(20), nullable=False)  # up to 2**64 - 1
    parameters = Column(Text, nullable=False)  # JSON echo of the merged config

    # Outcome
    status = Column(String(20), default="pending")
    exit_code = Column(Integer, nullable=True)
    output_path = Column(String(500), nullable=True)
    output_digest = Column(String(64), nullable=True)  # sha256 of emitted bytes

    # Timestamps
    created_at = Column(DateTime, default=datetime.utcnow)
    finished_at = Column(DateTime, nullable=True)
