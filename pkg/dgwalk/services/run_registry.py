# dgwalk/services/run_registry.py
"""Bookkeeping of CLI runs in the experiment_runs table."""
import logging
from datetime import datetime
from typing import Optional

from dgwalk import database
from dgwalk.models import ExperimentRun
from dgwalk.schemas import ExperimentConfig

logger = logging.getLogger(__name__)


def record_run(config: ExperimentConfig) -> Optional[int]:
    """Insert a pending row; returns its id, or None if the registry is unreachable."""
    try:
        database.create_tables(max_retries=1)
        db = database.SessionLocal()
        try:
            run = ExperimentRun(
                subcommand=config.subcommand,
                seed=str(config.seed),
                parameters=config.model_dump_json(exclude={"record"}),
                status="pending",
                output_path=config.out,
            )
            db.add(run)
            db.commit()
            db.refresh(run)
            logger.info(f"Recorded run {run.id} ({config.subcommand})")
            return run.id
        finally:
            db.close()
    except Exception as e:
        logger.error(f"Could not record run: {e}")
        return None


def finish_run(run_id: Optional[int], exit_code: int, digest: Optional[str] = None) -> None:
    if run_id is None:
        return
    try:
        db = database.SessionLocal()
        try:
            run = db.query(ExperimentRun).filter(ExperimentRun.id == run_id).first()
            if not run:
                raise ValueError(f"Run {run_id} not found")
            run.exit_code = exit_code
            run.status = "completed" if exit_code in (0, 1) else "failed"
            run.output_digest = digest
            run.finished_at = datetime.utcnow()
            db.commit()
        finally:
            db.close()
    except Exception as e:
        logger.error(f"Could not finish run {run_id}: {e}")