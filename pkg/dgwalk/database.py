from sqlalchemy import create_engine, text
from sqlalchemy.orm import declarative_base, sessionmaker
from sqlalchemy.pool import StaticPool
import logging
import time

from dgwalk.config import settings

logger = logging.getLogger(__name__)

def make_engine(url: str):
    """Engine for the run registry; in-memory SQLite shares one connection."""
    if url.startswith("sqlite"):
        options = {"connect_args": {"check_same_thread": False}}
        if url in ("sqlite://", "sqlite:///:memory:"):
            options["poolclass"] = StaticPool
        return create_engine(url, **options)
    return create_engine(
        url,
        pool_pre_ping=True,
        pool_recycle=300,
        connect_args={"connect_timeout": 10}
    )

engine = make_engine(settings.database_url)
SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)

Base = declarative_base()

def configure(url: str) -> None:
    """Point the registry at another database (tests use sqlite://)."""
    global engine
    engine = make_engine(url)
    SessionLocal.configure(bind=engine)

def create_tables(max_retries: int = 5, retry_delay: float = 2.0):
    """Create all tables with retry logic"""
    from dgwalk.models import ExperimentRun  # Import here to avoid circular import

    for attempt in range(max_retries):
        try:
            with engine.connect() as conn:
                conn.execute(text("SELECT 1"))

            Base.metadata.create_all(bind=engine)
            logger.info("Run registry tables ready")
            return

        except Exception as e:
            logger.warning(f"Database connection attempt {attempt + 1} failed: {e}")
            if attempt < max_retries - 1:
                time.sleep(retry_delay)
                retry_delay *= 2  # Exponential backoff
            else:
                logger.error(f"Failed to connect to database after {max_retries} attempts")
                raise
