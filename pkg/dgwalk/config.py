# dgwalk/config.py - environment-driven settings
import os
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel

load_dotenv()


def _env_flag(name: str, default: str = "false") -> bool:
    return os.getenv(name, default).strip().lower() in ("1", "true", "yes", "on")


class Settings(BaseModel):
    log_level: str = "INFO"
    max_group_size: int = 2**24
    oracle_max_group_size: int = 2**16
    chunk_size: int = 2**15
    broker_url: Optional[str] = None
    database_url: str = "sqlite:///dgwalk_runs.db"
    record_runs: bool = False

    @classmethod
    def from_env(cls) -> "Settings":
        return cls(
            log_level=os.getenv("LOG_LEVEL", "INFO").upper(),
            max_group_size=int(os.getenv("DGWALK_MAX_GROUP_SIZE", str(2**24))),
            oracle_max_group_size=int(os.getenv("DGWALK_ORACLE_MAX_GROUP_SIZE", str(2**16))),
            chunk_size=int(os.getenv("DGWALK_CHUNK_SIZE", str(2**15))),
            broker_url=os.getenv("DGWALK_BROKER_URL") or os.getenv("REDIS_URL") or None,
            database_url=os.getenv("DATABASE_URL", "sqlite:///dgwalk_runs.db"),
            record_runs=_env_flag("DGWALK_RECORD_RUNS"),
        )


settings = Settings.from_env()
