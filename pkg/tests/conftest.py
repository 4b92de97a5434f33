import os

# Settings are read at import time, so the environment is fixed before dgwalk loads
os.environ["DATABASE_URL"] = "sqlite://"
os.environ["DGWALK_RECORD_RUNS"] = "false"
os.environ.pop("DGWALK_BROKER_URL", None)
os.environ.pop("REDIS_URL", None)

import numpy as np
import pytest

from dgwalk import database
from dgwalk.tasks import celery_app


@pytest.fixture(autouse=True)
def eager_celery():
    celery_app.conf.task_always_eager = True
    yield


@pytest.fixture
def registry():
    """Fresh in-memory run registry."""
    database.configure("sqlite://")
    database.create_tables(max_retries=1)
    yield database
    database.Base.metadata.drop_all(bind=database.engine)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(20240607))
