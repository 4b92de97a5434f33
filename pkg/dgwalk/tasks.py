import logging
from typing import Any, Callable, Dict, List, Sequence, Tuple

import numpy as np
from celery import Celery, group

from dgwalk.config import settings
from dgwalk.services import spectral, wilson

logger = logging.getLogger(__name__)

# Without a broker every task runs in-process through the same code path
celery_app = Celery(
    'dgwalk_worker',
    broker=settings.broker_url or 'memory://',
    backend=settings.broker_url or 'cache+memory://',
)

celery_app.conf.update(
    task_serializer='json',
    result_serializer='json',
    accept_content=['json'],
    timezone='UTC',
    enable_utc=True,
    task_always_eager=settings.broker_url is None,
    task_eager_propagates=True,
    task_routes={
        'dgwalk.tasks.enumerate_spectrum_chunk': {'queue': 'spectrum'},
        'dgwalk.tasks.statistic_histogram_batch': {'queue': 'montecarlo'},
        'dgwalk.tasks.stationary_histogram_batch': {'queue': 'montecarlo'},
    }
)


def _histogram_rows(keys: np.ndarray) -> List[List[int]]:
    values, counts = np.unique(keys, return_counts=True)
    return [[int(v), int(c)] for v, c in zip(values, counts)]


@celery_app.task(name='dgwalk.tasks.enumerate_spectrum_chunk')
def enumerate_spectrum_chunk(n: int, q: int, start: int, stop: int) -> Dict[str, list]:
    """Eigenvalues and zero-box counts for element indices [start, stop)."""
    logger.debug(f"Spectrum chunk n={n} q={q} [{start}, {stop})")
    try:
        eigenvalues, zero_boxes = spectral.spectrum_chunk(n, q, start, stop)
    except Exception as e:
        logger.error(f"Spectrum chunk [{start}, {stop}) for n={n} q={q} failed: {e}")
        raise
    return {"eigenvalues": eigenvalues.tolist(), "zero_boxes": zero_boxes.tolist()}


@celery_app.task(name='dgwalk.tasks.statistic_histogram_batch')
def statistic_histogram_batch(n: int, q: int, ts: List[int], trials: int, entropy: int,
                              spawn_key: List[int], lazy: bool = False) -> List[List[List[int]]]:
    """Histograms of binned F(C_t) for one batch of walks from 0, one per requested t."""
    rng = wilson.batch_rng(entropy, spawn_key)
    w = wilson.make_statistic(n, q)
    try:
        values = wilson.walk_statistic_samples(w, ts, trials, rng, lazy)
    except Exception as e:
        logger.error(f"Statistic batch n={n} q={q} trials={trials} failed: {e}")
        raise
    return [_histogram_rows(wilson.bin_statistic(row, w)) for row in values]


@celery_app.task(name='dgwalk.tasks.stationary_histogram_batch')
def stationary_histogram_batch(n: int, q: int, trials: int, entropy: int,
                               spawn_key: List[int]) -> List[List[int]]:
    """Histogram of binned F over uniform draws from G."""
    rng = wilson.batch_rng(entropy, spawn_key)
    w = wilson.make_statistic(n, q)
    values = wilson.stationary_statistic_samples(w, trials, rng)
    return _histogram_rows(wilson.bin_statistic(values, w))


def parallel_map(task: Callable, argument_tuples: Sequence[Tuple[Any, ...]]) -> List[Any]:
    """Run task over every argument tuple; results come back in submission order."""
    if not argument_tuples:
        return []
    if celery_app.conf.task_always_eager:
        return [task.apply(args=args).get() for args in argument_tuples]
    logger.info(f"Dispatching {len(argument_tuples)} {task.name} task(s) to the broker")
    return group(task.s(*args) for args in argument_tuples).apply_async().get()
