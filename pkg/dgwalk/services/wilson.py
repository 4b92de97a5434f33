# dgwalk/services/wilson.py
"""Lower-bound machinery: the eigenfunctions G_{a,b}, their sum F, and the
Wilson time, plus a Monte Carlo estimate of d(t) from the distribution of F.

D_{a,b} = u_a (x) u_b in coordinates, with u_a = e_{2a-1} - e_{2a}, so
<x, D_{a,b}> only reads the 2x2 block of x at rows 2a-1, 2a and columns 2b-1, 2b.
"""
import logging
from math import cos, log, pi, sqrt
from typing import List, Sequence

import numpy as np

from dgwalk.exceptions import DimensionError, ParameterError
from dgwalk.schemas import GroupElement, WalkConfig, WilsonStatistic
from dgwalk.services.group_core import decode_moves, draw_steps, make_rng, move_count

logger = logging.getLogger(__name__)

INCREMENT_SECOND_MOMENT = 64.0
MIN_MC_TRIALS = 1000
MC_BATCH = 1000
UNIFORM_BINS = 64
EXACT_BIN_MODULI = (2, 3, 4, 6)


def make_statistic(n: int, q: int) -> WilsonStatistic:
    if n < 3:
        raise ParameterError("F needs n >= 3 so that at least one D_{a,b} fits")
    if q < 2:
        raise ParameterError("q must be at least 2")
    half = (n - 1) // 2
    return WilsonStatistic(
        n=n,
        q=q,
        pairs=[(a, b) for a in range(1, half + 1) for b in range(1, half + 1)],
        gamma=4.0 / n**2 * (1.0 - cos(2 * pi / q)),
        R=INCREMENT_SECOND_MOMENT,
        F_max=half * half,
    )


def d_matrix(a: int, b: int, n: int, q: int) -> GroupElement:
    if not (1 <= a and 1 <= b and 2 * a <= n - 1 and 2 * b <= n - 1):
        raise ParameterError(f"D_{{{a},{b}}} needs 1 <= a, b and 2a, 2b <= {n - 1}")
    coords = np.zeros((n - 1, n - 1), dtype=np.int64)
    coords[2 * a - 2, 2 * b - 2] = 1
    coords[2 * a - 1, 2 * b - 1] = 1
    coords[2 * a - 1, 2 * b - 2] = q - 1
    coords[2 * a - 2, 2 * b - 1] = q - 1
    return GroupElement(n=n, q=q, coords=coords)


def pairings(coords: np.ndarray, w: WilsonStatistic) -> np.ndarray:
    """<x, D_{a,b}> mod q for a batch of coordinate arrays (..., n-1, n-1) -> (..., half, half)."""
    h = 2 * w.half
    x = np.asarray(coords, dtype=np.int64)[..., :h, :h]
    return (x[..., 0::2, 0::2] + x[..., 1::2, 1::2] - x[..., 1::2, 0::2] - x[..., 0::2, 1::2]) % w.q


def statistic_from_pairings(z: np.ndarray, q: int) -> np.ndarray:
    return np.cos(2 * pi * z / q).sum(axis=(-2, -1))


def statistic_F(x: GroupElement, w: WilsonStatistic) -> float:
    if (x.n, x.q) != (w.n, w.q):
        raise DimensionError(f"element is n={x.n} q={x.q}, statistic is n={w.n} q={w.q}")
    return float(statistic_from_pairings(pairings(x.coords, w), w.q))


def _all_moved(x: GroupElement) -> np.ndarray:
    """Coordinates of x + m for every move m, in enumeration order."""
    n, q = x.n, x.q
    i, j, k, l, sign = decode_moves(np.arange(move_count(n, q)), n, q)
    axis = np.arange(1, n)
    rows = (axis[None, :] >= i[:, None]) & (axis[None, :] < j[:, None])
    cols = (axis[None, :] >= k[:, None]) & (axis[None, :] < l[:, None])
    boxes = sign[:, None, None] * (rows[:, :, None] & cols[:, None, :])
    return (x.coords[None, :, :] + boxes) % q


def one_step_expectation_F(x: GroupElement, w: WilsonStatistic) -> float:
    """Average of F(x + m) over every move m, by full enumeration."""
    if (x.n, x.q) != (w.n, w.q):
        raise DimensionError(f"element is n={x.n} q={x.q}, statistic is n={w.n} q={w.q}")
    return float(statistic_from_pairings(pairings(_all_moved(x), w), w.q).mean())


def increment_bound(x: GroupElement, w: WilsonStatistic) -> float:
    """max over moves m of |F(x + m) - F(x)|."""
    moved = statistic_from_pairings(pairings(_all_moved(x), w), w.q)
    return float(np.abs(moved - statistic_F(x, w)).max())


def wilson_time(n: int, q: int, eps: float) -> float:
    """Largest t with d(t) >= 1 - eps guaranteed by Wilson's lemma applied to F."""
    if n < 4:
        raise ParameterError("the Wilson time needs n >= 4")
    if not 0 < eps < 1:
        raise ParameterError("eps must lie in (0, 1)")
    w = make_statistic(n, q)
    scale = sqrt(w.gamma * eps / (4 * w.R))
    if w.F_max * scale <= 1:
        logger.warning(f"Wilson bound is vacuous at n={n} q={q} eps={eps}: F_max * sqrt(gamma eps / 4R) <= 1")
        return 0.0
    return (log(w.F_max) + log(scale)) / -log(1.0 - w.gamma)


def batch_rng(entropy: int, spawn_key: Sequence[int]) -> np.random.Generator:
    sequence = np.random.SeedSequence(entropy, spawn_key=tuple(spawn_key))
    return np.random.Generator(np.random.PCG64(sequence))


def walk_statistic_samples(w: WilsonStatistic, ts: Sequence[int], trials: int,
                           rng: np.random.Generator, lazy: bool = False) -> np.ndarray:
    """F(C_t) for `trials` walks from 0 at each t in ts, shape (len(ts), trials).

    Only the pairings z are tracked: a move with row range [i, j-1] changes row
    pairs a = j/2 (by +1, j even) and a = i/2 (by -1, i even), and likewise for
    columns, so each step touches at most four entries of z.
    """
    n, q, half = w.n, w.q, w.half
    wanted = sorted(set(int(t) for t in ts))
    if wanted and wanted[0] < 0:
        raise ParameterError("times must be nonnegative")
    z = np.zeros((trials, half + 1, half + 1), dtype=np.int64)
    trial = np.arange(trials)
    recorded = {}
    recorded_times = set(wanted)
    if wanted and wanted[0] == 0:
        recorded[0] = statistic_from_pairings(z[:, 1:, 1:], q)
    steps = wanted[-1] if wanted else 0
    for t, (i, j, k, l, sign) in enumerate(draw_steps(rng, n, q, steps, trials, lazy), start=1):
        row_ends = ((j, 1), (i, -1))
        col_ends = ((l, 1), (k, -1))
        for rows, rho in row_ends:
            for cols, sigma in col_ends:
                hit = (rows % 2 == 0) & (rows // 2 <= half) & (cols % 2 == 0) & (cols // 2 <= half) & (sign != 0)
                np.add.at(z, (trial[hit], rows[hit] // 2, cols[hit] // 2), rho * sigma * sign[hit])
        z %= q
        if t in recorded_times:
            recorded[t] = statistic_from_pairings(z[:, 1:, 1:], q)
    return np.stack([recorded[int(t)] for t in ts]) if len(ts) else np.zeros((0, trials))


def stationary_statistic_samples(w: WilsonStatistic, trials: int, rng: np.random.Generator) -> np.ndarray:
    """F over `trials` uniform draws of the coordinates."""
    coords = rng.integers(0, w.q, size=(trials, w.n - 1, w.n - 1))
    return statistic_from_pairings(pairings(coords, w), w.q)


def bin_statistic(values: np.ndarray, w: WilsonStatistic) -> np.ndarray:
    """Bin keys for F: round(2F) when cosines are multiples of 1/2, else 64 equal bins."""
    values = np.asarray(values, dtype=np.float64)
    if w.q in EXACT_BIN_MODULI:
        return np.rint(2 * values).astype(np.int64)
    scaled = (values + w.F_max) / (2 * w.F_max) * UNIFORM_BINS
    return np.clip(np.floor(scaled), 0, UNIFORM_BINS - 1).astype(np.int64)


def _merge(histograms: List[List[List[int]]]) -> dict:
    merged: dict = {}
    for rows in histograms:
        for key, count in rows:
            merged[key] = merged.get(key, 0) + count
    return merged


def histogram_tv_estimate(walk: dict, stationary: dict, trials: int) -> float:
    """Empirical TV between two histograms less 2 sqrt(occupied bins / trials), floored at 0."""
    keys = set(walk) | set(stationary)
    raw = 0.5 * sum(abs(walk.get(key, 0) - stationary.get(key, 0)) for key in keys) / trials
    return max(0.0, raw - 2.0 * sqrt(len(keys) / trials))


def _spawned(seed: int, batches: int):
    walk_root, stationary_root = np.random.SeedSequence(seed).spawn(2)
    return walk_root.spawn(batches), stationary_root.spawn(batches)


def mc_tv_curve(config: WalkConfig, ts: Sequence[int], trials: int) -> List[float]:
    """Lower-bound estimates of d(t) for every t in ts from one pass of trajectories."""
    from dgwalk.tasks import parallel_map, stationary_histogram_batch, statistic_histogram_batch  # avoid circular import

    if trials < MIN_MC_TRIALS:
        raise ParameterError(f"the Monte Carlo estimate needs at least {MIN_MC_TRIALS} trials, got {trials}")
    make_statistic(config.n, config.q)
    ts = [int(t) for t in ts]
    sizes = [min(MC_BATCH, trials - start) for start in range(0, trials, MC_BATCH)]
    walk_seeds, stationary_seeds = _spawned(config.seed, len(sizes))
    logger.info(f"MC lower bound n={config.n} q={config.q} trials={trials} in {len(sizes)} batch(es), {len(ts)} time(s)")
    walk_parts = parallel_map(statistic_histogram_batch, [
        (config.n, config.q, ts, size, s.entropy, list(s.spawn_key), config.lazy)
        for size, s in zip(sizes, walk_seeds)
    ])
    stationary_parts = parallel_map(stationary_histogram_batch, [
        (config.n, config.q, size, s.entropy, list(s.spawn_key))
        for size, s in zip(sizes, stationary_seeds)
    ])
    stationary = _merge(stationary_parts)
    return [
        histogram_tv_estimate(_merge([part[position] for part in walk_parts]), stationary, trials)
        for position in range(len(ts))
    ]


def mc_tv_lower_bound(config: WalkConfig, t: int, trials: int) -> float:
    return mc_tv_curve(config, [t], trials)[0]


def random_element(n: int, q: int, seed: int) -> GroupElement:
    return GroupElement(n=n, q=q, coords=make_rng(seed).integers(0, q, size=(n - 1, n - 1)))
