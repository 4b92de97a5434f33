# dgwalk/services/combinatorics.py
"""Skeletons, nonzero intervals and nonzero boxes, and the checks built on them.

Intervals are closed and 1-based inside [1, n-1]; an interval is (lo, hi) with
lo <= hi. A row vector u lives in (Z/qZ)^{n-1}, so n is len(u) + 1.
"""
import logging
from math import comb
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from dgwalk.exceptions import ParameterError, PreconditionError
from dgwalk.schemas import GroupElement, LemmaReport, PsiFamily, Skeleton
from dgwalk.services.group_core import group_size, index_digits, make_rng

logger = logging.getLogger(__name__)

EXHAUSTIVE_VECTOR_CAP = 2**20
EXHAUSTIVE_MATRIX_CAP = 2**16
BATCH = 2**14

Interval = Tuple[int, int]


def skeleton(u: Sequence[int]) -> Skeleton:
    """Greedy skeleton: first nonzero index, then each next nonzero index at least 2 further on."""
    indices: List[int] = []
    for position, value in enumerate(u, start=1):
        if value != 0 and (not indices or position >= indices[-1] + 2):
            indices.append(position)
    return Skeleton(indices=indices)


def skeleton_neighbourhood(skel: Skeleton, length: int) -> Set[int]:
    """I(u) together with I(u) +/- 1, clipped to [1, length]."""
    return {h for s in skel.indices for h in (s - 1, s, s + 1) if 1 <= h <= length}


def _prefix_residues(u, q: int) -> np.ndarray:
    u = np.asarray(u, dtype=np.int64)
    prefix = np.zeros(u.shape[:-1] + (u.shape[-1] + 1,), dtype=np.int64)
    prefix[..., 1:] = np.cumsum(u, axis=-1)
    return prefix % q


def _count_unequal_pairs(prefix: np.ndarray, q: int) -> np.ndarray:
    # intervals [i, j] <-> prefix pairs (i-1, j); nonzero iff the residues differ
    batch, width = prefix.shape
    offsets = np.arange(batch, dtype=np.int64)[:, None] * q
    classes = np.bincount((prefix + offsets).ravel(), minlength=batch * q).reshape(batch, q)
    return comb(width, 2) - (classes * (classes - 1) // 2).sum(axis=1)


def count_nonzero_intervals(u: Sequence[int], q: int) -> int:
    """S(u), from residue classes of the prefix sums."""
    if len(u) == 0:
        return 0
    return int(_count_unequal_pairs(_prefix_residues(u, q)[None, :], q)[0])


def count_nonzero_intervals_naive(u: Sequence[int], q: int) -> int:
    m = len(u)
    return sum(1 for i in range(m) for j in range(i, m) if sum(u[i:j + 1]) % q)


def nonzero_intervals(u: Sequence[int], q: int) -> List[Interval]:
    prefix = _prefix_residues(u, q)
    lo, hi = np.triu_indices(len(u))
    mask = (prefix[hi + 1] - prefix[lo]) % q != 0
    return [(int(a) + 1, int(b) + 1) for a, b in zip(lo[mask], hi[mask])]


def refined_interval_count(u: Sequence[int], q: int) -> int:
    """Nonzero intervals with one or both endpoints in I(u) u (I(u) +/- 1)."""
    marks = skeleton_neighbourhood(skeleton(u), len(u))
    return sum(1 for lo, hi in nonzero_intervals(u, q) if lo in marks or hi in marks)


def count_nonzero_boxes(y: GroupElement) -> int:
    """N(y): for every row interval, count nonzero column intervals of the strip sums."""
    m = y.n - 1
    prefix = np.zeros((m + 1, m), dtype=np.int64)
    prefix[1:] = np.cumsum(y.coords, axis=0)
    lo, hi = np.triu_indices(m)
    strips = prefix[hi + 1] - prefix[lo]
    return int(_count_unequal_pairs(_prefix_residues(strips, y.q), y.q).sum())


def count_nonzero_boxes_naive(y: GroupElement) -> int:
    m, q, c = y.n - 1, y.q, y.coords
    total = 0
    for i in range(m):
        for j in range(i, m):
            for k in range(m):
                for l in range(k, m):
                    if int(c[i:j + 1, k:l + 1].sum()) % q:
                        total += 1
    return total


def nonzero_rows(y: GroupElement) -> List[int]:
    return [i + 1 for i in range(y.n - 1) if np.any(y.coords[i])]


def spaced_row_set(y: GroupElement) -> List[int]:
    """A maximal set of nonzero rows with pairwise gaps >= 2, chosen greedily from the top."""
    chosen: List[int] = []
    for row in nonzero_rows(y):
        if not chosen or row >= chosen[-1] + 2:
            chosen.append(row)
    return chosen


def verify_lemma_3_3(y: GroupElement, rows: Sequence[int]) -> bool:
    """N(y) >= S_{i_1}(n-1) + S_{i_2}(n-3) + ... for nonzero rows spaced >= 2 apart."""
    ordered = sorted(rows)
    m = y.n - 1
    if len(set(ordered)) != len(ordered) or any(not 1 <= r <= m for r in ordered):
        raise PreconditionError(f"rows {list(rows)} must be distinct indices in [1, {m}]")
    if any(b - a < 2 for a, b in zip(ordered, ordered[1:])):
        raise PreconditionError(f"rows {list(rows)} must be pairwise at least 2 apart")
    zero = [r for r in ordered if not np.any(y.coords[r - 1])]
    if zero:
        raise PreconditionError(f"rows {zero} are zero rows")
    bound = sum(count_nonzero_intervals(y.coords[r - 1], y.q) * (y.n - 2 * position + 1)
                for position, r in enumerate(ordered, start=1))
    return count_nonzero_boxes(y) >= bound


def big_rows(y: GroupElement, epsilon: float) -> Set[int]:
    """Rows i such that row i-1, i or i+1 has at least eps*n*(n - eps*n) nonzero intervals."""
    m, n = y.n - 1, y.n
    threshold = epsilon * n * (n - epsilon * n)
    heavy = {i for i in range(1, m + 1) if count_nonzero_intervals(y.coords[i - 1], y.q) >= threshold}
    return {i for i in range(1, m + 1) if heavy & {i - 1, i, i + 1}}


def build_psi(y: GroupElement, epsilon: Optional[float] = None) -> PsiFamily:
    """Psi family: odd rows keep nonzero intervals touching their skeleton
    neighbourhood, even rows keep nonzero intervals with both endpoints away from
    the neighbourhoods of the adjacent odd rows. Rows flagged by big_rows are empty.
    """
    m, q = y.n - 1, y.q
    excluded = big_rows(y, epsilon) if epsilon is not None else set()
    marks: Dict[int, Set[int]] = {}
    psi: Dict[int, List[Interval]] = {}
    for i in range(1, m + 1, 2):
        if i in excluded:
            continue
        row = y.coords[i - 1]
        marks[i] = skeleton_neighbourhood(skeleton(row), m)
        psi[i] = [iv for iv in nonzero_intervals(row, q) if iv[0] in marks[i] or iv[1] in marks[i]]
    for i in range(2, m + 1, 2):
        if i in excluded:
            continue
        allowed = set(range(1, m + 1)) - marks.get(i - 1, set()) - marks.get(i + 1, set())
        psi[i] = [iv for iv in nonzero_intervals(y.coords[i - 1], q)
                  if iv[0] in allowed and iv[1] in allowed]
    return PsiFamily(rows=[psi.get(i, []) for i in range(1, m + 1)])


def psi_box_inequality(y: GroupElement, family: PsiFamily) -> bool:
    """2 N(y) >= n * (|Psi_1| + ... + |Psi_{n-1}|)."""
    return 2 * count_nonzero_boxes(y) >= y.n * family.total_size


def random_residues(rng: np.random.Generator, shape: Tuple[int, ...], q: int) -> np.ndarray:
    """Random residues with a per-sample density, so sparse vectors show up often."""
    density = rng.random((shape[0],) + (1,) * (len(shape) - 1))
    values = rng.integers(1, q, size=shape)
    return np.where(rng.random(shape) < density, values, 0)


def _batch_skeletons(vectors: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Skeleton sizes and neighbourhood masks for a batch of vectors."""
    batch, m = vectors.shape
    last = np.full(batch, -10, dtype=np.int64)
    sizes = np.zeros(batch, dtype=np.int64)
    marks = np.zeros((batch, m + 2), dtype=bool)
    for h in range(m):
        take = (vectors[:, h] != 0) & (h >= last + 2)
        last = np.where(take, h, last)
        sizes += take
        for shift in (0, 1, 2):
            marks[:, h + shift] |= take
    return sizes, marks[:, 1:m + 1]


def _check_vector_batch(vectors: np.ndarray, q: int, report: LemmaReport) -> None:
    batch, m = vectors.shape
    n = m + 1
    totals = _count_unequal_pairs(_prefix_residues(vectors, q), q)
    sizes, marks = _batch_skeletons(vectors)
    prefix = _prefix_residues(vectors, q)
    lo, hi = np.triu_indices(m)
    nonzero = (prefix[:, hi + 1] - prefix[:, lo]) % q != 0
    touching = marks[:, lo] | marks[:, hi]
    refined = (nonzero & touching).sum(axis=1)
    bound = sizes * (n - sizes)
    report.cases_checked += batch
    for index in np.flatnonzero((totals < bound) | (refined < bound)):
        report.add_counterexample({
            "u": vectors[index].tolist(),
            "q": q,
            "S": int(totals[index]),
            "s": int(sizes[index]),
            "refined": int(refined[index]),
            "bound": int(bound[index]),
        })


def verify_lemma_3_2(n: int, q: int, mode: str = "exhaustive", trials: int = 10000,
                     seed: int = 0) -> LemmaReport:
    """S(u) >= s(u)(n - s(u)), and the same for intervals touching I(u) u (I(u) +/- 1)."""
    report = LemmaReport(lemma="lemma3_2", mode=mode, details={"n": n, "q": q})
    m = n - 1
    if mode == "exhaustive":
        size = q ** m
        if size > EXHAUSTIVE_VECTOR_CAP:
            raise ParameterError(f"exhaustive mode needs q^(n-1) <= {EXHAUSTIVE_VECTOR_CAP}, got {size}")
        powers = q ** np.arange(m - 1, -1, -1, dtype=np.int64)
        for start in range(0, size, BATCH):
            indices = np.arange(start, min(start + BATCH, size), dtype=np.int64)
            _check_vector_batch((indices[:, None] // powers[None, :]) % q, q, report)
    elif mode == "random":
        rng = make_rng(seed)
        for start in range(0, trials, BATCH):
            _check_vector_batch(random_residues(rng, (min(BATCH, trials - start), m), q), q, report)
    else:
        raise ParameterError(f"unknown mode {mode!r}")
    logger.info(f"lemma3_2 n={n} q={q} {mode}: {report.cases_checked} cases, {report.counterexample_count} counterexamples")
    return report


def _matrices(n: int, q: int, mode: str, trials: int, seed: int) -> Iterable[GroupElement]:
    if mode == "exhaustive":
        size = group_size(n, q)
        if size > EXHAUSTIVE_MATRIX_CAP:
            raise ParameterError(f"exhaustive mode needs q^((n-1)^2) <= {EXHAUSTIVE_MATRIX_CAP}, got {size}")
        for start in range(0, size, BATCH):
            for coords in index_digits(np.arange(start, min(start + BATCH, size)), n, q):
                yield GroupElement(n=n, q=q, coords=coords)
    elif mode == "random":
        rng = make_rng(seed)
        for coords in random_residues(rng, (trials, n - 1, n - 1), q):
            yield GroupElement(n=n, q=q, coords=coords)
    else:
        raise ParameterError(f"unknown mode {mode!r}")


def verify_lemma_3_3_suite(n: int, q: int, mode: str = "exhaustive", trials: int = 10000,
                           seed: int = 0) -> LemmaReport:
    """Lemma 3.3 on the greedy maximal spaced row set and on every single nonzero row."""
    report = LemmaReport(lemma="lemma3_3", mode=mode, details={"n": n, "q": q})
    for y in _matrices(n, q, mode, trials, seed):
        candidates = [spaced_row_set(y)] + [[row] for row in nonzero_rows(y)]
        for rows in candidates:
            report.cases_checked += 1
            if not verify_lemma_3_3(y, rows):
                report.add_counterexample({"y": y.coords.tolist(), "q": q, "rows": rows,
                                           "N": count_nonzero_boxes(y)})
    return report


def verify_lemma_3_5_suite(n: int, q: int, mode: str = "exhaustive", trials: int = 10000,
                           seed: int = 0, epsilon: Optional[float] = None) -> LemmaReport:
    """Disjointness of consecutive Psi rows and 2 N(y) >= n * sum |Psi_i|."""
    report = LemmaReport(lemma="lemma3_5", mode=mode, details={"n": n, "q": q})
    for y in _matrices(n, q, mode, trials, seed):
        family = build_psi(y, epsilon)
        report.cases_checked += 1
        intervals_ok = all(
            set(row) <= set(nonzero_intervals(y.coords[i], q)) for i, row in enumerate(family.rows)
        )
        if not (family.consecutive_disjoint() and intervals_ok and psi_box_inequality(y, family)):
            report.add_counterexample({"y": y.coords.tolist(), "q": q,
                                       "psi": [list(map(list, row)) for row in family.rows],
                                       "N": count_nonzero_boxes(y)})
    return report


def verify_min_boxes(n: int, q: int, mode: str = "exhaustive", trials: int = 10000,
                     seed: int = 0) -> LemmaReport:
    """N(y) >= (n-1)^2 for every nonzero y."""
    report = LemmaReport(lemma="min_boxes", mode=mode, details={"n": n, "q": q})
    for y in _matrices(n, q, mode, trials, seed):
        if not np.any(y.coords):
            continue
        report.cases_checked += 1
        boxes = count_nonzero_boxes(y)
        if boxes < (n - 1) ** 2:
            report.add_counterexample({"y": y.coords.tolist(), "q": q, "N": boxes})
    return report


def verify_interval_oracle(n: int, q: int, mode: str = "exhaustive", trials: int = 10000,
                           seed: int = 0) -> LemmaReport:
    """Prefix-sum S(u) against the triple loop."""
    report = LemmaReport(lemma="interval_oracle", mode=mode, details={"n": n, "q": q})
    m = n - 1
    if mode == "exhaustive":
        if q ** m > EXHAUSTIVE_MATRIX_CAP:
            raise ParameterError(f"exhaustive mode needs q^(n-1) <= {EXHAUSTIVE_MATRIX_CAP}")
        powers = q ** np.arange(m - 1, -1, -1, dtype=np.int64)
        vectors = (np.arange(q ** m)[:, None] // powers[None, :]) % q
    else:
        vectors = random_residues(make_rng(seed), (trials, m), q)
    for u in vectors.tolist():
        report.cases_checked += 1
        fast, slow = count_nonzero_intervals(u, q), count_nonzero_intervals_naive(u, q)
        if fast != slow:
            report.add_counterexample({"u": u, "q": q, "fast": fast, "naive": slow})
    return report


def verify_box_oracle(n: int, q: int, mode: str = "exhaustive", trials: int = 10000,
                      seed: int = 0) -> LemmaReport:
    """Prefix-sum N(y) against the six-fold loop."""
    report = LemmaReport(lemma="box_oracle", mode=mode, details={"n": n, "q": q})
    for y in _matrices(n, q, mode, trials, seed):
        report.cases_checked += 1
        fast, slow = count_nonzero_boxes(y), count_nonzero_boxes_naive(y)
        if fast != slow:
            report.add_counterexample({"y": y.coords.tolist(), "q": q, "fast": fast, "naive": slow})
    return report
