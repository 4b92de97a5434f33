# dgwalk/services/verification.py
"""Property suites behind `dgwalk verify`.

Every suite takes a SuiteScale and returns one LemmaReport per instance it
checked. Passing `instances` restricts a suite to those (n, q) pairs and turns
off its random part, which is how `--exhaustive n=6 q=2` is served.
"""
import logging
from math import comb, log
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel
from scipy.linalg import eigvalsh

from dgwalk.exceptions import GroupTooLargeError, ParameterError
from dgwalk.schemas import GroupElement, LemmaReport
from dgwalk.services import combinatorics, spectral, wilson
from dgwalk.services.group_core import (
    apply_move,
    element_index,
    enumerate_moves,
    enumerate_tables,
    group_size,
    initial_table,
    iter_group_elements,
    make_rng,
    sample_coordinate_walks,
    to_coordinates,
)

logger = logging.getLogger(__name__)

ORACLE_TOLERANCE = 1e-10
IDENTITY_TOLERANCE = 1e-12
SAMPLER_TV_AT_MILLION = 0.005
DENSE_EIGENSOLVE_MAX = 2**12
ACCEPTANCE_RANDOM_VECTORS = 10**5

Instance = Tuple[int, int]


class SuiteScale(BaseModel):
    instances: Optional[List[Instance]] = None
    trials: int = 2000
    seed: int = 0
    max_group_size: int = 2**20
    acceptance: bool = False


def _instances(scale: SuiteScale, default: List[Instance]) -> List[Instance]:
    return scale.instances if scale.instances is not None else default


def _random_instances(rng: np.random.Generator, count: int, n_range: Instance,
                      q_range: Instance) -> List[Instance]:
    ns = rng.integers(n_range[0], n_range[1] + 1, size=count)
    qs = rng.integers(q_range[0], q_range[1] + 1, size=count)
    return [(int(n), int(q)) for n, q in zip(ns, qs)]


def check_spectral_oracle(scale: SuiteScale) -> List[LemmaReport]:
    """Eigenvalue formula against a dense eigensolve of the explicit transition matrix."""
    reports = []
    for n, q in _instances(scale, [(2, 3), (3, 2), (4, 2), (3, 3)]):
        report = LemmaReport(lemma="spectral_oracle", mode="exhaustive", details={"n": n, "q": q})
        size = group_size(n, q)
        if size > DENSE_EIGENSOLVE_MAX:
            raise GroupTooLargeError(size, DENSE_EIGENSOLVE_MAX, "the dense eigensolve oracle")
        spec = spectral.enumerate_spectrum(n, q, cap=scale.max_group_size)
        matrix = spectral.transition_matrix_oracle(n, q)
        dense = matrix.toarray()
        oracle = np.sort(eigvalsh((dense + dense.T) / 2.0))
        errors = np.abs(spec.multiset() - oracle)
        report.cases_checked = spec.size
        report.details["max_error"] = float(errors.max())
        report.details["trace"] = float(spec.eigenvalues.sum())
        for position in np.flatnonzero(errors > ORACLE_TOLERANCE)[:20]:
            report.add_counterexample({"rank": int(position), "formula": float(spec.multiset()[position]),
                                       "oracle": float(oracle[position])})
        if abs(report.details["trace"]) > ORACLE_TOLERANCE * spec.size:
            report.add_counterexample({"trace": report.details["trace"]})
        row_sums = np.asarray(matrix.sum(axis=1)).ravel()
        if np.abs(row_sums - 1.0).max() > ORACLE_TOLERANCE:
            report.add_counterexample({"row_sum_error": float(np.abs(row_sums - 1.0).max())})
        reports.append(report)
    return reports


def check_profile_boxes(scale: SuiteScale) -> List[LemmaReport]:
    """C(n,2)^2 - N_0(y) from the spectrum equals the naive nonzero-box count."""
    reports = []
    for n, q in _instances(scale, [(3, 2), (4, 2), (3, 3)]):
        report = LemmaReport(lemma="profile_boxes", mode="exhaustive", details={"n": n, "q": q})
        spec = spectral.enumerate_spectrum(n, q, cap=scale.max_group_size)
        boxes = comb(n, 2) ** 2
        for y in iter_group_elements(n, q, cap=scale.max_group_size):
            report.cases_checked += 1
            from_profile = boxes - int(spec.zero_box_counts[element_index(y)])
            naive = combinatorics.count_nonzero_boxes_naive(y)
            if from_profile != naive:
                report.add_counterexample({"y": y.coords.tolist(), "profile": from_profile, "naive": naive})
        reports.append(report)
    return reports


def check_negative_eigenvalue(scale: SuiteScale) -> List[LemmaReport]:
    """min lambda >= -28/29 for every n >= 3 instance with |G| under the cap."""
    default = [(n, q) for n in range(3, 8) for q in range(2, 200)
               if group_size(n, q) <= scale.max_group_size]
    reports = []
    for n, q in _instances(scale, default):
        if n < 3:
            logger.warning(f"Skipping n={n}: the walk is periodic there and lambda = -1 occurs")
            continue
        report = LemmaReport(lemma="negative_eigenvalue", mode="exhaustive", details={"n": n, "q": q})
        spec = spectral.enumerate_spectrum(n, q, cap=scale.max_group_size)
        lowest = float(spec.eigenvalues.min())
        report.cases_checked = spec.size
        report.details["min_eigenvalue"] = lowest
        if lowest < spectral.NEGATIVE_EIGENVALUE_FLOOR - IDENTITY_TOLERANCE:
            index = int(spec.eigenvalues.argmin())
            report.add_counterexample({"index": index, "eigenvalue": lowest})
        reports.append(report)
    return reports


def check_tv_exactness(scale: SuiteScale, t_max: int = 100) -> List[LemmaReport]:
    """Fourier TV against matrix powers, monotonicity of d(t) and 4 d(t)^2 <= sum lambda^{2t}."""
    reports = []
    for n, q in _instances(scale, [(3, 2), (3, 3)]):
        report = LemmaReport(lemma="tv_exactness", mode="exhaustive", details={"n": n, "q": q, "t_max": t_max})
        spec = spectral.enumerate_spectrum(n, q, cap=scale.max_group_size)
        matrix = spectral.transition_matrix_oracle(n, q)
        transposed = matrix.T.tocsr()
        oracle = np.zeros(spec.size)
        oracle[0] = 1.0
        previous = None
        for t in range(t_max + 1):
            if t:
                oracle = transposed @ oracle
            report.cases_checked += 1
            fft = spectral.exact_distribution(n, q, t, cap=scale.max_group_size, method="fft", spectrum=spec)
            direct = fft
            if spec.size <= spectral.DIRECT_INVERSION_MAX:
                direct = spectral.exact_distribution(n, q, t, cap=scale.max_group_size, method="direct",
                                                     spectrum=spec)
            d = spectral.total_variation_to_uniform(fft)
            d_oracle = spectral.total_variation_to_uniform(oracle)
            witness = {"t": t, "tv": d}
            if np.abs(direct - fft).max() > ORACLE_TOLERANCE or abs(d - d_oracle) > ORACLE_TOLERANCE:
                witness["oracle_tv"] = d_oracle
                report.add_counterexample(witness)
            elif previous is not None and d > previous + IDENTITY_TOLERANCE:
                witness["previous_tv"] = previous
                report.add_counterexample(witness)
            elif d > 0 and 2 * log(2 * d) > spectral.log_l2_sum(spec, t) + 1e-9:
                witness["log_l2_sum"] = spectral.log_l2_sum(spec, t)
                report.add_counterexample(witness)
            previous = d
        reports.append(report)
    return reports


def check_upper_endpoint(scale: SuiteScale) -> List[LemmaReport]:
    """log l2 bound at ceil(t_upper) with c = 640/loglog(16n) is at most -c log q."""
    reports = []
    for n, q in _instances(scale, [(3, 2), (4, 2), (3, 3)]):
        report = LemmaReport(lemma="upper_endpoint", mode="exhaustive", details={"n": n, "q": q})
        spec = spectral.enumerate_spectrum(n, q, cap=scale.max_group_size)
        log_bound, target = spectral.upper_endpoint_log_bound(n, q, spec)
        report.cases_checked = 1
        report.details.update({"log_l2_bound": log_bound, "log_target": target})
        if log_bound > target:
            report.add_counterexample({"log_l2_bound": log_bound, "log_target": target})
        reports.append(report)
    return reports


def check_shift_equivalence(scale: SuiteScale, t_max: int = 8) -> List[LemmaReport]:
    """The walk on tables with fixed sums, started at x, has the law of x + C_t."""
    reports = []
    for n, q in _instances(scale, [(3, 2)]):
        report = LemmaReport(lemma="shift_equivalence", mode="exhaustive", details={"n": n, "q": q})
        rng = make_rng(scale.seed)
        row_sums = rng.integers(0, q, size=n)
        col_sums = rng.integers(0, q, size=n)
        col_sums[-1] = (row_sums.sum() - col_sums[:-1].sum()) % q
        start = initial_table(n, q, row_sums.tolist(), col_sums.tolist())
        tables = enumerate_tables(n, q, start.row_sums, start.col_sums)
        position = {element_index(to_coordinates(table.entries - start.entries, q)): p
                    for p, table in enumerate(tables)}
        if len(tables) != group_size(n, q) or len(position) != len(tables):
            report.add_counterexample({"tables": len(tables), "group_size": group_size(n, q)})
            reports.append(report)
            continue
        moves = enumerate_moves(n, q)
        transition = np.zeros((len(tables), len(tables)))
        for p, table in enumerate(tables):
            for m in moves:
                moved = apply_move(table, m)
                transition[p, position[element_index(to_coordinates(moved.entries - start.entries, q))]] += 1.0
        transition /= len(moves)
        spec = spectral.enumerate_spectrum(n, q, cap=scale.max_group_size)
        law = np.zeros(len(tables))
        law[position[0]] = 1.0
        for t in range(t_max + 1):
            if t:
                law = law @ transition
            report.cases_checked += 1
            shifted = spectral.exact_distribution(n, q, t, cap=scale.max_group_size, spectrum=spec)
            mapped = np.array([law[position[index]] for index in range(len(tables))])
            if np.abs(mapped - shifted).max() > ORACLE_TOLERANCE:
                report.add_counterexample({"t": t, "max_error": float(np.abs(mapped - shifted).max())})
        reports.append(report)
    return reports


def check_sampler(scale: SuiteScale, t: int = 30, batch: int = 100000) -> List[LemmaReport]:
    """Empirical law of C_t against the exact distribution; tolerance 0.005 at 10^6 trials."""
    reports = []
    for n, q in _instances(scale, [(3, 2)]):
        report = LemmaReport(lemma="sampler", mode="random", details={"n": n, "q": q, "t": t})
        rng = make_rng(scale.seed)
        size = group_size(n, q)
        counts = np.zeros(size, dtype=np.int64)
        powers = q ** np.arange((n - 1) ** 2 - 1, -1, -1, dtype=np.int64)
        for begin in range(0, scale.trials, batch):
            coords = sample_coordinate_walks(n, q, t, min(batch, scale.trials - begin), rng)
            counts += np.bincount(coords.reshape(len(coords), -1) @ powers, minlength=size)
        empirical = counts / scale.trials
        exact = spectral.exact_distribution(n, q, t, cap=scale.max_group_size)
        distance = float(0.5 * np.abs(empirical - exact).sum())
        tolerance = SAMPLER_TV_AT_MILLION * (10**6 / scale.trials) ** 0.5
        report.cases_checked = scale.trials
        report.details.update({"tv": distance, "tolerance": tolerance})
        if distance > tolerance:
            report.add_counterexample({"tv": distance, "tolerance": tolerance})
        reports.append(report)
    return reports


def check_wilson_identity(scale: SuiteScale, samples: int = 100) -> List[LemmaReport]:
    """E[F(x + m)] = (1 - gamma) F(x) and |F(x + m) - F(x)| <= 8 over all moves."""
    default = [(n, q) for n in range(4, 9) for q in (2, 3, 5)]
    reports = []
    for n, q in _instances(scale, default):
        report = LemmaReport(lemma="wilson_identity", mode="random", details={"n": n, "q": q})
        w = wilson.make_statistic(n, q)
        rng = make_rng(scale.seed)
        worst_identity, worst_increment = 0.0, 0.0
        for coords in rng.integers(0, q, size=(samples, n - 1, n - 1)):
            x = GroupElement(n=n, q=q, coords=coords)
            report.cases_checked += 1
            gap = abs(wilson.one_step_expectation_F(x, w) - (1 - w.gamma) * wilson.statistic_F(x, w))
            increment = wilson.increment_bound(x, w)
            worst_identity, worst_increment = max(worst_identity, gap), max(worst_increment, increment)
            if gap > IDENTITY_TOLERANCE or increment > 8 + IDENTITY_TOLERANCE:
                report.add_counterexample({"x": coords.tolist(), "identity_gap": gap, "increment": increment})
        report.details.update({"max_identity_gap": worst_identity, "max_increment": worst_increment})
        reports.append(report)
    return reports


def check_wilson_bound(scale: SuiteScale, eps: float = 0.75) -> List[LemmaReport]:
    """exact d(floor(t_W)) >= 1 - eps wherever the Wilson time is positive and |G| is enumerable."""
    default = [(n, q) for n in (4, 5) for q in range(2, 8) if group_size(n, q) <= scale.max_group_size]
    reports = []
    for n, q in _instances(scale, default):
        report = LemmaReport(lemma="wilson_bound", mode="exhaustive", details={"n": n, "q": q, "eps": eps})
        t_w = wilson.wilson_time(n, q, eps)
        report.details["wilson_time"] = t_w
        if t_w > 0:
            report.cases_checked = 1
            d = spectral.exact_tv(n, q, int(t_w), cap=scale.max_group_size)
            if d < 1 - eps:
                report.add_counterexample({"t": int(t_w), "tv": d})
        reports.append(report)
    return reports


def _exhaustive_then_random(lemma: str, check: Callable[..., LemmaReport], scale: SuiteScale,
                            exhaustive: List[Instance], random_n: Instance,
                            random_q: Instance, trials: Optional[int] = None) -> List[LemmaReport]:
    reports = [check(n, q, mode="exhaustive") for n, q in _instances(scale, exhaustive)]
    if scale.instances is not None:
        return reports
    rng = make_rng(scale.seed)
    pairs = _random_instances(rng, 10, random_n, random_q)
    random_report = LemmaReport(lemma=lemma, mode="random", details={"instances": pairs})
    share = max(1, (trials or scale.trials) // len(pairs))
    for offset, (n, q) in enumerate(pairs):
        random_report.merge(check(n, q, mode="random", trials=share, seed=scale.seed + offset))
    reports.append(random_report)
    return reports


def check_lemma_3_2(scale: SuiteScale) -> List[LemmaReport]:
    """Exhaustive up to q^(n-1) = 2^14, or up to the vector cap with 10^5 random vectors at acceptance scale."""
    limit = combinatorics.EXHAUSTIVE_VECTOR_CAP if scale.acceptance else 2**14
    exhaustive = [(n, q) for q in range(2, 8) for n in range(2, 22) if q ** (n - 1) <= limit]
    trials = max(scale.trials, ACCEPTANCE_RANDOM_VECTORS) if scale.acceptance else None
    return _exhaustive_then_random("lemma3_2", combinatorics.verify_lemma_3_2, scale,
                                   exhaustive, (2, 64), (2, 101), trials=trials)


def check_lemma_3_3(scale: SuiteScale) -> List[LemmaReport]:
    return _exhaustive_then_random("lemma3_3", combinatorics.verify_lemma_3_3_suite, scale,
                                   [(3, 2), (4, 2), (3, 3)], (3, 9), (2, 7))


def check_lemma_3_5(scale: SuiteScale) -> List[LemmaReport]:
    return _exhaustive_then_random("lemma3_5", combinatorics.verify_lemma_3_5_suite, scale,
                                   [(3, 2), (4, 2), (3, 3)], (3, 9), (2, 7))


def check_min_boxes(scale: SuiteScale) -> List[LemmaReport]:
    return _exhaustive_then_random("min_boxes", combinatorics.verify_min_boxes, scale,
                                   [(3, 2), (4, 2), (3, 3)], (3, 9), (2, 7))


def check_interval_oracle(scale: SuiteScale) -> List[LemmaReport]:
    return _exhaustive_then_random("interval_oracle", combinatorics.verify_interval_oracle, scale,
                                   [(n, 2) for n in range(2, 12)] + [(5, 3), (4, 5)], (2, 40), (2, 101))


def check_box_oracle(scale: SuiteScale) -> List[LemmaReport]:
    return _exhaustive_then_random("box_oracle", combinatorics.verify_box_oracle, scale,
                                   [(3, 2), (4, 2), (3, 3)], (3, 6), (2, 7))


SUITES: Dict[str, Callable[[SuiteScale], List[LemmaReport]]] = {
    "spectral_oracle": check_spectral_oracle,
    "profile_boxes": check_profile_boxes,
    "negative_eigenvalue": check_negative_eigenvalue,
    "tv_exactness": check_tv_exactness,
    "upper_endpoint": check_upper_endpoint,
    "shift_equivalence": check_shift_equivalence,
    "sampler": check_sampler,
    "wilson_identity": check_wilson_identity,
    "wilson_bound": check_wilson_bound,
    "lemma3_2": check_lemma_3_2,
    "lemma3_3": check_lemma_3_3,
    "lemma3_5": check_lemma_3_5,
    "min_boxes": check_min_boxes,
    "interval_oracle": check_interval_oracle,
    "box_oracle": check_box_oracle,
}


def run_suites(names: Optional[List[str]], scale: SuiteScale) -> List[LemmaReport]:
    selected = list(SUITES) if not names else names
    unknown = [name for name in selected if name not in SUITES]
    if unknown:
        raise ParameterError(f"unknown suite(s) {unknown}; choose from {sorted(SUITES)}")
    reports: List[LemmaReport] = []
    for name in selected:
        logger.info(f"Running suite {name}")
        produced = SUITES[name](scale)
        failed = sum(1 for report in produced if not report.passed)
        logger.info(f"Suite {name}: {len(produced)} report(s), {failed} failing")
        reports.extend(produced)
    return reports
