# dgwalk/services/spectral.py
"""Exact spectrum, l2 bound and total variation of the walk on G = (Z/qZ)^{(n-1)^2}.

The eigenvalue attached to the character rho_y is the average over all boxes
[i,j] x [k,l] of [1, n-1]^2 of cos(2*pi*<y, box>/q), i.e.

    lambda_y = sum_a N_a(y) cos(2*pi*a/q) / C(n,2)^2

where N_a(y) counts boxes whose entry sum is a mod q. Characters are enumerated
in mixed-radix order (see group_core.index_digits), so index 0 is y = 0.
"""
import logging
from math import ceil, comb, cos, log, pi, sqrt
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.special import logsumexp

from dgwalk.config import settings
from dgwalk.exceptions import GroupTooLargeError, ParameterError
from dgwalk.schemas import GroupElement, L2Split, SpectralProfile, Spectrum, TheoremTimes
from dgwalk.services.group_core import (
    decode_moves,
    group_size,
    index_digits,
    move_count,
)

logger = logging.getLogger(__name__)

NEGATIVE_EIGENVALUE_FLOOR = -28.0 / 29.0
DIRECT_INVERSION_MAX = 1024


def cosine_table(q: int) -> np.ndarray:
    return np.cos(2.0 * np.pi * np.arange(q) / q)


def box_sums(coords: np.ndarray, q: int) -> np.ndarray:
    """Box sums mod q for a batch of coordinate matrices, shape (batch, C(n,2)^2).

    Boxes are ordered by (row interval, column interval), intervals in
    np.triu_indices order. One 2D prefix table per element gives O(1) per box.
    """
    coords = np.asarray(coords, dtype=np.int64)
    batch, m, _ = coords.shape
    prefix = np.zeros((batch, m + 1, m + 1), dtype=np.int64)
    prefix[:, 1:, 1:] = np.cumsum(np.cumsum(coords, axis=1), axis=2)
    lo, hi = np.triu_indices(m)
    strips = prefix[:, hi + 1, :] - prefix[:, lo, :]
    boxes = strips[:, :, hi + 1] - strips[:, :, lo]
    return boxes.reshape(batch, -1) % q


def profile_counts(coords: np.ndarray, q: int) -> np.ndarray:
    """N_a(y) for a batch of y, shape (batch, q)."""
    sums = box_sums(coords, q)
    batch = sums.shape[0]
    offsets = np.arange(batch, dtype=np.int64)[:, None] * q
    return np.bincount((sums + offsets).ravel(), minlength=batch * q).reshape(batch, q)


def box_sum_profile(y: GroupElement) -> SpectralProfile:
    counts = profile_counts(y.coords[None, :, :], y.q)[0]
    return SpectralProfile(n=y.n, q=y.q, counts=counts.tolist())


def eigenvalue(profile: SpectralProfile) -> float:
    boxes = comb(profile.n, 2) ** 2
    return float(np.asarray(profile.counts, dtype=np.float64) @ cosine_table(profile.q) / boxes)


def spectrum_chunk(n: int, q: int, start: int, stop: int) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and N_0 for the characters with indices in [start, stop)."""
    counts = profile_counts(index_digits(np.arange(start, stop), n, q), q)
    eigenvalues = counts.astype(np.float64) @ cosine_table(q) / comb(n, 2) ** 2
    return eigenvalues, counts[:, 0]


def _require_cap(n: int, q: int, cap: Optional[int], default: int, what: str) -> int:
    size = group_size(n, q)
    limit = default if cap is None else cap
    if size > limit:
        raise GroupTooLargeError(size, limit, what)
    return size


def enumerate_spectrum(n: int, q: int, cap: Optional[int] = None) -> Spectrum:
    """One eigenvalue per character, computed chunkwise through the task pool."""
    from dgwalk.tasks import enumerate_spectrum_chunk, parallel_map  # avoid circular import

    size = _require_cap(n, q, cap, settings.max_group_size, "exact enumeration")
    chunk = max(1, settings.chunk_size)
    bounds = [(n, q, start, min(start + chunk, size)) for start in range(0, size, chunk)]
    logger.info(f"Enumerating spectrum n={n} q={q} |G|={size} in {len(bounds)} chunk(s)")
    parts = parallel_map(enumerate_spectrum_chunk, bounds)
    eigenvalues = np.concatenate([np.asarray(part["eigenvalues"], dtype=np.float64) for part in parts])
    zero_boxes = np.concatenate([np.asarray(part["zero_boxes"], dtype=np.int64) for part in parts])
    return Spectrum(n=n, q=q, eigenvalues=eigenvalues, zero_box_counts=zero_boxes)


def _walk_eigenvalues(spec: Spectrum, lazy: bool) -> np.ndarray:
    return (1.0 + spec.eigenvalues) / 2.0 if lazy else spec.eigenvalues


def log_l2_sum(spec: Spectrum, t: int, lazy: bool = False) -> float:
    """log of sum over y != 0 of lambda_y^{2t}."""
    if t < 0:
        raise ParameterError("t must be nonnegative")
    magnitudes = np.abs(_walk_eigenvalues(spec, lazy)[1:])
    if t == 0:
        return log(magnitudes.size) if magnitudes.size else float("-inf")
    magnitudes = magnitudes[magnitudes > 0]
    if magnitudes.size == 0:
        return float("-inf")
    return float(logsumexp(2 * t * np.log(magnitudes)))


def log_l2_bound(spec: Spectrum, t: int, lazy: bool = False) -> float:
    return log(0.5) + 0.5 * log_l2_sum(spec, t, lazy)


def l2_bound(spec: Spectrum, t: int, lazy: bool = False) -> float:
    """Upper bound 1/2 * sqrt(sum_{y != 0} lambda_y^{2t}) on the TV distance."""
    return float(np.exp(log_l2_bound(spec, t, lazy)))


def split_l2_sum(spec: Spectrum, t: int) -> L2Split:
    """Negative and nonnegative parts of the l2 sum, and the box-count majorant Sigma."""
    n, q = spec.n, spec.q
    boxes = comb(n, 2) ** 2
    gap = 1.0 - cos(2 * pi / q)
    lam = spec.nontrivial
    nonzero_boxes = boxes - spec.zero_box_counts[1:]

    def _log_power_sum(values: np.ndarray) -> float:
        values = np.abs(values)
        if t == 0:
            return log(values.size) if values.size else float("-inf")
        values = values[values > 0]
        return float(logsumexp(2 * t * np.log(values))) if values.size else float("-inf")

    base = 1.0 - gap * nonzero_boxes / boxes
    in_range = nonzero_boxes <= boxes / gap
    return L2Split(
        t=t,
        log_negative=_log_power_sum(lam[lam < 0]),
        log_nonnegative=_log_power_sum(lam[lam >= 0]),
        log_sigma=_log_power_sum(base[in_range]),
        log_negative_crude=(n - 1) ** 2 * log(q) + 2 * t * log(28.0 / 29.0),
    )


def _character_phases(n: int, q: int) -> np.ndarray:
    digits = index_digits(np.arange(group_size(n, q)), n, q).reshape(group_size(n, q), -1)
    return (digits @ digits.T) % q


def exact_distribution(n: int, q: int, t: int, cap: Optional[int] = None, lazy: bool = False,
                       method: str = "auto", spectrum: Optional[Spectrum] = None) -> np.ndarray:
    """P^t(0, g) for every g in mixed-radix order, by Fourier inversion.

    method "direct" sums characters explicitly (O(|G|^2)); "fft" applies a
    length-q inverse transform along each of the (n-1)^2 coordinates.
    """
    if t < 0:
        raise ParameterError("t must be nonnegative")
    size = _require_cap(n, q, cap, settings.max_group_size, "exact distribution")
    spec = spectrum if spectrum is not None else enumerate_spectrum(n, q, cap)
    powers = _walk_eigenvalues(spec, lazy) ** t
    if method == "auto":
        method = "direct" if size <= DIRECT_INVERSION_MAX else "fft"
    if method == "direct":
        return np.cos(2.0 * np.pi * _character_phases(n, q) / q) @ powers / size
    if method == "fft":
        d = (n - 1) ** 2
        return np.fft.ifftn(powers.reshape((q,) * d)).real.ravel()
    raise ParameterError(f"unknown inversion method {method!r}")


def total_variation_to_uniform(distribution: np.ndarray) -> float:
    return float(0.5 * np.abs(distribution - 1.0 / distribution.size).sum())


def exact_tv(n: int, q: int, t: int, cap: Optional[int] = None, lazy: bool = False,
             spectrum: Optional[Spectrum] = None) -> float:
    return total_variation_to_uniform(exact_distribution(n, q, t, cap, lazy, spectrum=spectrum))


def tv_curve(spec: Spectrum, ts: Sequence[int], lazy: bool = False) -> List[float]:
    return [exact_tv(spec.n, spec.q, t, cap=spec.size, lazy=lazy, spectrum=spec) for t in ts]


def mixing_time(spec: Spectrum, eps: float = 0.25, t_limit: int = 100000,
                lazy: bool = False) -> Optional[int]:
    """First t with d(t) <= eps, or None if it exceeds t_limit.

    d(t) is non-increasing, so an exponential search followed by bisection suffices.
    """
    def distance(t: int) -> float:
        return exact_tv(spec.n, spec.q, t, cap=spec.size, lazy=lazy, spectrum=spec)

    if distance(0) <= eps:
        return 0
    hi = 1
    while distance(hi) > eps:
        if hi >= t_limit:
            return None
        hi = min(2 * hi, t_limit)
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if distance(mid) <= eps:
            hi = mid
        else:
            lo = mid
    return hi


def transition_matrix_oracle(n: int, q: int, cap: Optional[int] = None) -> sparse.csr_matrix:
    """Explicit |G| x |G| transition matrix in coordinates (sparse, row-stochastic)."""
    size = _require_cap(n, q, cap, settings.oracle_max_group_size, "the transition matrix oracle")
    m = n - 1
    total = move_count(n, q)
    i, j, k, l, sign = decode_moves(np.arange(total), n, q)
    axis = np.arange(1, n)
    rows = (axis[None, :] >= i[:, None]) & (axis[None, :] < j[:, None])
    cols = (axis[None, :] >= k[:, None]) & (axis[None, :] < l[:, None])
    steps = (sign[:, None, None] * (rows[:, :, None] & cols[:, None, :])).reshape(total, m * m)
    digits = index_digits(np.arange(size), n, q).reshape(size, m * m)
    powers = q ** np.arange(m * m - 1, -1, -1, dtype=np.int64)
    targets = np.stack([((digits + step) % q) @ powers for step in steps], axis=1)
    sources = np.repeat(np.arange(size), total)
    data = np.full(size * total, 1.0 / total)
    return sparse.csr_matrix((data, (sources, targets.ravel())), shape=(size, size))


def matrix_power_distribution(matrix: sparse.csr_matrix, t: int) -> np.ndarray:
    distribution = np.zeros(matrix.shape[0])
    distribution[0] = 1.0
    transposed = matrix.T.tocsr()
    for _ in range(t):
        distribution = transposed @ distribution
    return distribution


def minimum_upper_c(n: int) -> float:
    """Smallest c for which the upper bound of the cutoff theorem applies."""
    return 640.0 / log(log(16 * n))


def theorem_times(n: int, q: int, c: float) -> TheoremTimes:
    if n < 2 or q < 2:
        raise ParameterError("theorem times need n >= 2 and q >= 2")
    if c < 0:
        raise ParameterError("c must be nonnegative")
    gap = 1.0 - cos(2 * pi / q)
    scale = n * n / (4.0 * gap)
    t_nq = scale * log(n)
    delta_nq = (n * n / gap) * log(log(16 * n)) * sqrt(log(n)) * log(q)
    return TheoremTimes(
        n=n,
        q=q,
        c=c,
        t_nq=t_nq,
        delta_nq=delta_nq,
        t_upper=t_nq + c * delta_nq,
        t_lower=t_nq - scale * (c + 12) * log(q),
    )


def upper_endpoint_log_bound(n: int, q: int, spec: Optional[Spectrum] = None,
                             c: Optional[float] = None) -> Tuple[float, float]:
    """(log l2 bound at ceil(t_upper), -c log q) for the upper-bound check."""
    c = minimum_upper_c(n) if c is None else c
    spec = spec if spec is not None else enumerate_spectrum(n, q)
    t = ceil(theorem_times(n, q, c).t_upper)
    return log_l2_bound(spec, t), -c * log(q)


def spectrum_multiplicities(spec: Spectrum, decimals: int = 12) -> List[Tuple[float, int]]:
    values, counts = np.unique(np.round(spec.eigenvalues, decimals) + 0.0, return_counts=True)
    return [(float(value), int(count)) for value, count in zip(values, counts)]
