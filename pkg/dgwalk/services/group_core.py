# dgwalk/services/group_core.py
"""Tables, group elements and moves of the Diaconis-Gangolli walk over Z/qZ.

Public indices are 1-based to match the usual (i, j, k, l) notation; arrays are
stored 0-based. Residues are kept canonical in [0, q).

A move +/-A_{i,j,k,l} adds +1 at (i,k), (j,l) and -1 at (i,l), (j,k). Elements of
the group G of zero-sum tables are represented by their coordinates in the basis
B_{a,b} = A_{a,a+1,b,b+1}; with that basis the coordinates of a table are its
2D prefix sums, and the coordinates of A_{i,j,k,l} form the all-ones box
[i, j-1] x [k, l-1].
"""
import hashlib
import itertools
import logging
from math import comb
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from dgwalk.exceptions import DimensionError, GroupTooLargeError, InvalidStateError
from dgwalk.schemas import GroupElement, Move, TableState, WalkConfig

logger = logging.getLogger(__name__)

MoveArrays = Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]

DRAW_BLOCK = 2**16


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 stream seeded with a 64-bit integer."""
    return np.random.Generator(np.random.PCG64(seed))


def group_size(n: int, q: int) -> int:
    return q ** ((n - 1) ** 2)


def move_count(n: int, q: int) -> int:
    pairs = comb(n, 2)
    return pairs * pairs if q == 2 else 2 * pairs * pairs


def _index_pairs(n: int) -> Tuple[np.ndarray, np.ndarray]:
    lo, hi = np.triu_indices(n, k=1)
    return lo + 1, hi + 1


def decode_moves(indices, n: int, q: int) -> MoveArrays:
    """Map move indices in [0, move_count) to (i, j, k, l, sign) arrays.

    index = (row_pair * C(n,2) + col_pair) * 2 + sign_bit for q > 2, and
    row_pair * C(n,2) + col_pair for q = 2; pairs are in lexicographic order.
    """
    indices = np.asarray(indices, dtype=np.int64)
    lo, hi = _index_pairs(n)
    if q == 2:
        rest = indices
        sign = np.ones_like(indices)
    else:
        rest, bit = np.divmod(indices, 2)
        sign = 1 - 2 * bit
    row_pair, col_pair = np.divmod(rest, lo.size)
    return lo[row_pair], hi[row_pair], lo[col_pair], hi[col_pair], sign


def _move_at(arrays: MoveArrays, position: int, q: int) -> Move:
    i, j, k, l, sign = (int(a[position]) for a in arrays)
    return Move(i=i, j=j, k=k, l=l, sign=sign).canonical(q)


def enumerate_moves(n: int, q: int) -> List[Move]:
    arrays = decode_moves(np.arange(move_count(n, q)), n, q)
    return [_move_at(arrays, position, q) for position in range(arrays[0].size)]


def sample_move(rng: np.random.Generator, n: int, q: int) -> Move:
    if n < 2:
        raise DimensionError("moves need n >= 2")
    index = rng.integers(0, move_count(n, q), size=1)
    return _move_at(decode_moves(index, n, q), 0, q)


def draw_steps(rng: np.random.Generator, n: int, q: int, steps: int, trials: int,
               lazy: bool = False) -> Iterator[MoveArrays]:
    """Yield the moves of `trials` parallel walks, one step at a time.

    Move indices are drawn in blocks of up to DRAW_BLOCK // trials steps, then
    the holding coins of the same block for lazy walks; a held walk gets sign 0.
    """
    total = move_count(n, q)
    remaining = steps
    while remaining > 0:
        block = max(1, min(remaining, DRAW_BLOCK // max(trials, 1)))
        i, j, k, l, sign = decode_moves(rng.integers(0, total, size=(block, trials)), n, q)
        if lazy:
            sign = np.where(rng.random((block, trials)) < 0.5, 0, sign)
        for row in range(block):
            yield i[row], j[row], k[row], l[row], sign[row]
        remaining -= block


def _check_move_fits(m: Move, n: int) -> None:
    if m.j > n or m.l > n:
        raise DimensionError(f"move {m.i, m.j, m.k, m.l} does not fit an {n}x{n} table")


def move_delta(m: Move, n: int) -> np.ndarray:
    _check_move_fits(m, n)
    delta = np.zeros((n, n), dtype=np.int64)
    delta[m.i - 1, m.k - 1] = m.sign
    delta[m.j - 1, m.l - 1] = m.sign
    delta[m.i - 1, m.l - 1] = -m.sign
    delta[m.j - 1, m.k - 1] = -m.sign
    return delta


def move_coordinates(m: Move, n: int, q: int) -> GroupElement:
    _check_move_fits(m, n)
    coords = np.zeros((n - 1, n - 1), dtype=np.int64)
    coords[m.i - 1:m.j - 1, m.k - 1:m.l - 1] = m.sign % q
    return GroupElement(n=n, q=q, coords=coords)


def apply_move(state, m: Move):
    """Return a new TableState or GroupElement with the move applied."""
    if isinstance(state, TableState):
        entries = (state.entries + move_delta(m.canonical(state.q), state.n)) % state.q
        return state.model_copy(update={"entries": entries})
    if isinstance(state, GroupElement):
        _check_move_fits(m, state.n)
        coords = state.coords.copy()
        coords[m.i - 1:m.j - 1, m.k - 1:m.l - 1] += m.canonical(state.q).sign
        return state.model_copy(update={"coords": coords % state.q})
    raise TypeError(f"cannot apply a move to {type(state).__name__}")


def validate_table(entries, row_sums, col_sums, q: int) -> bool:
    entries = np.asarray(entries, dtype=np.int64)
    row_sums = np.asarray(row_sums, dtype=np.int64)
    col_sums = np.asarray(col_sums, dtype=np.int64)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise DimensionError(f"table must be square, got shape {entries.shape}")
    n = entries.shape[0]
    if row_sums.shape != (n,) or col_sums.shape != (n,):
        raise DimensionError(f"sum vectors must have length {n}")
    if q < 2:
        raise DimensionError("modulus must be at least 2")
    if entries.min() < 0 or entries.max() >= q:
        return False
    if (row_sums.sum() - col_sums.sum()) % q:
        return False
    return not (np.any((entries.sum(axis=1) - row_sums) % q)
                or np.any((entries.sum(axis=0) - col_sums) % q))


def initial_table(n: int, q: int, row_sums: Optional[Sequence[int]] = None,
                  col_sums: Optional[Sequence[int]] = None) -> TableState:
    """A table with the given sums: row sums in the last column, column sums in the last row."""
    rows = np.zeros(n, dtype=np.int64) if row_sums is None else np.asarray(row_sums, dtype=np.int64) % q
    cols = np.zeros(n, dtype=np.int64) if col_sums is None else np.asarray(col_sums, dtype=np.int64) % q
    if rows.shape != (n,) or cols.shape != (n,):
        raise DimensionError(f"sum vectors must have length {n}")
    if (rows.sum() - cols.sum()) % q:
        raise InvalidStateError("row sums and column sums disagree mod q")
    entries = np.zeros((n, n), dtype=np.int64)
    entries[:n - 1, n - 1] = rows[:n - 1]
    entries[n - 1, :n - 1] = cols[:n - 1]
    entries[n - 1, n - 1] = (rows[n - 1] - cols[:n - 1].sum()) % q
    return TableState(n=n, q=q, entries=entries, row_sums=rows, col_sums=cols)


def to_coordinates(g, q: int) -> GroupElement:
    g = np.asarray(g, dtype=np.int64)
    if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] < 2:
        raise DimensionError(f"expected a square table, got shape {g.shape}")
    if np.any(g.sum(axis=0) % q) or np.any(g.sum(axis=1) % q):
        raise InvalidStateError("table is not in G: row and column sums must vanish mod q")
    n = g.shape[0]
    prefix = np.cumsum(np.cumsum(g % q, axis=0), axis=1)
    return GroupElement(n=n, q=q, coords=prefix[:n - 1, :n - 1] % q)


def from_coordinates(c: GroupElement) -> np.ndarray:
    n = c.n
    padded = np.zeros((n + 1, n + 1), dtype=np.int64)
    padded[1:n, 1:n] = c.coords
    table = padded[1:, 1:] - padded[:-1, 1:] - padded[1:, :-1] + padded[:-1, :-1]
    return table % c.q


def digit_powers(n: int, q: int) -> np.ndarray:
    d = (n - 1) ** 2
    return q ** np.arange(d - 1, -1, -1, dtype=np.int64)


def element_index(g: GroupElement) -> int:
    """Mixed-radix index of g; the first coordinate (row-major) is most significant."""
    return int(g.coords.ravel() @ digit_powers(g.n, g.q))


def index_digits(indices, n: int, q: int) -> np.ndarray:
    """Coordinates of the elements with the given indices, shape (len, n-1, n-1)."""
    indices = np.asarray(indices, dtype=np.int64)
    digits = (indices[:, None] // digit_powers(n, q)[None, :]) % q
    return digits.reshape(-1, n - 1, n - 1)


def element_from_index(index: int, n: int, q: int) -> GroupElement:
    return GroupElement(n=n, q=q, coords=index_digits([index], n, q)[0])


def iter_group_elements(n: int, q: int, cap: int = 2**16) -> Iterator[GroupElement]:
    size = group_size(n, q)
    if size > cap:
        raise GroupTooLargeError(size, cap, "exhaustive iteration")
    for index in range(size):
        yield element_from_index(index, n, q)


def enumerate_tables(n: int, q: int, row_sums, col_sums, cap: int = 2**16) -> List[TableState]:
    """Brute-force list of all tables with the given sums (tiny cases only)."""
    size = q ** (n * n)
    if size > cap:
        raise GroupTooLargeError(size, cap, "table enumeration")
    tables = []
    for flat in itertools.product(range(q), repeat=n * n):
        entries = np.array(flat, dtype=np.int64).reshape(n, n)
        if validate_table(entries, row_sums, col_sums, q):
            tables.append(TableState(n=n, q=q, entries=entries, row_sums=row_sums, col_sums=col_sums))
    return tables


def state_digest(state: TableState) -> str:
    payload = np.ascontiguousarray(state.entries, dtype="<i8").tobytes()
    return hashlib.sha256(f"{state.n}:{state.q}:".encode() + payload).hexdigest()


def _check_start(config: WalkConfig, start: TableState) -> None:
    if (start.n, start.q) != (config.n, config.q):
        raise DimensionError(f"start is {start.n}x{start.n} mod {start.q}, config wants {config.n} mod {config.q}")
    if (np.any((start.row_sums - np.asarray(config.row_sums)) % config.q)
            or np.any((start.col_sums - np.asarray(config.col_sums)) % config.q)):
        raise InvalidStateError("start table does not have the configured row/column sums")


def _walk_entries(config: WalkConfig, start: TableState) -> Iterator[Tuple[int, List[List[int]]]]:
    """Yield (t, entries) with one mutable list-of-lists table shared across steps."""
    _check_start(config, start)
    q = config.q
    entries = start.entries.tolist()
    rng = make_rng(config.seed)
    for t, (i, j, k, l, sign) in enumerate(draw_steps(rng, config.n, q, config.steps, 1, config.lazy), start=1):
        s = int(sign[0])
        if s:
            a, b, c, d = int(i[0]) - 1, int(j[0]) - 1, int(k[0]) - 1, int(l[0]) - 1
            row_a, row_b = entries[a], entries[b]
            row_a[c] = (row_a[c] + s) % q
            row_b[d] = (row_b[d] + s) % q
            row_a[d] = (row_a[d] - s) % q
            row_b[c] = (row_b[c] - s) % q
        yield t, entries


def _as_state(start: TableState, entries: List[List[int]]) -> TableState:
    return start.model_copy(update={"entries": np.array(entries, dtype=np.int64)})


def iter_walk(config: WalkConfig, start: TableState) -> Iterator[Tuple[int, TableState]]:
    """Yield (t, B_t) for t = 1..steps; reproducible from config.seed."""
    for t, entries in _walk_entries(config, start):
        yield t, _as_state(start, entries)


def run_walk(config: WalkConfig, start: TableState,
             on_step: Optional[Callable[[int, TableState], None]] = None) -> TableState:
    """Run config.steps moves from start; on_step sees (0, start) and every later state."""
    logger.info(f"Running walk n={config.n} q={config.q} steps={config.steps} lazy={config.lazy} seed={config.seed}")
    _check_start(config, start)
    if on_step is not None:
        on_step(0, start)
    entries = None
    for t, entries in _walk_entries(config, start):
        if on_step is not None:
            on_step(t, _as_state(start, entries))
    return start if entries is None else _as_state(start, entries)


def sample_coordinate_walks(n: int, q: int, steps: int, trials: int,
                            rng: np.random.Generator, lazy: bool = False) -> np.ndarray:
    """C_t for `trials` independent walks from 0, as an array (trials, n-1, n-1)."""
    m = n - 1
    coords = np.zeros((trials, m, m), dtype=np.int64)
    axis = np.arange(1, n)
    for i, j, k, l, sign in draw_steps(rng, n, q, steps, trials, lazy):
        rows = (axis[None, :] >= i[:, None]) & (axis[None, :] < j[:, None])
        cols = (axis[None, :] >= k[:, None]) & (axis[None, :] < l[:, None])
        coords += sign[:, None, None] * (rows[:, :, None] & cols[:, None, :])
        coords %= q
    return coords
