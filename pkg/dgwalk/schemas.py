# dgwalk/schemas.py - pydantic models for states, moves, reports and experiment configs
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


def _residues(value: Any) -> np.ndarray:
    return np.array(value, dtype=np.int64)


class TableState(BaseModel):
    """An n x n table over Z/qZ with prescribed row and column sums."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n: int = Field(ge=2)
    q: int = Field(ge=2)
    entries: np.ndarray
    row_sums: np.ndarray
    col_sums: np.ndarray

    @field_validator("entries", "row_sums", "col_sums", mode="before")
    @classmethod
    def _as_array(cls, value):
        return _residues(value)

    @model_validator(mode="after")
    def _check_invariants(self):
        n, q = self.n, self.q
        if self.entries.shape != (n, n):
            raise ValueError(f"entries must be {n}x{n}, got shape {self.entries.shape}")
        if self.row_sums.shape != (n,) or self.col_sums.shape != (n,):
            raise ValueError(f"row_sums and col_sums must have length {n}")
        if self.entries.min() < 0 or self.entries.max() >= q:
            raise ValueError(f"entries must lie in [0, {q})")
        if np.any((self.entries.sum(axis=1) - self.row_sums) % q):
            raise ValueError("row sums do not match the entries mod q")
        if np.any((self.entries.sum(axis=0) - self.col_sums) % q):
            raise ValueError("column sums do not match the entries mod q")
        return self

    def to_json_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "q": self.q,
            "entries": self.entries.tolist(),
            "row_sums": (self.row_sums % self.q).tolist(),
            "col_sums": (self.col_sums % self.q).tolist(),
        }

    @classmethod
    def from_json_dict(cls, data: Dict[str, Any]) -> "TableState":
        return cls(**{key: data[key] for key in ("n", "q", "entries", "row_sums", "col_sums")})


class GroupElement(BaseModel):
    """Coordinates of an element of G with respect to the basis B_{a,b}."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n: int = Field(ge=2)
    q: int = Field(ge=2)
    coords: np.ndarray

    @field_validator("coords", mode="before")
    @classmethod
    def _as_array(cls, value):
        return _residues(value)

    @model_validator(mode="after")
    def _check_invariants(self):
        m = self.n - 1
        if self.coords.shape != (m, m):
            raise ValueError(f"coords must be {m}x{m}, got shape {self.coords.shape}")
        if self.coords.min() < 0 or self.coords.max() >= self.q:
            raise ValueError(f"coords must lie in [0, {self.q})")
        return self

    @classmethod
    def zero(cls, n: int, q: int) -> "GroupElement":
        return cls(n=n, q=q, coords=np.zeros((n - 1, n - 1), dtype=np.int64))

    def to_json_dict(self) -> Dict[str, Any]:
        return {"n": self.n, "q": self.q, "coords": self.coords.tolist()}


class Move(BaseModel):
    """The move +/- A_{i,j,k,l}; indices are 1-based."""

    model_config = ConfigDict(frozen=True)

    i: int = Field(ge=1)
    j: int
    k: int = Field(ge=1)
    l: int
    sign: Literal[1, -1] = 1

    @model_validator(mode="after")
    def _check_order(self):
        if not (self.i < self.j and self.k < self.l):
            raise ValueError("moves need i < j and k < l")
        return self

    def canonical(self, q: int) -> "Move":
        # T = -T mod 2
        if q == 2 and self.sign != 1:
            return self.model_copy(update={"sign": 1})
        return self

    def reversed(self) -> "Move":
        return self.model_copy(update={"sign": -self.sign})


class WalkConfig(BaseModel):
    n: int = Field(ge=2)
    q: int = Field(ge=2)
    row_sums: Optional[List[int]] = None
    col_sums: Optional[List[int]] = None
    seed: int = Field(default=0, ge=0, lt=2**64)
    steps: int = Field(default=0, ge=0)
    lazy: bool = False

    @model_validator(mode="after")
    def _fill_sums(self):
        if self.row_sums is None:
            self.row_sums = [0] * self.n
        if self.col_sums is None:
            self.col_sums = [0] * self.n
        if len(self.row_sums) != self.n or len(self.col_sums) != self.n:
            raise ValueError(f"row_sums and col_sums must have length {self.n}")
        self.row_sums = [value % self.q for value in self.row_sums]
        self.col_sums = [value % self.q for value in self.col_sums]
        if (sum(self.row_sums) - sum(self.col_sums)) % self.q:
            raise ValueError("row sums and column sums disagree mod q")
        return self


class SpectralProfile(BaseModel):
    """Histogram of box sums of y: counts[a] = N_a(y)."""

    n: int
    q: int
    counts: List[int]

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def nonzero_boxes(self) -> int:
        return self.total - self.counts[0]


class Spectrum(BaseModel):
    """Eigenvalues lambda_y in mixed-radix order of y (index 0 is y = 0)."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    n: int
    q: int
    eigenvalues: np.ndarray
    zero_box_counts: np.ndarray

    @property
    def size(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def nontrivial(self) -> np.ndarray:
        return self.eigenvalues[1:]

    def multiset(self) -> np.ndarray:
        return np.sort(self.eigenvalues)


class L2Split(BaseModel):
    """Log-space pieces of the l2 sum at time t."""

    t: int
    log_negative: float
    log_nonnegative: float
    log_sigma: float
    log_negative_crude: float


class TheoremTimes(BaseModel):
    n: int
    q: int
    c: float
    t_nq: float
    delta_nq: float
    t_upper: float
    t_lower: float

    @property
    def window_ratio(self) -> float:
        return self.delta_nq / self.t_nq if self.t_nq > 0 else float("inf")


class Skeleton(BaseModel):
    indices: List[int]

    @property
    def size(self) -> int:
        return len(self.indices)


class PsiFamily(BaseModel):
    """Psi_1..Psi_{n-1}; rows[i - 1] holds the closed intervals (lo, hi) of row i."""

    rows: List[List[Tuple[int, int]]]

    @property
    def total_size(self) -> int:
        return sum(len(row) for row in self.rows)

    def consecutive_disjoint(self) -> bool:
        return all(not set(a) & set(b) for a, b in zip(self.rows, self.rows[1:]))


class WilsonStatistic(BaseModel):
    n: int
    q: int
    pairs: List[Tuple[int, int]]
    gamma: float
    R: float = 64.0
    F_max: int

    @property
    def half(self) -> int:
        return (self.n - 1) // 2


class LemmaReport(BaseModel):
    lemma: str
    mode: str
    cases_checked: int = 0
    counterexample_count: int = 0
    counterexamples: List[Dict[str, Any]] = Field(default_factory=list)
    details: Dict[str, Any] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.counterexample_count == 0

    def add_counterexample(self, witness: Dict[str, Any], keep: int = 20) -> None:
        self.counterexample_count += 1
        if len(self.counterexamples) < keep:
            self.counterexamples.append(witness)

    def merge(self, other: "LemmaReport") -> None:
        self.cases_checked += other.cases_checked
        self.counterexample_count += other.counterexample_count
        room = 20 - len(self.counterexamples)
        if room > 0:
            self.counterexamples.extend(other.counterexamples[:room])


class ExperimentConfig(BaseModel):
    subcommand: Literal["sample", "tv-curve", "cutoff-table", "verify"]
    n: List[int] = Field(default_factory=lambda: [3])
    q: List[int] = Field(default_factory=lambda: [2])
    c: Optional[float] = Field(default=None, ge=0)
    eps: float = Field(default=0.75, gt=0, lt=1)
    t_min: int = Field(default=0, ge=0)
    t_max: int = Field(default=60, ge=0)
    t_step: int = Field(default=1, ge=1)
    trials: int = Field(default=2000, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    max_group_size: Optional[int] = Field(default=None, ge=1)
    steps: Optional[int] = Field(default=None, ge=0)
    out: str = "-"
    format: Literal["csv", "json"] = "csv"
    suite: Optional[List[str]] = None
    exhaustive: Optional[Dict[str, int]] = None
    row_sums: Optional[List[int]] = None
    col_sums: Optional[List[int]] = None
    lazy: bool = False
    trajectory: Optional[str] = None
    spectrum_out: Optional[str] = None
    distribution_out: Optional[str] = None
    record: bool = False

    @model_validator(mode="after")
    def _check_ranges(self):
        if any(value < 2 for value in self.n) or any(value < 2 for value in self.q):
            raise ValueError("n and q must be at least 2")
        if self.t_max < self.t_min:
            raise ValueError("t_max must not be below t_min")
        if self.subcommand in ("sample", "tv-curve") and (len(self.n) != 1 or len(self.q) != 1):
            raise ValueError(f"{self.subcommand} takes a single n and a single q")
        return self
