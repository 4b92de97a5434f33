# dgwalk/services/reporting.py
"""CSV / JSON / NDJSON output with a provenance header.

Headers echo version, subcommand, seed and parameters but no timestamps, so a
re-run with the same header reproduces the file byte for byte.
"""
import hashlib
import json
import logging
import sys
from typing import Any, Dict, List, Optional, TextIO, Tuple

import numpy as np
import pandas as pd

from dgwalk import __version__
from dgwalk.schemas import TableState
from dgwalk.services.group_core import state_digest, to_coordinates
from dgwalk.services.wilson import make_statistic, statistic_F

logger = logging.getLogger(__name__)


def _plain(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {key: _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    return value


def provenance_header(subcommand: str, seed: int, params: Dict[str, Any]) -> Dict[str, Any]:
    return {"version": __version__, "subcommand": subcommand, "seed": seed, "params": _plain(params)}


def render_csv(header: Dict[str, Any], rows: List[Dict[str, Any]], columns: List[str]) -> str:
    lines = [f"# {key}={json.dumps(value, sort_keys=True)}" for key, value in header.items()]
    frame = pd.DataFrame(rows, columns=columns)
    body = frame.to_csv(index=False, float_format="%.12g", lineterminator="\n", na_rep="")
    return "\n".join(lines) + "\n" + body


def render_json(header: Dict[str, Any], payload: Dict[str, Any]) -> str:
    return json.dumps({"header": header, **_plain(payload)}, indent=2, sort_keys=True) + "\n"


def emit(text: str, out: str = "-") -> str:
    """Write text to a path or stdout ("-"); returns the sha256 of the bytes written."""
    data = text.encode("utf-8")
    if out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(out, "wb") as handle:
            handle.write(data)
        logger.info(f"Wrote {len(data)} bytes to {out}")
    return hashlib.sha256(data).hexdigest()


class TrajectoryWriter:
    """NDJSON trajectory records {t, state_digest, F_value}.

    F is evaluated on the coordinates of B_t - B_0, so F_value starts at F_max;
    it is omitted for n < 3 where F is undefined.
    """

    def __init__(self, handle: TextIO, start: TableState):
        self.handle = handle
        self.start = start
        self.statistic = make_statistic(start.n, start.q) if start.n >= 3 else None
        self.records = 0

    def __call__(self, t: int, state: TableState) -> None:
        record: Dict[str, Any] = {"t": t, "state_digest": state_digest(state)}
        if self.statistic is not None:
            offset = to_coordinates(state.entries - self.start.entries, state.q)
            record["F_value"] = round(statistic_F(offset, self.statistic), 12)
        self.handle.write(json.dumps(record) + "\n")
        self.records += 1

    @classmethod
    def open(cls, path: str, start: TableState) -> "TrajectoryWriter":
        return cls(open(path, "w", encoding="utf-8"), start)

    def close(self) -> None:
        if self.handle not in (sys.stdout, sys.stderr):
            self.handle.close()
        logger.info(f"Trajectory closed after {self.records} record(s)")


def table_payload(state: TableState, extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    payload = {"table": state.to_json_dict()}
    if extra:
        payload.update(extra)
    return payload


def spectrum_rows(multiplicities: List[Tuple[float, int]]) -> List[Dict[str, Any]]:
    return [{"lambda": value, "multiplicity": count} for value, count in multiplicities]


def distribution_rows(probabilities: np.ndarray) -> List[Dict[str, Any]]:
    """One row per element in mixed-radix order."""
    return [{"element_index": index, "probability": float(p)} for index, p in enumerate(probabilities)]
