# dgwalk/main.py - command-line experiment harness
import argparse
import json
import logging
import sys
from math import ceil
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from dgwalk.config import settings
from dgwalk.exceptions import DGWalkError, GroupTooLargeError, ParameterError
from dgwalk.schemas import ExperimentConfig, Spectrum, WalkConfig
from dgwalk.services import reporting, spectral, verification, wilson
from dgwalk.services.group_core import group_size, initial_table, run_walk, state_digest
from dgwalk.services.run_registry import finish_run, record_run

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_COUNTEREXAMPLE = 1
EXIT_INVALID = 2
EXIT_TOO_LARGE = 3

CommandResult = Tuple[str, int]


def _int_list(text: str) -> List[int]:
    try:
        return [int(value) for value in text.split(",") if value.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")


def _key_value(text: str) -> Tuple[str, int]:
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    try:
        return key.strip(), int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"value of {key} must be an integer")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=_int_list, default=None, help="table size, comma list for sweeps")
    common.add_argument("--q", type=_int_list, default=None, help="modulus, comma list for sweeps")
    common.add_argument("--c", type=float, default=None)
    common.add_argument("--eps", type=float, default=None)
    common.add_argument("--t-min", dest="t_min", type=int, default=None)
    common.add_argument("--t-max", dest="t_max", type=int, default=None)
    common.add_argument("--t-step", dest="t_step", type=int, default=None)
    common.add_argument("--trials", type=int, default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--max-group-size", dest="max_group_size", type=int, default=None)
    common.add_argument("--steps", type=int, default=None)
    common.add_argument("--out", default=None, help="output path, '-' for stdout")
    common.add_argument("--format", choices=["csv", "json"], default=None)
    common.add_argument("--suite", action="append", default=None)
    common.add_argument("--exhaustive", nargs="+", type=_key_value, default=None, metavar="KEY=VALUE")
    common.add_argument("--row-sums", dest="row_sums", type=_int_list, default=None)
    common.add_argument("--col-sums", dest="col_sums", type=_int_list, default=None)
    common.add_argument("--trajectory", default=None, help="NDJSON trajectory path (sample)")
    common.add_argument("--spectrum-out", dest="spectrum_out", default=None,
                        help="CSV of (lambda, multiplicity) (tv-curve)")
    common.add_argument("--distribution-out", dest="distribution_out", default=None,
                        help="CSV of P^t_max(0, g) by element index (tv-curve)")
    common.add_argument("--lazy", action="store_true", default=None)
    common.add_argument("--config", default=None, help="JSON file mirroring the flags")
    common.add_argument("--record", action="store_true", default=None, help="store the run in the registry")

    parser = argparse.ArgumentParser(prog="dgwalk", description="Experiments with the mod-q table walk")
    subcommands = parser.add_subparsers(dest="subcommand", required=True)
    subcommands.add_parser("sample", parents=[common], help="run the walk and print the final table")
    subcommands.add_parser("tv-curve", parents=[common], help="exact, l2 and Monte Carlo distance curves")
    subcommands.add_parser("cutoff-table", parents=[common], help="theorem constants over an (n, q) sweep")
    subcommands.add_parser("verify", parents=[common], help="run the property suites")
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    """Merge the JSON config file with explicit flags; flags win."""
    merged: Dict[str, Any] = {}
    if args.config:
        with open(args.config, encoding="utf-8") as handle:
            merged.update({key.replace("-", "_"): value for key, value in json.load(handle).items()})
    for key, value in vars(args).items():
        if key in ("config", "subcommand") or value is None:
            continue
        merged[key] = dict(value) if key == "exhaustive" else value
    for key in ("n", "q"):
        if isinstance(merged.get(key), int):
            merged[key] = [merged[key]]
    merged["subcommand"] = args.subcommand
    return ExperimentConfig(**merged)


def _cap(config: ExperimentConfig) -> int:
    return config.max_group_size or settings.max_group_size


def _params(config: ExperimentConfig) -> Dict[str, Any]:
    return config.model_dump(exclude={"subcommand", "out", "record", "trajectory", "spectrum_out",
                                      "distribution_out"})


def cmd_sample(config: ExperimentConfig) -> CommandResult:
    n, q = config.n[0], config.q[0]
    if n < 4:
        logger.warning(f"Theorem requires n >= 4; running anyway with n={n}")
    if n == 2:
        logger.warning("n=2 is the walk on Z/qZ, which is known to not have cutoff")
    c = config.c if config.c is not None else spectral.minimum_upper_c(n)
    times = spectral.theorem_times(n, q, c)
    steps = config.steps if config.steps is not None else ceil(times.t_upper)
    walk = WalkConfig(n=n, q=q, row_sums=config.row_sums, col_sums=config.col_sums,
                      seed=config.seed, steps=steps, lazy=config.lazy)
    start = initial_table(n, q, walk.row_sums, walk.col_sums)

    writer = reporting.TrajectoryWriter.open(config.trajectory, start) if config.trajectory else None
    try:
        final = run_walk(walk, start, on_step=writer)
    finally:
        if writer is not None:
            writer.close()

    params = _params(config)
    params.update({"steps": steps, "c": c, "t_nq": times.t_nq, "delta_nq": times.delta_nq,
                   "t_upper": times.t_upper})
    header = reporting.provenance_header("sample", config.seed, params)
    header["state_digest"] = state_digest(final)
    if config.format == "json":
        return reporting.render_json(header, reporting.table_payload(final)), EXIT_OK
    rows = [{"row": i + 1, "col": j + 1, "entry": int(final.entries[i, j])}
            for i in range(n) for j in range(n)]
    return reporting.render_csv(header, rows, ["row", "col", "entry"]), EXIT_OK


def _export_spectrum(config: ExperimentConfig, spec: Spectrum, header: Dict[str, Any]) -> None:
    if config.spectrum_out:
        rows = reporting.spectrum_rows(spectral.spectrum_multiplicities(spec))
        reporting.emit(reporting.render_csv(header, rows, ["lambda", "multiplicity"]), config.spectrum_out)
    if config.distribution_out:
        n, q = config.n[0], config.q[0]
        probabilities = spectral.exact_distribution(n, q, config.t_max, cap=_cap(config), lazy=config.lazy,
                                                    spectrum=spec)
        rows = reporting.distribution_rows(probabilities)
        text = reporting.render_csv({**header, "t": config.t_max}, rows, ["element_index", "probability"])
        reporting.emit(text, config.distribution_out)


def cmd_tv_curve(config: ExperimentConfig) -> CommandResult:
    n, q = config.n[0], config.q[0]
    ts = list(range(config.t_min, config.t_max + 1, config.t_step))
    header = reporting.provenance_header("tv-curve", config.seed, _params(config))

    spec = None
    reason = ""
    try:
        spec = spectral.enumerate_spectrum(n, q, cap=_cap(config))
    except GroupTooLargeError as e:
        logger.warning(f"Exact columns skipped: {e}")
        reason = "group too large"

    exact: List[Optional[float]] = [None] * len(ts)
    bound: List[Optional[float]] = [None] * len(ts)
    if spec is not None:
        exact = spectral.tv_curve(spec, ts, lazy=config.lazy)
        bound = [spectral.l2_bound(spec, t, lazy=config.lazy) for t in ts]
        header["t_mix_quarter"] = spectral.mixing_time(spec, 0.25, lazy=config.lazy)
        _export_spectrum(config, spec, header)
    elif config.spectrum_out or config.distribution_out:
        logger.warning("Spectrum and distribution exports skipped: group too large")

    mc: List[Optional[float]] = [None] * len(ts)
    if n >= 3:
        walk = WalkConfig(n=n, q=q, seed=config.seed, lazy=config.lazy)
        mc = wilson.mc_tv_curve(walk, ts, config.trials)
    guarantee: List[Optional[float]] = [None] * len(ts)
    if n >= 4:
        t_w = wilson.wilson_time(n, q, config.eps)
        header["wilson_time"] = t_w
        guarantee = [1 - config.eps if 0 < t_w and t <= t_w else None for t in ts]

    rows = [{"t": t, "exact_tv": e, "l2_bound": b, "mc_lower": m, "wilson_guarantee": g,
             "trials": config.trials if m is not None else None, "reason": reason}
            for t, e, b, m, g in zip(ts, exact, bound, mc, guarantee)]
    columns = ["t", "exact_tv", "l2_bound", "mc_lower", "wilson_guarantee", "trials", "reason"]
    if config.format == "json":
        return reporting.render_json(header, {"rows": rows}), EXIT_OK
    return reporting.render_csv(header, rows, columns), EXIT_OK


def cmd_cutoff_table(config: ExperimentConfig) -> CommandResult:
    header = reporting.provenance_header("cutoff-table", config.seed, _params(config))
    rows = []
    for n in config.n:
        for q in config.q:
            upper = spectral.theorem_times(n, q, config.c if config.c is not None else spectral.minimum_upper_c(n))
            lower = spectral.theorem_times(n, q, config.c if config.c is not None else 0.0)
            t_mix = None
            if group_size(n, q) <= _cap(config):
                t_mix = spectral.mixing_time(spectral.enumerate_spectrum(n, q, cap=_cap(config)), 0.25,
                                             lazy=config.lazy)
            rows.append({
                "n": n,
                "q": q,
                "t_nq": upper.t_nq,
                "delta_nq": upper.delta_nq,
                "t_lower": lower.t_lower,
                "t_upper": upper.t_upper,
                "t_mix_quarter": t_mix,
                "window_ratio": upper.window_ratio,
                "bracket_ok": None if t_mix is None or n < 4 else lower.t_lower <= t_mix,
            })
    columns = ["n", "q", "t_nq", "delta_nq", "t_lower", "t_upper", "t_mix_quarter", "window_ratio", "bracket_ok"]
    if config.format == "json":
        return reporting.render_json(header, {"rows": rows}), EXIT_OK
    return reporting.render_csv(header, rows, columns), EXIT_OK


def _instances(config: ExperimentConfig) -> Optional[List[Tuple[int, int]]]:
    if not config.exhaustive:
        return None
    unknown = set(config.exhaustive) - {"n", "q"}
    if unknown or not {"n", "q"} <= set(config.exhaustive):
        raise ParameterError(f"--exhaustive takes n=VALUE q=VALUE, got {sorted(config.exhaustive)}")
    return [(config.exhaustive["n"], config.exhaustive["q"])]


def cmd_verify(config: ExperimentConfig) -> CommandResult:
    scale = verification.SuiteScale(
        instances=_instances(config),
        trials=config.trials,
        seed=config.seed,
        max_group_size=config.max_group_size or 2**20,
    )
    reports = verification.run_suites(config.suite, scale)
    passed = all(report.passed for report in reports)
    for report in reports:
        if not report.passed:
            logger.error(f"{report.lemma} {report.details}: {report.counterexample_count} counterexample(s)")
    header = reporting.provenance_header("verify", config.seed, _params(config))
    payload = {
        "reports": [report.model_dump() | {"passed": report.passed} for report in reports],
        "passed": passed,
    }
    return reporting.render_json(header, payload), EXIT_OK if passed else EXIT_COUNTEREXAMPLE


COMMANDS: Dict[str, Callable[[ExperimentConfig], CommandResult]] = {
    "sample": cmd_sample,
    "tv-curve": cmd_tv_curve,
    "cutoff-table": cmd_cutoff_table,
    "verify": cmd_verify,
}


def _fail(message: str, code: int) -> int:
    logger.error(message)
    print(f"dgwalk: {message}", file=sys.stderr)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, settings.log_level, logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )
    try:
        config = load_config(args)
    except (ValidationError, DGWalkError, ValueError, OSError) as e:
        return _fail(f"invalid configuration: {e}", EXIT_INVALID)

    run_id = record_run(config) if config.record or settings.record_runs else None
    digest = None
    try:
        text, code = COMMANDS[config.subcommand](config)
        digest = reporting.emit(text, config.out)
    except GroupTooLargeError as e:
        code = _fail(str(e), EXIT_TOO_LARGE)
    except MemoryError as e:
        code = _fail(f"out of memory, lower the instance size or --max-group-size: {e}", EXIT_TOO_LARGE)
    except (DGWalkError, ValidationError, ValueError, OSError) as e:
        code = _fail(str(e), EXIT_INVALID)
    finish_run(run_id, code, digest)
    return code


if __name__ == "__main__":
    sys.exit(main())
