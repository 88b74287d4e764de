"""Command-line interface: closed-form evaluations, loss sweeps, CCDF runs,
and verification batteries, with CSV/JSON emission.

Angles cross this boundary in degrees and are converted to radians before
touching any library code.  Every output embeds the resolved run
configuration and the library version: JSON documents carry a ``config``
key, CSV files a ``# config = ...`` comment preamble ahead of the
mandatory header row.

Exit codes: 0 success, 2 usage error, 3 I/O error, 4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from typing import Any

import numpy as np

from . import __version__, closedform, montecarlo, verify

__all__ = ["RunConfig", "main"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_VERIFY = 4

_CLOSEDFORM_CASES = ("v-orth", "u-orth", "v-parallel", "u-parallel")
_SWEEP_CASES = ("v-orth", "u-orth", "u-parallel")


class UsageError(Exception):
    """Invalid parameter combination detected after argument parsing."""


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration of one CLI invocation."""

    command: str
    parameters: dict
    output_path: str | None
    format: str

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "parameters": self.parameters,
            "output_path": self.output_path,
            "format": self.format,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        return cls(
            command=doc["command"],
            parameters=dict(doc["parameters"]),
            output_path=doc["output_path"],
            format=doc["format"],
        )


# Per-command parameter names and coercions, used to validate --config files.
_PARAM_TYPES: dict[str, dict[str, type]] = {
    "closedform": {
        "case": str,
        "a1": float,
        "a2": float,
        "uu": float,
        "vv": float,
        "nu_deg": float,
        "phase_diff_deg": float,
        "uu_phase_deg": float,
        "vv_phase_deg": float,
    },
    "sweep": {
        "case": str,
        "k_min": float,
        "k_max": float,
        "k_points": int,
        "uu": float,
        "vv": float,
        "nu_deg": float,
    },
    "ccdf": {
        "paths": int,
        "nt": int,
        "nr": int,
        "trials": int,
        "spacing": float,
        "fov_deg": float,
        "scheme": str,
        "angle_sampling": str,
    },
    "verify": {"suite": str, "trials": int},
}
_COMMON_TYPES: dict[str, type] = {"out": str, "format": str, "seed": int}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmwbeam",
        description="Two-path beamforming closed forms, loss sweeps, and CCDF simulation",
    )
    parser.add_argument("--version", action="version", version=f"mmwbeam {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    def add_common(sub):
        sub.add_argument("--out", default=None, help="output file (default: stdout)")
        sub.add_argument("--format", choices=["csv", "json"], default=None)
        sub.add_argument("--seed", type=int, default=None)
        sub.add_argument("--config", default=None, help="JSON file of defaults (flags win)")

    sub = subs.add_parser("closedform", help="evaluate one closed-form case")
    sub.add_argument("--case", choices=_CLOSEDFORM_CASES, default=None)
    sub.add_argument("--a1", type=float, default=None, help="|gain| of path 1")
    sub.add_argument("--a2", type=float, default=None, help="|gain| of path 2")
    sub.add_argument("--uu", type=float, default=None, help="|u1^H u2|")
    sub.add_argument("--vv", type=float, default=None, help="|v1^H v2|")
    sub.add_argument("--nu-deg", type=float, default=None, help="phase misalignment")
    sub.add_argument("--phase-diff-deg", type=float, default=None)
    sub.add_argument("--uu-phase-deg", type=float, default=None)
    sub.add_argument("--vv-phase-deg", type=float, default=None)
    add_common(sub)

    sub = subs.add_parser("sweep", help="sweep the gain ratio K and tabulate the loss")
    sub.add_argument("--case", choices=_SWEEP_CASES, default=None)
    sub.add_argument("--k-min", type=float, default=None)
    sub.add_argument("--k-max", type=float, default=None)
    sub.add_argument("--k-points", type=int, default=None)
    sub.add_argument("--uu", type=float, default=None)
    sub.add_argument("--vv", type=float, default=None)
    sub.add_argument("--nu-deg", type=float, default=None)
    add_common(sub)

    sub = subs.add_parser("ccdf", help="Monte Carlo CCDF of the loss vs. the optimum")
    sub.add_argument("--paths", type=int, default=None)
    sub.add_argument("--nt", type=int, default=None)
    sub.add_argument("--nr", type=int, default=None)
    sub.add_argument("--trials", type=int, default=None)
    sub.add_argument("--spacing", type=float, default=None)
    sub.add_argument("--fov-deg", type=float, default=None)
    sub.add_argument("--scheme", choices=sorted(montecarlo.SCHEMES), default=None)
    sub.add_argument("--angle-sampling", choices=montecarlo.ANGLE_SAMPLING, default=None)
    add_common(sub)

    sub = subs.add_parser("verify", help="run an oracle-equivalence battery")
    sub.add_argument("--suite", choices=verify.SUITE_NAMES, default=None)
    sub.add_argument("--trials", type=int, default=None)
    add_common(sub)

    return parser


def _merge_config_file(command: str, args: dict) -> dict:
    """Overlay file-provided values under explicit flags; reject unknown keys."""
    path = args.pop("config", None)
    if path is None:
        return args
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as err:
        raise OSError(f"cannot read config file {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise UsageError(f"config file {path} is not valid JSON: {err}") from err
    if not isinstance(doc, dict):
        raise UsageError("config file must contain a JSON object")
    known = {**_PARAM_TYPES[command], **_COMMON_TYPES}
    for key, value in doc.items():
        if key not in known:
            raise UsageError(f"unknown config key {key!r} for command {command!r}")
        if args.get(key) is None:
            try:
                args[key] = None if value is None else known[key](value)
            except (TypeError, ValueError) as err:
                raise UsageError(f"config key {key!r}: {err}") from err
    return args


def _require(args: dict, key: str, command: str) -> Any:
    if args.get(key) is None:
        flag = "--" + key.replace("_", "-")
        raise UsageError(f"{command} requires {flag}")
    return args[key]


def _fget(args: dict, key: str, default: float) -> float:
    value = args.get(key)
    return default if value is None else float(value)


def _phases_from_args(args: dict) -> tuple[float, float, float]:
    """Resolve (phase_diff, uu_phase, vv_phase) in radians."""
    trio = [args.get(k) for k in ("phase_diff_deg", "uu_phase_deg", "vv_phase_deg")]
    if args.get("nu_deg") is not None:
        if any(v is not None for v in trio):
            raise UsageError("--nu-deg is mutually exclusive with the explicit phase flags")
        return math.radians(float(args["nu_deg"])), 0.0, 0.0
    return tuple(math.radians(float(v)) if v is not None else 0.0 for v in trio)


def _check_unit(value: float, flag: str) -> float:
    if not 0.0 <= value <= 1.0:
        raise UsageError(f"{flag} must lie in [0, 1], got {value}")
    return value


def _closedform_record(args: dict) -> dict:
    case = _require(args, "case", "closedform")
    mag_a1 = float(_require(args, "a1", "closedform"))
    mag_a2 = float(_require(args, "a2", "closedform"))
    if mag_a1 < 0 or mag_a2 < 0:
        raise UsageError("gain magnitudes must be nonnegative")
    uu = _check_unit(_fget(args, "uu", 0.0), "--uu")
    vv = _check_unit(_fget(args, "vv", 0.0), "--vv")
    phase_diff, uu_phase, vv_phase = _phases_from_args(args)

    if case == "v-orth" and vv != 0.0:
        raise UsageError("case v-orth assumes --vv 0 (transmit vectors orthogonal)")
    if case == "u-orth":
        if uu != 0.0:
            raise UsageError("case u-orth assumes --uu 0 (receive vectors orthogonal)")
        if vv <= 0.0:
            raise UsageError("case u-orth needs --vv > 0; with --vv 0 use case v-orth")
    if case == "v-parallel":
        if args.get("vv") is not None and vv != 1.0:
            raise UsageError("case v-parallel assumes --vv 1")
        vv = 1.0
    if case == "u-parallel":
        if args.get("uu") is not None and uu != 1.0:
            raise UsageError("case u-parallel assumes --uu 1")
        uu = 1.0

    params = closedform.TwoPathParams(
        mag_a1=mag_a1,
        mag_a2=mag_a2,
        phase_diff=phase_diff,
        uu_mag=uu,
        uu_phase=uu_phase,
        vv_mag=vv,
        vv_phase=vv_phase,
    )
    try:
        if case == "v-orth":
            alloc = closedform.beta_opt_v_orth(params)
            delta = closedform.delta_snr_v_orth(params)
            snr_dom = closedform.snr_dominant_path(params)
            snr_opt = delta * snr_dom
        elif case == "u-orth":
            alloc = closedform.beta_opt_u_orth(params)
            delta = closedform.delta_snr_u_orth(params)
            snr_dom = closedform.snr_dominant_path(params)
            snr_opt = delta * snr_dom
        elif case == "v-parallel":
            alloc = None
            delta = closedform.delta_snr_v_parallel(params)
            snr_opt = closedform.snr_v_parallel(params)
            snr_dom = snr_opt
        else:  # u-parallel
            alloc = closedform.beta_opt_u_parallel(params)
            delta = closedform.delta_snr_u_parallel(params)
            snr_opt = closedform.snr_u_parallel(params)
            snr_dom = closedform.snr_dominant_path(params)
    except (closedform.RegimeError, ValueError) as err:
        raise UsageError(str(err)) from err

    return {
        "case": case,
        "mag_a1": mag_a1,
        "mag_a2": mag_a2,
        "uu_mag": uu,
        "vv_mag": vv,
        "nu_deg": math.degrees(params.misalignment),
        "gains_swapped": mag_a2 > mag_a1,
        "beta_sq": None if alloc is None else alloc.beta**2,
        "theta_deg": None if alloc is None else math.degrees(alloc.theta),
        "delta_snr": delta,
        "delta_snr_db": 10.0 * math.log10(delta) if math.isfinite(delta) else math.inf,
        "snr_dominant": snr_dom,
        "snr_optimal": snr_opt,
    }


def _sweep_rows(args: dict) -> list[dict]:
    case = _require(args, "case", "sweep")
    k_min = float(_require(args, "k_min", "sweep"))
    k_max = float(_require(args, "k_max", "sweep"))
    k_points = int(args["k_points"]) if args.get("k_points") is not None else 91
    if k_min < 1.0 or k_max < k_min:
        raise UsageError("need 1 <= k-min <= k-max (K is the dominant-to-weak gain ratio)")
    if k_points < 1:
        raise UsageError("--k-points must be >= 1")
    uu = _check_unit(_fget(args, "uu", 0.0), "--uu")
    vv = _check_unit(_fget(args, "vv", 0.0), "--vv")
    nu_deg = _fget(args, "nu_deg", 0.0)

    if case == "v-orth":
        if args.get("vv") is not None and vv != 0.0:
            raise UsageError("case v-orth assumes --vv 0")
        if args.get("uu") is None:
            raise UsageError("case v-orth needs --uu")
    elif case == "u-orth":
        if args.get("uu") is not None and uu != 0.0:
            raise UsageError("case u-orth assumes --uu 0")
        if args.get("vv") is None or vv <= 0.0:
            raise UsageError("case u-orth needs --vv > 0")
    else:  # u-parallel
        if args.get("uu") is not None and uu != 1.0:
            raise UsageError("case u-parallel assumes --uu 1")
        uu = 1.0
        if args.get("vv") is None:
            raise UsageError("case u-parallel needs --vv")

    ks = np.linspace(k_min, k_max, k_points)
    rows = []
    for k in ks:
        params = closedform.TwoPathParams(
            mag_a1=float(k),
            mag_a2=1.0,
            phase_diff=math.radians(nu_deg),
            uu_mag=uu,
            uu_phase=0.0,
            vv_mag=vv,
            vv_phase=0.0,
        )
        if case == "v-orth":
            beta_sq = closedform.beta_opt_v_orth(params).beta ** 2
            delta = closedform.delta_snr_v_orth(params)
        elif case == "u-orth":
            beta_sq = closedform.beta_opt_u_orth(params).beta ** 2
            delta = closedform.delta_snr_u_orth(params)
        else:
            beta_sq = closedform.beta_opt_u_parallel(params).beta ** 2
            delta = closedform.delta_snr_u_parallel(params)
        rows.append(
            {
                "k": float(k),
                "beta_sq": beta_sq,
                "delta_snr": delta,
                "delta_snr_db": 10.0 * math.log10(delta) if math.isfinite(delta) else math.inf,
            }
        )
    return rows


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _records_to_csv(records: list[dict], preamble: list[str]) -> str:
    lines = [f"# {p}" for p in preamble]
    header = list(records[0].keys())
    lines.append(",".join(header))
    for rec in records:
        lines.append(",".join(_format_cell(rec[k]) for k in header))
    return "\n".join(lines) + "\n"


def _preamble(run_config: RunConfig) -> list[str]:
    return [
        "config = " + json.dumps(run_config.to_dict(), sort_keys=True),
        f"version = {__version__}",
    ]


def _wrap_json(run_config: RunConfig, results) -> str:
    doc = {"config": run_config.to_dict(), "version": __version__, "results": results}
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _emit(text: str, out_path: str | None) -> None:
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _error_record(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": {"type": kind, "message": message}}) + "\n")


def _resolved_params(command: str, args: dict) -> dict:
    names = list(_PARAM_TYPES[command]) + ["seed"]
    return {k: args.get(k) for k in names}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        namespace = parser.parse_args(argv)
    except SystemExit as err:
        return int(err.code) if err.code is not None else EXIT_OK

    args = vars(namespace)
    command = args.pop("command")
    try:
        args = _merge_config_file(command, args)
    except UsageError as err:
        _error_record("usage", str(err))
        return EXIT_USAGE
    except OSError as err:
        _error_record("io", str(err))
        return EXIT_IO

    out_path = args.get("out")
    fmt = args.get("format")
    if fmt is None:
        fmt = "json" if command in ("closedform", "verify") else "csv"
    if fmt not in ("csv", "json"):
        _error_record("usage", f"unknown format {fmt!r}")
        return EXIT_USAGE

    try:
        if command == "closedform":
            run_config = RunConfig(command, _resolved_params(command, args), out_path, fmt)
            record = _closedform_record(args)
            if fmt == "json":
                _emit(_wrap_json(run_config, record), out_path)
            else:
                _emit(_records_to_csv([record], _preamble(run_config)), out_path)

        elif command == "sweep":
            if args.get("k_points") is None:
                args["k_points"] = 91
            run_config = RunConfig(command, _resolved_params(command, args), out_path, fmt)
            rows = _sweep_rows(args)
            if fmt == "json":
                _emit(_wrap_json(run_config, {"rows": rows}), out_path)
            else:
                _emit(_records_to_csv(rows, _preamble(run_config)), out_path)

        elif command == "ccdf":
            try:
                cfg = montecarlo.McConfig(
                    num_paths=int(_require(args, "paths", "ccdf")),
                    trials=int(args["trials"]) if args.get("trials") is not None else 10_000,
                    seed=int(args["seed"]) if args.get("seed") is not None else 0,
                    nt=int(args["nt"]) if args.get("nt") is not None else 64,
                    nr=int(args["nr"]) if args.get("nr") is not None else 4,
                    spacing_wavelengths=_fget(args, "spacing", 0.5),
                    fov_deg=_fget(args, "fov_deg", 120.0),
                    scheme=args.get("scheme") or "bidirectional",
                    angle_sampling=args.get("angle_sampling") or "uniform_angle",
                )
            except ValueError as err:
                raise UsageError(str(err)) from err
            args.update(
                paths=cfg.num_paths,
                trials=cfg.trials,
                seed=cfg.seed,
                nt=cfg.nt,
                nr=cfg.nr,
                spacing=cfg.spacing_wavelengths,
                fov_deg=cfg.fov_deg,
                scheme=cfg.scheme,
                angle_sampling=cfg.angle_sampling,
            )
            run_config = RunConfig(command, _resolved_params(command, args), out_path, fmt)
            table = montecarlo.run_ccdf(cfg)
            if fmt == "json":
                results = montecarlo.ccdf_to_dict(table)
                results["median_db"] = montecarlo.percentile(table, 0.5)
                results["p90_db"] = montecarlo.percentile(table, 0.9)
                _emit(_wrap_json(run_config, results), out_path)
            else:
                _emit(montecarlo.ccdf_to_csv(table, _preamble(run_config)), out_path)

        elif command == "verify":
            suite = _require(args, "suite", "verify")
            seed = int(args["seed"]) if args.get("seed") is not None else 0
            trials = int(args["trials"]) if args.get("trials") is not None else None
            try:
                report = verify.run_suite(suite, trials=trials, seed=seed)
            except ValueError as err:
                raise UsageError(str(err)) from err
            args["seed"] = seed
            args["trials"] = report.trials
            run_config = RunConfig(command, _resolved_params(command, args), out_path, fmt)
            sys.stdout.write("\n".join(report.lines()) + "\n")
            if out_path is not None:
                _emit(_wrap_json(run_config, report.to_dict()), out_path)
            if not report.passed:
                _error_record("verification", f"suite {suite} failed {report.num_failed} checks")
                return EXIT_VERIFY

        else:  # pragma: no cover - argparse enforces the choices
            _error_record("usage", f"unknown command {command!r}")
            return EXIT_USAGE

    except UsageError as err:
        _error_record("usage", str(err))
        return EXIT_USAGE
    except OSError as err:
        _error_record("io", str(err))
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
