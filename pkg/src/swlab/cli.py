"""Command-line front end: ``swlab <command> [--config FILE] [--out PATH] [--format csv|json]``.

Every command builds a flat table and writes it as CSV (17 significant
digits) or JSON records. Exit codes: 0 success, 1 a configured tolerance
was missed, 2 usage or configuration error (nothing is written).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from typing import Any, Callable

import numpy as np

from ._parallel import parallel_map
from .anticontinuous import (
    PositivityError,
    SolutionSet,
    WindowError,
    amplitudes,
    count_solution_sets,
    diagram_data,
    energy_of,
    enumerate_solution_sets,
    is_bifurcation_point,
)
from .continuum import ladder_translation_check, r4_diagnostic, solve_stationary
from .lattice import ContinuationError, continue_in_beta, continue_normalized_path
from .params import ModelParams
from .semiclassical import (
    ContinuumModel,
    ResolutionError,
    hopping_scaling_report,
    semiclassical_sweep,
    solve_bands,
)

EXIT_OK, EXIT_TOLERANCE, EXIT_USAGE = 0, 1, 2
DEFAULT_H = [0.05, 0.04, 0.03, 0.02]


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

_POS = "positive"

# key: (type, default, constraint); None default means "derived" or "required"
SCHEMAS: dict[str, dict[str, tuple]] = {
    "enumerate": {
        "nu_over_f": (float, None, _POS),
        "f": (float, 1.0, _POS),
        "rung_j": (int, 0, None),
        "max_card": (int, None, _POS),
        "window_N": (int, None, _POS),
    },
    "count": {
        "nu_over_f": (list, None, None),
    },
    "diagram": {
        "start": (float, 0.1, None),
        "stop": (float, 10.0, None),
        "step": (float, 0.1, _POS),
        "max_card": (int, None, _POS),
    },
    "continue": {
        "nu_over_f": (float, 5.5, _POS),
        "f": (float, 1.0, _POS),
        "set": (str, "0+1", None),
        "rung_j": (int, 0, None),
        "beta_target": (float, 1e-3, None),
        "n_steps": (int, 12, _POS),
        "mode": (str, "fixed", ("fixed", "normalized")),
        "window_N": (int, 8, _POS),
    },
    "effective": {
        "h": (list, DEFAULT_H, None),
        "V0": (float, 1.0, _POS),
        "kL": (float, math.pi, _POS),
        "window_N": (int, 8, _POS),
    },
    "bands": {
        "h": (float, 0.05, _POS),
        "V0": (float, 1.0, None),
        "kL": (float, math.pi, _POS),
        "n_k": (int, 33, _POS),
        "n_bands": (int, 3, _POS),
    },
    "verify-pde": {
        "h": (list, DEFAULT_H, None),
        "V0": (float, 1.0, _POS),
        "kL": (float, math.pi, _POS),
        "window_N": (int, 8, _POS),
        "set": (str, "0", None),
        "residual_tol": (float, 1e-2, _POS),
        "ladder_min": (float, 0.5, _POS),
        "ladder_max": (float, 2.0, _POS),
    },
}


@dataclass
class RunConfig:
    """Fully resolved parameters of one run; serializes to and from JSON."""

    command: str
    params: dict = field(default_factory=dict)
    out: str | None = None
    format: str = "csv"

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        data = json.loads(text)
        cfg = cls(**data)
        return resolve_config(cfg.command, cfg.params, {}, cfg.out, cfg.format)


def _coerce(key: str, value: Any, kind, constraint):
    if value is None:
        return None
    try:
        if kind is float:
            if isinstance(value, bool):
                raise TypeError
            out = float(value)
            if not math.isfinite(out):
                raise ValueError
        elif kind is int:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            out = int(value)
        elif kind is str:
            if not isinstance(value, str):
                raise TypeError
            out = value
        elif kind is list:
            items = value if isinstance(value, list) else [value]
            out = [float(v) for v in items]
            if not out or not all(math.isfinite(v) for v in out):
                raise ValueError
        else:  # pragma: no cover
            raise TypeError
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value for {key!r}: {value!r}") from None
    if constraint == _POS:
        values = out if isinstance(out, list) else [out]
        if any(v <= 0 for v in values):
            raise ConfigError(f"{key!r} must be positive, got {value!r}")
    elif isinstance(constraint, tuple) and out not in constraint:
        raise ConfigError(f"{key!r} must be one of {constraint}, got {value!r}")
    return out


def resolve_config(command: str, file_values: dict, overrides: dict, out=None, fmt="csv") -> RunConfig:
    if command not in SCHEMAS:
        raise ConfigError(f"unknown command {command!r}")
    schema = SCHEMAS[command]
    if not isinstance(file_values, dict):
        raise ConfigError("the config file must hold a JSON object")
    unknown = sorted(set(file_values) - set(schema) - {"command", "out", "format"})
    if unknown:
        raise ConfigError(f"unknown config key(s) for {command}: {', '.join(unknown)}")
    if "command" in file_values and file_values["command"] != command:
        raise ConfigError(f"config is for command {file_values['command']!r}, not {command!r}")
    out = overrides.pop("out", None) or out or file_values.get("out")
    fmt = overrides.pop("format", None) or file_values.get("format") or fmt
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {fmt!r}")
    params = {}
    for key, (kind, default, constraint) in schema.items():
        value = overrides.get(key)
        if value is None:
            value = file_values.get(key, default)
        params[key] = _coerce(key, value, kind, constraint)
    if command in ("enumerate",) and params["nu_over_f"] is None:
        raise ConfigError("nu_over_f is required")
    if command == "count" and params["nu_over_f"] is None:
        raise ConfigError("nu_over_f is required")
    return RunConfig(command, params, out, fmt)


def _parse_set(text: str) -> tuple[int, ...]:
    try:
        offsets = tuple(int(p) for p in text.split("+"))
        SolutionSet(0, offsets)
    except ValueError:
        raise ConfigError(f"invalid set id {text!r}; expected offsets like 0+1+3") from None
    return offsets


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def _fmt_amplitudes(values) -> str:
    return ";".join("%.17g" % v for v in values)


def cmd_enumerate(p: dict):
    x, f, j = p["nu_over_f"], p["f"], p["rung_j"]
    window = p["window_N"] or max(10, abs(j) + math.floor(x) + 1)
    params = ModelParams(nu=x * f, f=f, window_N=window)
    rows = []
    for sset in enumerate_solution_sets(params, rung_j=j, max_card=p["max_card"]):
        row = {
            "set_id": sset.label,
            "rung_j": sset.rung_j,
            "cardinality": sset.cardinality,
            "mu_over_f": energy_of(sset, params) / f,
        }
        try:
            sol = amplitudes(sset, params)
            row.update(amplitudes=_fmt_amplitudes(sol.d(n) for n in sset.sites), status="ok")
        except PositivityError as exc:
            row.update(amplitudes=None, status=f"positivity-violation at site {exc.site}")
        rows.append(row)
    return rows, EXIT_OK


def cmd_count(p: dict):
    rows = []
    for x in sorted(p["nu_over_f"]):
        if x <= 0:
            raise ConfigError("nu_over_f values must be positive")
        rows.append({
            "nu_over_f": x,
            "count": count_solution_sets(x),
            "bifurcation_point": is_bifurcation_point(x),
        })
    return rows, EXIT_OK


def _sweep_values(start: float, stop: float, step: float) -> list[float]:
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    if n < 1:
        raise ConfigError("empty sweep: stop < start")
    return [round(start + k * step, 12) for k in range(n)]


def cmd_diagram(p: dict):
    values = _sweep_values(p["start"], p["stop"], p["step"])
    if values[0] < 0:
        raise ConfigError("nu/f values must be >= 0")
    rows = [
        {
            "nu_over_f": r.nu_over_f,
            "set_id": r.set_id,
            "cardinality": r.cardinality,
            "mu_over_f": r.mu_over_f,
        }
        for r in diagram_data(values, p["max_card"])
    ]
    rows.sort(key=lambda r: (r["nu_over_f"], r["cardinality"], tuple(int(s) for s in r["set_id"].split("+"))))
    return rows, EXIT_OK


def cmd_continue(p: dict):
    offsets = _parse_set(p["set"])
    f = p["f"]
    params = ModelParams(nu=p["nu_over_f"] * f, f=f, window_N=p["window_N"])
    sset = SolutionSet(p["rung_j"], offsets)
    seed = amplitudes(sset, params)
    if p["mode"] == "fixed":
        path = continue_in_beta(seed, params, p["beta_target"], p["n_steps"])
    else:
        path = continue_normalized_path(seed, params, p["beta_target"], p["n_steps"])
    rows = [
        {
            "beta": s.beta,
            "lambda_tilde": s.lambda_tilde,
            "l1_error": s.l1_error,
            "iterations": s.iterations,
            "residual": s.residual_norm,
        }
        for s in path
    ]
    return rows, EXIT_OK


def _template(p: dict) -> ContinuumModel:
    return ContinuumModel(V0=p["V0"], kL=p["kL"], W_window_N=p["window_N"])


def cmd_effective(p: dict):
    points = sorted(semiclassical_sweep(p["h"], _template(p)), key=lambda q: -q.h)
    fit = hopping_scaling_report(points).as_dict() if len(points) >= 4 else None
    rows = []
    for q in points:
        e = q.params
        row = {
            "h": q.h,
            "Lambda1": e.Lambda1,
            "beta": e.beta,
            "C0": e.C0,
            "C1": e.C1,
            "S0": e.S0,
            "nu": e.nu,
            "f": e.f,
            "bandwidth": q.bands.bandwidth,
            "gap": q.bands.gap,
            "lambda1_band_distance": q.band_distance(),
            "xi_defect": max(abs(v - e.C0 - n) for n, v in e.xi_tilde.items()),
            "slope_over_S0": fit["slope_over_S0"] if fit else None,
            "r2": fit["r2"] if fit else None,
        }
        rows.append(row)
    return rows, EXIT_OK


def cmd_bands(p: dict):
    model = ContinuumModel(V0=p["V0"], kL=p["kL"], h=p["h"])
    bands = solve_bands(model, p["n_k"], p["n_bands"])
    rows = []
    for k, E in sorted(zip(bands.k, bands.energies), key=lambda t: t[0]):
        row = {"k": k}
        row.update({f"E{i + 1}": v for i, v in enumerate(E)})
        rows.append(row)
    return rows, EXIT_OK


def _verify_point(args):
    q, offsets = args
    sol = solve_stationary(q.model, SolutionSet(0, offsets), q.basis, q.params)
    ladder = ladder_translation_check(sol.psi, sol.lam, sol.model, sol.basis)
    r4 = r4_diagnostic(sol.c, sol.psi_perp, sol.basis)
    return q.h, sol, ladder, r4


def cmd_verify_pde(p: dict):
    offsets = _parse_set(p["set"])
    points = sorted(semiclassical_sweep(p["h"], _template(p)), key=lambda q: -q.h)
    results = parallel_map(_verify_point, [(q, offsets) for q in points])
    rows = []
    ok_all = True
    prev = None
    for h, sol, ladder, r4 in results:
        monotone = prev is None or sol.residual_L2 < prev
        prev = sol.residual_L2
        ok = (
            sol.residual_L2 < p["residual_tol"]
            and sol.perp.contraction_factor < 1
            and p["ladder_min"] <= ladder.ratio <= p["ladder_max"]
            and monotone
        )
        ok_all &= ok
        rows.append({
            "h": h,
            "lambda": sol.lam,
            "residual": sol.residual_L2,
            "residual_mu": sol.residual_mu,
            "perp_H1": sol.perp_H1_norm,
            "contraction": sol.perp.contraction_factor,
            "ladder_ratio": ladder.ratio,
            "r4_K": r4.K_min,
            "status": "ok" if ok else "tolerance-failed",
        })
    return rows, EXIT_OK if ok_all else EXIT_TOLERANCE


COMMANDS: dict[str, Callable] = {
    "enumerate": cmd_enumerate,
    "count": cmd_count,
    "diagram": cmd_diagram,
    "continue": cmd_continue,
    "effective": cmd_effective,
    "bands": cmd_bands,
    "verify-pde": cmd_verify_pde,
}


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return "%.17g" % value
    return str(value)


def render(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        clean = [
            {k: (None if isinstance(v, float) and not math.isfinite(v) else _json_value(v)) for k, v in r.items()}
            for r in rows
        ]
        return json.dumps(clean, indent=1, allow_nan=False) + "\n"
    buf = io.StringIO()
    columns = list(rows[0]) if rows else []
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def _json_value(v):
    if isinstance(v, np.generic):
        return v.item()
    return v


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swlab", description="Stark-Wannier lattice laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, schema in SCHEMAS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON file with parameters")
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.add_argument("--format", choices=("csv", "json"))
        for key, (kind, _default, _c) in schema.items():
            flag = "--" + key.replace("_", "-")
            if kind is list:
                sp.add_argument(flag, dest=key, type=float, nargs="+")
            else:
                sp.add_argument(flag, dest=key, type=kind)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config") and v is not None}
    try:
        file_values = {}
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                file_values = json.load(fh)
        cfg = resolve_config(args.command, file_values, overrides)
        rows, code = COMMANDS[cfg.command](cfg.params)
        text = render(rows, cfg.format)
    except ContinuationError as exc:
        print(f"swlab: error: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except (ConfigError, OSError, json.JSONDecodeError, WindowError, PositivityError,
            ResolutionError, ValueError) as exc:
        print(f"swlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
