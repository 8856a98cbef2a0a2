"""Config-driven command line entry point.

Four workflows, one per subcommand:

  check          complementing-condition verdict for a junction config
  simulate       curve-network flow run with CSV diagnostics
  hodograph      transform roundtrip / chain-rule refinement report
  combinatorics  exact verification of the combinatorial bounds

Every run consumes a JSON experiment config (strictly validated: unknown
or missing fields abort with exit code 2 before any computation), writes
a deterministic report.json plus delimited output into the output
directory, renders the matching figures, and puts volatile details
(timestamp, versions) into a separate meta.json so reports are
byte-reproducible.

Exit codes: 0 pass, 1 mathematical failure, 2 invalid input,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import replace
from fractions import Fraction

import numpy as np

from . import __version__, combinatorics, figures, hodograph, mcf
from .complementing import (SV_RTOL, build_linearization, check_complementing,
                            delta_bound, equal_slope_system)
from .errors import DegenerateConfig, JunctionFlowError, SchemaError
from .geometry import JunctionConfig, not_all_tangent

DEFAULT_SEED = 1729

EXIT_PASS = 0
EXIT_MATH_FAIL = 1
EXIT_INVALID = 2
EXIT_NUMERICAL = 3


# ----------------------------------------------------------------------
# config schemas: {field: (required, type or validator)}
# ----------------------------------------------------------------------

def _validate(block: dict, schema: dict, where: str) -> None:
    unknown = set(block) - set(schema)
    if unknown:
        raise SchemaError(f"{where}: unknown fields {sorted(unknown)}")
    for key, (required, kind) in schema.items():
        if key not in block:
            if required:
                raise SchemaError(f"{where}: missing required field {key!r}")
            continue
        value = block[key]
        if kind is bool:
            if not isinstance(value, bool):
                raise SchemaError(f"{where}.{key}: expected a boolean")
        elif kind is float:
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise SchemaError(f"{where}.{key}: expected a number")
        elif kind is int:
            if not isinstance(value, int) or isinstance(value, bool):
                raise SchemaError(f"{where}.{key}: expected an integer")
        elif kind is str:
            if not isinstance(value, str):
                raise SchemaError(f"{where}.{key}: expected a string")
        elif kind is list:
            if not isinstance(value, list):
                raise SchemaError(f"{where}.{key}: expected a list")
        elif kind is dict:
            if not isinstance(value, dict):
                raise SchemaError(f"{where}.{key}: expected an object")
        elif callable(kind):
            kind(value, f"{where}.{key}")


_COMMON = {
    "version": (True, int),
    "command": (True, str),
    "seed": (False, int),
}


def _junction_schema(value, where):
    if not isinstance(value, dict):
        raise SchemaError(f"{where}: expected an object")
    _validate(value, {
        "n": (True, int), "m": (True, int), "q": (True, int), "s": (True, int),
        "theta": (True, list), "slopes": (True, list),
    }, where)


def _geometry_schema(value, where):
    _validate(value, {
        "x_left": (True, float), "x_right": (True, float),
        "gamma": (True, float), "value": (True, list),
        "pins": (True, list), "theta": (True, list), "s": (True, int),
        "bump_amplitude": (False, float),
    }, where)


def _solver_schema(value, where):
    _validate(value, {
        "h": (True, float), "dt": (True, float),
        "newton_tol": (False, float), "newton_max_iters": (False, int),
        "scheme_weight": (False, float), "steady_tol": (False, float),
    }, where)


SCHEMAS = {
    "check": {**_COMMON,
              "junction": (True, _junction_schema),
              "shear": (False, float),
              "modes": (False, list)},
    "simulate": {**_COMMON,
                 "geometry": (True, _geometry_schema),
                 "solver": (True, _solver_schema),
                 "T": (True, float),
                 "record_every": (False, int),
                 "write_frames": (False, bool)},
    "hodograph": {**_COMMON,
                  "families": (False, list),
                  "grid_sizes": (False, list),
                  "width": (False, float),
                  "tolerance": (False, float),
                  "min_order": (False, float)},
    "combinatorics": {**_COMMON,
                      "b_max": (False, int),
                      "degree_max": (False, int),
                      "vandermonde_max": (False, int),
                      "combo2_max": (False, int)},
}


def load_config(path: str, overrides: list[str], command: str | None) -> dict:
    if path is None:
        cfg = {"version": 1, "command": command}
    else:
        try:
            with open(path) as f:
                cfg = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise SchemaError(f"cannot read config: {e}")
    for item in overrides:
        if "=" not in item:
            raise SchemaError(f"override {item!r} is not key=value")
        key, _, raw = item.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise SchemaError(f"override path {key!r} crosses a non-object")
        node[parts[-1]] = value
    if not isinstance(cfg, dict):
        raise SchemaError("config root must be an object")
    if "command" not in cfg:
        raise SchemaError("config is missing the command field")
    if command is not None and cfg["command"] != command:
        raise SchemaError(
            f"config command {cfg['command']!r} does not match subcommand {command!r}")
    cmd = cfg["command"]
    if cmd not in SCHEMAS:
        raise SchemaError(f"unknown command {cmd!r}")
    _validate(cfg, SCHEMAS[cmd], "config")
    if cfg["version"] != 1:
        raise SchemaError(f"unsupported config version {cfg['version']}")
    cfg.setdefault("seed", DEFAULT_SEED)
    return cfg


# ----------------------------------------------------------------------
# report output
# ----------------------------------------------------------------------

def _write_report(outdir: str, report: dict, seed: int) -> None:
    os.makedirs(outdir, exist_ok=True)
    report = dict(report)
    report["seed"] = seed
    with open(os.path.join(outdir, "report.json"), "w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")
    with open(os.path.join(outdir, "meta.json"), "w") as f:
        json.dump({"generated_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
                   "package_version": __version__}, f, indent=2)
        f.write("\n")


def _fail(msg: str, code: int) -> int:
    print(f"junctionflow: error: {msg}", file=sys.stderr)
    return code


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------

def _cmd_check(cfg: dict, outdir: str, render: bool) -> int:
    junction = JunctionConfig.from_dict(cfg["junction"])
    modes = cfg.get("modes", ["elliptic", "parabolic"])
    if not modes:
        raise SchemaError("modes must not be empty")
    report = {"command": "check", "junction": junction.to_dict(),
              "sv_rtol": SV_RTOL, "modes": {}}
    holds = True
    for mode in modes:
        if mode not in ("elliptic", "parabolic"):
            raise SchemaError(f"unknown mode {mode!r}")
        if not_all_tangent(junction):
            sys_ = build_linearization(junction, C=cfg.get("shear"), mode=mode)
        else:
            sys_ = equal_slope_system(junction, mode=mode)
        verdict = check_complementing(sys_)
        holds = holds and verdict.ok
        report["modes"][mode] = {
            "holds": verdict.ok,
            "kernel_dim": verdict.kernel_dim,
            "min_singular_value": verdict.min_singular_value,
            "per_sample_min_singular_value":
                list(verdict.per_sample_min_singular_value),
            "delta": verdict.delta,
        }
        report["D"] = verdict.D
        if mode == "parabolic":
            report["delta"] = verdict.delta
    report.setdefault("delta", delta_bound(sys_) if not sys_.degenerate else None)
    report["holds"] = holds
    report["reason"] = "complementing holds" if holds else "kernel nontrivial (D = 0)"
    _write_report(outdir, report, cfg["seed"])
    if render:
        figures.render_check(report, outdir)
    print(f"check: D = {report['D']:.6g}, holds = {holds}")
    return EXIT_PASS if holds else EXIT_MATH_FAIL


def _cmd_simulate(cfg: dict, outdir: str, render: bool) -> int:
    g = cfg["geometry"]
    sv = cfg["solver"]
    params = mcf.SolverParams(
        h=sv["h"], dt=sv["dt"],
        newton_tol=sv.get("newton_tol", 1e-10),
        newton_max_iters=sv.get("newton_max_iters", 30),
        scheme_weight=sv.get("scheme_weight", 1.0),
        steady_tol=sv.get("steady_tol", 0.0))
    state = mcf.straight_network(
        g["x_left"], g["x_right"], g["gamma"], g["value"],
        np.asarray(g["pins"], dtype=float), g["theta"], g["s"], sv["h"])
    if g.get("bump_amplitude"):
        sheets = []
        for k in range(state.q):
            lam = np.linspace(0.0, 1.0, state.sheets[k].shape[0])
            bump = g["bump_amplitude"] * np.sin(np.pi * lam) ** 2
            sheets.append(state.sheets[k] + bump[:, None])
        state = replace(state, sheets=tuple(sheets))
    span = min(state.x_right - state.gamma, state.gamma - state.x_left)
    test_fn = mcf.SpaceTimeBump(
        center=(state.gamma,) + tuple(state.value), radius=0.8 * span)
    state_hook = None
    if cfg.get("write_frames"):
        frame_dir = os.path.join(outdir, "frames")
        os.makedirs(frame_dir, exist_ok=True)

        def state_hook(index, snap):
            path = os.path.join(frame_dir, f"frame_{index:06d}.csv")
            with open(path, "w", newline="") as f:
                writer = csv.writer(f)
                writer.writerow(["sheet", "x"]
                                + [f"u{i + 1}" for i in range(snap.m)])
                for k in range(snap.q):
                    for x, vals in zip(snap.x_nodes(k), snap.sheets[k]):
                        writer.writerow([k + 1, repr(float(x))]
                                        + [repr(float(v)) for v in vals])
    result = mcf.run(state, params, cfg["T"],
                     record_every=cfg.get("record_every", 1), test_fn=test_fn,
                     state_hook=state_hook)
    rows = [{"t": d.t, "total_area": d.total_area,
             "balance_norm": d.balance_norm,
             "brakke_residual": d.brakke_residual,
             "max_mcf_residual": d.max_mcf_residual,
             "gamma": d.gamma,
             **{f"P{i + 1}": v for i, v in enumerate(d.value)}}
            for d in result.diagnostics]
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "diagnostics.csv"), "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    final = result.final_state
    with open(os.path.join(outdir, "final_state.csv"), "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["sheet", "x"] + [f"u{i + 1}" for i in range(final.m)])
        for k in range(final.q):
            for x, vals in zip(final.x_nodes(k), final.sheets[k]):
                writer.writerow([k + 1, repr(float(x))]
                                + [repr(float(v)) for v in vals])
    report = {"command": "simulate", "status": result.status,
              "steps_recorded": len(rows),
              "final": {"t": final.t, "gamma": final.gamma,
                        "value": list(map(float, final.value)),
                        "total_area": mcf.total_area(final),
                        "balance_norm": float(np.linalg.norm(
                            mcf.junction_conditions(final)))}}
    _write_report(outdir, report, cfg["seed"])
    if render:
        figures.render_simulation(rows, final, outdir)
    print(f"simulate: status={result.status}, final area="
          f"{report['final']['total_area']:.8f}")
    return EXIT_NUMERICAL if result.status == "newton_diverged" else EXIT_PASS


def _cmd_hodograph(cfg: dict, outdir: str, render: bool) -> int:
    families = cfg.get("families", list(hodograph.SYNTHETIC_FAMILIES))
    n_values = tuple(cfg.get("grid_sizes", [32, 64, 128]))
    width = cfg.get("width", 0.5)
    tol = cfg.get("tolerance", 1e-3)
    min_order = cfg.get("min_order", 1.9)
    studies = []
    ok = True
    for fam in families:
        st = hodograph.refinement_study(fam, n_values=n_values, width=width)
        st["pass"] = (min(st["roundtrip_orders"]) >= min_order
                      and min(st["chain_rule_orders"]) >= min_order
                      and st["chain_rule_errors"][-1] <= tol)
        ok = ok and st["pass"]
        studies.append(st)
    merged = {
        "command": "hodograph",
        "tolerance": tol, "min_order": min_order,
        "h_values": studies[0]["h_values"],
        "roundtrip_errors": [max(s["roundtrip_errors"][i] for s in studies)
                             for i in range(len(n_values))],
        "chain_rule_errors": [max(s["chain_rule_errors"][i] for s in studies)
                              for i in range(len(n_values))],
        "studies": studies,
        "holds": ok,
    }
    _write_report(outdir, merged, cfg["seed"])
    if render:
        figures.render_hodograph(merged, outdir)
    print(f"hodograph: families={len(studies)}, holds={ok}")
    return EXIT_PASS if ok else EXIT_MATH_FAIL


def _cmd_combinatorics(cfg: dict, outdir: str, render: bool) -> int:
    rep = combinatorics.full_report(
        b_max=cfg.get("b_max", 3),
        degree_max=cfg.get("degree_max", 30),
        vandermonde_max=cfg.get("vandermonde_max", 20),
        combo2_max=cfg.get("combo2_max", 40))
    # tightness ratios for the figure / report
    ratios = []
    for b in range(1, cfg.get("b_max", 3) + 1):
        for m in range(cfg.get("degree_max", 30) // (2 * b) + 1):
            for n in range(cfg.get("degree_max", 30) + 1):
                w = 2 * b * m + n
                if 4 <= w <= cfg.get("degree_max", 30):
                    v = combinatorics.combo_bound_check(b, m, n)
                    ratios.append({"weight": w,
                                   "ratio": float(Fraction(v.lhs, v.rhs_bound))})
    rep["combo_bound"]["ratios"] = ratios
    rep["command"] = "combinatorics"
    rep["holds"] = rep["all_hold"]
    _write_report(outdir, rep, cfg["seed"])
    if render:
        figures.render_combinatorics(rep, outdir)
    print(f"combinatorics: all_hold={rep['all_hold']} "
          f"(q_pi={rep['constants']['q_pi']}, c0_low={rep['constants']['c0_low']})")
    return EXIT_PASS if rep["all_hold"] else EXIT_MATH_FAIL


COMMANDS = {
    "check": _cmd_check,
    "simulate": _cmd_simulate,
    "hodograph": _cmd_hodograph,
    "combinatorics": _cmd_combinatorics,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="junctionflow",
        description="junction stationarity, flattening transforms, "
                    "complementing checks, and curve-network flow")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None,
                       help="experiment config (JSON)")
        p.add_argument("--out", default="junctionflow_out",
                       help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="seed recorded in the report")
        p.add_argument("--override", action="append", default=[],
                       metavar="KEY=VALUE",
                       help="override a config field (dotted path)")
        p.add_argument("--no-figures", action="store_true",
                       help="skip figure rendering")
        if name == "combinatorics":
            p.add_argument("--b-max", type=int, default=None)
            p.add_argument("--degree-max", type=int, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = list(args.override)
    if getattr(args, "b_max", None) is not None:
        overrides.append(f"b_max={args.b_max}")
    if getattr(args, "degree_max", None) is not None:
        overrides.append(f"degree_max={args.degree_max}")
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    try:
        cfg = load_config(args.config, overrides, args.subcommand)
    except SchemaError as e:
        return _fail(str(e), EXIT_INVALID)
    try:
        return COMMANDS[cfg["command"]](cfg, args.out, not args.no_figures)
    except SchemaError as e:
        return _fail(str(e), EXIT_INVALID)
    except DegenerateConfig as e:
        return _fail(f"invalid input: {e}", EXIT_INVALID)
    except (ValueError, KeyError) as e:
        return _fail(f"invalid input: {e}", EXIT_INVALID)
    except JunctionFlowError as e:
        return _fail(f"numerical failure: {e}", EXIT_NUMERICAL)


if __name__ == "__main__":
    sys.exit(main())
