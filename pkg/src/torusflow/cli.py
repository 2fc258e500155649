"""Command-line entry point.

Subcommands: run (full pipeline), flow (integrate the first scenario),
project (harmonic projection of the first scenario), distance (query
battery on the first scenario's trace), check (harness on persisted
traces only).  Exit codes: 0 all pass, 1 check failures, 2 scenario
errors, 3 config errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io as tfio
from .flow import FlowFailure, run_flow
from .geometry import ProjectionError, harmonic_projection, ricci, volume
from .distances import check_distance_estimate, flat_accuracy_battery, random_queries
from .runner import (
    ConfigError,
    config_from_dict,
    exit_code_of,
    run_experiment,
    _flat_scenarios,
    _scenario_dir,
    _trace_is_reusable,
)
from .scenarios import ScenarioError, make_sequence

EXIT_OK = 0
EXIT_CHECK_FAIL = 1
EXIT_SCENARIO_ERROR = 2
EXIT_CONFIG_ERROR = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="torusflow",
        description="Geometric-flow laboratory on the torus: scenario families, "
        "flows, estimate checks, distances.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("run", "full pipeline: scenarios, flows, checks, reports"),
        ("flow", "integrate the flow for the first configured scenario"),
        ("project", "harmonic projection of the first configured scenario"),
        ("distance", "distance battery on the first scenario's trace"),
        ("check", "re-run harness checks on persisted traces (no flows)"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="experiment config (JSON)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the global seed")
        p.add_argument("--jobs", type=int, default=1, help="scenario-level workers")
    return parser


def _load_config(args):
    path = Path(args.config)
    if not path.exists():
        raise ConfigError([f"config file not found: {path}"])
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config is not valid JSON: {exc}"]) from exc
    if args.seed is not None:
        if not isinstance(raw, dict):
            raise ConfigError(["top level: expected a JSON object"])
        raw["seed"] = args.seed
        if isinstance(raw.get("scenario"), dict):
            raw["scenario"].pop("seed", None)  # derive everything from --seed
    return config_from_dict(raw)


def _resolve_out(args, config) -> Path:
    out = args.out or config.output
    if out is None:
        raise ConfigError(["output: no directory given (set `output` in the config or pass --out)"])
    return Path(out)


def _first_scenario(config):
    spec = config.scenario
    if config.flat_mode:
        return _flat_scenarios(config)[0]
    first = type(spec)(
        geometry=spec.geometry,
        seed=spec.seed,
        indices=(spec.indices[0],),
        max_mode=spec.max_mode,
        background=spec.background,
        lambda_gate=spec.lambda_gate,
        p=spec.p,
    )
    return make_sequence(first)[0]


def _ensure_trace(config, out: Path, scenario):
    sdir = _scenario_dir(out, scenario.index)
    if _trace_is_reusable(sdir, config.trace_key):
        return tfio.load_trace(sdir / "trace")
    trace = run_flow(scenario.metric, config.flow)
    sdir.mkdir(parents=True, exist_ok=True)
    tfio.save_trace(trace, sdir / "trace")
    (sdir / "trace_key.txt").write_text(config.trace_key + "\n")
    return trace


def _cmd_run(args) -> int:
    config = _load_config(args)
    out = _resolve_out(args, config)
    manifest = run_experiment(config, out, jobs=max(1, args.jobs))
    for row in manifest.scenarios:
        idx = row.get("index", "?")
        if row["status"] == "ok":
            print(f"scenario i={idx}: ok (amplitude {row['amplitude']:.6g}, "
                  f"floor {row['curvature_floor']:.6g})")
        else:
            print(f"scenario i={idx}: ERROR {row['error']}")
    verdict = "PASS" if manifest.all_checks_pass else "FAIL"
    print(f"checks: {verdict}; manifest: {out / 'manifest.json'}")
    return exit_code_of(manifest)


def _cmd_flow(args) -> int:
    config = _load_config(args)
    out = _resolve_out(args, config)
    try:
        scenario = _first_scenario(config)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO_ERROR
    try:
        trace = _ensure_trace(config, out, scenario)
    except FlowFailure as exc:
        print(f"flow failed: {exc}", file=sys.stderr)
        return EXIT_SCENARIO_ERROR
    last = trace.diagnostics[-1]
    print(f"flow complete: i={scenario.index}, t={last.t:.6g}, steps={len(trace.diagnostics) - 1}")
    print(f"  final min scalar curvature {last.min_scalar_curvature:.6g}, "
          f"volume {last.volume:.12g}, min eigenvalue {last.min_eigenvalue:.6g}")
    print(f"  trace: {_scenario_dir(out, scenario.index) / 'trace'}")
    return EXIT_OK


def _cmd_project(args) -> int:
    config = _load_config(args)
    try:
        scenario = _first_scenario(config)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO_ERROR
    try:
        flat, u = harmonic_projection(scenario.metric)
    except ProjectionError as exc:
        print(f"projection failed: {exc}", file=sys.stderr)
        return EXIT_SCENARIO_ERROR
    sup_u = float(np.abs(u.values).max())
    ric = float(np.abs(ricci(flat).values).max())
    print(f"flat representative of scenario i={scenario.index}:")
    print(f"  H_flat = {np.array2string(flat.H, precision=12)}")
    print(f"  sup|u| = {sup_u:.12g}   max|Ricci| = {ric:.3g}")
    print(f"  volume: input {volume(scenario.metric):.12g}, flat {volume(flat):.12g}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        tfio.save_field(u, out / "flat_potential.tkrf")
        tfio.save_metric_snapshot(flat.H, u * 0.0, out / "flat_metric.tkrf")
        print(f"  wrote {out / 'flat_potential.tkrf'} and {out / 'flat_metric.tkrf'}")
    return EXIT_OK


def _cmd_distance(args) -> int:
    config = _load_config(args)
    out = _resolve_out(args, config)
    try:
        scenario = _first_scenario(config)
        trace = _ensure_trace(config, out, scenario)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO_ERROR
    except FlowFailure as exc:
        print(f"flow failed: {exc}", file=sys.stderr)
        return EXIT_SCENARIO_ERROR
    queries = random_queries(config.geometry, config.distance_queries, config.distance_seed)
    frag = check_distance_estimate(
        trace, queries, times=config.distance_times, stencil=config.stencil
    )
    battery = flat_accuracy_battery(
        trace.alpha, config.geometry,
        count=config.distance_flat_queries,
        seed=config.distance_seed + 1,
        stencil=config.stencil,
    )
    sdir = _scenario_dir(out, scenario.index)
    rows = [
        (r["query"], repr(r["t"]), repr(r["dt"]), "graph", repr(r["slack"]))
        for r in frag["rows"]
    ]
    rows.extend(
        (r["query"], "0.0", repr(r["d0"]), "flat_exact", repr(r["rel_gap"]))
        for r in frag["flat_rows"]
    )
    tfio.write_csv_atomic(sdir / "distance.csv", ("query", "t", "d", "method", "slack"), rows)
    print(f"distance battery on scenario i={scenario.index}:")
    print(f"  L = {frag['L']:.6g}, fitted C = {frag['fitted_C']:.6g}, "
          f"min slack = {frag['min_slack']:.3g}")
    print(f"  flat battery ({battery['count']} queries): max relative error "
          f"{battery['max_rel_error']:.4%}")
    print(f"  table: {sdir / 'distance.csv'}")
    ok = frag["pass"] and battery["max_rel_error"] <= 0.02
    return EXIT_OK if ok else EXIT_CHECK_FAIL


def _cmd_check(args) -> int:
    config = _load_config(args)
    out = _resolve_out(args, config)
    manifest = run_experiment(config, out, jobs=max(1, args.jobs), resume_only=True)
    for row in manifest.scenarios:
        idx = row.get("index", "?")
        state = row["status"] if row["status"] != "ok" else "checked"
        print(f"scenario i={idx}: {state}" + (f" ({row['error']})" if row["error"] else ""))
    verdict = "PASS" if manifest.all_checks_pass else "FAIL"
    print(f"checks: {verdict}; manifest: {out / 'manifest.json'}")
    return exit_code_of(manifest)


_COMMANDS = {
    "run": _cmd_run,
    "flow": _cmd_flow,
    "project": _cmd_project,
    "distance": _cmd_distance,
    "check": _cmd_check,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
