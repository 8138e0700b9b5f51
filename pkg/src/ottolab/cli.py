"""Batch experiment runner.

One experiment per JSON config; results land in the output directory as
``report.json`` plus command-specific CSV files, every file carrying a
provenance comment header.  Exit codes: 0 all checks pass, 2 a check failed,
1 configuration or runtime error.  Timing is printed to stderr only, so
reruns of the same config produce byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigInvalid, OttolabError
from .reporting import provenance_lines, write_csv, write_json
from .potential import potential_from_json
from . import bridge, flow, ineq, interp, measure

COMMANDS = ("finite-flow", "finite-interp", "finite-inequalities",
            "grid-flow", "grid-bridge", "grid-contraction", "epsilon-sweep")
SUITE_PRESETS = ("paper-finite", "paper-bridge", "all")


# ---------------------------------------------------------------------------
# Config validation
# ---------------------------------------------------------------------------


def _fail(field: str, why: str):
    raise ConfigInvalid(f"config field {field!r}: {why}")


def _need(params: dict, field: str, kinds, where: str):
    if field not in params:
        _fail(f"{where}.{field}", "missing")
    v = params[field]
    if not isinstance(v, kinds):
        _fail(f"{where}.{field}", f"expected {kinds}, got {type(v).__name__}")
    return v


def _positive(params: dict, field: str, where: str, strict=True):
    v = _need(params, field, (int, float), where)
    if strict and not v > 0:
        _fail(f"{where}.{field}", "must be > 0")
    if not math.isfinite(v):
        _fail(f"{where}.{field}", "must be finite")
    return float(v)


def _point(params: dict, field: str, where: str):
    v = _need(params, field, (int, float, list), where)
    if isinstance(v, list):
        if not v or any(not isinstance(c, (int, float)) for c in v):
            _fail(f"{where}.{field}", "must be a number or a list of numbers")
    return v


def _potential(params: dict, where: str):
    spec = _need(params, "potential", dict, where)
    try:
        return potential_from_json(spec)
    except (ValueError, KeyError, TypeError) as exc:
        _fail(f"{where}.potential", str(exc))


_PARAM_KEYS = {
    "finite-flow": {"potential", "x0", "t_end", "dt"},
    "finite-interp": {"potential", "x", "y", "eps", "S", "method"},
    "finite-inequalities": {"S"},
    "grid-flow": {"kind", "N", "t_end", "dt", "center", "concentration", "exponent",
                  "v_amplitude", "max_snapshots"},
    "grid-bridge": {"mu", "nu", "eps", "N", "S"},
    "grid-contraction": {"mu", "nu", "N", "eps_list", "t_list", "quad_steps"},
    "epsilon-sweep": {"mu", "nu", "N", "eps_list"},
}


def validate_config(cfg: dict) -> dict:
    if not isinstance(cfg, dict):
        raise ConfigInvalid("config must be a JSON object")
    allowed = {"format_version", "command", "params", "output_dir", "seed"}
    unknown = set(cfg) - allowed
    if unknown:
        _fail(sorted(unknown)[0], "unknown field")
    if int(cfg.get("format_version", -1)) != 1:
        _fail("format_version", "must be 1")
    command = cfg.get("command")
    if command not in COMMANDS:
        _fail("command", f"must be one of {COMMANDS}")
    params = cfg.get("params")
    if not isinstance(params, dict):
        _fail("params", "must be an object")
    unknown = set(params) - _PARAM_KEYS[command]
    if unknown:
        _fail(f"params.{sorted(unknown)[0]}", "unknown field")
    seed = cfg.get("seed", 0)
    if not isinstance(seed, int):
        _fail("seed", "must be an integer")
    _validate_params(command, params)
    return {"format_version": 1, "command": command, "params": params,
            "seed": seed, "output_dir": cfg.get("output_dir")}


def _validate_measure(spec, where: str):
    if not isinstance(spec, dict) or "kind" not in spec:
        _fail(where, "must be an object with a 'kind'")
    kind = spec["kind"]
    if kind == "uniform":
        extra = set(spec) - {"kind"}
    elif kind == "bump":
        extra = set(spec) - {"kind", "center", "concentration"}
        _positive(spec, "concentration", where)
        c = _need(spec, "center", (int, float), where)
        if not 0.0 <= c < 1.0:
            _fail(f"{where}.center", "must lie in [0, 1)")
    elif kind == "values":
        extra = set(spec) - {"kind", "values"}
        vals = _need(spec, "values", list, where)
        if not vals or any(not isinstance(v, (int, float)) for v in vals):
            _fail(f"{where}.values", "must be a nonempty list of numbers")
    else:
        _fail(f"{where}.kind", "must be uniform | bump | values")
    if extra:
        _fail(f"{where}.{sorted(extra)[0]}", "unknown field")


def _validate_params(command: str, params: dict):
    if command == "finite-flow":
        _potential(params, "params")
        _point(params, "x0", "params")
        t_end = _need(params, "t_end", (int, float), "params")
        if t_end < 0:
            _fail("params.t_end", "must be >= 0")
        _positive(params, "dt", "params")
    elif command == "finite-interp":
        _potential(params, "params")
        _point(params, "x", "params")
        _point(params, "y", "params")
        eps = _need(params, "eps", (int, float), "params")
        if eps < 0:
            _fail("params.eps", "must be >= 0")
        s = params.get("S", interp.DEFAULT_S)
        if not isinstance(s, int) or s < 2:
            _fail("params.S", "must be an integer >= 2")
        if params.get("method", "direct") not in ("direct", "shooting", "both"):
            _fail("params.method", "must be direct | shooting | both")
    elif command == "finite-inequalities":
        s = params.get("S", 1024)
        if not isinstance(s, int) or s < 8:
            _fail("params.S", "must be an integer >= 8")
    elif command == "grid-flow":
        kind = _need(params, "kind", str, "params")
        if kind not in ("heat", "fokker-planck", "porous-media"):
            _fail("params.kind", "must be heat | fokker-planck | porous-media")
        if kind == "porous-media":
            _positive(params, "exponent", "params")
        _check_cells_field(params)
        _positive(params, "t_end", "params")
        _positive(params, "dt", "params")
        snaps = params.get("max_snapshots", 50)
        if not isinstance(snaps, int) or snaps < 1:
            _fail("params.max_snapshots", "must be a positive integer")
    elif command == "grid-bridge":
        _validate_measure(_need(params, "mu", dict, "params"), "params.mu")
        _validate_measure(_need(params, "nu", dict, "params"), "params.nu")
        _positive(params, "eps", "params")
        _check_cells_field(params)
    elif command == "grid-contraction":
        _validate_measure(_need(params, "mu", dict, "params"), "params.mu")
        _validate_measure(_need(params, "nu", dict, "params"), "params.nu")
        _check_cells_field(params)
        for field in ("eps_list", "t_list"):
            vals = params.get(field, [])
            if not isinstance(vals, list) or any(not (isinstance(v, (int, float)) and v > 0)
                                                 for v in vals):
                _fail(f"params.{field}", "must be a list of positive numbers")
    elif command == "epsilon-sweep":
        _validate_measure(_need(params, "mu", dict, "params"), "params.mu")
        _validate_measure(_need(params, "nu", dict, "params"), "params.nu")
        _check_cells_field(params)
        eps_list = _need(params, "eps_list", list, "params")
        if (not eps_list or any(not (isinstance(v, (int, float)) and v > 0) for v in eps_list)
                or any(b >= a for a, b in zip(eps_list, eps_list[1:]))):
            _fail("params.eps_list", "must be a strictly decreasing list of positive numbers")


def _check_cells_field(params):
    n = params.get("N", 128)
    if not isinstance(n, int) or n < 2 or n & (n - 1):
        _fail("params.N", "must be a power-of-two integer >= 2")
    return n


def _build_measure(spec: dict, n_cells: int) -> measure.GridMeasure:
    if spec["kind"] == "uniform":
        return measure.uniform(n_cells)
    if spec["kind"] == "bump":
        return measure.von_mises_bump(spec["center"], spec["concentration"], n_cells)
    return measure.from_values(spec["values"])


# ---------------------------------------------------------------------------
# Command handlers: each returns (results, checks, csv files written)
# ---------------------------------------------------------------------------


def _run_finite_flow(params, out, header):
    F = potential_from_json(params["potential"])
    traj = flow.evolve(F, params["x0"], float(params["t_end"]), float(params["dt"]))
    traj.to_csv(out / "trajectory.csv", header)
    rep = flow.dissipation_identity(traj)
    defect = traj.lyapunov_defect()
    fscale = 1.0 + float(np.abs(traj.free_energy()).max())
    checks = [
        {"name": "free-energy-nonincreasing", "pass": defect <= 1e-10 * fscale,
         "value": defect},
        {"name": "dissipation-identity", "pass": abs(rep.gap) <= 1e-6 * (1 + abs(rep.rhs)),
         "value": rep.gap},
    ]
    results = {"final_state": traj.final_state.tolist(), "dissipation_lhs": rep.lhs,
               "dissipation_rhs": rep.rhs, "dissipation_gap": rep.gap}
    return results, checks


def _run_finite_interp(params, out, header):
    F = potential_from_json(params["potential"])
    eps = float(params["eps"])
    S = int(params.get("S", interp.DEFAULT_S))
    method = params.get("method", "direct")
    results, checks = {}, []
    direct = shoot = None
    if method in ("direct", "both"):
        direct = interp.minimize_direct(F, params["x"], params["y"], eps, S)
        direct.to_csv(out / "interpolation.csv", header)
        results["direct"] = direct.summary()
    if method in ("shooting", "both"):
        shoot = interp.solve_shooting(F, params["x"], params["y"], eps, S)
        if method == "shooting":
            shoot.to_csv(out / "interpolation.csv", header)
        results["shooting"] = shoot.summary()
    primary = direct if direct is not None else shoot
    checks.append({"name": "solver-converged", "pass": True,
                   "value": primary.gradient_sup})
    if direct is not None and shoot is not None:
        gap = abs(direct.cost - shoot.cost)
        checks.append({"name": "cross-method-cost", "pass": gap <= 1e-5, "value": gap})
    dec = interp.cost_decompositions(primary)
    checks.append({"name": "cost-decompositions", "pass": dec.consistent,
                   "value": dec.max_gap})
    results["decomposition"] = {"forward": dec.forward_part, "backward": dec.backward_part,
                                "symmetric": dec.symmetric_check, "max_gap": dec.max_gap}
    return results, checks


def _run_finite_inequalities(params, out, header):
    reports = finite_battery(S=int(params.get("S", 1024)))
    write_csv(out / "inequalities.csv",
              {"name": [r.name for r in reports],
               "lhs": [r.lhs for r in reports],
               "rhs": [r.rhs for r in reports],
               "margin": [r.margin for r in reports],
               "pass": [r.passed for r in reports],
               "status": [r.status for r in reports]},
              header)
    with open(out / "inequalities.jsonl", "w", newline="\n") as fh:
        for r in reports:
            fh.write(json.dumps({"name": r.name, "lhs": r.lhs, "rhs": r.rhs,
                                 "margin": r.margin, "status": r.status,
                                 "params": r.params, "discretization": r.discretization},
                                sort_keys=True, default=float) + "\n")
    checks = [{"name": r.name, "pass": r.passed, "value": r.margin} for r in reports]
    results = {"n_checks": len(reports), "n_failed": sum(not r.passed for r in reports)}
    return results, checks


def _run_grid_flow(params, out, header):
    n = params.get("N", 128)
    kind_name = params["kind"]
    mu0 = measure.von_mises_bump(params.get("center", 0.5),
                                 params.get("concentration", 4.0), n)
    if kind_name == "heat":
        kind = measure.HeatFlowKind()
    elif kind_name == "fokker-planck":
        amp = float(params.get("v_amplitude", 1.0))
        kind = measure.FokkerPlanckKind(lambda x: amp * np.cos(2 * np.pi * x))
    else:
        kind = measure.PorousMediaKind(float(params["exponent"]))
    res = measure.grid_flow(kind, mu0, float(params["t_end"]), float(params["dt"]),
                            max_snapshots=int(params.get("max_snapshots", 50)))
    res.lyapunov.to_csv(out / "lyapunov.csv", header)
    for idx, (snap, t) in enumerate(zip(res.snapshots, res.snapshot_times)):
        snap.to_csv(out / "snapshots" / f"snap_{idx:04d}.csv",
                    list(header) + [f"t={t!r}"])
    res.snapshots[-1].to_csv(out / "final_density.csv", header)
    checks = [{"name": "free-energy-nonincreasing", "pass": res.lyapunov.monotone,
               "value": res.lyapunov.max_increase}]
    results = {"final_free_energy": float(res.lyapunov.values[-1]),
               "positivity_clamped": res.lyapunov.positivity_clamped}
    return results, checks


def _run_grid_bridge(params, out, header, overrides=None):
    overrides = overrides or {}
    n = params.get("N", 128)
    mu = _build_measure(params["mu"], n)
    nu = _build_measure(params["nu"], n)
    eps = float(params["eps"])
    S = int(params.get("S", 200))
    pots = bridge.sinkhorn(mu, nu, eps)
    bundle = bridge.entropic_cost(mu, nu, eps, S=S, pots=pots)
    it = bridge.entropic_interpolation(pots, mu, nu, S)
    it.to_csv(out / "interpolation.csv", header)
    write_json(out / "cost_bundle.json", bundle.summary(), header)
    res = bridge.newton_residual(it)
    dual = bridge.kantorovich_dual(pots, mu, nu, bundle.a_ent)
    suite = bridge.convexity_suite(it)
    drift = bridge.conserved_quantity(it)
    scale = max(abs(bundle.a_ent), 1e-12)
    route_tol = overrides.get("route_gap_rel", 0.01)
    checks = [
        {"name": "marginal-fidelity", "pass": bundle.marginal_error <= 1e-10,
         "value": bundle.marginal_error},
        {"name": "route-agreement", "pass": bundle.route_gap <= route_tol * scale,
         "value": bundle.route_gap / scale},
        {"name": "dual-identity", "pass": dual.identity_gap <= 1e-8,
         "value": dual.identity_gap},
        {"name": "dual-supremum", "pass": dual.is_supremum, "value": 0.0},
        {"name": "conserved-quantity-drift",
         "pass": float(drift.max() - drift.min()) <= max(1e-8, 50.0 / S ** 2 + 50.0 / n ** 2),
         "value": float(drift.max() - drift.min())},
    ]
    checks += [{"name": r.name, "pass": r.margin >= -1e-6, "value": r.margin}
               for r in suite]
    results = {"bundle": bundle.summary(), "newton_residual_max": res.max_residual}
    return results, checks


def _run_grid_contraction(params, out, header):
    n = params.get("N", 128)
    mu = _build_measure(params["mu"], n)
    nu = _build_measure(params["nu"], n)
    eps_list = params.get("eps_list", [0.05, 0.1, 0.2])
    t_list = params.get("t_list", [0.02, 0.05, 0.1])
    quad = int(params.get("quad_steps", 100))
    reports = [bridge.contraction_check(mu, nu, e, t, quad_steps=quad)
               for e in eps_list for t in t_list]
    write_csv(out / "contraction.csv",
              {"eps": [r.params["eps"] for r in reports],
               "t": [r.params["t"] for r in reports],
               "lhs": [r.lhs for r in reports],
               "rhs": [r.rhs for r in reports],
               "margin": [r.margin for r in reports],
               "correction": [r.params["correction"] for r in reports]},
              header)
    checks = [{"name": f"contraction[eps={r.params['eps']},t={r.params['t']}]",
               "pass": r.margin >= -1e-8, "value": r.margin} for r in reports]
    ent_gap = abs(reports[0].params["ent_gap0"])
    if ent_gap > 1e-12:
        checks.append({"name": "dimensional-correction-positive",
                       "pass": all(r.params["correction"] > 0 for r in reports),
                       "value": min(r.params["correction"] for r in reports)})
    results = {"n_cases": len(reports),
               "min_margin": min(r.margin for r in reports)}
    return results, checks


def _run_epsilon_sweep(params, out, header):
    n = params.get("N", 256)
    mu = _build_measure(params["mu"], n)
    nu = _build_measure(params["nu"], n)
    table = bridge.epsilon_sweep(mu, nu, params["eps_list"])
    table.to_csv(out / "sweep.csv", header)
    checks = [{"name": "gap-decreasing", "pass": table.gap_decreasing,
               "value": float(table.gaps[-1])}]
    results = {"w2": table.w2, "rows": [r.__dict__ for r in table.rows]}
    return results, checks


_HANDLERS = {
    "finite-flow": _run_finite_flow,
    "finite-interp": _run_finite_interp,
    "finite-inequalities": _run_finite_inequalities,
    "grid-flow": _run_grid_flow,
    "grid-bridge": _run_grid_bridge,
    "grid-contraction": _run_grid_contraction,
    "epsilon-sweep": _run_epsilon_sweep,
}


# ---------------------------------------------------------------------------
# The documented finite-dimensional inequality battery.
# ---------------------------------------------------------------------------


def finite_battery(S: int = 1024):
    """Every point-space inequality on its documented parameter grid."""
    from .potential import LogCos, NegLog, Quadratic

    quad = Quadratic(1.0)
    neglog = NegLog(1.0)
    logcos = LogCos(1.0, 1.0)
    reports = []

    for (x, y) in [(1.0, 2.0), (-1.0, 0.5)]:
        for eps in (0.1, 0.5, 1.0):
            for t in (0.1, 0.5, 1.0):
                chk = ineq.check_contraction(quad, 1.0, math.inf, x, y, eps, t, S=S)
                reports.extend(chk.reports)
    chk = ineq.check_contraction(neglog, 0.0, 1.0, 0.5, 2.0, 0.3, 0.5, S=S)
    reports.extend(chk.reports)

    for eps in (0.5, 1.0):
        res = interp.minimize_direct(quad, -1.0, 1.0, eps, S)
        reports.append(ineq.check_conforti(quad, 1.0, res))
    res = interp.minimize_direct(quad, 0.2, 1.5, 0.5, S)
    reports.append(ineq.check_conforti(quad, 0.0, res))

    for x in (1.0, 2.0):
        for eps in (0.5, 1.0):
            reports.append(ineq.check_talagrand(quad, 1.0, 0.0, x, eps, S=S))

    for eps in (0.3, 1.0):
        res = interp.minimize_direct(neglog, 0.5, 2.0, eps, S)
        reports.append(ineq.check_costa(neglog, 1.0, res))
    res = interp.minimize_direct(neglog, 0.5, 2.0, 0.0, S)
    reports.append(ineq.check_costa(neglog, 1.0, res))
    res = interp.minimize_direct(logcos, -0.5, 0.7, 0.5, S)
    reports.append(ineq.check_costa(logcos, 1.0, res))

    for (x, y) in [(2.0, 0.0), (1.0, -1.0), (0.5, -1.5)]:
        for eps in (0.1, 0.5, 1.0):
            reports.append(ineq.check_evi(quad, x, y, eps, rho=1.0, S=2 * S))
    reports.append(ineq.check_evi(quad, 2.0, 0.0, 0.5, rho=0.5, S=2 * S))
    reports.append(ineq.check_evi(neglog, 0.5, 2.0, 0.3, n_param=1.0, S=2 * S))
    reports.append(ineq.check_evi(neglog, 1.0, 1.5, 0.5, n_param=1.0, S=2 * S))
    return reports


# ---------------------------------------------------------------------------
# Experiment execution and the suite runner.
# ---------------------------------------------------------------------------


def run(config: dict, out_dir=None, overrides=None) -> dict:
    """Validate, execute and persist one experiment; returns the report dict."""
    cfg = validate_config(config)
    out = Path(out_dir or cfg.get("output_dir") or ".")
    out.mkdir(parents=True, exist_ok=True)
    header = provenance_lines(cfg["command"], cfg["params"])
    handler = _HANDLERS[cfg["command"]]
    t0 = time.time()
    if cfg["command"] == "grid-bridge":
        results, checks = handler(cfg["params"], out, header, overrides)
    else:
        results, checks = handler(cfg["params"], out, header)
    elapsed = time.time() - t0
    status = "pass" if all(c["pass"] for c in checks) else "check-failed"
    report = {"config": cfg, "results": results, "checks": checks, "status": status}
    write_json(out / "report.json", report, header)
    print(f"[ottolab] {cfg['command']}: {status} ({elapsed:.2f}s)", file=sys.stderr)
    return report


def _suite_configs(preset: str):
    finite = [
        {"format_version": 1, "command": "finite-interp", "seed": 0,
         "params": {"potential": {"kind": "quadratic", "dim": 1, "params": {"scale": 1.0}},
                    "x": 1.0, "y": 1.0, "eps": 1.0, "S": 512, "method": "both"}},
        {"format_version": 1, "command": "finite-flow", "seed": 0,
         "params": {"potential": {"kind": "quadratic", "dim": 1, "params": {"scale": 1.0}},
                    "x0": 1.0, "t_end": 1.0, "dt": 0.001}},
        {"format_version": 1, "command": "finite-inequalities", "seed": 0,
         "params": {"S": 1024}},
    ]
    bump = lambda c, k: {"kind": "bump", "center": c, "concentration": k}
    bridge_cfgs = [
        {"format_version": 1, "command": "grid-bridge", "seed": 0,
         "params": {"mu": bump(0.35, 10.0), "nu": bump(0.65, 10.0),
                    "eps": 0.1, "N": 128, "S": 200}},
        {"format_version": 1, "command": "grid-contraction", "seed": 0,
         "params": {"mu": bump(0.35, 10.0), "nu": bump(0.65, 4.0), "N": 128,
                    "eps_list": [0.05, 0.1, 0.2], "t_list": [0.02, 0.05, 0.1]}},
        {"format_version": 1, "command": "epsilon-sweep", "seed": 0,
         "params": {"mu": bump(0.35, 10.0), "nu": bump(0.65, 10.0), "N": 256,
                    "eps_list": [0.5, 0.2, 0.1, 0.05]}},
        {"format_version": 1, "command": "grid-flow", "seed": 0,
         "params": {"kind": "fokker-planck", "N": 64, "t_end": 3.0, "dt": 9e-5,
                    "v_amplitude": 1.0}},
    ]
    if preset == "paper-finite":
        return finite
    if preset == "paper-bridge":
        return bridge_cfgs
    return finite + bridge_cfgs


def suite(preset: str, out_dir, overrides=None) -> dict:
    """Run a preset battery; independent experiments may run in parallel."""
    if preset not in SUITE_PRESETS:
        raise ConfigInvalid(f"unknown preset {preset!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    configs = _suite_configs(preset)
    threads = max(1, int(os.environ.get("OTTOLAB_THREADS", "1")))
    jobs = [(i, cfg) for i, cfg in enumerate(configs, start=1)]

    def one(arg):
        i, cfg = arg
        sub = out / f"{i:02d}-{cfg['command']}"
        return run(cfg, out_dir=sub, overrides=overrides)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(one, jobs))
    else:
        reports = [one(j) for j in jobs]
    status = "pass" if all(r["status"] == "pass" for r in reports) else "check-failed"
    summary = {"preset": preset, "status": status,
               "experiments": [{"command": r["config"]["command"], "status": r["status"]}
                               for r in reports]}
    write_json(out / "suite.json", summary, provenance_lines("suite", {"preset": preset}))
    for r in reports:
        for c in r["checks"]:
            tag = "PASS" if c["pass"] else "FAIL"
            print(f"[suite] {tag} {r['config']['command']}::{c['name']}")
    return summary


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ottolab",
                                     description="numerical experiments runner")
    parser.add_argument("--version", action="version", version=f"ottolab {__version__}")
    sub = parser.add_subparsers(dest="mode")
    p_run = sub.add_parser("run", help="run one experiment from a JSON config")
    p_run.add_argument("config", type=Path)
    p_run.add_argument("--out", type=Path, default=None)
    p_suite = sub.add_parser("suite", help="run a preset experiment battery")
    p_suite.add_argument("preset", choices=SUITE_PRESETS)
    p_suite.add_argument("--out", type=Path, default=None)
    args = parser.parse_args(argv)
    if args.mode is None:
        parser.print_help()
        return 1
    try:
        if args.mode == "run":
            with open(args.config) as fh:
                cfg = json.load(fh)
            report = run(cfg, out_dir=args.out)
            return 0 if report["status"] == "pass" else 2
        summary = suite(args.preset, out_dir=args.out or Path("."))
        return 0 if summary["status"] == "pass" else 2
    except ConfigInvalid as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OttolabError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
