"""Command-line front end.

Exit codes: 0 success, 2 configuration/usage error, 3 dynamics did not
converge, 4 a checked property was violated.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import statistics
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from mecgame import config as cfgmod
from mecgame import kernels
from mecgame.engine import is_nash, run_dynamics, summary_json, verify_exact_potential
from mecgame.overhead import InfeasibleStrategy, StrategyProfile
from mecgame.poa import (TooManyUsers, centralized_optimum, check_global_optimality,
                         interference_sweep, poa_report)
from mecgame.scenario import Network, ScenarioError, assign_channels, generate_scenario

log = logging.getLogger("mecgame")

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_VIOLATION = 0, 2, 3, 4


def _write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serialisable: {type(x)}")


def _csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(float(v)) if isinstance(v, (float, np.floating)) else v
                        for k, v in r.items()})
    return buf.getvalue()


def load_config(args) -> cfgmod.ExperimentConfig:
    cfg = cfgmod.load(args.config) if args.config else cfgmod.preset("reference")
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "schedule", None):
        cfg.engine.schedule = args.schedule
    if getattr(args, "max_rounds", None) is not None:
        cfg.engine.max_rounds = args.max_rounds
    if getattr(args, "out", None):
        cfg.output_dir = args.out
    cfgmod.validate(cfg)
    return cfg


def build_network(cfg: cfgmod.ExperimentConfig, seed: int) -> Network:
    scenario = generate_scenario(cfg.generator_config(), seed)
    return Network.build(scenario, assign_channels(scenario, cfg.channel_seed))


def _run(cfg: cfgmod.ExperimentConfig, net: Network):
    return run_dynamics(net, schedule=cfg.engine.schedule,
                        max_rounds=cfg.engine.max_rounds,
                        eps_power=cfg.engine.eps_power, cfg=cfg.power_search)


def cmd_run(args) -> int:
    cfg = load_config(args)
    out = Path(cfg.output_dir)
    net = build_network(cfg, cfg.seed)
    trace = _run(cfg, net)
    _write_atomic(out / "trace.csv", trace.to_csv())
    _write_atomic(out / "summary.json", summary_json(trace))
    s = trace.summary()
    print(f"converged={s['converged']} rounds={s['rounds']} "
          f"potential={s['final_potential']:.6g} offloaders={s['offloaders']}/{s['num_users']}")
    return EXIT_OK if trace.converged else EXIT_NONCONVERGED


def sweep_point(cfg: cfgmod.ExperimentConfig, axis: str, value, seed: int) -> dict:
    point = cfgmod.with_axis_value(cfg, axis, value)
    trace = _run(point, build_network(point, seed))
    s = trace.summary()
    return {"axis": axis, "value": value, "seed": seed,
            "final_potential": s["final_potential"], "offloaders": s["offloaders"],
            "rounds": s["rounds"], "converged": s["converged"]}


def _sweep_point_star(job):
    return sweep_point(*job)


def aggregate(rows: list[dict]) -> list[dict]:
    out = []
    for value in dict.fromkeys(r["value"] for r in rows):
        sel = [r for r in rows if r["value"] == value]
        out.append({
            "axis": sel[0]["axis"], "value": value, "seeds": len(sel),
            "median_potential": float(statistics.median(r["final_potential"] for r in sel)),
            "median_offloaders": float(statistics.median(r["offloaders"] for r in sel)),
            "median_rounds": float(statistics.median(r["rounds"] for r in sel)),
            "converged_fraction": sum(r["converged"] for r in sel) / len(sel),
        })
    return out


def run_sweep(cfg: cfgmod.ExperimentConfig, axis: str, values, seeds: int, jobs: int = 1):
    jobs_list = [(cfg, axis, v, cfg.seed + k) for v in values for k in range(seeds)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            rows = list(pool.map(_sweep_point_star, jobs_list))
    else:
        rows = [_sweep_point_star(j) for j in jobs_list]
    return rows, aggregate(rows)


def cmd_sweep(args) -> int:
    cfg = load_config(args)
    axis = args.axis or cfg.sweep.axis
    if axis not in cfgmod.SWEEP_AXES:
        print(f"error: unknown axis {axis!r}; choose from {sorted(cfgmod.SWEEP_AXES)}",
              file=sys.stderr)
        return EXIT_CONFIG
    _, _, cast = cfgmod.SWEEP_AXES[axis]
    values = [cast(v) for v in args.values] if args.values else list(cfg.sweep.values)
    seeds = args.seeds or cfg.sweep.seeds
    rows, agg = run_sweep(cfg, axis, values, seeds, args.jobs)
    out = Path(cfg.output_dir)
    _write_atomic(out / "sweep.csv", _csv_text(rows))
    _write_atomic(out / "sweep_summary.csv", _csv_text(agg))
    for a in agg:
        print(f"{axis}={a['value']}: median potential {a['median_potential']:.6g}, "
              f"median offloaders {a['median_offloaders']:g}, "
              f"median rounds {a['median_rounds']:g}")
    return EXIT_OK if all(r["converged"] for r in rows) else EXIT_NONCONVERGED


def cmd_poa(args) -> int:
    cfg = load_config(args)
    limit = cfg.poa.exhaustive_limit
    if cfg.generator.num_users > limit:
        print(f"error: {cfg.generator.num_users} users exceed the exhaustive limit "
              f"({limit}); lower generator.num_users", file=sys.stderr)
        return EXIT_CONFIG
    net = build_network(cfg, cfg.seed)
    trace = _run(cfg, net)
    report, opt = poa_report(net, trace.final, cfg.poa.power_grid_points, cfg.power_search)
    phi_opt = centralized_optimum(net, cfg.poa.power_grid_points, ne_hint=trace.final,
                                  max_users=limit, cfg=cfg.power_search)
    check = check_global_optimality(trace.final, phi_opt, net,
                                     power_grid_points=cfg.poa.power_grid_points,
                                     cfg=cfg.power_search)
    sweep = interference_sweep(net, cfg.poa.interference_multipliers,
                               cfg.poa.power_grid_points, cfg.engine.max_rounds,
                               cfg.engine.eps_power, cfg.power_search)
    out = Path(cfg.output_dir)
    payload = report.to_dict()
    payload.update(converged=trace.converged, optimality=check.to_dict(),
                   ne_profile=trace.final.to_dict(), opt_profile=opt.to_dict())
    _write_atomic(out / "poa.json", _dump_json(payload))
    _write_atomic(out / "poa_sweep.csv", _csv_text(sweep))
    print(f"PoA={report.poa:.6g} bound={report.bound_upper:.6g} "
          f"NE total={report.ne_total:.6g} optimum total={report.opt_total:.6g}")
    for note in check.notes:
        print(f"note: {note}")
    return EXIT_OK if trace.converged else EXIT_NONCONVERGED


def _load_profile(path: str) -> StrategyProfile:
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    return StrategyProfile(d["lam"], d["power"], d["freq"])


def cmd_validate(args) -> int:
    cfg = load_config(args)
    net = build_network(cfg, cfg.seed)
    results = {}
    pot = verify_exact_potential(net, args.trials, cfg.seed)
    results["exact_potential"] = {"pass": pot.ok, "max_residual": pot.max_residual,
                                  "trials": pot.trials, "violations": pot.violations[:10]}
    if args.profile:
        profile = _load_profile(args.profile)
        try:
            profile.check(net.scenario)
            results["feasibility"] = {"pass": True}
        except InfeasibleStrategy as exc:
            results["feasibility"] = {"pass": False, "error": str(exc)}
    else:
        trace = _run(cfg, net)
        profile = trace.final
        results["convergence"] = {"pass": trace.converged, "rounds": trace.rounds_to_converge}
        diffs = np.diff(trace.potentials)
        results["descent"] = {"pass": bool(np.all(diffs <= 1e-12)),
                              "max_increase": float(max(diffs.max(initial=0.0), 0.0))}
    if results.get("feasibility", {"pass": True})["pass"]:
        results["nash"] = {"pass": is_nash(net, profile, cfg.power_search, 1e-9)}
    ok = all(r["pass"] for r in results.values())
    results["seed"] = cfg.seed
    results["backend"] = kernels.BACKEND
    _write_atomic(Path(cfg.output_dir) / "validate.json", _dump_json(results))
    for name, r in results.items():
        if isinstance(r, dict):
            print(f"{name}: {'PASS' if r['pass'] else 'FAIL'}")
    if not ok:
        print(f"property violation; replay with --seed {cfg.seed}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_preset(args) -> int:
    sys.stdout.write(cfgmod.preset(args.name).to_yaml())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mecgame", description="Multi-user MEC offloading game simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", metavar="PATH",
                       help="YAML experiment config (default: the reference preset)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.add_argument("--schedule", choices=["sequential", "parallel"])
        p.add_argument("--max-rounds", type=int, dest="max_rounds")

    p = sub.add_parser("run", help="run best-response dynamics once")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="sweep one parameter over several seeds")
    common(p)
    p.add_argument("--axis", help=f"one of {', '.join(cfgmod.SWEEP_AXES)}")
    p.add_argument("--values", nargs="+", help="axis values")
    p.add_argument("--seeds", type=int, help="seeds per value")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("poa", help="price of anarchy against the exhaustive optimum")
    common(p)
    p.set_defaults(func=cmd_poa)

    p = sub.add_parser("validate", help="run the property checks")
    common(p)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--profile", metavar="JSON",
                   help="check this profile instead of a fresh equilibrium")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("preset", help="print a built-in config")
    p.add_argument("name", nargs="?", default="reference", choices=sorted(cfgmod.PRESETS))
    p.set_defaults(func=cmd_preset)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (cfgmod.ConfigError, ScenarioError, TooManyUsers) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
