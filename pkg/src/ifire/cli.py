"""Command-line front end.

    ifire simulate    --model m.json [--x0 0,0.1] --out DIR
    ifire map         --model m.json [--v0 0.1] --out DIR
    ifire regions     --model m.json [--kmax 50] --out DIR
    ifire fixedpoints --model m.json --out DIR
    ifire ensemble    [--model m.json] [--seed 42] [--runs 20] --out DIR
    ifire audit       --model m.json --x0 0,0.3 --out DIR
    ifire verify      [--only 1,2,3] --out DIR

Exit status: 0 success, 1 verification failure, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import acceptance
from .firing_map import MapError, analyze, map_for, sync_partition
from .flow import DEFAULT_CONFIG, IntegratorConfig, natural_period, tilde_period
from .io import (
    ConfigError,
    ModelConfig,
    dump_model_config,
    load_model_config,
    parse_model_config,
    write_cobweb_csv,
    write_json,
    write_log_csv,
    write_map_csv,
    write_regions_csv,
    write_snapshot_csv,
)
from .model import DomainError, ModelError, random_initial_state
from .simulation import (
    DEFAULT_SNAPSHOTS,
    SimulationError,
    audit_theorem,
    detect_clusters,
    detect_period,
    parallel_map,
    replicate_ensemble_experiment,
    run,
    sync_index,
    sync_time,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _override(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    key, value = text.split("=", 1)
    try:
        return key.strip(), json.loads(value)
    except json.JSONDecodeError:
        raise argparse.ArgumentTypeError(f"value of {key!r} is not a number or JSON list: {value!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", help="model JSON file")
    common.add_argument("--set", dest="overrides", action="append", type=_override, default=[],
                        metavar="KEY=VALUE", help="override a model parameter (repeatable)")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--rtol", type=float)
    common.add_argument("--atol", type=float)
    common.add_argument("--event-tol", type=float)
    common.add_argument("--dt-sim-window", type=float, help="simultaneity window for near-coincident firings")
    common.add_argument("--persistence", type=int, default=3)
    common.add_argument("--dump-model", metavar="PATH", help="write the effective model JSON and continue")

    p = argparse.ArgumentParser(prog="ifire", description="Pulse-coupled integrate-and-fire oscillators.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="event-driven simulation")
    s.add_argument("--x0", type=_floats, help="initial state; zeros mark oscillators firing at t0")
    s.add_argument("--max-firings", type=int, default=200)
    s.add_argument("--t-max", type=float)
    s.add_argument("--method", choices=("auto", "rk", "exact"), default="auto")
    s.add_argument("--window", type=int, default=2, help="cluster window in system firings")

    m = sub.add_parser("map", parents=[common], help="firing map, analysis and cobweb")
    m.add_argument("--v0", type=float, default=0.1, help="cobweb start")
    m.add_argument("--grid", type=int, default=1001)
    m.add_argument("--numeric", action="store_true", help="integrate instead of using a closed form")

    r = sub.add_parser("regions", parents=[common], help="synchronization regions S_k")
    r.add_argument("--kmax", type=int, help="list regions up to this index")
    r.add_argument("--numeric", action="store_true")

    f = sub.add_parser("fixedpoints", parents=[common], help="fixed point and 2-cycle")
    f.add_argument("--numeric", action="store_true")

    e = sub.add_parser("ensemble", parents=[common], help="random ensemble experiment")
    e.add_argument("--n", type=int, default=100)
    e.add_argument("--epsilon", type=float, default=0.08)
    e.add_argument("--runs", type=int, default=1, help="number of seeds, starting at --seed")
    e.add_argument("--snapshots", type=_ints, default=list(DEFAULT_SNAPSHOTS))
    e.add_argument("--max-firings", type=int, default=200)

    a = sub.add_parser("audit", parents=[common], help="compare a run with region and bound predictions")
    a.add_argument("--x0", type=_floats)
    a.add_argument("--kmax", type=int, default=500, help="maximum number of system firings")
    a.add_argument("--numeric", action="store_true")

    v = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    v.add_argument("--only", type=_ints, help="criterion numbers to run")
    return p


def _config(args, base: IntegratorConfig = DEFAULT_CONFIG) -> IntegratorConfig:
    changes = {k: val for k, val in (("rel_tol", args.rtol), ("abs_tol", args.atol),
                                     ("event_tol", args.event_tol),
                                     ("simultaneity_window", args.dt_sim_window)) if val is not None}
    try:
        return base.replace(**changes)
    except ValueError as exc:
        raise UsageError(f"integrator settings: {exc}") from exc


def _model_config(args, required: bool = True) -> ModelConfig | None:
    if not args.model:
        if required:
            raise UsageError("--model is required for this command")
        return None
    cfg = load_model_config(args.model)
    if args.overrides:
        params = dict(cfg.params)
        params.update(dict(args.overrides))
        cfg = parse_model_config(dict(cfg.to_dict(), params=params))
    if args.dump_model:
        dump_model_config(cfg, args.dump_model)
    return cfg


def _out(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc.strerror}") from exc
    return out


def _initial_state(args, mc: ModelConfig, n: int) -> np.ndarray:
    if args.x0 is not None:
        x0 = np.array(args.x0)
    elif mc.initial_state is not None:
        x0 = np.array(mc.initial_state)
    else:
        x0 = random_initial_state(n, args.seed)
    if x0.shape != (n,):
        raise UsageError(f"initial state has {x0.size} entries, model has n={n}")
    return x0


def cmd_simulate(args) -> int:
    mc = _model_config(args)
    model = mc.build()
    config = _config(args, mc.integrator_config())
    x0 = _initial_state(args, mc, model.n)
    log = run(model, x0, t_max=args.t_max, max_firings=args.max_firings, config=config, method=args.method)
    out = _out(args)
    write_log_csv(log, out / "log.csv", {"model_hash": mc.hash, "seed": args.seed, "x0": list(x0)})
    k = sync_index(log, args.persistence)
    period = detect_period(log) if k is None else None
    status = "synchronized" if k is not None else ("periodic" if period else "unsynchronized")
    history = [detect_clusters(log, args.window, upto=j + 1).count for j in range(len(log))]
    write_json({
        "model_hash": mc.hash, "events": len(log), "stop_reason": log.stop_reason,
        "sync_time": sync_time(log, args.persistence), "sync_event": None if k is None else k + 1,
        "status": status, "periodic": period is not None, "period": period,
        "cluster_history": history, "final_clusters": history[-1] if history else model.n,
    }, out / "summary.json")
    print(f"{len(log)} events, {status}" + (f" at t={log[k].t:.12g} (event {k + 1})" if k is not None else ""))
    return EXIT_OK


def _map_and_times(args, mc: ModelConfig):
    model = mc.build()
    config = _config(args, mc.integrator_config())
    L = map_for(model, "numeric" if args.numeric else "auto", config)
    T = natural_period(model.flow, config)
    return model, L, T, config


def cmd_map(args) -> int:
    mc = _model_config(args)
    model, L, T, config = _map_and_times(args, mc)
    out = _out(args)
    rep = analyze(L, grid=10_000 if L.provenance.startswith("closed") else 1000)
    data = rep.to_dict()
    data.update(provenance=L.provenance, epsilon=L.epsilon, T=T, model_hash=mc.hash,
                T_tilde=tilde_period(model.flow, rep.v_star, config))
    write_map_csv(L, out / "map.csv", args.grid)
    write_cobweb_csv(L, out / "cobweb.csv", args.v0)
    write_json(data, out / "analysis.json")
    print(f"A1={rep.A1} A2={rep.A2} A3={rep.A3} eta={rep.eta:.12g} v*={rep.v_star:.12g}")
    return EXIT_OK


def cmd_regions(args) -> int:
    mc = _model_config(args)
    _, L, _, _ = _map_and_times(args, mc)
    part = sync_partition(L)
    if args.kmax is not None:
        part = type(part)(tuple((k, iv) for k, iv in part.regions if k <= args.kmax), part.core)
    out = _out(args)
    write_regions_csv(part, out / "regions.csv")
    write_json({"regions": [{"k": k, "lo": iv.lo, "hi": iv.hi, "interval": str(iv)} for k, iv in part.regions],
                "core": str(part.core)}, out / "regions.json")
    print(f"{len(part.regions)} regions, non-synchronizing core {part.core}")
    return EXIT_OK


def cmd_fixedpoints(args) -> int:
    mc = _model_config(args)
    model, L, T, config = _map_and_times(args, mc)
    v_star = L.fixed_point
    data = {"v_star": v_star, "T": T, "T_tilde": tilde_period(model.flow, v_star, config), "eta": L.eta}
    try:
        p2 = L.period2
        data.update(v_star2=p2.v_star2, v_hat=p2.v_hat, degenerate=p2.degenerate, residual=p2.residual)
    except MapError as exc:
        data.update(v_star2=None, v_hat=None, degenerate=None, note=str(exc))
    write_json(data, _out(args) / "fixedpoints.json")
    print(json.dumps({k: data[k] for k in ("v_star", "v_star2", "v_hat")}))
    return EXIT_OK


def _ensemble_task(task):
    seed, n, eps, snaps, max_firings, persistence, config, model_cfg = task
    model = None if model_cfg is None else model_cfg.build()
    return replicate_ensemble_experiment(seed, n=n, epsilon=eps, snapshots=snaps, max_firings=max_firings,
                                         persistence=persistence, config=config, model=model)


def cmd_ensemble(args) -> int:
    mc = _model_config(args, required=False)
    config = _config(args) if mc is None else _config(args, mc.integrator_config())
    if args.runs < 1:
        raise UsageError("--runs must be positive")
    seeds = list(range(args.seed, args.seed + args.runs))
    tasks = [(s, args.n, args.epsilon, tuple(args.snapshots), args.max_firings, args.persistence, config, mc)
             for s in seeds]
    reports = parallel_map(_ensemble_task, tasks)
    out = _out(args)
    summary = []
    for rep in reports:
        d = out if len(reports) == 1 else out / f"seed_{rep.seed}"
        d.mkdir(exist_ok=True)
        for k, x in sorted(rep.snapshots.items()):
            write_snapshot_csv(x, d / f"snapshot_{k:03d}.csv")
        with open(d / "clusters.csv", "w") as fh:
            fh.write("snapshot,clusters\n")
            for k, c in sorted(rep.cluster_counts.items()):
                fh.write(f"{k},{c}\n")
        write_json(rep.to_dict(), d / "report.json")
        summary.append(rep.to_dict())
    if len(reports) > 1:
        write_json({"runs": summary,
                    "synchronized": sum(r.synchronized for r in reports)}, out / "report.json")
    for rep in reports:
        print(f"seed {rep.seed}: " + (f"synchronized at event {rep.sync_index + 1}" if rep.synchronized
                                      else "no synchrony") + f", clusters {rep.cluster_counts}")
    return EXIT_OK


def cmd_audit(args) -> int:
    mc = _model_config(args)
    model, L, T, config = _map_and_times(args, mc)
    x0 = _initial_state(args, mc, model.n)
    Tt = tilde_period(model.flow, L.fixed_point, config)
    rep = audit_theorem(model, x0, L, T, Tt, persistence=args.persistence, config=config,
                        max_firings=args.kmax)
    data = rep.to_dict()
    data.update(model_hash=mc.hash, T=T, T_tilde=Tt)
    write_json(data, _out(args) / "audit.json")
    print(f"regions {rep.regions}, window {rep.window}, sync time {rep.sync_time}, "
          f"in window {rep.in_window}, bound ok {rep.bound_ok} over {len(rep.steps)} steps")
    return EXIT_OK


def cmd_verify(args) -> int:
    config = _config(args)
    only = args.only
    if only is not None and not set(only) <= set(acceptance.CRITERIA):
        raise UsageError(f"unknown criterion in {only}; valid: 1-{len(acceptance.CRITERIA)}")
    results = acceptance.run_all(config, only)
    for r in results:
        print(r.line())
    write_json({"passed": all(r.passed for r in results), "criteria": [r.to_dict() for r in results]},
               _out(args) / "verify.json")
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


COMMANDS = {
    "simulate": cmd_simulate, "map": cmd_map, "regions": cmd_regions, "fixedpoints": cmd_fixedpoints,
    "ensemble": cmd_ensemble, "audit": cmd_audit, "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, ModelError, DomainError) as exc:
        print(f"ifire {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MapError, SimulationError) as exc:
        print(f"ifire {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
