"""Command-line front end.

Subcommands: gen-maps, plan, bench, check-grad. Exit codes: 0 on
success, 1 for configuration problems (bad arguments, unreadable or
malformed inputs), 2 for runtime failures.
"""

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from .agents import AgentSpec, SensorModel, save_trajectories
from .bench import config_from_json, run_benchmark
from .errors import ConfigError, ErgSearchError, MapFormatError
from .maps import (
    generate_gmm_map,
    load_map,
    load_regions,
    random_gmm_spec,
    random_start_regions,
    save_map,
    save_regions,
)
from .optimizer import MODES, ProblemSpec, gradient_check, plan
from .render import render_svg
from .seeding import rng_for, seed_for
from .spectral import make_basis

INTEGRATOR_TOL = 1e-5
DIFFDRIVE_TOL = 1e-3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ergsearch",
        description="Multi-agent ergodic search planning and benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-maps", help="write random map and region files")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--resolution", type=int, default=64)
    p.add_argument("--domain", type=float, nargs=2, default=(1.0, 1.0))
    p.add_argument(
        "--types", type=int, nargs="+", default=(0,), help="agent type ids"
    )

    p = sub.add_parser("plan", help="plan trajectories for one map")
    p.add_argument("--map", required=True)
    p.add_argument("--regions", required=True)
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--mode", choices=MODES, default="per-agent")
    p.add_argument("--out", required=True)

    p = sub.add_parser("bench", help="run the strategy benchmark")
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--out", required=True)

    p = sub.add_parser("check-grad", help="finite-difference gradient audit")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=int, default=10)
    p.add_argument(
        "--motion", choices=("integrator", "diffdrive", "both"), default="both"
    )
    return parser


def _cmd_gen_maps(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    dl = np.asarray(args.domain, dtype=float)
    for i in range(args.count):
        spec = random_gmm_spec(seed_for(args.seed, "map", i), dl)
        grid = generate_gmm_map(spec, args.resolution, args.resolution, dl)
        save_map(grid, os.path.join(args.out, f"map{i:02d}.ergmap"))
        regions = random_start_regions(
            rng_for(args.seed, "regions", i), dl, tuple(args.types)
        )
        save_regions(regions, os.path.join(args.out, f"map{i:02d}.ergstart"))
    print(f"wrote {args.count} map/region pairs to {args.out}")
    return 0


def _load_input(loader, path, *extra):
    try:
        return loader(path, *extra)
    except OSError as exc:
        raise ConfigError(f"cannot read input {path}: {exc}") from exc


def _cmd_plan(args) -> int:
    grid = _load_input(load_map, args.map)
    regions = _load_input(load_regions, args.regions, grid.domain_lengths)
    config = config_from_json(args.config)
    with open(args.config, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    fixed = raw.get("fixed_starts")
    if args.mode == "fixed" and fixed is None:
        raise ConfigError("fixed mode needs 'fixed_starts' in the config")

    basis = make_basis(grid.domain_lengths, config.max_index)
    problem = ProblemSpec(
        grid_map=grid,
        basis=basis,
        agents=config.agents,
        regions=regions,
        mode=args.mode,
        fixed_starts=(
            tuple(np.asarray(p, dtype=float) for p in fixed)
            if args.mode == "fixed"
            else None
        ),
    )
    solution = plan(problem, replace(config.optimizer, seed=config.master_seed))

    os.makedirs(args.out, exist_ok=True)
    save_trajectories(
        os.path.join(args.out, "trajectories.ergtraj"),
        solution.trajectories,
        config.agents,
    )
    render_svg(
        grid,
        regions,
        solution,
        os.path.join(args.out, "plan.svg"),
        agent_type_ids=[a.type_id for a in config.agents],
    )
    summary = {
        "mode": args.mode,
        "metric": solution.metric,
        "per_type_metric": {str(k): v for k, v in solution.per_type_metric.items()},
        "iterations": solution.iterations,
        "restart_index": solution.restart_index,
        "clamped_agents": sum(solution.clamp_flags),
        "starts": [list(map(float, s)) for s in solution.starts],
    }
    with open(os.path.join(args.out, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(
        f"mode={args.mode} metric={solution.metric:.6g} "
        f"iterations={solution.iterations} out={args.out}"
    )
    return 0


def _cmd_bench(args) -> int:
    config = config_from_json(args.config)
    result = run_benchmark(config, out_dir=args.out)
    print("strategy  mean_phi      std_phi       improvement_vs_SR")
    for s, mean, std, imp in result.aggregates:
        print(f"{s:<9} {mean:<13.6g} {std:<13.6g} {imp:.2f}%")
    infeasible = sum(1 for r in result.records if not r.feasible)
    if infeasible:
        print(f"{infeasible} infeasible trials recorded")
    return 0


def _check_grad_problem(seed: int, instance: int, motion: str) -> ProblemSpec:
    dl = np.array([1.0, 1.0])
    spec = random_gmm_spec(seed_for(seed, "cg-map", instance), dl)
    grid = generate_gmm_map(spec, 48, 48, dl)
    regions = random_start_regions(rng_for(seed, "cg-regions", instance), dl)
    if motion == "integrator":
        agent = AgentSpec(
            type_id=0,
            motion="integrator",
            sensor=SensorModel(sigma=0.05, peak_prob=0.9),
            u_max=0.2,
            dt=0.1,
            horizon_steps=12,
        )
    else:
        agent = AgentSpec(
            type_id=0,
            motion="diffdrive",
            sensor=SensorModel(sigma=0.05, peak_prob=0.9),
            u_max=0.2,
            dt=0.1,
            horizon_steps=12,
            kappa_max=6.0,
            v_min=0.02,
        )
    basis = make_basis(dl, 10)
    return ProblemSpec(
        grid_map=grid, basis=basis, agents=(agent,), regions=regions
    )


def _cmd_check_grad(args) -> int:
    motions = (
        ("integrator", "diffdrive") if args.motion == "both" else (args.motion,)
    )
    worst = {m: 0.0 for m in motions}
    for i in range(args.instances):
        motion = motions[i % len(motions)]
        problem = _check_grad_problem(args.seed, i, motion)
        report = gradient_check(problem, seed_for(args.seed, "cg", i))
        worst[motion] = max(worst[motion], report.max_rel_error)

    ok = True
    for motion in motions:
        tol = INTEGRATOR_TOL if motion == "integrator" else DIFFDRIVE_TOL
        status = "PASS" if worst[motion] <= tol else "FAIL"
        ok = ok and worst[motion] <= tol
        print(
            f"{motion}: max relative error {worst[motion]:.3e} "
            f"(tolerance {tol:.0e}) {status}"
        )
    return 0 if ok else 2


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage problems; that is a config error here
        return 0 if exc.code == 0 else 1

    handlers = {
        "gen-maps": _cmd_gen_maps,
        "plan": _cmd_plan,
        "bench": _cmd_bench,
        "check-grad": _cmd_check_grad,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, MapFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ErgSearchError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
