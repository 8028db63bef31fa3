"""Benchmark harness for the four start-placement strategies.

Strategies, per (map, trial):

* SR: one random start shared by every agent, then fixed.
* MR: one random start per agent, then fixed.
* SO: a single shared start jointly optimized with the controls.
* MO: per-agent starts jointly optimized with the controls.

All four reuse the same derived seeds for each (map, trial), so the
comparison is paired: the optimizer draws identical initial controls in
every strategy, and only the start handling differs. Improvement is
reported as the relative reduction of the mean final metric against SR:
100 * (mean_SR - mean_s) / mean_SR.
"""

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .agents import (
    DIFFDRIVE,
    INTEGRATOR,
    AgentSpec,
    SensorModel,
    high_fidelity_sensor,
    low_fidelity_sensor,
)
from .errors import ConfigError, DegenerateBandError, InfeasibleStartError
from .maps import (
    StartRegionSet,
    generate_gmm_map,
    load_map,
    load_regions,
    project_to_regions,
    random_gmm_spec,
    random_start_regions,
    sample_start,
)
from .optimizer import (
    FIXED_START,
    PER_AGENT_START,
    SHARED_START,
    OptimizerConfig,
    ProblemSpec,
    plan,
)
from .render import render_svg
from .seeding import rng_for, seed_for
from .spectral import make_basis

STRATEGIES = ("SR", "MR", "SO", "MO")

_SR_SAMPLE_ATTEMPTS = 8

DEFAULT_U_MAX = 0.25
DEFAULT_DT = 0.1
DEFAULT_HORIZON_STEPS = 100


def default_homogeneous_team(count: int = 4) -> tuple:
    """The reference synthetic team: identical first-order integrators."""
    spec = AgentSpec(
        type_id=0,
        motion=INTEGRATOR,
        sensor=high_fidelity_sensor(),
        u_max=DEFAULT_U_MAX,
        dt=DEFAULT_DT,
        horizon_steps=DEFAULT_HORIZON_STEPS,
    )
    return tuple(spec for _ in range(count))


def default_heterogeneous_team(per_type: int = 2) -> tuple:
    """The reference mixed team: wide/low-fidelity integrators plus
    narrow/high-fidelity curvature-limited drives.

    Speeds are deliberately low relative to the domain (reach of about
    one domain length per horizon) so that where a team deploys from
    matters; with generous reach every start looks alike and the
    start-placement strategies cannot be told apart.
    """
    wide = AgentSpec(
        type_id=0,
        motion=INTEGRATOR,
        sensor=low_fidelity_sensor(),
        u_max=0.10,
        dt=DEFAULT_DT,
        horizon_steps=DEFAULT_HORIZON_STEPS,
    )
    narrow = AgentSpec(
        type_id=1,
        motion=DIFFDRIVE,
        sensor=high_fidelity_sensor(),
        u_max=0.08,
        dt=DEFAULT_DT,
        horizon_steps=DEFAULT_HORIZON_STEPS,
        kappa_max=20.0,
        v_min=0.01,
    )
    return tuple([wide] * per_type + [narrow] * per_type)


@dataclass(frozen=True)
class ExperimentConfig:
    agents: tuple
    domain_lengths: tuple = (1.0, 1.0)
    map_count: int = 10
    map_resolution: int = 64
    map_files: tuple | None = None
    region_files: tuple | None = None
    trials: int = 5
    max_index: int = 10
    strategies: tuple = STRATEGIES
    optimizer: OptimizerConfig = OptimizerConfig()
    master_seed: int = 0
    workers: int = 1
    measure_walltime: bool = False
    render: bool = True

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "strategies", tuple(self.strategies))
        if not self.agents:
            raise ConfigError("team must contain at least one agent")
        if not self.strategies:
            raise ConfigError("need at least one strategy")
        for s in self.strategies:
            if s not in STRATEGIES:
                raise ConfigError(f"unknown strategy {s!r}, expected {STRATEGIES}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.map_files is None:
            if self.map_count < 1:
                raise ConfigError("map_count must be >= 1")
        else:
            object.__setattr__(self, "map_files", tuple(self.map_files))
            if self.region_files is None or len(self.region_files) != len(
                self.map_files
            ):
                raise ConfigError("need one region file per map file")
            object.__setattr__(self, "region_files", tuple(self.region_files))
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def type_ids(self):
        return sorted({a.type_id for a in self.agents})


@dataclass(frozen=True)
class TrialRecord:
    map_index: int
    trial: int
    strategy: str
    team_phi: float
    per_type_metric: dict
    iterations: int
    wall_ms: float
    feasible: bool
    sr_fallback: bool = False
    solution: object = None


@dataclass(frozen=True)
class BenchmarkResult:
    records: tuple
    strategies: tuple
    maps: tuple
    regions: tuple
    aggregates: tuple  # (strategy, mean_phi, std_phi, improvement_pct_vs_SR)


def _strategy_order(strategies):
    return tuple(s for s in STRATEGIES if s in strategies)


def _load_inputs(config: ExperimentConfig):
    dl = np.asarray(config.domain_lengths, dtype=float)
    maps = []
    regions = []
    if config.map_files is not None:
        for mf, rf in zip(config.map_files, config.region_files):
            maps.append(load_map(mf))
            regions.append(load_regions(rf, maps[-1].domain_lengths))
        return tuple(maps), tuple(regions)
    for i in range(config.map_count):
        spec = random_gmm_spec(seed_for(config.master_seed, "map", i), dl)
        maps.append(
            generate_gmm_map(spec, config.map_resolution, config.map_resolution, dl)
        )
        regions.append(
            random_start_regions(
                rng_for(config.master_seed, "regions", i), dl, config.type_ids
            )
        )
    return tuple(maps), tuple(regions)


def _sr_starts(config, regions: StartRegionSet, trial_seed):
    """One random start usable by all agents.

    Draw until the point lies in every type's viable set. When no draw
    qualifies, fall back to projecting the last draw into each type's
    set separately (recorded, so downstream stats can see it).
    """
    rng = rng_for(trial_seed, "sr-start")
    types = config.type_ids
    cand = None
    for _ in range(_SR_SAMPLE_ATTEMPTS):
        cand = sample_start(regions, types[0], rng)
        if all(regions.contains(cand, t) for t in types):
            return [cand.copy() for _ in config.agents], False
    starts = [project_to_regions(cand, regions, a.type_id) for a in config.agents]
    return starts, True


def _mr_starts(config, regions: StartRegionSet, trial_seed):
    rng = rng_for(trial_seed, "mr-start")
    return [sample_start(regions, a.type_id, rng) for a in config.agents]


def _run_task(args):
    """One (map, trial, strategy) cell; top level so workers can pickle it."""
    config, grid_map, regions, map_index, trial, strategy = args
    trial_seed = seed_for(config.master_seed, "trial", map_index, trial)
    basis = make_basis(grid_map.domain_lengths, config.max_index)
    opt = replace(config.optimizer, seed=trial_seed)

    sr_fallback = False
    try:
        if strategy in ("SR", "MR"):
            if strategy == "SR":
                starts, sr_fallback = _sr_starts(config, regions, trial_seed)
            else:
                starts = _mr_starts(config, regions, trial_seed)
            problem = ProblemSpec(
                grid_map=grid_map,
                basis=basis,
                agents=config.agents,
                regions=regions,
                mode=FIXED_START,
                fixed_starts=tuple(starts),
            )
        else:
            mode = SHARED_START if strategy == "SO" else PER_AGENT_START
            problem = ProblemSpec(
                grid_map=grid_map,
                basis=basis,
                agents=config.agents,
                regions=regions,
                mode=mode,
            )
        t0 = time.perf_counter()
        solution = plan(problem, opt)
        wall_ms = (
            (time.perf_counter() - t0) * 1000.0 if config.measure_walltime else 0.0
        )
        return TrialRecord(
            map_index=map_index,
            trial=trial,
            strategy=strategy,
            team_phi=solution.metric,
            per_type_metric=solution.per_type_metric,
            iterations=solution.iterations,
            wall_ms=wall_ms,
            feasible=True,
            sr_fallback=sr_fallback,
            solution=solution,
        )
    except (InfeasibleStartError, DegenerateBandError):
        return TrialRecord(
            map_index=map_index,
            trial=trial,
            strategy=strategy,
            team_phi=float("nan"),
            per_type_metric={},
            iterations=0,
            wall_ms=0.0,
            feasible=False,
            sr_fallback=sr_fallback,
        )


def compute_aggregates(records, strategies):
    """Per-strategy mean/std of the final metric over feasible trials,
    and relative improvement against SR (exactly 0 for SR itself)."""
    order = _strategy_order(strategies)
    means = {}
    stds = {}
    for s in order:
        phis = np.array(
            [r.team_phi for r in records if r.strategy == s and r.feasible]
        )
        means[s] = float(phis.mean()) if phis.size else float("nan")
        stds[s] = float(phis.std()) if phis.size else float("nan")
    rows = []
    for s in order:
        if s == "SR":
            imp = 0.0
        elif "SR" in means and np.isfinite(means.get("SR", float("nan"))):
            imp = 100.0 * (means["SR"] - means[s]) / means["SR"]
        else:
            imp = float("nan")
        rows.append((s, means[s], stds[s], imp))
    return tuple(rows)


def run_benchmark(config: ExperimentConfig, out_dir=None) -> BenchmarkResult:
    """Run every (map, trial, strategy) cell and aggregate.

    Tasks may run on several workers; records are sorted back into
    (map, trial, strategy) order before aggregation so the output is
    identical regardless of scheduling. When out_dir is given, CSV
    tables and SVG overlays are written there.
    """
    maps, regions = _load_inputs(config)
    order = _strategy_order(config.strategies)
    tasks = [
        (config, maps[m], regions[m], m, t, s)
        for m in range(len(maps))
        for t in range(config.trials)
        for s in order
    ]
    if config.workers == 1:
        records = [_run_task(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(_run_task, tasks))
    pos = {s: i for i, s in enumerate(order)}
    records.sort(key=lambda r: (r.map_index, r.trial, pos[r.strategy]))

    result = BenchmarkResult(
        records=tuple(records),
        strategies=order,
        maps=maps,
        regions=regions,
        aggregates=compute_aggregates(records, order),
    )
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        export_csv(result, os.path.join(out_dir, "results.csv"))
        if config.render:
            type_ids = [a.type_id for a in config.agents]
            for r in result.records:
                if r.trial == 0 and r.solution is not None:
                    render_svg(
                        maps[r.map_index],
                        regions[r.map_index],
                        r.solution,
                        os.path.join(
                            out_dir, f"map{r.map_index:02d}_{r.strategy}.svg"
                        ),
                        agent_type_ids=type_ids,
                    )
    return result


def aggregate_path(path) -> str:
    stem, ext = os.path.splitext(str(path))
    return f"{stem}_aggregate{ext or '.csv'}"


def export_csv(result: BenchmarkResult, path) -> None:
    """Write the per-trial table to ``path`` and the per-strategy
    aggregate table next to it (suffix ``_aggregate``).

    Floats are written with repr so rereading them is lossless and two
    identical runs produce identical bytes.
    """
    lines = ["map,trial,strategy,team_phi,iters,wall_ms,feasible"]
    for r in result.records:
        lines.append(
            f"{r.map_index},{r.trial},{r.strategy},{repr(float(r.team_phi))},"
            f"{r.iterations},{repr(float(r.wall_ms))},{int(r.feasible)}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")

    agg_lines = ["strategy,mean_phi,std_phi,improvement_pct_vs_SR"]
    for s, mean, std, imp in result.aggregates:
        agg_lines.append(
            f"{s},{repr(float(mean))},{repr(float(std))},{repr(float(imp))}"
        )
    with open(aggregate_path(path), "w", encoding="utf-8") as fh:
        fh.write("\n".join(agg_lines) + "\n")


# ---------------------------------------------------------------------------
# JSON configuration


def _sensor_from_json(obj) -> SensorModel:
    if obj is None:
        return SensorModel(sigma=0.05, peak_prob=0.9)
    try:
        return SensorModel(
            sigma=float(obj["sigma"]), peak_prob=float(obj["peak_prob"])
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad sensor entry: {exc}") from exc


def _agents_from_json(team) -> tuple:
    if not isinstance(team, list) or not team:
        raise ConfigError("'team' must be a nonempty list of type entries")
    agents = []
    for entry in team:
        try:
            count = int(entry.get("count", 1))
            spec = AgentSpec(
                type_id=int(entry["type_id"]),
                motion=str(entry.get("motion", INTEGRATOR)),
                sensor=_sensor_from_json(entry.get("sensor")),
                u_max=float(entry.get("u_max", DEFAULT_U_MAX)),
                dt=float(entry.get("dt", DEFAULT_DT)),
                horizon_steps=int(
                    entry.get("horizon_steps", DEFAULT_HORIZON_STEPS)
                ),
                kappa_max=(
                    float(entry["kappa_max"]) if "kappa_max" in entry else None
                ),
                v_min=float(entry.get("v_min", 0.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad team entry {entry!r}: {exc}") from exc
        agents.extend([spec] * count)
    return tuple(agents)


def _optimizer_from_json(obj) -> OptimizerConfig:
    if obj is None:
        return OptimizerConfig()
    allowed = {
        "max_iters",
        "step0",
        "backtrack",
        "armijo_c",
        "tol",
        "restarts",
        "init_control_scale",
        "max_backtracks",
    }
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown optimizer keys {sorted(unknown)}")
    try:
        return OptimizerConfig(**{k: obj[k] for k in obj})
    except TypeError as exc:
        raise ConfigError(f"bad optimizer config: {exc}") from exc


def config_from_json(path) -> ExperimentConfig:
    """Parse an experiment description; raises ConfigError with the
    offending path on any problem."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")

    maps_obj = data.get("maps", {})
    if not isinstance(maps_obj, dict):
        raise ConfigError("'maps' must be an object")
    try:
        config = ExperimentConfig(
            agents=_agents_from_json(data.get("team")),
            domain_lengths=tuple(data.get("domain", (1.0, 1.0))),
            map_count=int(maps_obj.get("count", 10)),
            map_resolution=int(maps_obj.get("resolution", 64)),
            map_files=maps_obj.get("files"),
            region_files=maps_obj.get("regions"),
            trials=int(data.get("trials", 5)),
            max_index=int(data.get("basis", {}).get("max_index", 10)),
            strategies=tuple(data.get("strategies", STRATEGIES)),
            optimizer=_optimizer_from_json(data.get("optimizer")),
            master_seed=int(data.get("master_seed", 0)),
            workers=int(data.get("workers", 1)),
            measure_walltime=bool(data.get("measure_walltime", False)),
            render=bool(data.get("render", True)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config {path}: {exc}") from exc
    return config
