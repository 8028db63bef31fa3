"""
A scaled-down strategy benchmark
================================

Run the four start-placement strategies (SR, MR, SO, MO) on a few small
maps and print the aggregate table. The full-size protocol lives in the
`bench` CLI subcommand and the acceptance tests; this is the same
machinery at a size that finishes in well under a minute.
"""

from ergsearch import (
    AgentSpec,
    ExperimentConfig,
    INTEGRATOR,
    OptimizerConfig,
    high_fidelity_sensor,
    run_benchmark,
)

agent = AgentSpec(type_id=0, motion=INTEGRATOR, sensor=high_fidelity_sensor(),
                  u_max=0.25, dt=0.1, horizon_steps=60)

config = ExperimentConfig(
    agents=(agent,) * 3,
    map_count=3,
    map_resolution=32,
    trials=2,
    max_index=6,
    optimizer=OptimizerConfig(max_iters=80, restarts=3),
    master_seed=0,
    render=False,
)

result = run_benchmark(config)

# One row per (map, trial, strategy); draws are paired per (map, trial)
# so strategies face identical random conditions.
print(f"{len(result.records)} trial records "
      f"({config.map_count} maps x {config.trials} trials x 4 strategies)")

print(f"\n{'strategy':<10}{'mean metric':<14}{'std':<12}{'vs SR'}")
for strategy, mean, std, imp in result.aggregates:
    print(f"{strategy:<10}{mean:<14.5f}{std:<12.5f}{imp:+.1f}%")

best = min(result.records, key=lambda r: r.team_phi)
print(f"\nbest single trial: {best.strategy} on map {best.map_index} "
      f"(metric {best.team_phi:.5f}, {best.iterations} iterations)")
print("per-agent optimized starts (MO) combine informed placement with "
      "spreading and should lead; at this toy scale the middle of the "
      "field (MR vs SO) is noisy.")
