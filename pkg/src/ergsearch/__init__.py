"""Multi-agent ergodic search planning.

Plan trajectories whose time-average statistics match a spatial target
distribution, jointly optimizing where each agent starts (within viable
start regions) and how it moves. Includes spectral map tooling,
heterogeneous-team frequency-band allocation, a projected-gradient
planner, and a benchmark harness comparing start-placement strategies.
"""

from .agents import (
    DIFFDRIVE,
    INTEGRATOR,
    AgentSpec,
    ControlSequence,
    SensorModel,
    Trajectory,
    coverage_reconstruction,
    high_fidelity_sensor,
    low_fidelity_sensor,
    project_controls,
    rollout,
    rollout_vjp,
    save_trajectories,
)
from .allocation import BandPartition, band_masked, band_targets, partition_bands
from .bench import (
    STRATEGIES,
    BenchmarkResult,
    ExperimentConfig,
    TrialRecord,
    compute_aggregates,
    config_from_json,
    default_heterogeneous_team,
    default_homogeneous_team,
    export_csv,
    run_benchmark,
)
from .errors import (
    ConfigError,
    DegenerateBandError,
    DegenerateMapError,
    DomainError,
    ErgSearchError,
    InfeasibleStartError,
    MapFormatError,
    PreconditionError,
    UnknownAgentTypeError,
)
from .maps import (
    GmmSpec,
    GridMap,
    Rect,
    StartRegionSet,
    clip_nonnegative,
    generate_gmm_map,
    intersect_regions,
    load_map,
    load_regions,
    make_grid_map,
    mixture_density,
    normalize,
    project_to_regions,
    random_gmm_spec,
    random_start_regions,
    sample_start,
    save_map,
    save_regions,
)
from .optimizer import (
    FIXED_START,
    MODES,
    PER_AGENT_START,
    SHARED_START,
    GradientCheckReport,
    OptimizerConfig,
    ProblemSpec,
    Solution,
    evaluate,
    gradient_check,
    plan,
)
from .render import render_svg
from .seeding import rng_for, seed_for
from .spectral import (
    BasisSpec,
    basis_eval,
    basis_grad,
    basis_gradient_matrices,
    basis_matrix,
    ergodic_gradient_points,
    ergodic_metric,
    make_basis,
    map_coefficients,
    reconstruct_map,
    trajectory_coefficients,
)

__version__ = "0.1.0"

__all__ = [
    "AgentSpec",
    "BandPartition",
    "BasisSpec",
    "BenchmarkResult",
    "ConfigError",
    "ControlSequence",
    "DegenerateBandError",
    "DegenerateMapError",
    "DIFFDRIVE",
    "DomainError",
    "ErgSearchError",
    "ExperimentConfig",
    "FIXED_START",
    "GmmSpec",
    "GradientCheckReport",
    "GridMap",
    "InfeasibleStartError",
    "INTEGRATOR",
    "MapFormatError",
    "MODES",
    "OptimizerConfig",
    "PER_AGENT_START",
    "PreconditionError",
    "ProblemSpec",
    "Rect",
    "SensorModel",
    "SHARED_START",
    "Solution",
    "StartRegionSet",
    "STRATEGIES",
    "Trajectory",
    "TrialRecord",
    "UnknownAgentTypeError",
    "band_masked",
    "band_targets",
    "basis_eval",
    "basis_grad",
    "basis_gradient_matrices",
    "basis_matrix",
    "clip_nonnegative",
    "compute_aggregates",
    "config_from_json",
    "default_heterogeneous_team",
    "default_homogeneous_team",
    "coverage_reconstruction",
    "ergodic_gradient_points",
    "ergodic_metric",
    "evaluate",
    "export_csv",
    "generate_gmm_map",
    "gradient_check",
    "high_fidelity_sensor",
    "intersect_regions",
    "load_map",
    "load_regions",
    "low_fidelity_sensor",
    "make_basis",
    "make_grid_map",
    "map_coefficients",
    "mixture_density",
    "normalize",
    "partition_bands",
    "plan",
    "project_controls",
    "project_to_regions",
    "random_gmm_spec",
    "random_start_regions",
    "reconstruct_map",
    "render_svg",
    "rng_for",
    "rollout",
    "rollout_vjp",
    "run_benchmark",
    "sample_start",
    "save_map",
    "save_regions",
    "save_trajectories",
    "seed_for",
    "trajectory_coefficients",
]
