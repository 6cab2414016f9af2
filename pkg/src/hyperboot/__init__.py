"""Bootstrap percolation laboratory on binomial k-uniform random hypergraphs."""

from .analytics import (
    SUBCRITICAL,
    SUPERCRITICAL,
    BranchingSpec,
    CriticalEstimate,
    DeltaDiagnostics,
    ProgenyResult,
    RegimeClassification,
    Trajectory,
    branching_spec,
    empirical_critical_size,
    fixed_point_classify,
    increment_diagnostics,
    infection_multiplicity,
    simulate_total_progeny,
    trajectory_closed_form,
    trajectory_incremental,
)
from .lab import (
    ComparisonReport,
    DecayScan,
    ExperimentConfig,
    ExperimentResult,
    compare_to_analytics,
    failure_decay_scan,
    mix_seed,
    run_sweep,
    trial_seeds,
)
from .model import (
    EdgeBudgetError,
    Hypergraph,
    ModelParams,
    Threshold,
    critical_size,
    expected_edge_count,
    sample_hypergraph,
    sample_initial_set,
)
from .percolation import (
    InfectionState,
    PercolationOutcome,
    count_distinct_infected_neighbors,
    run_bootstrap,
    run_bootstrap_reference,
)

__version__ = "0.1.0"

__all__ = [
    "BranchingSpec",
    "ComparisonReport",
    "CriticalEstimate",
    "DecayScan",
    "DeltaDiagnostics",
    "EdgeBudgetError",
    "ExperimentConfig",
    "ExperimentResult",
    "Hypergraph",
    "InfectionState",
    "ModelParams",
    "PercolationOutcome",
    "ProgenyResult",
    "RegimeClassification",
    "SUBCRITICAL",
    "SUPERCRITICAL",
    "Threshold",
    "Trajectory",
    "branching_spec",
    "compare_to_analytics",
    "count_distinct_infected_neighbors",
    "critical_size",
    "empirical_critical_size",
    "expected_edge_count",
    "failure_decay_scan",
    "fixed_point_classify",
    "increment_diagnostics",
    "infection_multiplicity",
    "mix_seed",
    "run_bootstrap",
    "run_bootstrap_reference",
    "run_sweep",
    "sample_hypergraph",
    "sample_initial_set",
    "simulate_total_progeny",
    "trajectory_closed_form",
    "trajectory_incremental",
    "trial_seeds",
]
