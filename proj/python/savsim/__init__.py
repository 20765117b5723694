"""Python bindings for the savsim C++ core.

The heavy lifting (network loading, the mesoscopic flow model, dispatch,
reports) lives in the compiled ``savsim._core`` module; this package just
re-exports it.
"""

from savsim._core import (
    SavsimError,
    block_balance,
    compare_runs,
    decompose_reduction,
    expand_daily_to_hourly,
    final_baseline_demand,
    fit_turnover,
    initial_distribution,
    repurposed_floor_space,
    run_scenario,
    slots_to_area_m2,
    spearman,
)

__all__ = [
    "SavsimError",
    "block_balance",
    "compare_runs",
    "decompose_reduction",
    "expand_daily_to_hourly",
    "final_baseline_demand",
    "fit_turnover",
    "initial_distribution",
    "repurposed_floor_space",
    "run_scenario",
    "slots_to_area_m2",
    "spearman",
]
