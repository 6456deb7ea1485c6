from ._core import (
    ArgumentError,
    DomainError,
    GrnModel,
    NumericError,
    UnreachableError,
    alon_boppana,
    bang_bang_update,
    integrate,
    lambda2,
    molecular_distance,
    regulation,
    rhs,
    run_scenario,
    solve_equilibrium,
    solve_min_time,
    spectral_radius,
)

__all__ = [
    "ArgumentError",
    "DomainError",
    "GrnModel",
    "NumericError",
    "UnreachableError",
    "alon_boppana",
    "bang_bang_update",
    "integrate",
    "lambda2",
    "molecular_distance",
    "regulation",
    "rhs",
    "run_scenario",
    "solve_equilibrium",
    "solve_min_time",
    "spectral_radius",
]
