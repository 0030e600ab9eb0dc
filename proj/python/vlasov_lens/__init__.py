"""Lens-frame Vlasov-Poisson solver with a repulsive harmonic potential."""

from ._core import (
    ConfigError,
    DomainError,
    F_of_s,
    Grid,
    NumericalFailure,
    density,
    evolve,
    f_of_s,
    gaussian,
    lens_forward,
    lens_inverse,
    run,
    run_scattering,
    scattering_map,
    sigma_initial_norm,
    solve_field,
    wave_operator,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "F_of_s",
    "Grid",
    "NumericalFailure",
    "density",
    "evolve",
    "f_of_s",
    "gaussian",
    "lens_forward",
    "lens_inverse",
    "run",
    "run_scattering",
    "scattering_map",
    "sigma_initial_norm",
    "solve_field",
    "wave_operator",
]
