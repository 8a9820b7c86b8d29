"""Multiple-quantum NMR coherence simulator for equivalent dipolar spins."""

from ._core import (
    ConfigError,
    NumericalError,
    __version__,
    averaged_a,
    decay_time_e,
    decay_time_envelope,
    fit_coth,
    fit_tanh,
    fourier_areas,
    intensities_a,
    intensities_b,
    oracle_a,
    oracle_b,
    run,
    second_order,
    sectors,
    series_b,
)

__all__ = [
    "ConfigError",
    "NumericalError",
    "__version__",
    "averaged_a",
    "decay_time_e",
    "decay_time_envelope",
    "fit_coth",
    "fit_tanh",
    "fourier_areas",
    "intensities_a",
    "intensities_b",
    "oracle_a",
    "oracle_b",
    "run",
    "second_order",
    "sectors",
    "series_b",
]
