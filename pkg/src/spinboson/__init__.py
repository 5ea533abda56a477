"""Spin coupled to an Ohmic bath and Markovian dephasing: exact stochastic
simulation, NIBA analytics and damped-oscillation fitting."""

from .model import (
    Channel,
    DerivedScales,
    ParameterError,
    SimulationParams,
    derived_scales,
    effective_frequency,
    exact_quality_factor,
    renormalized_frequency,
    validate,
)

__version__ = "0.1.0"
