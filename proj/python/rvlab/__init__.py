"""Python access to the rvlab simulation library and experiment runner."""

from ._core import (
    ConfigError,
    DegenerateSample,
    HeavyMoment,
    PreconditionError,
    RunError,
    ZeroMass,
    compare,
    energy_distance,
    hill,
    load_report,
    output_hashes,
    pareto_sample,
    rde_stationary,
    run,
    sample_pareto,
    validate_config,
)

__all__ = [
    "ConfigError",
    "DegenerateSample",
    "HeavyMoment",
    "PreconditionError",
    "RunError",
    "ZeroMass",
    "compare",
    "energy_distance",
    "hill",
    "load_report",
    "output_hashes",
    "pareto_sample",
    "rde_stationary",
    "run",
    "sample_pareto",
    "validate_config",
]
