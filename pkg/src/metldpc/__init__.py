"""Weight distributions, growth rates and density evolution for multi-edge type LDPC ensembles."""

from .errors import (
    AssumptionError,
    ConvergenceError,
    DomainError,
    EnsembleError,
    InstantiationError,
    ResourceLimitError,
    SpecSyntaxError,
)
from .ensemble import (
    EnsembleSpec,
    InstantiatedCounts,
    from_standard,
    instantiate,
    load_spec,
    make_spec,
    parse_spec,
    regular,
)
from .polynomial import SparsePoly
from .spectrum import average_weight_distribution
from .growth import growth_curve, solve_stationary
from .smallweight import small_weight_report, spectral_radius
from .de import de_run, stability_check, threshold
from .oracle import oracle_spectrum

__version__ = "0.1.0"

__all__ = [
    "AssumptionError",
    "ConvergenceError",
    "DomainError",
    "EnsembleError",
    "EnsembleSpec",
    "InstantiatedCounts",
    "InstantiationError",
    "ResourceLimitError",
    "SparsePoly",
    "SpecSyntaxError",
    "average_weight_distribution",
    "de_run",
    "from_standard",
    "growth_curve",
    "instantiate",
    "load_spec",
    "make_spec",
    "oracle_spectrum",
    "parse_spec",
    "regular",
    "small_weight_report",
    "solve_stationary",
    "spectral_radius",
    "stability_check",
    "threshold",
]
