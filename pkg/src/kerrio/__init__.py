"""Perturbative output-field statistics of a driven Kerr cavity.

The diagrammatic engine (``contractions`` -> ``diagrams`` -> ``integrator``)
produces normal- and time-ordered output cumulants order by order in the
Kerr strength; ``observables`` turns them into reflection, coherence and
squeezing curves, and ``oracle`` supplies a truncated-Fock Lindblad
reference for cross-checks.
"""

from .errors import (AccuracyError, CapabilityError, ConfigError, ContractViolation, DivergenceError,
                     KerrioError, MultistabilityError, SchemaMismatchError, TruncationError,
                     UndefinedReflectionError)
from .model import LegKind, ModelParams, PropagatorKind, green, leg_amplitude, linear_output_mean
from .resum import Bare, LoopSummed, MeanField, SummationMode, dress, mean_field_steady_state
from .observables import (CumulantRequest, CumulantValue, SpectrumCurve, cumulant, g1, g2,
                          linear_frequency_cumulants, p_function_linear, reflection, squeezing_spectrum)
from .oracle import FockConfig, output_g1, output_g2, output_reflection, steady_state

__version__ = "0.1.0"

__all__ = [
    "AccuracyError", "CapabilityError", "ConfigError", "ContractViolation", "DivergenceError",
    "KerrioError", "MultistabilityError", "SchemaMismatchError", "TruncationError",
    "UndefinedReflectionError",
    "LegKind", "ModelParams", "PropagatorKind", "green", "leg_amplitude", "linear_output_mean",
    "Bare", "LoopSummed", "MeanField", "SummationMode", "dress", "mean_field_steady_state",
    "CumulantRequest", "CumulantValue", "SpectrumCurve", "cumulant", "g1", "g2",
    "linear_frequency_cumulants", "p_function_linear", "reflection", "squeezing_spectrum",
    "FockConfig", "output_g1", "output_g2", "output_reflection", "steady_state",
    "__version__",
]
