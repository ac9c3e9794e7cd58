"""Spectral laboratory for damped wave and Schrödinger equations with
damping supported on positive-measure sets."""

__version__ = "0.1.0"

from .damping import DampingProfile, DampingSpec, build_damping, damping_bounds, damping_matrix
from .errors import (ConfigError, DecaylabError, EigensolverError, HypothesisError,
                     SpectrumOnAxisError, TrivialDampingError)
from .geometry import DiscreteOperator, DomainSpec, MetricSpec, assemble
from .spectral import SpectralBasis, SpectralCoefficients, eigendecompose, frequency_filter, sobolev_norm

__all__ = [
    "ConfigError", "DampingProfile", "DampingSpec", "DecaylabError", "DiscreteOperator", "DomainSpec",
    "EigensolverError", "HypothesisError", "MetricSpec", "SpectralBasis", "SpectralCoefficients",
    "SpectrumOnAxisError", "TrivialDampingError", "assemble", "build_damping", "damping_bounds",
    "damping_matrix", "eigendecompose", "frequency_filter", "sobolev_norm",
]
