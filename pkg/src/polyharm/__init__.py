"""Polyharmonic and complex isoparametric functions on semidirect-product Lie groups."""

from .errors import (
    ArgumentError,
    CapabilityError,
    CatalogLookupError,
    DomainError,
    NumericalError,
    PolyharmError,
    SamplingError,
    ValidationError,
)

__version__ = "0.1.0"
