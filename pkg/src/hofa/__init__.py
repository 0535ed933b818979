"""Higher-order factor analysis: cumulant tensors, parametrization, dimension and codimension."""

from .cumulants import TensorSequence, cumulants_to_moments, moments_to_cumulants
from .exceptions import CapacityError, ConstructionError, DomainError, NumericError
from .famodel import FactorParams, ModelSpec, dims, phi
from .simulate import CumulantEstimator
from .symtensor import DiagTensor, LoadingMatrix, SymTensor

__version__ = "0.1.0"

__all__ = [
    "SymTensor",
    "DiagTensor",
    "LoadingMatrix",
    "TensorSequence",
    "moments_to_cumulants",
    "cumulants_to_moments",
    "ModelSpec",
    "FactorParams",
    "phi",
    "dims",
    "CumulantEstimator",
    "DomainError",
    "CapacityError",
    "NumericError",
    "ConstructionError",
]
