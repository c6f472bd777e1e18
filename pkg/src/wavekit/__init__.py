"""Two-dimensional steady water waves with vorticity: kernels, bifurcation data and continuation."""
from ._kernels import BACKEND
from .errors import (DivergenceError, DomainError, SingularJacobianError, SolvabilityError,
                     TransversalityError, VerificationError, WavekitError)
from .kernel import KernelSet, kernel_set, transversality_ok, transversality_value
from .trivial import TrivialFlow, TrivialParameters, make_trivial_flow

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "DivergenceError", "DomainError", "KernelSet", "SingularJacobianError", "SolvabilityError",
    "TransversalityError", "TrivialFlow", "TrivialParameters", "VerificationError", "WavekitError",
    "kernel_set", "make_trivial_flow", "transversality_ok", "transversality_value", "__version__",
]
