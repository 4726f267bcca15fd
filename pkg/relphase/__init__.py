# import the core types up to make them easy to import for scripting
from .fock_core import DensityMatrix, FockVector, TwoModeState
from .priors import CircularPrior
from .relative_phase import FactorizationReport, factorization_fidelity

__all__ = [
    "CircularPrior",
    "DensityMatrix",
    "FactorizationReport",
    "FockVector",
    "TwoModeState",
    "factorization_fidelity",
]
