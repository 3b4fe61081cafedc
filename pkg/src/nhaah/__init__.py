"""Two interacting bosons on a non-Hermitian quasiperiodic ring."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DegenerateInitialStateError,
    DegenerateRateError,
    DomainError,
    InvalidParameterError,
    NumericalConsistencyError,
    SingularBaseError,
    SolverError,
)
from .model import GOLDEN_ALPHA, FockBasis, ModelParams, build_basis, build_hamiltonian  # noqa: E402
from .spectral import SpectralDecomposition, eig, pt_diagnostics  # noqa: E402

__all__ = [
    "__version__",
    "DegenerateInitialStateError",
    "DegenerateRateError",
    "DomainError",
    "InvalidParameterError",
    "NumericalConsistencyError",
    "SingularBaseError",
    "SolverError",
    "GOLDEN_ALPHA",
    "FockBasis",
    "ModelParams",
    "build_basis",
    "build_hamiltonian",
    "SpectralDecomposition",
    "eig",
    "pt_diagnostics",
]
