"""Dynamics of uniform all-to-all spin-1/2 models in and beyond the
totally symmetric sector: symmetric-operator algebra, Lanczos/Krylov
growth, operator-size OTOCs, classical phase-space Monte Carlo, exact
state-vector entanglement quenches, and one-loop replica-determinant
Renyi-entropy predictions.
"""

from .symops import (
    BasisMap,
    ModelSpec,
    SymOpVec,
    build_basis,
    euler_top,
    lmg,
)

__all__ = [
    "BasisMap",
    "ModelSpec",
    "SymOpVec",
    "build_basis",
    "euler_top",
    "lmg",
]

__version__ = "0.1.0"
