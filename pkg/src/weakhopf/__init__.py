"""Finite-dimensional multiplicative partial isometries and weak C*-Hopf algebras.

The package decides whether an operator ``V`` on ``H (x) H`` is a
multiplicative partial isometry, extracts the weak bialgebra / weak Hopf
algebra structure carried by its legs, and moves between ``V`` and the
pseudo-multiplicative unitary living on relative tensor products.
"""

__version__ = "0.1.0"

from .errors import WeakHopfError
from .tensor import Functional, OpSubspace, Tolerance
from .mpi import MpiCandidate, analyze, classify
from .builder import ExampleSpec, WhaPresentation, generate

__all__ = [
    "ExampleSpec",
    "Functional",
    "MpiCandidate",
    "OpSubspace",
    "Tolerance",
    "WeakHopfError",
    "WhaPresentation",
    "analyze",
    "classify",
    "generate",
]
