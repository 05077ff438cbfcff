"""Numerical laboratory for finite-dimensional Hilbertian operator space
structures: matrix-level norms, truncated Fock space models, factorization
certificates, row/column subspace geometry, and strip quadrature."""

__version__ = "0.1.0"

from . import linalg, spaces, fock, certificates, subspaces, strip, reports

__all__ = [
    "linalg",
    "spaces",
    "fock",
    "certificates",
    "subspaces",
    "strip",
    "reports",
]
