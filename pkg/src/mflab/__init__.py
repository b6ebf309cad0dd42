"""Matrix factorizations, truncated Ext/Tor and cluster-tilting checks over F_p."""

__version__ = "0.1.0"

from .field import DEFAULT_PRIME
from .mf import FactoredEquation, MatrixFactorization, knoerrer, s_ideal, syzygy, dual, validate_mf
from .poly import Poly, PolyMatrix, RingCtx

__all__ = [
    "__version__",
    "DEFAULT_PRIME",
    "FactoredEquation",
    "MatrixFactorization",
    "Poly",
    "PolyMatrix",
    "RingCtx",
    "dual",
    "knoerrer",
    "s_ideal",
    "syzygy",
    "validate_mf",
]
