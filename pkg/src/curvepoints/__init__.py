"""Exact and parallel counting of rational points near planar curves."""

from ._numeric import ValidationError
from .curves import Curve, Interval, check_nondegenerate, make_builtin

__version__ = "0.1.0"

__all__ = ["Curve", "Interval", "ValidationError", "check_nondegenerate", "make_builtin",
           "__version__"]
