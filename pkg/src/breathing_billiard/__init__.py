"""Breathing circle billiard toolkit.

Exact inter-bounce flights, the generating-function twist map of bounce
times, Aubry-Mather minimal orbits, and converse-KAM certificates that
invariant curves are destroyed, with Lyapunov evidence of the resulting
chaotic motion.
"""

from ._version import VERSION as __version__
from .bmap import CylinderState, MapJacobian
from .errors import BilliardError, ConvergenceError, DomainError, PreconditionError
from .flight import FlightSegment
from .genfun import GenFunContext, make_context
from .radius import ClassVerdict, ProfileBounds, RadiusProfile

__all__ = [
    "BilliardError",
    "ClassVerdict",
    "ConvergenceError",
    "CylinderState",
    "DomainError",
    "FlightSegment",
    "GenFunContext",
    "MapJacobian",
    "PreconditionError",
    "ProfileBounds",
    "RadiusProfile",
    "make_context",
]
