"""Spectral tools for rotating two-dimensional drops with constant vorticity."""

from .dirichlet_neumann import DnMethod, SmallnessError, conjugate_trace, dn_apply, dn_oracle
from .functionals import NaturalState, PhysicalParams, WahlenState, conserved_set
from .spectral import SpectralGrid, TorusField

__version__ = "0.1.0"

__all__ = [
    "DnMethod",
    "NaturalState",
    "PhysicalParams",
    "SmallnessError",
    "SpectralGrid",
    "TorusField",
    "WahlenState",
    "__version__",
    "conjugate_trace",
    "conserved_set",
    "dn_apply",
    "dn_oracle",
]
