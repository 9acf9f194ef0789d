"""Weyl-geometric dynamics of spin-1/2 tops.

Configuration-space geometry over Euler angles, closed-form scalar
wavefields, Hamilton-Jacobi trajectories, far-field Stern-Gerlach
statistics and Bell-type coincidence scans, all in internal units
hbar = m = a = 1.
"""

__version__ = "0.1.0"

from .dynamics import integrate_trajectory, sample_ensemble
from .geometry import EulerAngles, TopParams, gauge_rescale
from .measurement import bell_scan, coincidence_fluxes, redhead_functional
from .numerics import AngularGrid, build_angular_grid, integrate_angular
from .wavefield import (
    GaussianPacket,
    ProductState,
    SingletState,
    SpinorCoeffs,
    top_frequency,
)

__all__ = [
    "__version__",
    "AngularGrid",
    "EulerAngles",
    "GaussianPacket",
    "ProductState",
    "SingletState",
    "SpinorCoeffs",
    "TopParams",
    "bell_scan",
    "build_angular_grid",
    "coincidence_fluxes",
    "gauge_rescale",
    "integrate_angular",
    "integrate_trajectory",
    "redhead_functional",
    "sample_ensemble",
    "top_frequency",
]
