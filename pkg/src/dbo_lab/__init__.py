"""Spectral laboratory for the dissipative Benjamin-Ono family.

The equation under study is

    u_t + H u_xx + |D|^alpha u + u u_x = 0,    0 <= alpha <= 2,

posed on a 2*pi*lam-periodic interval and discretized by a collocation
pseudo-spectral method.  Subpackages cover the linear propagator and its
heat-kernel smoothing laws, Picard and exponential time differencing
solvers, dispersive space-time norms, Picard-iterate scaling scans, and
dyadic resonance-block estimates.
"""

from __future__ import annotations

__version__ = "0.1.0"
