"""Reconstruction of coupled-oscillator networks from measured time series.

The package simulates networks of limit-cycle oscillators (full complex
amplitude model, reduced phase model, and a noisy phase model), extracts
surrogate phases from the measured real signals, builds a Fourier library of
candidate coupling functions, and recovers the directed interaction network
by either plain least squares or an L1-penalized (LASSO) regression with
cross-validated regularization.  Companion modules quantify when the plain
least-squares route becomes unstable (principal-angle geometry) and how the
library behaves as a sensing matrix (coherence, restricted-isometry bounds,
measure-adapted orthonormalization).
"""

from . import adapt, analysis, basis, dynamics, recovery, signal, solvers, topology

__version__ = "0.1.0"

__all__ = [
    "adapt",
    "analysis",
    "basis",
    "dynamics",
    "recovery",
    "signal",
    "solvers",
    "topology",
    "__version__",
]
