"""From measured signals to surrogate phases and smoothed phase derivatives.

The chain is: analytic signal (spectral Hilbert transform) -> instantaneous
phase (unwrapped argument) -> numerical differentiation with Savitzky-Golay
smoothing -> edge trimming.  Phases obtained this way are surrogates: they
agree with the dynamical phase of a rotator up to a bounded periodic
deformation, which is good enough for regression on phase differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import hilbert, savgol_filter

from .dynamics import PHASE, REAL_PART, MultivariateSeries

__all__ = [
    "PhaseData",
    "analytic_signal",
    "extract_phase",
    "sg_smooth",
    "differentiate",
    "preprocess",
    "save_phase_data",
    "load_phase_data",
]

_MIN_AMPLITUDE = 1e-8


@dataclass(frozen=True)
class PhaseData:
    """Unwrapped phases and smoothed phase derivatives on a common trimmed grid.

    ``trim`` records how many raw samples were dropped from each end, so the
    absolute time of row k is ``(trim[0] + k) * dt``.
    """

    dt: float
    phases: np.ndarray
    derivatives: np.ndarray
    trim: tuple[int, int] = (0, 0)

    def __post_init__(self):
        ph = np.asarray(self.phases, dtype=float)
        dph = np.asarray(self.derivatives, dtype=float)
        if ph.shape != dph.shape or ph.ndim != 2:
            raise ValueError("phases and derivatives must be equal-shape 2-D arrays")
        if not (np.isfinite(ph).all() and np.isfinite(dph).all()):
            raise ValueError("non-finite phase data")
        # unwrapped phases must advance by less than pi per sample
        if ph.shape[0] > 1 and np.abs(np.diff(ph, axis=0)).max() >= np.pi:
            raise ValueError("phase increments reach pi per sample; data undersampled or not unwrapped")
        object.__setattr__(self, "phases", ph)
        object.__setattr__(self, "derivatives", dph)

    @property
    def n_samples(self) -> int:
        return self.phases.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.phases.shape[1]

    @property
    def times(self) -> np.ndarray:
        return (self.trim[0] + np.arange(self.n_samples)) * self.dt


def analytic_signal(x: np.ndarray) -> np.ndarray:
    """Complex analytic signal x + j H(x) via the spectral Hilbert transform.

    The negative-frequency half of the spectrum is zeroed and the positive
    half doubled (DC and Nyquist at unit weight); the mean is removed before
    the transform.  The real part of the output is the input, exactly.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("expected a single channel")
    if x.size < 16:
        raise ValueError("series too short for a meaningful Hilbert transform (need >= 16)")
    if not np.isfinite(x).all():
        raise ValueError("non-finite samples")
    h = hilbert(x - x.mean())
    return x + 1j * h.imag


def extract_phase(x: np.ndarray) -> np.ndarray:
    """Unwrapped instantaneous phase of the (mean-removed) analytic signal."""
    x = np.asarray(x, dtype=float)
    s = analytic_signal(x)
    sc = s - x.mean()  # rotate about the signal's own mean level
    amp = np.abs(sc)
    if amp.min() < _MIN_AMPLITUDE:
        k = int(np.argmin(amp))
        raise ValueError(f"analytic amplitude {amp.min():.3g} < {_MIN_AMPLITUDE} at sample {k}; phase undefined")
    centered = x - x.mean()
    crossings = int(np.count_nonzero(np.diff(np.signbit(centered))))
    if crossings < 3:
        raise ValueError("signal is not oscillatory (fewer than 3 zero crossings)")
    return np.unwrap(np.angle(sc))


def sg_smooth(y: np.ndarray, window: int = 11, order: int = 3) -> np.ndarray:
    """Savitzky-Golay smoothing: local least-squares polynomial fit.

    Reproduces any global polynomial of degree <= order exactly, including at
    the ends (polynomial edge handling).
    """
    y = np.asarray(y, dtype=float)
    if window % 2 == 0 or window < 3:
        raise ValueError("window must be an odd integer >= 3")
    if order >= window:
        raise ValueError("order must be smaller than window")
    if y.shape[-1] < window:
        raise ValueError(f"series of length {y.shape[-1]} shorter than window {window}")
    return savgol_filter(y, window, order, axis=-1, mode="interp")


def differentiate(
    theta: np.ndarray,
    dt: float,
    window: int = 11,
    order: int = 3,
    smooth: str = "after",
) -> np.ndarray:
    """Numerical time derivative of a phase series with smoothing.

    Central differences in the interior, second-order one-sided stencils at
    the ends.  ``smooth`` selects where the Savitzky-Golay filter acts:
    ``"after"`` (default) smooths the finite-difference derivative,
    ``"before"`` smooths the phases first and differentiates the result.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape[-1] < 5:
        raise ValueError("need at least 5 samples to differentiate")
    if smooth == "after":
        d = np.gradient(theta, dt, axis=-1, edge_order=2)
        return sg_smooth(d, window, order)
    if smooth == "before":
        return np.gradient(sg_smooth(theta, window, order), dt, axis=-1, edge_order=2)
    raise ValueError("smooth must be 'after' or 'before'")


def preprocess(
    series: MultivariateSeries,
    window: int = 11,
    order: int = 3,
    trim_fraction: float = 0.05,
    smooth: str = "after",
) -> PhaseData:
    """Full signal chain on every channel, with edge trimming.

    Channels tagged ``real-part-x`` go through the Hilbert phase extraction;
    channels tagged ``phase`` are taken as already-unwrapped phases and only
    differentiated.  ``trim_fraction`` of the samples (floor) is dropped from
    each end afterwards, removing Hilbert and stencil edge artifacts.
    """
    if not 0 <= trim_fraction < 0.5:
        raise ValueError("trim_fraction must lie in [0, 0.5)")
    vals = series.values
    n = series.n_samples
    if series.channel_meaning == REAL_PART:
        phases = np.column_stack([extract_phase(vals[:, j]) for j in range(series.n_channels)])
    elif series.channel_meaning == PHASE:
        phases = vals.copy()
    else:
        raise ValueError(f"unknown channel meaning {series.channel_meaning!r}")

    derivs = differentiate(phases.T, series.dt, window, order, smooth).T

    k = int(np.floor(trim_fraction * n))
    if n - 2 * k < max(2, window):
        raise ValueError("series too short after trimming")
    sl = slice(k, n - k)
    return PhaseData(series.dt, phases[sl], derivs[sl], trim=(k, k))


def save_phase_data(ph: PhaseData, path) -> None:
    """CSV with columns t, theta1..thetaN, dtheta1..dthetaN."""
    n = ph.n_nodes
    header = (
        "t,"
        + ",".join(f"theta{i}" for i in range(1, n + 1))
        + ","
        + ",".join(f"dtheta{i}" for i in range(1, n + 1))
    )
    data = np.column_stack([ph.times, ph.phases, ph.derivatives])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=header, comments="")


def load_phase_data(path) -> PhaseData:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t = data[:, 0]
    if len(t) < 2:
        raise ValueError("phase file too short")
    n = (data.shape[1] - 1) // 2
    dt = t[1] - t[0]
    lead = int(round(t[0] / dt))
    return PhaseData(dt, data[:, 1 : 1 + n], data[:, 1 + n :], trim=(lead, 0))
