"""Ground-truth trajectory generators.

Three models over a shared :class:`~oscinet.topology.Network`:

* full complex amplitude dynamics near a Hopf bifurcation (attracting unit
  limit cycle, measured signal is the real part),
* the reduced phase model obtained for weak coupling,
* the phase model with multiplicative white noise, integrated by
  Euler-Maruyama.

Deterministic models use classical fixed-step RK4 with an internal step of
0.01 s by default and dense output on the requested sampling grid.  Fixed
step keeps every run bit-reproducible; the test suite checks the integrator's
convergence order instead of relying on an adaptive controller.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .topology import Network

__all__ = [
    "OscillatorEnsemble",
    "MultivariateSeries",
    "simulate_stuart_landau",
    "simulate_phase_model",
    "simulate_noisy_phase",
    "to_real_observations",
    "random_frequencies",
    "random_initial_state",
    "random_initial_phases",
    "save_series",
    "load_series",
]

REAL_PART = "real-part-x"
PHASE = "phase"

_DEFAULT_INTERNAL_STEP = 0.01


@dataclass(frozen=True)
class OscillatorEnsemble:
    """A network of oscillators with natural frequencies and one global coupling strength."""

    network: Network
    coupling_strength: float
    natural_frequencies: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.natural_frequencies, dtype=float)
        if self.coupling_strength < 0:
            raise ValueError("coupling strength must be non-negative")
        if w.shape != (self.network.n_nodes,):
            raise ValueError("need one natural frequency per node")
        object.__setattr__(self, "natural_frequencies", w)

    @property
    def n_nodes(self) -> int:
        return self.network.n_nodes


@dataclass(frozen=True)
class MultivariateSeries:
    """Uniformly sampled multichannel series.

    ``values`` has one row per time sample and one column per node.
    ``channel_meaning`` records whether channels are measured real parts
    (``"real-part-x"``) or phases (``"phase"``).
    """

    dt: float
    values: np.ndarray
    channel_meaning: str = REAL_PART

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if v.ndim != 2 or v.shape[0] < 2:
            raise ValueError("series needs at least 2 samples of at least 1 channel")
        if not np.isfinite(v).all():
            raise ValueError("series contains non-finite samples")
        if self.channel_meaning not in (REAL_PART, PHASE):
            raise ValueError(f"unknown channel meaning {self.channel_meaning!r}")
        object.__setattr__(self, "values", v)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.dt


def _sampling_plan(t_end: float, dt_sample: float, internal_step: float):
    if t_end <= 0 or dt_sample <= 0 or internal_step <= 0:
        raise ValueError("t_end, dt_sample and internal_step must be positive")
    n_samples = int(round(t_end / dt_sample))
    if n_samples < 1:
        raise ValueError("t_end shorter than one sampling interval")
    substeps = max(1, int(round(dt_sample / internal_step)))
    h = dt_sample / substeps
    return n_samples, substeps, h


def _rk4_dense(f, y0, n_samples, substeps, h):
    """Fixed-step RK4 returning the state at every sample instant (row 0 = y0)."""
    out = np.empty((n_samples + 1,) + np.shape(y0), dtype=np.asarray(y0).dtype)
    y = np.array(y0)
    out[0] = y
    for s in range(1, n_samples + 1):
        for _ in range(substeps):
            k1 = f(y)
            k2 = f(y + 0.5 * h * k1)
            k3 = f(y + 0.5 * h * k2)
            k4 = f(y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.isfinite(y).all():
            raise FloatingPointError(f"state blew up near t = {s * substeps * h:.6g}")
        out[s] = y
    return out


def simulate_stuart_landau(
    ens: OscillatorEnsemble,
    z0: np.ndarray,
    t_end: float,
    dt_sample: float = 0.1,
    internal_step: float = _DEFAULT_INTERNAL_STEP,
) -> MultivariateSeries:
    """Integrate the coupled amplitude equations and return the measured real parts.

    Each node obeys ``dz/dt = (1 + i w) z - |z|^2 z + coupling`` with diffusive
    linear coupling along incoming edges, so every uncoupled unit relaxes onto
    the circle |z| = 1 where it rotates at its natural frequency.
    """
    z0 = np.asarray(z0, dtype=complex)
    if z0.shape != (ens.n_nodes,):
        raise ValueError("z0 must hold one complex amplitude per node")
    if not np.isfinite(z0).all():
        raise ValueError("z0 contains non-finite entries")
    n_samples, substeps, h = _sampling_plan(t_end, dt_sample, internal_step)

    c = ens.network.adjacency.astype(float)
    indeg = c.sum(axis=1)
    alpha = ens.coupling_strength
    i_omega = 1j * ens.natural_frequencies

    def rhs(z):
        return (1.0 + i_omega) * z - (z * z.conj()).real * z + alpha * (c @ z - indeg * z)

    traj = _rk4_dense(rhs, z0, n_samples, substeps, h)
    return MultivariateSeries(dt_sample, traj.real, channel_meaning=REAL_PART)


def simulate_phase_model(
    ens: OscillatorEnsemble,
    theta0: np.ndarray,
    t_end: float,
    dt_sample: float = 0.1,
    internal_step: float = _DEFAULT_INTERNAL_STEP,
) -> MultivariateSeries:
    """Integrate the reduced phase equations; returns unwrapped phases."""
    theta0 = np.asarray(theta0, dtype=float)
    if theta0.shape != (ens.n_nodes,):
        raise ValueError("theta0 must hold one phase per node")
    n_samples, substeps, h = _sampling_plan(t_end, dt_sample, internal_step)
    rhs = phase_rhs(ens)
    traj = _rk4_dense(rhs, theta0, n_samples, substeps, h)
    return MultivariateSeries(dt_sample, traj, channel_meaning=PHASE)


def phase_rhs(ens: OscillatorEnsemble):
    """Right-hand side of the phase model as a reusable closure.

    sin(theta_k - theta_i) is expanded through the angle-difference identity so
    one evaluation costs two matvecs instead of an N x N table of sines.
    """
    c = ens.network.adjacency.astype(float)
    alpha = ens.coupling_strength
    omega = ens.natural_frequencies

    def rhs(theta):
        st, ct = np.sin(theta), np.cos(theta)
        return omega + alpha * (ct * (c @ st) - st * (c @ ct))

    return rhs


def simulate_noisy_phase(
    ens: OscillatorEnsemble,
    theta0: np.ndarray,
    noise_intensity: float,
    dt_euler: float = 0.1,
    t_end: float = 100.0,
    rng_seed: int | None = 0,
) -> MultivariateSeries:
    """Euler-Maruyama integration of the phase model with multiplicative noise.

    The noise enters each node as sqrt(2 eta) (cos(phi) xi + sin(phi) zeta)
    with independent unit white noises xi, zeta per node, the form obtained by
    perturbing the measured signal rather than the phase itself.  At
    ``noise_intensity = 0`` the trajectory coincides bit-for-bit with a plain
    Euler integration of the deterministic phase model.  Fixed seed gives a
    fixed trajectory.
    """
    theta0 = np.asarray(theta0, dtype=float)
    if theta0.shape != (ens.n_nodes,):
        raise ValueError("theta0 must hold one phase per node")
    if noise_intensity < 0:
        raise ValueError("noise intensity must be non-negative")
    if dt_euler <= 0 or t_end <= 0:
        raise ValueError("dt_euler and t_end must be positive")
    n_steps = int(round(t_end / dt_euler))
    if n_steps < 1:
        raise ValueError("t_end shorter than one Euler step")

    rhs = phase_rhs(ens)
    amp = np.sqrt(2.0 * noise_intensity * dt_euler)
    rng = np.random.default_rng(rng_seed)

    out = np.empty((n_steps + 1, ens.n_nodes))
    phi = theta0.copy()
    out[0] = phi
    for s in range(1, n_steps + 1):
        drift = rhs(phi)
        if noise_intensity > 0:
            xi, zeta = rng.standard_normal((2, ens.n_nodes))
            phi = phi + dt_euler * drift + amp * (np.cos(phi) * xi + np.sin(phi) * zeta)
        else:
            phi = phi + dt_euler * drift
        if not np.isfinite(phi).all():
            raise FloatingPointError(f"state blew up near t = {s * dt_euler:.6g}")
        out[s] = phi
    return MultivariateSeries(dt_euler, out, channel_meaning=PHASE)


def to_real_observations(series: MultivariateSeries) -> MultivariateSeries:
    """Map a phase series to the signals an observer would measure, x = cos(phase)."""
    if series.channel_meaning != PHASE:
        raise ValueError("input must be a phase series")
    return MultivariateSeries(series.dt, np.cos(series.values), channel_meaning=REAL_PART)


# ---------------------------------------------------------------------------
# randomized inputs used by the experiment harness

def random_frequencies(n: int, rng: np.random.Generator) -> np.ndarray:
    """Natural frequencies drawn uniformly from [0, 2 pi) rad/s."""
    return rng.uniform(0.0, 2.0 * np.pi, size=n)


def random_initial_state(n: int, rng: np.random.Generator) -> np.ndarray:
    """Complex amplitudes drawn uniformly (by area) on the annulus 0.5 <= |z| <= 1.5."""
    r = np.sqrt(rng.uniform(0.25, 2.25, size=n))
    ang = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return r * np.exp(1j * ang)


def random_initial_phases(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(0.0, 2.0 * np.pi, size=n)


# ---------------------------------------------------------------------------
# CSV round trip

def save_series(series: MultivariateSeries, path) -> None:
    """Write `t,x1,...,xN` CSV rows at full double precision (17 significant digits)."""
    n = series.n_channels
    header = "t," + ",".join(f"x{i}" for i in range(1, n + 1))
    data = np.column_stack([series.times, series.values])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=header, comments="")


def load_series(path, channel_meaning: str = REAL_PART) -> MultivariateSeries:
    """Read a CSV written by :func:`save_series`.

    The channel-meaning tag is not stored in the file; pass it explicitly when
    the series holds phases.
    """
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t = data[:, 0]
    if len(t) < 2:
        raise ValueError("series file too short")
    return MultivariateSeries(t[1] - t[0], data[:, 1:], channel_meaning=channel_meaning)
