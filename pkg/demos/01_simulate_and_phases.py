#!/usr/bin/env python3
"""Simulate coupled oscillators and pull instantaneous phases back out.

A ring of five Stuart-Landau units is integrated; we observe only the real
part x_i(t) of each unit, reconstruct the analytic signal, and compare the
extracted phases against the reduced phase model integrated from the same
initial state.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from oscinet import dynamics, signal, topology

out_dir = Path("demo_output")
out_dir.mkdir(exist_ok=True)

ring = topology.make_ring(5)
rng = np.random.default_rng(7)
omega = dynamics.random_frequencies(5, rng)
z0 = dynamics.random_initial_state(5, rng)
ens = dynamics.OscillatorEnsemble(ring, coupling_strength=0.1,
                                  natural_frequencies=omega)

series = dynamics.simulate_stuart_landau(ens, z0, t_end=100.0, dt_sample=0.1)
print(f"observed {series.values.shape[0]} samples of x_i for "
      f"{series.values.shape[1]} units")

# full preprocessing: analytic signal -> phase -> smoothed derivative, with
# 5% trimmed from each end where the transform is least trustworthy
ph = signal.preprocess(series)
print(f"kept {ph.n_samples} samples after trimming, t in "
      f"[{ph.times[0]:.1f}, {ph.times[-1]:.1f}]")

# ground truth: the same initial phases pushed through the phase model
theta0 = np.angle(z0)
phase_series = dynamics.simulate_phase_model(ens, theta0, 100.0, 0.1)
truth = phase_series.values[ph.trim[0]:ph.trim[0] + ph.n_samples]

# compare modulo 2*pi; the residual mixes extraction error with what the
# reduced model itself neglects (coupling through amplitude deviations),
# so a few hundredths of a radian is the expected scale at alpha = 0.1
err = np.abs(np.angle(np.exp(1j * (ph.phases - truth))))
print(f"median phase gap to the reduced model {np.median(err):.3e} rad, "
      f"max {err.max():.3e}")

fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
ax0.plot(series.times, series.values[:, 0], lw=0.7)
ax0.set_ylabel("x_1(t)")
ax1.plot(ph.times, ph.derivatives[:, 0], lw=0.7, label="extracted rate")
ax1.axhline(omega[0], color="k", ls="--", lw=0.7, label="natural frequency")
ax1.set_xlabel("t")
ax1.set_ylabel("d theta_1 / dt")
ax1.legend(loc="best", fontsize=8)
fig.tight_layout()
fig.savefig(out_dir / "01_phases.svg")
print(f"wrote {out_dir / '01_phases.svg'}")
