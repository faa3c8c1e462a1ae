#!/usr/bin/env python3
"""Recover a star network from phase recordings alone.

Ten oscillators, node 1 driving the rest, 100 seconds sampled at 10 Hz.
The sparse regression route should return the exact edge set and coupling
coefficients close to the true strength alpha = 0.1.
"""

import numpy as np

from oscinet import dynamics, recovery, topology

truth = topology.make_star(10)
rng = np.random.default_rng(12)
omega = dynamics.random_frequencies(10, rng)
theta0 = dynamics.random_initial_phases(10, rng)
ens = dynamics.OscillatorEnsemble(truth, 0.1, omega)
series = dynamics.simulate_phase_model(ens, theta0, t_end=100.0, dt_sample=0.1)

report = recovery.recover(series, truth=truth, method="lasso", alpha=0.1)

print(f"method: {report.method}")
print(f"false positives: {report.score.false_positives}, "
      f"false negatives: {report.score.false_negatives}")
print(f"recovered edges (target <- source): {sorted(report.recovered.edges())}")
print(f"library coherence: {report.coherence:.3f}, "
      f"smallest singular value: {report.sigma_min:.3e}")

# surviving terms in one leaf's equation, in physical units
print("\nnode 4 equation:")
for label, value in sorted(report.coefficient_map(4).items()):
    print(f"  {value:+.4f} * {label}")

# per-node incoming coupling estimates vs the true alpha
kappa = report.metrics.kappa_i
print(f"\nestimated couplings: min {kappa[kappa > 0].min():.4f}, "
      f"max {kappa.max():.4f} (true value 0.1)")
print(f"effective spurious weight kappa_s = {report.metrics.kappa_s:.3f} "
      f"(a clean star gives -1)")
