#!/usr/bin/env python3
"""Spurious coupling weight as dynamical noise ramps up.

The phase model is integrated with additive white noise of intensity eta
(Euler-Maruyama); frequencies and initial phases are drawn once and reused
across the whole grid so only the noise level changes.  kappa_s aggregates
the pair-interaction weight the fit assigns beyond what a clean network
needs; it should grow with eta.
"""

import numpy as np

from oscinet import dynamics, recovery, topology

truth = topology.make_star(8)
master = np.random.default_rng([2, 0])
omega = dynamics.random_frequencies(8, master)
theta0 = dynamics.random_initial_phases(8, master)
ens = dynamics.OscillatorEnsemble(truth, 0.1, omega)

# smooth before differentiating: with noisy phases the derivative must not
# amplify the roughness
cfg = recovery.RecoverConfig(smooth="before")

print(f"{'eta':>8} {'FP':>3} {'FN':>3} {'kappa_s (incoming)':>19}")
for i, eta in enumerate([0.0, 1e-4, 1e-3, 1e-2]):
    series = dynamics.simulate_noisy_phase(
        ens, theta0, eta, dt_euler=0.1, t_end=100.0,
        rng_seed=[2, 0, i, 1],
    )
    rep = recovery.recover(series, truth=truth, method="lasso",
                           config=cfg, alpha=0.1)
    print(f"{eta:>8.0e} {rep.score.false_positives:>3} "
          f"{rep.score.false_negatives:>3} "
          f"{rep.metrics_incoming.kappa_s:>19.3f}")

print("\nkappa_s near -1 marks a clean recovery; the climb with eta is the")
print("noise pushing weight onto pair terms the true network does not have.")
