#!/usr/bin/env python3
"""Sparse regression versus plain pseudoinverse as data gets scarce.

Both solvers see the same trajectories; the pseudoinverse needs much more
data before its spurious couplings fall under the pruning threshold.
"""

import numpy as np

from oscinet import dynamics, recovery, topology

truth = topology.make_star(8)
rng = np.random.default_rng(3)
omega = dynamics.random_frequencies(8, rng)
theta0 = dynamics.random_initial_phases(8, rng)
ens = dynamics.OscillatorEnsemble(truth, 0.1, omega)

# one long integration; shorter acquisitions are its prefixes
full = dynamics.simulate_phase_model(ens, theta0, t_end=200.0, dt_sample=0.1)

print(f"{'t_n':>6} {'lasso FP/FN':>12} {'l2 FP/FN':>10}")
for t_n in (20, 40, 80, 200):
    n_keep = int(round(t_n / 0.1)) + 1
    window = dynamics.MultivariateSeries(
        0.1, full.values[:n_keep], channel_meaning=dynamics.PHASE
    )
    row = []
    for method in ("lasso", "l2"):
        rep = recovery.recover(window, truth=truth, method=method, alpha=0.1)
        row.append(f"{rep.score.false_positives}/{rep.score.false_negatives}")
    print(f"{t_n:>6} {row[0]:>12} {row[1]:>10}")

print("\nwith enough data the two routes agree on the edge set; the sparse")
print("route simply gets there first.")
