"""Grid and trajectory oracles against the closed-form propagator.

Prints the split-step error under time-step refinement and the ensemble
trace distance as the number of trajectories grows.
"""

import argparse

import numpy as np

from cslprop import oracle, propagator
from cslprop.params import PhysParams

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--n-traj", type=int, nargs="*", default=[125, 500, 2000])
ap.add_argument("--seed", type=int, default=7)
args = ap.parse_args()

x = oracle.make_grid(512, 1 / 16)
rho0 = propagator.pure_gaussian_state(1.0)
params = PhysParams.natural(D=0.01)
exact = propagator.evolve(rho0, 1.0, params)
print("dt        l2_error   order")
prev = None
for dt in (0.2, 0.1, 0.05, 0.025):
    g = oracle.evolve_master(oracle.GridDensity.from_gaussian(rho0, x), 1.0, dt, params)
    err = oracle.compare(g, exact).l2_error
    order = "" if prev is None else f"{np.log2(prev / err):.3f}"
    print(f"{dt:<9g} {err:.3e}  {order}")
    prev = err

params = PhysParams.natural(D=0.5)
master = oracle.evolve_master(oracle.GridDensity.from_gaussian(rho0, x), 1.0, 0.01, params)
psi0 = np.exp(-(x**2) / 4)
print("\nN      trace_distance  N^-1/2")
for n in args.n_traj:
    ens = oracle.run_ensemble(psi0, x, n, 1.0, 0.01, params, seed=args.seed)
    print(f"{n:<6d} {oracle.trace_distance(ens, master):.4f}          {oracle.statistical_scale(n):.4f}")
