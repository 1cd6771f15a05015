"""Order-of-magnitude numbers for an Au-cluster interferometer and a trap-release test."""

import numpy as np

from cslprop import twoparticle, twoslit
from cslprop.params import AMU_SI, HBAR_SI, NUCLEON_MASS_SI, PhysParams

m = 1e8 * AMU_SI
sigma = mu = 78.5e-9
p = PhysParams.grw(m)
cfg = twoslit.TwoSlitConfig(sigma, mu, 1.0, p)
d_crit = twoslit.critical_D(cfg)
print("Au cluster, m = 1e8 amu, sigma = mu = 78.5 nm")
print(f"  overlap time           {twoslit.overlap_time(cfg):.4g} s")
print(f"  D_crit / hbar^2        {d_crit / HBAR_SI**2:.4g} m^-2 s^-1")
print(f"  1e-2 (m/m0)^2          {1e-2 * (m / NUCLEON_MASS_SI) ** 2:.4g} m^-2 s^-1")
print(f"  GRW D / hbar^2         {p.D / HBAR_SI**2:.4g} m^-2 s^-1")
print(f"  implied lambda0        {d_crit / HBAR_SI**2 * 4 / (p.alpha * (m / NUCLEON_MASS_SI) ** 2):.4g} s^-1")

print("\ntrap release, GRW, m = 1e8 m0, sigma = 10 nm")
q = PhysParams.grw(1e8 * NUCLEON_MASS_SI)
for t in (1.0, 10.0, 100.0):
    c = twoparticle.TwoParticleConfig(1e-8, t, q)
    st = twoparticle.spread_statistics(c)
    flag = " (width beyond localization length)" if c.warnings() else ""
    print(f"  t = {t:6g} s  sigma_X = {st.sigma_X:.4g} m  sigma_xi/2 = {st.sigma_xi_half:.4g} m  ratio - 1 = {st.ratio - 1:.4f}{flag}")
print(f"  independent-particle std at 10 s: {twoparticle.independent_std(twoparticle.TwoParticleConfig(1e-8, 10.0, q)):.4g} m")
print(f"  sqrt(K/2) check: {np.sqrt(0.5):.4f} sigma at t = 0")
