"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line; ``conftest.py`` prints all of them in the
terminal summary (criteria that crash before recording are reported as FAIL).
"""

import numpy as np
import pytest
from scipy.integrate import simpson

from cslprop import oracle as orc
from cslprop import propagator as pr
from cslprop import scattering as sc
from cslprop import twoparticle as tp
from cslprop import twoslit as ts
from cslprop.params import AMU_SI, HBAR_SI, NUCLEON_MASS_SI, PhysParams

ACCEPTANCE_TITLES = {
    1: "two-slit critical D",
    2: "two-slit interference suppression",
    3: "two-slit dual-path equality",
    4: "scattering Born limit",
    5: "second-order sum rule",
    6: "reflection robustness under collapse noise",
    7: "first-order vanishing",
    8: "two-particle correlated diffusion (GRW)",
    9: "asymptotic spreading exponents",
    10: "two-particle kernel master-equation residual",
    11: "grid oracle equivalence and convergence order",
    12: "SDE ensemble consistency",
    13: "exponential vs quadratic collapse form",
    14: "Au-cluster order-of-magnitude estimate",
}
ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def check(n: int, ok: bool, detail: str) -> None:
    ok = bool(ok)
    ACCEPTANCE_RESULTS[n] = (ok, detail)
    print(f"criterion {n:2d} {ACCEPTANCE_TITLES[n]}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, detail


def slits(D):
    return ts.TwoSlitConfig(1.0, 5.0, 10.0, PhysParams.natural(D=D))


def reference_barrier(D=1e-4):
    return sc.ScatteringConfig(1.0, 0.1, 0.1, 100.0, PhysParams.natural(D=D))


def test_01_critical_D():
    v = ts.critical_D(slits(0.0))
    check(1, v == 0.008, f"critical_D = {v!r}")


def test_02_interference_suppression():
    v1, v2 = ts.fringe_visibility(slits(0.001)), ts.fringe_visibility(slits(0.01))

    def direct(D, t=10.0, mu=5.0):
        # hbar = m = sigma = 1
        K = 2 * D * t**3 / 3 + t**2 / 4 + 1
        return D * t**3 * mu**2 / (3 * K)

    e1, e2 = ts.damping_exponent(slits(0.001)), ts.damping_exponent(slits(0.01))
    ok = (
        v1 > 5 * v2
        and abs(e1 / direct(0.001) - 1) < 0.02
        and abs(e2 / direct(0.01) - 1) < 0.02
        and round(e1, 2) == 0.31
        and round(e2, 2) == 2.55
    )
    check(2, ok, f"visibility {v1:.4f} vs {v2:.4f} (ratio {v1 / v2:.2f}); exponents {e1:.4f}, {e2:.4f}")


def test_03_dual_path():
    x = np.linspace(-40, 40, 200)
    worst = 0.0
    for D, t in ((0.0, 10.0), (0.001, 10.0), (0.01, 4.0)):
        cfg = ts.TwoSlitConfig(1.0, 5.0, t, PhysParams.natural(D=D))
        a = ts.screen_pdf(x, cfg)
        b = pr.position_pdf(pr.evolve(ts.initial_state(cfg), t, cfg.params), x)
        worst = max(worst, float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300))))
    check(3, worst < 1e-8, f"max relative difference {worst:.2e}")


def test_04_born_limit():
    cfg = reference_barrier(D=1e-8)
    R, _ = sc.reflection_probability(cfg)
    # (V0 m / hbar pbar)^2 exp(-4 a^2 pbar^2 / hbar^2) with hbar = m = pbar = 1
    born = 0.1**2 * np.exp(-4 * 0.1**2)
    check(4, abs(R / born - 1) < 0.01, f"R = {R:.6g}, Born = {born:.6g}, rel diff {R / born - 1:+.2e}")


def test_05_sum_rule():
    cfg = reference_barrier()
    closed = sc.momentum_integrals(cfg).total
    # the tails fall off like p^-5, so the grid is stretched out to |p| ~ 45
    u = np.linspace(-4.5, 4.5, 401)
    f = sc.second_order_pdf(np.sinh(u), cfg).value * np.cosh(u)
    grid = simpson(f, x=u)
    scale = simpson(np.abs(f), x=u)
    ok = abs(grid) < 1e-6 * scale and abs(closed) < 1e-6 * scale
    check(5, ok, f"grid integral {grid:.2e}, closed form {closed:.2e}, scale {scale:.3e}")


def test_06_reflection_robustness():
    cfg = reference_barrier()
    R, width = sc.reflection_probability(cfg)
    born = sc.born_reflection(cfg)
    sqrt_Dt = np.sqrt(cfg.Dt)
    ok = abs(R / born - 1) < 0.05 and sqrt_Dt / 3 <= width <= 3 * sqrt_Dt
    check(6, ok, f"R/Born - 1 = {R / born - 1:+.3%}, reflected std {width:.4f} vs sqrt(Dt) {sqrt_Dt:.4f}")


def test_07_first_order_vanishing():
    rng = np.random.default_rng(2024)
    worst, smallest_term = 0.0, np.inf
    for i in range(20):
        pbar, V0, a = rng.uniform(0.3, 3.0), rng.uniform(0.01, 1.0), rng.uniform(0.05, 0.5)
        t, D = rng.uniform(1.0, 100.0), 10 ** rng.uniform(-5, -1)
        cfg = sc.ScatteringConfig(pbar, V0, a, t, PhysParams.natural(D=D))
        p = pbar + rng.normal(scale=np.sqrt(D * t))
        barrier = None
        if i % 2:
            shift, tilt = rng.uniform(-1, 1), rng.uniform(0.1, 1)

            def barrier(k, V0=V0, shift=shift, tilt=tilt):
                k = np.asarray(k, dtype=float)
                return V0 * (1 + 1j * tilt * k) * np.exp(-((k - shift) ** 2))

        term_p, term_q = sc.first_order_terms(p, cfg, barrier=barrier)
        worst = max(worst, float(np.max(np.abs(term_p + term_q))))
        smallest_term = min(smallest_term, float(np.min(np.abs(term_p))))
        worst = max(worst, float(np.max(np.abs(sc.first_order_diagonal(p, cfg)))))
    check(7, worst < 1e-12, f"max |sum| {worst:.2e} with individual terms >= {smallest_term:.2e}")


def test_08_two_particle_grw():
    p = PhysParams.grw(1e8 * NUCLEON_MASS_SI)
    sigma, t = 1e-8, 10.0
    r = tp.spread_statistics(tp.TwoParticleConfig(sigma, t, p)).ratio
    # direct substitution into the joint density's widths
    m, h, D = p.mass, p.hbar, p.D
    L = (
        D * h**2 * t**5 / (3 * m**4 * sigma**6)
        + h**4 * t**4 / (16 * m**4 * sigma**8)
        + 4 * D * t**3 / (3 * m**2 * sigma**2)
        + h**2 * t**2 / (2 * m**2 * sigma**4)
        + 1
    )
    disp = h**2 * t**2 / (4 * m**2 * sigma**4)
    var_X = sigma**2 * L / (2 * (disp + 1))
    var_h = sigma**2 * L / (2 * (4 * D * t**3 / (3 * m**2 * sigma**2) + disp + 1))
    direct = np.sqrt(var_X / var_h)
    ok = 0.03 <= r - 1 <= 0.20 and abs(r - direct) <= 1e-10 * direct
    check(8, ok, f"ratio - 1 = {r - 1:.6f}, direct {direct - 1:.6f}")


def test_09_asymptotic_exponents():
    sx, sh = tp.asymptotic_exponents(tp.TwoParticleConfig(1.0, 0.0, PhysParams.natural(D=0.1)), (1e2, 1e5))
    check(9, abs(sx - 1.5) <= 0.05 and abs(sh - 1.0) <= 0.05, f"slopes {sx:.4f} and {sh:.4f}")


def test_10_two_particle_master_equation():
    params = PhysParams.natural(D=0.1)
    pts = np.random.default_rng(10).normal(scale=0.8, size=(100, 8))
    worst = max(r / s for r, s in (tp.master_equation_residual(pt, 1.0, params) for pt in pts))
    check(10, worst < 1e-8, f"max residual/scale {worst:.2e} over 100 points")


def test_11_oracle_equivalence():
    params = PhysParams.natural(D=0.01)
    rho0 = pr.pure_gaussian_state(1.0)
    x = orc.make_grid(512, 1 / 16)
    exact = pr.evolve(rho0, 1.0, params)
    errs = []
    for dt in (0.2, 0.1, 0.05):
        g = orc.evolve_master(orc.GridDensity.from_gaussian(rho0, x), 1.0, dt, params)
        errs.append(orc.compare(g, exact).l2_error)
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    ok = errs[-1] < 1e-3 and np.all(np.abs(orders - 2.0) < 0.1)
    check(11, ok, f"L2 errors {', '.join(f'{e:.2e}' for e in errs)}; observed orders {', '.join(f'{o:.3f}' for o in orders)}")


def test_12_sde_consistency():
    params = PhysParams.natural(D=0.5)
    x = orc.make_grid(512, 1 / 16)
    psi0 = np.exp(-(x**2) / 4)
    master = orc.evolve_master(orc.GridDensity.from_wavefunction(psi0 / np.sqrt(np.sum(psi0**2) / 16), x), 1.0, 0.01, params)
    ens = orc.run_ensemble(psi0, x, 2000, 1.0, 0.01, params, seed=7)
    d = orc.trace_distance(ens, master)
    bound = 3 * orc.statistical_scale(2000)
    check(12, d < bound, f"trace distance {d:.4f} vs bound {bound:.4f} (N = 2000)")


def test_13_form_gap():
    sigma, t, D = 1.0, 1.0, 0.1
    spread = sigma * np.sqrt(2 * D * t**3 / 3 + t**2 / 4 + 1)
    rho0 = orc.GridDensity.from_gaussian(pr.pure_gaussian_state(sigma), orc.make_grid(512, 1 / 16))
    ratios = [0.02, 0.05, 0.09, 0.2, 0.4, 0.7, 1.0]  # spread * sqrt(alpha)
    gaps = [orc.form_gap(rho0, t, 0.02, PhysParams.natural(D=D, alpha=(r / spread) ** 2)) for r in ratios]
    small = [g for r, g in zip(ratios, gaps) if r < 0.1]
    ok = max(small) < 1e-3 and bool(np.all(np.diff(gaps) > 0))
    check(13, ok, "gaps " + ", ".join(f"{r:g}:{g:.2e}" for r, g in zip(ratios, gaps)))


def test_14_au_cluster_estimate():
    m, sigma = 1e8 * AMU_SI, 78.5e-9
    p = PhysParams.grw(m)
    cfg = ts.TwoSlitConfig(sigma, sigma, 1.0, p)
    per_hbar2 = ts.critical_D(cfg) / HBAR_SI**2
    target = 1e-2 * (m / NUCLEON_MASS_SI) ** 2
    ratio = per_hbar2 / target
    check(14, 0.1 <= ratio <= 10, f"D_crit/hbar^2 = {per_hbar2:.3e} m^-2 s^-1 vs {target:.3e} (ratio {ratio:.3f})")


@pytest.fixture(autouse=True, scope="module")
def _report_missing():
    yield
    for n in ACCEPTANCE_TITLES:
        ACCEPTANCE_RESULTS.setdefault(n, (False, "no result recorded"))
