import cmath

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial.legendre import leggauss

from cslprop import propagator as pr
from cslprop.gaussian import ComplexGaussian, GaussianSum
from cslprop.params import DomainError, PhysParams

P = PhysParams.natural(D=0.1)


def test_position_kernel_reference_value():
    # m/(2 pi hbar dt) exp(i m/(2 hbar dt) (1 - 0)) exp(-D dt/(3 hbar^2) (1 + 0 + 0))
    expected = 1 / (2 * cmath.pi) * cmath.exp(0.5j) * cmath.exp(-0.1 / 3)
    assert pr.position_kernel(1.0, 0.0, 0.0, 0.0, 1.0, P) == pytest.approx(expected, rel=1e-14)


def test_kernel_gaussian_matches_direct_formula():
    rng = np.random.default_rng(0)
    params = PhysParams.natural(D=0.37, hbar=1.3, mass=0.8)
    g = pr.position_kernel_gaussian(0.6, params)
    z = rng.normal(size=(20, 4))
    direct = pr.position_kernel(*z.T, 0.6, params)
    assert np.allclose(g(z), direct, rtol=1e-12)


def test_kernel_free_limit_and_hermiticity():
    rng = np.random.default_rng(1)
    z = rng.normal(size=(10, 4))
    free = PhysParams()
    x, y, xp, yp = z.T
    expected = 1 / (2 * np.pi * 0.5) * np.exp(1j / (2 * 0.5) * ((x - xp) ** 2 - (y - yp) ** 2))
    assert np.allclose(pr.position_kernel(x, y, xp, yp, 0.5, free), expected, rtol=1e-13)
    assert np.allclose(pr.position_kernel(y, x, yp, xp, 0.5, P), np.conj(pr.position_kernel(x, y, xp, yp, 0.5, P)))


@pytest.mark.parametrize("dt", [0.0, -1.0])
def test_kernel_rejects_non_positive_dt(dt):
    with pytest.raises(DomainError):
        pr.position_kernel(0, 0, 0, 0, dt, P)
    with pytest.raises(DomainError):
        pr.momentum_kernel_gaussian(dt, P)


_STENCIL1 = np.array([-1 / 60, 3 / 20, -3 / 4, 0.0, 3 / 4, -3 / 20, 1 / 60])
_STENCIL2 = np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90])
_K = np.arange(-3, 4)


@pytest.mark.parametrize("D,dt", [(0.1, 1.0), (0.5, 0.3), (0.02, 2.5)])
def test_kernel_solves_master_equation(D, dt):
    params = PhysParams.natural(D=D)
    rng = np.random.default_rng(2)
    h = 1e-2
    for x, y, xp, yp in rng.normal(size=(10, 4)):
        J = lambda x_, y_, t_: pr.position_kernel(x_, y_, xp, yp, t_, params)  # noqa: E731
        dJdt = _STENCIL1 @ J(x, y, dt + _K * h * dt) / (h * dt)
        dxx = _STENCIL2 @ J(x + _K * h, y, dt) / h**2
        dyy = _STENCIL2 @ J(x, y + _K * h, dt) / h**2
        deco = D * (x - y) ** 2 * J(x, y, dt)
        rhs = 0.5j * (dxx - dyy) - deco
        scale = abs(dJdt) + 0.5 * (abs(dxx) + abs(dyy)) + abs(deco)
        assert abs(dJdt - rhs) < 1e-8 * scale


def test_momentum_kernel_reduced_matches_gaussian():
    rng = np.random.default_rng(3)
    params = PhysParams.natural(D=0.2, mass=1.5)
    g = pr.momentum_kernel_gaussian(0.7, params)
    z = rng.normal(size=(15, 3))
    p, q, pp = z.T
    assert np.allclose(g(z), pr.momentum_kernel_reduced(p, pp, p - q, 0.7, params), rtol=1e-12)


def test_momentum_kernel_reduced_reference_value():
    # independent transcription at p=1, p'=0.5, p - q = 0.2, dt=2, D=0.1, hbar = m = 1
    p, pp, k, dt, D = 1.0, 0.5, 0.2, 2.0, 0.1
    q, qp = p - k, pp - k
    expected = (
        (4 * cmath.pi * D * dt) ** -0.5
        * cmath.exp(-1j * dt / 4 * (p**2 - q**2 + pp**2 - qp**2))
        * cmath.exp(-((p - pp) ** 2) / (4 * D * dt) - D * dt**3 * k**2 / 12)
    )
    assert pr.momentum_kernel_reduced(p, pp, k, dt, P) == pytest.approx(expected, rel=1e-14)


def two_peak_state():
    a = pr.pure_gaussian_state(0.8, x0=1.5, p0=0.7)
    b = pr.pure_gaussian_state(1.1, x0=-1.0, p0=-0.3)
    return GaussianSum(a.terms + b.terms)


def numerical_fourier(rho, p, q, half_width=14.0, n=260):
    """(2 pi)^-1 int dx dy exp(-i p x + i q y) rho(x, y) by tensor Gauss-Legendre (hbar = 1)."""
    x, w = leggauss(n)
    x, w = half_width * x, half_width * w
    X, Y = np.meshgrid(x, x, indexing="ij")
    R = rho(np.stack([X, Y], axis=-1))
    out = []
    for pi, qi in zip(p, q):
        out.append(np.einsum("i,j,ij->", w * np.exp(-1j * pi * x), w * np.exp(1j * qi * x), R) / (2 * np.pi))
    return np.array(out)


def test_momentum_evolution_matches_numerical_fourier_transform_of_position_evolution():
    rho0 = two_peak_state()
    params = PhysParams.natural(D=0.3)
    t = 0.8
    in_position = pr.evolve(rho0, t, params)
    in_momentum = pr.evolve(pr.fourier_transform(rho0), t, params, representation="momentum")
    rng = np.random.default_rng(4)
    pq = rng.normal(scale=1.0, size=(6, 2))
    numeric = numerical_fourier(in_position, pq[:, 0], pq[:, 1])
    assert np.allclose(in_momentum(pq), numeric, rtol=1e-6, atol=1e-6 * np.max(np.abs(numeric)))


def test_fourier_round_trip():
    rho0 = two_peak_state()
    back = pr.fourier_transform(pr.fourier_transform(rho0), inverse=True)
    z = np.random.default_rng(5).normal(size=(8, 2))
    assert np.allclose(back(z), rho0(z), rtol=1e-11)


def test_momentum_evolution_free_limit_is_phase():
    rho_p = pr.fourier_transform(two_peak_state())
    free = pr.evolve(rho_p, 1.3, PhysParams(), representation="momentum")
    z = np.random.default_rng(6).normal(size=(5, 2))
    phase = np.exp(-1j * 1.3 * (z[:, 0] ** 2 - z[:, 1] ** 2) / 2)
    assert np.allclose(free(z), phase * rho_p(z), rtol=1e-12)


def test_evolve_zero_time_and_validation():
    rho0 = two_peak_state()
    assert pr.evolve(rho0, 0.0, P) is rho0
    with pytest.raises(DomainError):
        pr.evolve(rho0, -1.0, P)
    with pytest.raises(ValueError):
        pr.evolve(rho0, 1.0, P, representation="energy")
    with pytest.raises(ValueError):
        pr.evolve(GaussianSum((ComplexGaussian.unit(3),)), 1.0, P)


@settings(max_examples=25, deadline=None)
@given(
    st.floats(min_value=0.3, max_value=3.0),
    st.floats(min_value=-3.0, max_value=3.0),
    st.floats(min_value=-2.0, max_value=2.0),
    st.floats(min_value=0.0, max_value=1.0),
    st.floats(min_value=0.01, max_value=5.0),
)
def test_packet_moments(sigma, x0, p0, D, t):
    params = PhysParams.natural(D=D)
    rho = pr.evolve(pr.pure_gaussian_state(sigma, x0, p0), t, params)
    trace, mean, var = pr.diagonal_moments(rho)
    K = 2 * D * t**3 / (3 * sigma**2) + t**2 / (4 * sigma**4) + 1
    assert trace == pytest.approx(1.0, rel=1e-10)
    assert mean == pytest.approx(x0 + p0 * t, rel=1e-9, abs=1e-9)
    assert var == pytest.approx(sigma**2 * K, rel=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.floats(min_value=0.05, max_value=2.0), st.floats(min_value=0.05, max_value=2.0))
def test_semigroup(t1, t2):
    rho0 = two_peak_state()
    params = PhysParams.natural(D=0.2)
    two_step = pr.evolve(pr.evolve(rho0, t1, params), t2, params)
    one_step = pr.evolve(rho0, t1 + t2, params)
    z = np.random.default_rng(8).normal(size=(6, 2))
    assert np.allclose(two_step(z), one_step(z), rtol=1e-9, atol=1e-12)


def test_trace_preserved_for_two_peak_state():
    rho0 = two_peak_state()
    t0 = pr.diagonal_moments(rho0)[0]
    for D in (0.0, 0.1, 2.0):
        assert pr.diagonal_moments(pr.evolve(rho0, 1.7, PhysParams.natural(D=D)))[0] == pytest.approx(t0, rel=1e-10)


def test_position_pdf_rejects_non_hermitian_input():
    bad = GaussianSum((ComplexGaussian(np.eye(2), [0.5j, 0.5j]),))
    with pytest.raises(pr.HermiticityError):
        pr.position_pdf(bad, np.array([0.3, 1.0]))


def test_position_pdf_matches_diagonal():
    rho = pr.evolve(two_peak_state(), 1.0, P)
    x = np.linspace(-4, 4, 9)
    assert np.allclose(pr.position_pdf(rho, x), pr.diagonal(rho)(x[:, None]).real)
    assert np.ndim(pr.position_pdf(rho, 0.5)) == 0
