import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial.legendre import leggauss

from cslprop.gaussian import (
    ComplexGaussian,
    GaussianSum,
    IntegrabilityError,
    embed,
    evaluate,
    integrate_out,
    log_inv_sqrt_det,
    pullback,
    total_integral,
)


def random_gaussian(rng, dim, imag=0.5):
    """A term whose real quadratic part is comfortably positive definite."""
    M = rng.normal(size=(dim, dim))
    A = M @ M.T + dim * np.eye(dim)
    S = rng.normal(size=(dim, dim))
    A = A + 1j * imag * (S + S.T)
    b = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    c = rng.normal() + 1j * rng.normal()
    return ComplexGaussian(A, b, c)


def direct(g, z):
    # independent transcription of exp(-1/2 z^T A z + b^T z + c)
    z = np.asarray(z, dtype=complex)
    return np.exp(-0.5 * z @ g.A @ z + g.b @ z + g.c)


def test_product_matches_pointwise_product():
    rng = np.random.default_rng(1)
    g1, g2 = random_gaussian(rng, 3), random_gaussian(rng, 3)
    prod = g1 * g2
    for _ in range(10):
        z = rng.normal(size=3)
        assert prod(z) == pytest.approx(direct(g1, z) * direct(g2, z), rel=1e-12)


def test_A_is_symmetrized():
    A = np.array([[2.0, 1.0], [0.0, 2.0]])
    g = ComplexGaussian(A, [0.0, 0.0])
    assert np.array_equal(g.A, g.A.T)
    z = np.array([0.3, -0.7])
    assert g(z) == pytest.approx(np.exp(-0.5 * z @ A @ z), rel=1e-14)


def test_shape_validation():
    with pytest.raises(ValueError):
        ComplexGaussian(np.eye(2), np.zeros(3))
    with pytest.raises(ValueError):
        ComplexGaussian.unit(2) * ComplexGaussian.unit(3)


def _tensor_quadrature(fn, half_width, n):
    x, w = leggauss(n)
    x, w = half_width * x, half_width * w
    X, Y = np.meshgrid(x, x, indexing="ij")
    return np.einsum("i,j,ij...->...", w, w, fn(X, Y))


def test_integrate_two_of_four_against_numerical_quadrature():
    rng = np.random.default_rng(7)
    g = random_gaussian(rng, 4, imag=0.8)
    out = integrate_out(g, [1, 3])
    for _ in range(3):
        r = rng.normal(size=2)

        def fn(u, v):
            z = np.stack([np.full_like(u, r[0]), u, np.full_like(u, r[1]), v], axis=-1)
            return np.exp(-0.5 * np.einsum("...i,ij,...j->...", z, g.A, z) + z @ g.b + g.c)

        numeric = _tensor_quadrature(fn, 12.0, 200)
        assert out(r) == pytest.approx(numeric, rel=1e-8)


def test_integrate_keeps_remaining_order():
    rng = np.random.default_rng(3)
    g = random_gaussian(rng, 3)
    out = integrate_out(g, [1])
    r = np.array([0.4, -1.1])
    x, w = leggauss(300)
    x, w = 15 * x, 15 * w
    z = np.stack([np.full_like(x, r[0]), x, np.full_like(x, r[1])], axis=-1)
    numeric = w @ np.exp(-0.5 * np.einsum("...i,ij,...j->...", z, g.A, z) + z @ g.b + g.c)
    assert out(r) == pytest.approx(numeric, rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=5), st.integers(min_value=0, max_value=2**32 - 1))
def test_total_integral_real_closed_form(dim, seed):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(dim, dim))
    A = M @ M.T + 0.5 * np.eye(dim)
    b = rng.normal(size=dim)
    expected = (2 * np.pi) ** (dim / 2) / np.sqrt(np.linalg.det(A)) * np.exp(0.5 * b @ np.linalg.solve(A, b))
    assert total_integral(ComplexGaussian(A, b, 0.0)).real == pytest.approx(expected, rel=1e-9)


@pytest.mark.parametrize("k", [0.0, 0.5, 3.0, -20.0])
def test_fresnel_phase_branch(k):
    # int exp(-(eps - i k) x^2 / 2) dx = sqrt(2 pi / (eps - i k)), principal root
    eps = 0.7
    g = ComplexGaussian([[eps - 1j * k]], [0.0])
    assert total_integral(g) == pytest.approx(np.sqrt(2 * np.pi / (eps - 1j * k)), rel=1e-12)


def test_log_det_branch_is_continuous_along_a_path():
    # det^-1/2 of diag(1 + i s, 1 + i s, 1 + i s) accumulates phase -3/2 arctan(s) beyond pi
    s = np.linspace(0, 50, 400)
    vals = np.array([log_inv_sqrt_det(np.eye(3) * (1 + 1j * si)) for si in s])
    assert np.allclose(vals.imag, -1.5 * np.arctan(s), atol=1e-12)
    assert np.max(np.abs(np.diff(vals.imag))) < 0.5  # a branch jump would be ~pi


def test_non_integrable_direction_raises():
    g = ComplexGaussian(np.diag([1.0, -0.5]), [0.0, 0.0])
    with pytest.raises(IntegrabilityError) as info:
        integrate_out(g, [1])
    assert info.value.eigenvalue < 0
    purely_oscillatory = ComplexGaussian([[1j]], [0.0])
    with pytest.raises(IntegrabilityError):
        total_integral(purely_oscillatory)


def test_integrate_nothing_returns_same_and_bad_index_raises():
    g = ComplexGaussian.unit(2)
    assert integrate_out(g, []) is g
    with pytest.raises(IndexError):
        integrate_out(g, [2])


def test_pullback_with_shift_matches_substitution():
    rng = np.random.default_rng(11)
    g = random_gaussian(rng, 3)
    T = rng.normal(size=(3, 2))
    s = rng.normal(size=3)
    h = pullback(g, T, s)
    for _ in range(5):
        w = rng.normal(size=2)
        assert h(w) == pytest.approx(direct(g, T @ w + s), rel=1e-11)


def test_embed_places_variables():
    g = ComplexGaussian([[2.0]], [1.0], 0.3)
    e = embed(g, 3, [2])
    assert e(np.array([5.0, -4.0, 0.7])) == pytest.approx(g(np.array([0.7])), rel=1e-14)


def test_gaussian_sum_evaluation_and_algebra():
    rng = np.random.default_rng(5)
    g1, g2 = random_gaussian(rng, 2), random_gaussian(rng, 2)
    s = GaussianSum((g1,)) + GaussianSum((g2,))
    z = rng.normal(size=(4, 2))
    assert np.allclose(s(z), [direct(g1, zi) + direct(g2, zi) for zi in z], rtol=1e-12)
    assert np.allclose(s.scaled(2.0)(z), 2 * s(z), rtol=1e-12)
    assert len(s) == 2 and s.dim == 2
    assert evaluate(GaussianSum(dim=2), z[0]) == 0
    with pytest.raises(ValueError):
        GaussianSum((g1, ComplexGaussian.unit(3)))
    with pytest.raises(ValueError):
        s(np.zeros(3))


def test_scaled_multiplies_value():
    g = ComplexGaussian([[1.0]], [0.0])
    assert g.scaled(-2.0)(np.array([0.0])) == pytest.approx(-2.0)
