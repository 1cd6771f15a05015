"""One-particle density-matrix propagators for the quadratic collapse master equation.

With V = 0 the master equation

    d/dt rho(x, y) = (i hbar / 2m)(d_x^2 - d_y^2) rho - (D / hbar^2)(x - y)^2 rho

has a Gaussian propagator, so a Gaussian-sum density matrix stays a Gaussian
sum and evolution reduces to exact Gaussian integrals over the primed
coordinates. Density matrices here are :class:`GaussianSum` objects over the
two variables (x, y) or (p, q).

Normalization of the momentum kernel: with the delta function
delta(p - q - p' + q') resolved, the kernel is a normalized heat kernel in
the centre variable (p + q)/2, i.e. it maps rho(p', q') with measure
dp' dq'. This was checked against the position kernel by Fourier
transforming evolved states (tests/test_propagator.py).
"""

from __future__ import annotations

import numpy as np

from .gaussian import ComplexGaussian, GaussianSum, embed, integrate_out, pullback
from .params import DomainError, PhysParams

HERMITICITY_RTOL = 1e-10


class HermiticityError(ArithmeticError):
    pass


def _quad(dim: int, terms) -> np.ndarray:
    """Quadratic-form matrix for a sum of ``coef * (v.z)(w.z)`` products."""
    Q = np.zeros((dim, dim), dtype=complex)
    for coef, v, w in terms:
        v = np.asarray(v, dtype=float)
        w = np.asarray(w, dtype=float)
        Q += 0.5 * coef * (np.outer(v, w) + np.outer(w, v))
    return Q


def _check_dt(dt) -> None:
    if not np.all(np.asarray(dt) > 0):
        raise DomainError(f"elapsed time must be positive, got {dt!r}")


def position_kernel_terms(dt: float, params: PhysParams, u, up, x_minus_xp, y_minus_yp):
    """Exponent pieces of the position kernel expressed through coordinate vectors.

    Shared by the one- and two-particle kernels, which differ only in which
    linear combinations of coordinates play the roles of x - y etc.
    """
    kin = params.mass / (2.0 * params.hbar * dt)
    gam = params.D * dt / (3.0 * params.hbar**2)
    return [
        (1j * kin, x_minus_xp, x_minus_xp),
        (-1j * kin, y_minus_yp, y_minus_yp),
        (-gam, u, u),
        (-gam, u, up),
        (-gam, up, up),
    ]


def position_kernel_gaussian(dt: float, params: PhysParams) -> ComplexGaussian:
    """J(x, y, t | x', y', t') as a Gaussian over (x, y, x', y')."""
    _check_dt(dt)
    u = [1, -1, 0, 0]
    up = [0, 0, 1, -1]
    Q = _quad(4, position_kernel_terms(dt, params, u, up, [1, 0, -1, 0], [0, 1, 0, -1]))
    const = np.log(params.mass / (2.0 * np.pi * params.hbar * dt))
    return ComplexGaussian.from_exponent(Q, None, const)


def position_kernel(x, y, xp, yp, dt: float, params: PhysParams):
    """Position-space propagator J(x, y, t | x', y', t') with dt = t - t'."""
    _check_dt(dt)
    x, y, xp, yp = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, xp, yp)))
    kin = params.mass / (2.0 * params.hbar * dt)
    gam = params.D * dt / (3.0 * params.hbar**2)
    u, up = x - y, xp - yp
    phase = 1j * kin * ((x - xp) ** 2 - (y - yp) ** 2)
    decay = -gam * (u**2 + u * up + up**2)
    return params.mass / (2.0 * np.pi * params.hbar * dt) * np.exp(phase + decay)


def momentum_kernel_gaussian(dt: float, params: PhysParams) -> ComplexGaussian:
    """Reduced momentum propagator as a Gaussian over (p, q, p'), with q' = p' - p + q."""
    _check_dt(dt)
    D, m, hbar = params.D, params.mass, params.hbar
    if D <= 0:
        raise DomainError("momentum kernel is a delta function at D = 0; evolve() handles that limit")
    p, q, pp = np.eye(3)
    qp = pp - p + q
    ph = -1j * dt / (4.0 * m * hbar)
    Q = _quad(
        3,
        [
            (ph, p, p),
            (-ph, q, q),
            (ph, pp, pp),
            (-ph, qp, qp),
            (-1.0 / (4.0 * D * dt), p - pp, p - pp),
            (-D * dt**3 / (12.0 * m**2 * hbar**2), p - q, p - q),
        ],
    )
    return ComplexGaussian.from_exponent(Q, None, -0.5 * np.log(4.0 * np.pi * D * dt))


def momentum_kernel_reduced(p, pp, dp_minus, dt: float, params: PhysParams):
    """Momentum propagator with the conserved difference p - q = p' - q' = ``dp_minus``."""
    _check_dt(dt)
    D, m, hbar = params.D, params.mass, params.hbar
    if D <= 0:
        raise DomainError("momentum kernel is a delta function at D = 0")
    p, pp, k = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (p, pp, dp_minus)))
    q, qp = p - k, pp - k
    phase = -1j * dt / (4.0 * m * hbar) * (p**2 - q**2 + pp**2 - qp**2)
    decay = -((p - pp) ** 2) / (4.0 * D * dt) - D * dt**3 * k**2 / (12.0 * m**2 * hbar**2)
    return np.exp(phase + decay) / np.sqrt(4.0 * np.pi * D * dt)


def _evolve_term_position(term: ComplexGaussian, kernel: ComplexGaussian) -> ComplexGaussian:
    return integrate_out(kernel * embed(term, 4, [2, 3]), [2, 3])


def _evolve_term_momentum(term: ComplexGaussian, kernel: ComplexGaussian) -> ComplexGaussian:
    # rho0(p', q') with (p', q') = (p', p' - p + q) in variables (p, q, p')
    T = np.array([[0.0, 0.0, 1.0], [-1.0, 1.0, 1.0]])
    return integrate_out(kernel * pullback(term, T), [2])


def _free_momentum_phase(dt: float, params: PhysParams) -> ComplexGaussian:
    ph = -1j * dt / (2.0 * params.mass * params.hbar)
    return ComplexGaussian.from_exponent(np.diag([ph, -ph]))


def evolve(rho0: GaussianSum, dt: float, params: PhysParams, representation: str = "position") -> GaussianSum:
    """Evolve a Gaussian-sum density matrix by ``dt`` in the given representation."""
    if rho0.dim not in (2, None):
        raise ValueError(f"one-particle density matrix must have dim 2, got {rho0.dim}")
    if dt == 0:
        return rho0
    _check_dt(dt)
    if representation == "position":
        kernel = position_kernel_gaussian(dt, params)
        return rho0.map(lambda t: _evolve_term_position(t, kernel))
    if representation == "momentum":
        if params.D == 0:
            phase = _free_momentum_phase(dt, params)
            return rho0.map(lambda t: t * phase)
        kernel = momentum_kernel_gaussian(dt, params)
        return rho0.map(lambda t: _evolve_term_momentum(t, kernel))
    raise ValueError(f"unknown representation {representation!r}")


def fourier_transform(rho: GaussianSum, hbar: float = 1.0, inverse: bool = False) -> GaussianSum:
    """rho(p, q) = (2 pi hbar)^-1 int dx dy exp(-i p x / hbar + i q y / hbar) rho(x, y).

    ``inverse=True`` maps momentum back to position.
    """
    s = 1.0 if inverse else -1.0
    Q = np.zeros((4, 4), dtype=complex)
    Q[0, 2] = Q[2, 0] = s * 0.5j / hbar
    Q[1, 3] = Q[3, 1] = -s * 0.5j / hbar
    phase = ComplexGaussian.from_exponent(Q, None, -np.log(2.0 * np.pi * hbar))
    return rho.map(lambda t: integrate_out(phase * embed(t, 4, [2, 3]), [2, 3]))


def pure_gaussian_state(sigma: float, x0: float = 0.0, p0: float = 0.0, hbar: float = 1.0) -> GaussianSum:
    """psi(x) psi*(y) for psi(x) = (2 pi sigma^2)^(-1/4) exp(-(x - x0)^2 / 4 sigma^2 + i p0 x / hbar)."""
    a = 1.0 / (2.0 * sigma**2)
    A = np.diag([a, a])
    b = np.array([x0 * a + 1j * p0 / hbar, x0 * a - 1j * p0 / hbar])
    c = -0.5 * np.log(2.0 * np.pi * sigma**2) - x0**2 * a
    return GaussianSum((ComplexGaussian(A, b, c),))


_DIAG = np.array([[1.0], [1.0]])


def diagonal(rho: GaussianSum) -> GaussianSum:
    """The one-variable Gaussian sum x -> rho(x, x)."""
    return rho.map(lambda t: pullback(t, _DIAG))


def position_pdf(rho: GaussianSum, x) -> np.ndarray | float:
    """rho(x, x), with the imaginary part checked and discarded."""
    x = np.asarray(x, dtype=float)
    pts = np.stack([x, x], axis=-1)
    vals = np.zeros(x.shape, dtype=complex)
    scale = np.zeros(x.shape)
    for t in rho.terms:
        v = t(pts)
        vals = vals + v
        scale = scale + np.abs(v)
    tol = HERMITICITY_RTOL * max(float(np.max(scale, initial=0.0)), np.finfo(float).tiny)
    bad = np.abs(vals.imag) > tol
    if np.any(bad):
        worst = float(np.max(np.abs(vals.imag)))
        raise HermiticityError(f"diagonal has imaginary part {worst:.3e} above tolerance {tol:.3e}")
    out = vals.real
    return out[()] if out.ndim == 0 else out


def diagonal_moments(rho: GaussianSum) -> tuple[float, float, float]:
    """Exact (trace, mean, variance) of the diagonal x -> rho(x, x)."""
    m0 = m1 = m2 = 0.0 + 0.0j
    for t in diagonal(rho).terms:
        a, b = t.A[0, 0], t.b[0]
        if a.real <= 0:
            raise ArithmeticError("diagonal term is not normalizable")
        w = np.sqrt(2.0 * np.pi / a) * np.exp(b * b / (2.0 * a) + t.c)
        mu = b / a
        m0 += w
        m1 += w * mu
        m2 += w * (1.0 / a + mu * mu)
    norm = m0.real
    mean = (m1 / m0).real
    return norm, mean, (m2 / m0).real - mean**2
