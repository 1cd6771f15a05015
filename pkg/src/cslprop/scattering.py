"""Second-order perturbative scattering of a plane wave from a Gaussian barrier.

The incoming state is a momentum eigenstate ``pbar``; the barrier is

    V(x) = V0 (2 pi a^2)^(-1/2) exp(-x^2 / 2 a^2),   int V dx = V0.

At zeroth order the collapse noise diffuses the momentum; the first-order
diagonal vanishes identically; the second order splits into the terms A
(both potential insertions on one side of the density matrix) and B (one on
each side, which carries the reflected peak). Each is a double time
integral over 0 <= t'' <= t' <= t whose integrand is a Gaussian in the final
momentum ``p``, so momentum integrals over the whole line or the half line
p < 0 are done in closed form and only the time integrals are numerical.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.integrate import quad_vec
from scipy.special import roots_legendre, wofz

from .gaussian import ComplexGaussian, integrate_out, pullback
from .params import DomainError, PhysParams
from .propagator import momentum_kernel_gaussian, momentum_kernel_reduced

PLANE_WAVE_RATIO = 10.0  # pbar * sigma / hbar below this draws a warning
MOMENTUM_SEPARATION = 5.0  # pbar / sqrt(D t) below this draws a warning
PERTURBATIVE_LIMIT = 0.2
_HERMITE_NODES = 24


class QuadratureError(ArithmeticError):
    def __init__(self, message: str, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class BranchError(ArithmeticError):
    pass


@dataclass(frozen=True)
class ScatteringConfig:
    pbar: float
    V0: float
    a: float
    t: float
    params: PhysParams = field(default_factory=PhysParams)
    sigma: float | None = None

    def __post_init__(self) -> None:
        if not self.pbar > 0:
            raise DomainError(f"pbar must be positive, got {self.pbar!r}")
        if not self.t > 0:
            raise DomainError(f"t must be positive, got {self.t!r}")
        if not self.a > 0:
            raise DomainError(f"barrier width a must be positive, got {self.a!r}")

    @classmethod
    def from_packet(cls, pbar: float, V0: float, a: float, sigma: float, params: PhysParams) -> ScatteringConfig:
        """Crossing time t = 2 m xbar / pbar with xbar = sqrt(pi/2) sigma."""
        xbar = np.sqrt(np.pi / 2.0) * sigma
        return cls(pbar, V0, a, 2.0 * params.mass * xbar / pbar, params, sigma)

    @property
    def Dt(self) -> float:
        return self.params.D * self.t

    def warnings(self) -> list[str]:
        out = []
        hbar, m = self.params.hbar, self.params.mass
        if self.sigma is not None and self.pbar * self.sigma / hbar < PLANE_WAVE_RATIO:
            out.append(
                f"scatter: pbar*sigma/hbar = {self.pbar * self.sigma / hbar:.3g} is not >> 1; "
                "the plane-wave limit is poor"
            )
        if self.Dt > 0 and self.pbar < MOMENTUM_SEPARATION * np.sqrt(self.Dt):
            out.append(
                f"scatter: pbar = {self.pbar:.3g} is not >> sqrt(D t) = {np.sqrt(self.Dt):.3g}; "
                "momentum diffusion compromises the packet"
            )
        ratio = (self.V0 * m / (hbar * self.pbar)) ** 2
        if ratio > PERTURBATIVE_LIMIT:
            out.append(
                f"scatter: second-order correction relative to zeroth order ~ (V0 m / hbar pbar)^2 = "
                f"{ratio:.3g} exceeds {PERTURBATIVE_LIMIT:g}; perturbation theory is unreliable"
            )
        return out


@dataclass(frozen=True)
class QuadratureSpec:
    """Outer adaptive Gauss-Kronrod in t' - t'', inner Gauss-Legendre in t''."""

    rel_tol: float = 1e-7
    abs_tol: float = 1e-13
    max_subdivisions: int = 4000
    inner_orders: tuple[int, ...] = (16, 32, 64, 128, 256)

    def __post_init__(self) -> None:
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")


# ---------------------------------------------------------------------------
# closed-form pieces


def barrier_fourier(p, cfg: ScatteringConfig):
    """V(p) = (2 pi hbar)^(-1/2) int dx exp(-i p x / hbar) V(x) for the Gaussian barrier."""
    hbar = cfg.params.hbar
    p = np.asarray(p, dtype=float)
    return cfg.V0 / np.sqrt(2.0 * np.pi * hbar) * np.exp(-(cfg.a**2) * p**2 / (2.0 * hbar**2))


def barrier_position(x, cfg: ScatteringConfig):
    return cfg.V0 / np.sqrt(2.0 * np.pi * cfg.a**2) * np.exp(-np.asarray(x) ** 2 / (2.0 * cfg.a**2))


def zeroth_order_pdf(p, cfg: ScatteringConfig):
    """Diffused plane wave (4 pi D t)^(-1/2) exp(-(p - pbar)^2 / 4 D t).

    At D t = 0 the distribution is a delta function at pbar, which has no
    pointwise value; a :class:`DomainError` is raised instead.
    """
    Dt = cfg.Dt
    if Dt <= 0:
        raise DomainError(f"zeroth-order distribution is a delta at p = {cfg.pbar} when D t = 0")
    p = np.asarray(p, dtype=float)
    return np.exp(-((p - cfg.pbar) ** 2) / (4.0 * Dt)) / np.sqrt(4.0 * np.pi * Dt)


def born_reflection(cfg: ScatteringConfig, p: float | None = None) -> float:
    """Born reflection factor (V0 m / hbar p)^2 exp(-4 a^2 p^2 / hbar^2), at p = pbar by default."""
    p = cfg.pbar if p is None else p
    if p == 0:
        raise DomainError("Born reflection diverges at zero momentum")
    hbar, m = cfg.params.hbar, cfg.params.mass
    return (cfg.V0 * m / (hbar * p)) ** 2 * np.exp(-4.0 * cfg.a**2 * p**2 / hbar**2)


def time_scales(cfg: ScatteringConfig) -> tuple[float, float, float]:
    """(t_E, t_1, t_2) = (m hbar / pbar^2, m hbar / D t, m hbar / pbar sqrt(D t))."""
    Dt = cfg.Dt
    if Dt <= 0:
        raise DomainError("time scales t_1, t_2 need D t > 0")
    mh = cfg.params.mass * cfg.params.hbar
    return mh / cfg.pbar**2, mh / Dt, mh / (cfg.pbar * np.sqrt(Dt))


# ---------------------------------------------------------------------------
# first order


def first_order_terms(p, cfg: ScatteringConfig, barrier: Callable | None = None, n_time: int = 24):
    """The two potential-insertion contributions to the first-order diagonal rho(p, p).

    For a plane-wave initial state every propagator is diagonal in the
    difference p - q, so the delta functions pin the barrier transform to
    zero momentum transfer in both terms. The terms are evaluated by
    separate routes: the left insertion V rho through the Gaussian engine
    (convolution of the two propagator segments integrated analytically),
    the right insertion rho V by Gauss-Hermite quadrature over the
    intermediate momentum using the reduced kernel directly. Both use
    Gauss-Legendre in the insertion time. Their sum is the first-order
    diagonal.
    """
    barrier = barrier or (lambda k: barrier_fourier(k, cfg))
    hbar, t, D = cfg.params.hbar, cfg.t, cfg.params.D
    if cfg.Dt <= 0:
        raise DomainError("first-order terms are evaluated with D t > 0")
    x, w = roots_legendre(n_time)
    tp = 0.5 * t * (x + 1.0)
    w = 0.5 * t * w
    z, wz = hermegauss(_HERMITE_NODES)
    wz = wz * np.exp(0.5 * z**2)
    p = np.atleast_1d(np.asarray(p, dtype=float))
    conv_left = np.zeros_like(p, dtype=complex)
    conv_right = np.zeros_like(p, dtype=complex)
    # on the diagonal the kernel depends only on p - p1, so momenta are measured
    # from pbar; otherwise pbar^2 / 4 D t' swamps the exponent at small t'
    rel = (p - cfg.pbar)[:, None]
    for ti, wi in zip(tp, w):
        # int dp1 J(p, p | p1, p1; t - t') J(p1, p1 | pbar, pbar; t'), as a Gaussian in (p, p1)
        late = _diagonal_kernel(t - ti, cfg.params, _LATE)
        early = _diagonal_kernel(ti, cfg.params, _EARLY)
        joint = integrate_out(late * early, [1])
        conv_left += wi * joint(rel)
        # same convolution over q1, centred on the product of the two diffusion Gaussians
        v_late, v_early = 2.0 * D * (t - ti), 2.0 * D * ti
        mean = (p * v_early + cfg.pbar * v_late) / (v_late + v_early)
        sd = np.sqrt(v_late * v_early / (v_late + v_early))
        q1 = mean[:, None] + sd * z[None, :]
        f = momentum_kernel_reduced(p[:, None], q1, 0.0, t - ti, cfg.params) * momentum_kernel_reduced(
            q1, cfg.pbar, 0.0, ti, cfg.params
        )
        conv_right += wi * sd * (f @ wz)
    pref = -1.0 / np.sqrt(2.0 * np.pi * hbar) * (1j / hbar)
    zero = np.zeros_like(p)
    # V(p2 - p1) delta(q2 - q1): p2 = p1 = q2 on the diagonal
    term_p = pref * barrier(zero) * conv_left
    # -V(q1 - q2) delta(p2 - p1): q1 = q2 = p2 on the diagonal
    term_q = -pref * barrier(zero) * conv_right
    return term_p, term_q


def _diagonal_kernel(dt: float, params: PhysParams, T: np.ndarray) -> ComplexGaussian:
    """Reduced momentum kernel (variables p, q, p') pulled back onto the pair (p, p1)."""
    return pullback(momentum_kernel_gaussian(dt, params), T)


_LATE = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])  # (p, p1) -> (p, p, p1)
_EARLY = np.array([[0.0, 1.0], [0.0, 1.0], [0.0, 0.0]])  # (p, p1) -> (p1, p1, 0)


def first_order_diagonal(p, cfg: ScatteringConfig):
    """First-order correction to rho(p, p): identically zero for a plane wave.

    The two insertions give V(0) times the same propagator convolution with
    opposite signs (:func:`first_order_terms`), so the sum vanishes exactly.
    """
    return np.zeros_like(np.asarray(p, dtype=float))


# ---------------------------------------------------------------------------
# second order


def _sqrt_branch(K, tp, tpp):
    """Square root continuous along the integration path.

    Along the physical path Re K_A >= 0 and Re K_B >= 1, so the principal
    branch is continuous; a value near the negative real axis means the
    path has left that region and the branch cannot be tracked.
    """
    bad = (K.real < 0) & (np.abs(K.imag) < 1e-8 * np.abs(K))
    if np.any(bad):
        i = np.flatnonzero(bad.ravel())[0]
        raise BranchError(
            f"square-root branch lost at t'={np.ravel(tp)[i]!r}, t''={np.ravel(tpp)[i]!r} (K={np.ravel(K)[i]!r})"
        )
    return np.sqrt(K)


def spread_K(tp, tpp, cfg: ScatteringConfig, include_width: bool = True):
    """(K_A, K_B) at insertion times t' >= t''."""
    D, m, hbar = cfg.params.D, cfg.params.mass, cfg.params.hbar
    t, a = cfg.t, cfg.a
    tp = np.asarray(tp, dtype=float)
    tpp = np.asarray(tpp, dtype=float)
    tau = tp - tpp
    KA = (
        4.0 * D * a**2 * t / hbar**2 * include_width
        + D**2 / (3.0 * m**2 * hbar**2) * tau**2 * (4.0 * (tp + 2.0 * tpp) * t - 3.0 * (tp + tpp) ** 2)
        - 2j * D / (m * hbar) * tau * t
    )
    KB = 1.0 + KA + 2j * D / (m * hbar) * tau * (tp + tpp)
    return KA, KB


def gaussian_coefficients(kind: str, tp, tpp, cfg: ScatteringConfig, include_width: bool = True):
    """Write the A or B integrand as ``pref * exp(-alpha p^2 + beta p + gamma)``.

    Returns ``(pref, alpha, beta, gamma)`` broadcast over ``tp, tpp``.
    """
    D, m, hbar = cfg.params.D, cfg.params.mass, cfg.params.hbar
    t, a, pb = cfg.t, cfg.a, cfg.pbar
    tp = np.asarray(tp, dtype=float)
    tpp = np.asarray(tpp, dtype=float)
    if np.any(tpp > tp) or np.any(tpp < 0) or np.any(tp > t):
        raise DomainError("insertion times must satisfy 0 <= t'' <= t' <= t")
    tau = tp - tpp
    KA, KB = spread_K(tp, tpp, cfg, include_width)
    c0 = m * cfg.V0**2 / (2.0 * np.pi * hbar**3 * pb) / t
    drift = D * tau**2 / (3.0 * m**2 * hbar**2)
    s1 = tp + 2.0 * tpp
    s2 = 3.0 * t - 2.0 * tp - tpp
    a2 = a**2 / hbar**2
    ph = tau / (2.0 * m * hbar)
    if kind == "A":
        K = KA
        pref = -c0 / _sqrt_branch(KA, tp, tpp)
        alpha = (a2 - 1j * ph + drift * s1) / K
        beta = (2.0 * a2 * pb - 2j * ph * pb - drift * tau * pb) / K
        gamma = (-a2 * pb**2 + 1j * ph * pb**2 - drift * s2 * pb**2) / K
    elif kind == "B":
        K = KB
        pref = c0 / _sqrt_branch(KB, tp, tpp)
        alpha = (a2 - 1j * ph + drift * s1) / K
        beta = (2.0 * a2 * pb - drift * tau * pb) / K
        gamma = (-a2 * pb**2 - 1j * ph * pb**2 - drift * s2 * pb**2) / K
    else:
        raise ValueError(f"kind must be 'A' or 'B', got {kind!r}")
    return pref, alpha, beta, gamma


def _integrand(kind, tp, tpp, p, cfg):
    pref, alpha, beta, gamma = gaussian_coefficients(kind, tp, tpp, cfg)
    p = np.asarray(p, dtype=float)
    return pref * np.exp(-alpha * p**2 + beta * p + gamma)


def integrand_A(tp, tpp, p, cfg: ScatteringConfig):
    """Integrand of the A term (same-side insertions), including its 1/t prefactor."""
    return _integrand("A", tp, tpp, p, cfg)


def integrand_B(tp, tpp, p, cfg: ScatteringConfig):
    """Integrand of the B term (opposite-side insertions), including its 1/t prefactor."""
    return _integrand("B", tp, tpp, p, cfg)


def _check_alpha(alpha):
    if np.any(alpha.real <= 0):
        raise ArithmeticError("momentum integrand is not a decaying Gaussian (Re alpha <= 0)")


def full_line_moment0(alpha, beta, gamma):
    """int_R exp(-alpha p^2 + beta p + gamma) dp."""
    _check_alpha(alpha)
    return np.sqrt(np.pi / alpha) * np.exp(beta**2 / (4.0 * alpha) + gamma)


def half_line_moments(alpha, beta, gamma):
    """(J0, J1, J2): int_{-inf}^0 p^k exp(-alpha p^2 + beta p + gamma) dp for k = 0, 1, 2."""
    _check_alpha(alpha)
    sa = np.sqrt(alpha)
    w = beta / (2.0 * sa)
    eg = np.exp(gamma)
    # erfcx(w) = wofz(i w); for Re w < 0 use erfcx(w) = 2 exp(w^2) - erfcx(-w) to avoid overflow
    neg = w.real < 0
    ex = np.empty(np.broadcast(w, eg).shape, dtype=complex)
    w, eg_b = np.broadcast_arrays(w, eg)
    ex[~neg] = wofz(1j * w[~neg]) * eg_b[~neg]
    wn = w[neg]
    ex[neg] = 2.0 * np.exp(wn * wn + np.broadcast_to(gamma, w.shape)[neg]) - wofz(-1j * wn) * eg_b[neg]
    J0 = 0.5 * np.sqrt(np.pi) / sa * ex
    J1 = (beta * J0 - eg) / (2.0 * alpha)
    J2 = (beta * J1 + J0) / (2.0 * alpha)
    return J0, J1, J2


@dataclass
class TimeIntegral:
    value: np.ndarray
    error: float
    inner_order: int
    n_intervals: int


def _breakpoints(cfg: ScatteringConfig) -> list[float]:
    m, hbar = cfg.params.mass, cfg.params.hbar
    scales = [cfg.a**2 * m / hbar, m * hbar / cfg.pbar**2]
    if cfg.Dt > 0:
        tE, t1, t2 = time_scales(cfg)
        scales += [t2, t1]
    pts = set()
    for s in scales:
        for f in (0.25, 1.0, 4.0):
            v = s * f
            if 0 < v < cfg.t:
                pts.add(v)
    return sorted(pts)


def _choose_inner_order(fn, cfg: ScatteringConfig, quad: QuadratureSpec) -> int:
    """Smallest Gauss-Legendre order whose t'' integral agrees with the next order."""
    # tau = 0 itself is avoided: without the width term K_A vanishes there
    probes = [1e-9 * cfg.t] + _breakpoints(cfg) + [0.5 * cfg.t, 0.9 * cfg.t]
    orders = quad.inner_orders
    for n, n2 in zip(orders[:-1], orders[1:]):
        ok = True
        for tau in probes:
            v1, v2 = _inner(fn, tau, cfg.t, n), _inner(fn, tau, cfg.t, n2)
            scale = max(np.max(np.abs(v2)), quad.abs_tol)
            if np.max(np.abs(v1 - v2)) > 0.1 * quad.rel_tol * scale:
                ok = False
                break
        if ok:
            return n
    return orders[-1]


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl(n: int):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = roots_legendre(n)
    return _GL_CACHE[n]


def _inner(fn, tau: float, t: float, n: int) -> np.ndarray:
    """int_0^{t - tau} dt'' fn(t'' + tau, t'') -> array over fn's trailing axis."""
    span = t - tau
    if span <= 0:
        return np.zeros_like(fn(np.array([t]), np.array([0.0]))[0])
    x, w = _gl(n)
    tpp = 0.5 * span * (x + 1.0)
    vals = fn(tpp + tau, tpp)
    return 0.5 * span * (w @ vals)


def time_integral(fn, cfg: ScatteringConfig, quad: QuadratureSpec | None = None) -> TimeIntegral:
    """Integrate ``fn(t', t'')`` over the triangle 0 <= t'' <= t' <= t.

    ``fn`` takes 1-D arrays of t', t'' (same length) and returns an array of
    shape (len, ...). The outer integral over tau = t' - t'' is adaptive and
    seeded with breakpoints at the physical time scales, where the
    integrand changes character.
    """
    quad = quad or QuadratureSpec()
    n = _choose_inner_order(fn, cfg, quad)
    res, err, info = quad_vec(
        lambda tau: _inner(fn, tau, cfg.t, n),
        0.0,
        cfg.t,
        epsabs=quad.abs_tol,
        epsrel=quad.rel_tol,
        norm="max",
        limit=quad.max_subdivisions,
        points=_breakpoints(cfg) or None,
        full_output=True,
    )
    if not info.success:
        raise QuadratureError(
            f"time quadrature did not converge ({info.message}); error estimate {err:.3e}", res, err
        )
    return TimeIntegral(np.asarray(res), float(err), n, int(info.intervals.shape[0]))


@dataclass
class SecondOrderResult:
    p: np.ndarray
    value: np.ndarray
    error: float
    A: np.ndarray
    B: np.ndarray


def second_order_pdf(p, cfg: ScatteringConfig, quad: QuadratureSpec | None = None) -> SecondOrderResult:
    """rho^(2)(p, p) = 2 Re(A + B) at each momentum in ``p``, with a quadrature error estimate."""
    p = np.atleast_1d(np.asarray(p, dtype=float))

    def fn(tp, tpp):
        a = integrand_A(tp[:, None], tpp[:, None], p[None, :], cfg)
        b = integrand_B(tp[:, None], tpp[:, None], p[None, :], cfg)
        return np.concatenate([a, b], axis=1)

    ti = time_integral(fn, cfg, quad)
    A, B = ti.value[: p.size], ti.value[p.size :]
    value = 2.0 * (A.real + B.real)
    return SecondOrderResult(p, value, 4.0 * ti.error, A, B)


@dataclass
class MomentumIntegrals:
    """Closed-form-in-p, quadrature-in-time integrals of the second-order distribution."""

    total: float  # int dp rho2 over all p
    reflected: float  # int_{p<0} dp rho2
    transmitted: float  # int_{p>0} dp rho2
    reflected_mean: float
    reflected_std: float
    error: float


def momentum_integrals(
    cfg: ScatteringConfig, quad: QuadratureSpec | None = None, include_width: bool = True
) -> MomentumIntegrals:
    """Integrate the second-order distribution over momentum.

    ``include_width=False`` drops the 4 D a^2 t / hbar^2 term from K_A (and
    hence K_B); it exists only to measure how much that term matters.
    """

    def fn(tp, tpp):
        cols = []
        for kind in ("A", "B"):
            pref, al, be, ga = gaussian_coefficients(kind, tp, tpp, cfg, include_width)
            full = pref * full_line_moment0(al, be, ga)
            J0, J1, J2 = half_line_moments(al, be, ga)
            cols += [full, pref * J0, pref * J1, pref * J2]
        return np.stack(cols, axis=1)

    ti = time_integral(fn, cfg, quad)
    v = 2.0 * ti.value.real
    total = v[0] + v[4]
    r0, r1, r2 = v[1] + v[5], v[2] + v[6], v[3] + v[7]
    mean = r1 / r0
    var = r2 / r0 - mean**2
    return MomentumIntegrals(
        total=total,
        reflected=r0,
        transmitted=total - r0,
        reflected_mean=mean,
        reflected_std=float(np.sqrt(max(var, 0.0))),
        error=2.0 * ti.error,
    )


def reflection_probability(cfg: ScatteringConfig, quad: QuadratureSpec | None = None) -> tuple[float, float]:
    """(R, width): probability in the reflected peak (p < 0) and its momentum spread."""
    if cfg.Dt > 0 and cfg.pbar <= 3.0 * np.sqrt(cfg.Dt):
        raise DomainError(
            f"reflected and transmitted peaks overlap: pbar={cfg.pbar:g}, sqrt(D t)={np.sqrt(cfg.Dt):g}"
        )
    mi = momentum_integrals(cfg, quad)
    return mi.reflected, mi.reflected_std


def check_perturbative(p, second, cfg: ScatteringConfig) -> list[str]:
    """Warn where the second-order term exceeds 20% of the zeroth order (in absolute value)."""
    zeroth = zeroth_order_pdf(p, cfg)
    peak = 1.0 / np.sqrt(4.0 * np.pi * cfg.Dt)
    mask = zeroth > 1e-3 * peak
    if np.any(np.abs(second[mask]) > PERTURBATIVE_LIMIT * zeroth[mask]):
        msg = "scatter: second-order correction exceeds 20% of zeroth order on the sampled grid"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        return [msg]
    return []
