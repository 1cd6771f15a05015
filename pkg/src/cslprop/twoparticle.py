"""Two identical, non-interacting bosons released from a common trap.

The collapse noise couples to the total density, so the two particles'
momentum kicks are correlated: the centre of mass X = (x1 + x2)/2 spreads
faster than half the separation xi/2 = (x1 - x2)/2. Coordinates of the
two-particle density matrix are ordered (x1, y1, x2, y2); kernel variables
append the primed copies.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import propagator
from .gaussian import ComplexGaussian, GaussianSum, embed, integrate_out, pullback
from .params import DomainError, PhysParams
from .propagator import _quad, position_kernel_terms


@dataclass(frozen=True)
class TwoParticleConfig:
    sigma: float
    t: float
    params: PhysParams = field(default_factory=PhysParams)

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise DomainError(f"sigma must be positive, got {self.sigma!r}")
        if self.t < 0:
            raise DomainError(f"t must be non-negative, got {self.t!r}")

    def warnings(self) -> list[str]:
        p = self.params
        K = (
            2.0 * p.D * self.t**3 / (3.0 * p.mass**2 * self.sigma**2)
            + p.hbar**2 * self.t**2 / (4.0 * p.mass**2 * self.sigma**4)
            + 1.0
        )
        width = 2.0 * self.sigma * np.sqrt(K)
        if width > p.localization_length:
            return [
                f"twoparticle: evolved packet width {width:.3g} exceeds the localization length "
                f"{p.localization_length:.3g}; the quadratic (large-length) limit is strained"
            ]
        return []


_COUPLINGS = (
    # (sign, unprimed pair, primed pair) for exp{sign * gamma [u^2 + u u' + u'^2]}
    (-1.0, (0, 3)),  # x1 - y2
    (-1.0, (2, 1)),  # x2 - y1
    (+1.0, (0, 2)),  # x1 - x2
    (+1.0, (1, 3)),  # y1 - y2
)


def _diff(dim: int, i: int, j: int) -> np.ndarray:
    v = np.zeros(dim)
    v[i] += 1.0
    v[j] -= 1.0
    return v


def two_particle_kernel_gaussian(dt: float, params: PhysParams) -> ComplexGaussian:
    """Propagator over (x1, y1, x2, y2, x1', y1', x2', y2')."""
    if not dt > 0:
        raise DomainError(f"elapsed time must be positive, got {dt!r}")
    terms = []
    for xi, yi in ((0, 1), (2, 3)):
        terms += position_kernel_terms(
            dt,
            params,
            _diff(8, xi, yi),
            _diff(8, xi + 4, yi + 4),
            _diff(8, xi, xi + 4),
            _diff(8, yi, yi + 4),
        )
    gam = params.D * dt / (3.0 * params.hbar**2)
    for sign, (i, j) in _COUPLINGS:
        u, up = _diff(8, i, j), _diff(8, i + 4, j + 4)
        terms += [(sign * gam, u, u), (sign * gam, u, up), (sign * gam, up, up)]
    const = 2.0 * np.log(params.mass / (2.0 * np.pi * params.hbar * dt))
    return ComplexGaussian.from_exponent(_quad(8, terms), None, const)


def two_particle_kernel(x1, y1, x2, y2, x1p, y1p, x2p, y2p, dt: float, params: PhysParams):
    """Direct evaluation of the two-particle propagator."""
    if not dt > 0:
        raise DomainError(f"elapsed time must be positive, got {dt!r}")
    out = propagator.position_kernel(x1, y1, x1p, y1p, dt, params) * propagator.position_kernel(
        x2, y2, x2p, y2p, dt, params
    )
    gam = params.D * dt / (3.0 * params.hbar**2)

    def block(u, up):
        return u**2 + u * up + up**2

    expo = (
        -gam * block(x1 - y2, x1p - y2p)
        - gam * block(x2 - y1, x2p - y1p)
        + gam * block(x1 - x2, x1p - x2p)
        + gam * block(y1 - y2, y1p - y2p)
    )
    return out * np.exp(expo)


def decoherence_rate(x1, y1, x2, y2, params: PhysParams):
    """Coefficient multiplying rho in the two-particle master equation's collapse term."""
    s = (x1 - y1) ** 2 + (x1 - y2) ** 2 + (x2 - y1) ** 2 + (x2 - y2) ** 2 - (x1 - x2) ** 2 - (y1 - y2) ** 2
    return params.D / params.hbar**2 * s


# 6th-order central stencils
_D1 = np.array([-1 / 60, 3 / 20, -3 / 4, 0.0, 3 / 4, -3 / 20, 1 / 60])
_D2 = np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90])
_OFFSETS = np.arange(-3, 4)


def master_equation_residual(point, dt: float, params: PhysParams, h: float = 2.5e-3, ht: float | None = None):
    """Finite-difference residual of the kernel in the two-particle master equation.

    ``point`` is (x1, y1, x2, y2, x1', y1', x2', y2'); derivatives act on the
    unprimed coordinates and on the elapsed time. Returns ``(residual, scale)``
    where scale is the sum of magnitudes of the individual terms.
    """
    point = np.asarray(point, dtype=float)
    ht = h * dt if ht is None else ht

    def J(pt, tau):
        return two_particle_kernel(*pt, tau, params)

    dJdt = sum(c * J(point, dt + k * ht) for c, k in zip(_D1, _OFFSETS)) / ht
    kin = 1j * params.hbar / (2.0 * params.mass)
    lap_terms = []
    for idx, sign in ((0, 1.0), (1, -1.0), (2, 1.0), (3, -1.0)):
        shifts = np.zeros((7, 8))
        shifts[:, idx] = _OFFSETS * h
        vals = J((point + shifts).T, dt)
        lap_terms.append(sign * kin * (_D2 @ vals) / h**2)
    J0 = J(point, dt)
    deco = decoherence_rate(*point[:4], params) * J0
    rhs = sum(lap_terms) - deco
    scale = abs(dJdt) + sum(abs(x) for x in lap_terms) + abs(deco)
    return abs(dJdt - rhs), scale


def initial_state(cfg: TwoParticleConfig) -> GaussianSum:
    """psi(x1, x2) psi*(y1, y2) with both particles in the trap ground state of width sigma."""
    a = 1.0 / (2.0 * cfg.sigma**2)
    g = ComplexGaussian(np.diag([a] * 4), np.zeros(4), -np.log(2.0 * np.pi * cfg.sigma**2))
    return GaussianSum((g,))


def evolve(rho0: GaussianSum, dt: float, params: PhysParams) -> GaussianSum:
    """Propagate a two-particle Gaussian-sum density matrix over (x1, y1, x2, y2)."""
    if dt == 0:
        return rho0
    kernel = two_particle_kernel_gaussian(dt, params)
    primed = [4, 5, 6, 7]
    return rho0.map(lambda term: integrate_out(kernel * embed(term, 8, primed), primed))


def _L(cfg: TwoParticleConfig) -> float:
    p, s, t = cfg.params, cfg.sigma, cfg.t
    m, hbar, D = p.mass, p.hbar, p.D
    return (
        D * hbar**2 * t**5 / (3.0 * m**4 * s**6)
        + hbar**4 * t**4 / (16.0 * m**4 * s**8)
        + 4.0 * D * t**3 / (3.0 * m**2 * s**2)
        + hbar**2 * t**2 / (2.0 * m**2 * s**4)
        + 1.0
    )


def _spread_terms(cfg: TwoParticleConfig) -> tuple[float, float]:
    p, s, t = cfg.params, cfg.sigma, cfg.t
    disp = p.hbar**2 * t**2 / (4.0 * p.mass**2 * s**4)
    coll = 4.0 * p.D * t**3 / (3.0 * p.mass**2 * s**2)
    return disp + 1.0, coll + disp + 1.0


def joint_pdf(X, xi, cfg: TwoParticleConfig):
    """Joint density of centre of mass X and separation xi after release time ``cfg.t``."""
    X = np.asarray(X, dtype=float)
    xi = np.asarray(xi, dtype=float)
    s2 = cfg.sigma**2
    L = _L(cfg)
    cX, cxi = _spread_terms(cfg)
    return (
        np.exp(-cX * X**2 / (s2 * L)) * np.exp(-cxi * (xi / 2.0) ** 2 / (s2 * L)) / (2.0 * np.pi * s2 * np.sqrt(L))
    )


_DIAG2 = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])  # (x1, x2) -> (x1, x1, x2, x2)


def joint_pdf_by_evolution(X, xi, cfg: TwoParticleConfig):
    """Same density from the two-particle kernel and Gaussian integration."""
    rho = evolve(initial_state(cfg), cfg.t, cfg.params)
    diag = rho.map(lambda term: pullback(term, _DIAG2))
    X, xi = np.broadcast_arrays(np.asarray(X, dtype=float), np.asarray(xi, dtype=float))
    pts = np.stack([X + xi / 2.0, X - xi / 2.0], axis=-1)
    vals = diag(pts)
    return vals.real


class SpreadStatistics(NamedTuple):
    sigma_X: float
    sigma_xi_half: float
    ratio: float


def spread_statistics(cfg: TwoParticleConfig) -> SpreadStatistics:
    """Standard deviations of X and xi/2."""
    L = _L(cfg)
    cX, cxi = _spread_terms(cfg)
    s2 = cfg.sigma**2
    sx = float(np.sqrt(s2 * L / (2.0 * cX)))
    sh = float(np.sqrt(s2 * L / (2.0 * cxi)))
    return SpreadStatistics(sx, sh, sx / sh)


def independent_std(cfg: TwoParticleConfig) -> float:
    """Std of X (and of xi/2) if each particle decohered independently: sigma sqrt(K / 2)."""
    cX, _ = _spread_terms(cfg)
    p = cfg.params
    K = cX + 2.0 * p.D * cfg.t**3 / (3.0 * p.mass**2 * cfg.sigma**2)
    return cfg.sigma * np.sqrt(K / 2.0)


def asymptotic_exponents(cfg: TwoParticleConfig, t_range: tuple[float, float], n: int = 200) -> tuple[float, float]:
    """Log-log slopes of sigma_X and sigma_{xi/2} over the top decade of ``t_range``."""
    t_min, t_max = t_range
    if not (t_min > 0 and t_max / t_min >= 1e3 * (1 - 1e-12)):
        raise DomainError(f"t_range must span at least three decades, got {t_range}")
    ts = np.geomspace(t_max / 10.0, t_max, n)
    sx, sh = [], []
    for t in ts:
        st = spread_statistics(TwoParticleConfig(cfg.sigma, t, cfg.params))
        sx.append(st.sigma_X)
        sh.append(st.sigma_xi_half)
    lt = np.log(ts)
    return float(np.polyfit(lt, np.log(sx), 1)[0]), float(np.polyfit(lt, np.log(sh), 1)[0])


_TRACE2 = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 1.0]])  # (x1,y1,z)->(x1,y1,z,z)


def marginal_single(cfg: TwoParticleConfig) -> GaussianSum:
    """One-particle density matrix over (x, y) after tracing out particle 2."""
    rho = evolve(initial_state(cfg), cfg.t, cfg.params)
    return rho.map(lambda term: integrate_out(pullback(term, _TRACE2), [2]))
