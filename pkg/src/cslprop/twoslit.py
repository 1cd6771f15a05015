"""Closed-form two-slit interference under collapse-induced decoherence.

The transverse wavefunction leaving the slits is two Gaussians of width
``sigma`` centred at +/- ``mu``; the flight time ``t`` to the screen is an
input. The initial normalization prefactor 1/sqrt(2) is exact only for
mu >> sigma; the true trace is 1 + exp(-mu^2 / 2 sigma^2), and
``renormalize=True`` divides it out.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import propagator
from .gaussian import ComplexGaussian, GaussianSum
from .params import DomainError, PhysParams


@dataclass(frozen=True)
class TwoSlitConfig:
    sigma: float
    mu: float
    t: float
    params: PhysParams = field(default_factory=PhysParams)
    renormalize: bool = False

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise DomainError(f"sigma must be positive, got {self.sigma!r}")
        if self.mu < 0 or self.t < 0:
            raise DomainError("mu and t must be non-negative")

    def warnings(self) -> list[str]:
        out = []
        if self.mu <= self.sigma:
            out.append(
                f"twoslit: mu={self.mu:g} <= sigma={self.sigma:g}; peaks overlap initially and "
                f"the initial state is not normalized (trace {initial_trace(self, exact=True):.6g})"
            )
        length = self.params.localization_length
        if 2 * self.mu > 0.5 * length:
            out.append(
                f"twoslit: slit separation 2*mu={2 * self.mu:g} is not small compared with the "
                f"localization length {length:g}; the quadratic (large-length) limit is strained"
            )
        return out


def initial_trace(cfg: TwoSlitConfig, exact: bool = False) -> float:
    """Trace of the initial state as written (before any renormalization)."""
    if exact or not cfg.renormalize:
        return 1.0 + np.exp(-(cfg.mu**2) / (2.0 * cfg.sigma**2))
    return 1.0


def _norm_factor(cfg: TwoSlitConfig) -> float:
    return 1.0 / initial_trace(cfg, exact=True) if cfg.renormalize else 1.0


def initial_state(cfg: TwoSlitConfig) -> GaussianSum:
    """rho_0(x, y) = psi(x) psi*(y) as four Gaussian terms over (x, y)."""
    s2, mu = cfg.sigma**2, cfg.mu
    a = 1.0 / (2.0 * s2)
    log_pref = np.log(0.5 / np.sqrt(2.0 * np.pi * s2) * _norm_factor(cfg))
    terms = []
    for sx in (1.0, -1.0):
        for sy in (1.0, -1.0):
            b = np.array([sx * mu * a, sy * mu * a])
            terms.append(ComplexGaussian(np.diag([a, a]), b, log_pref - mu**2 * a))
    return GaussianSum(tuple(terms))


def spread_factor(cfg: TwoSlitConfig) -> float:
    """K = 2 D t^3 / 3 m^2 sigma^2 + hbar^2 t^2 / 4 m^2 sigma^4 + 1."""
    p = cfg.params
    m, s, t = p.mass, cfg.sigma, cfg.t
    return 2.0 * p.D * t**3 / (3.0 * m**2 * s**2) + p.hbar**2 * t**2 / (4.0 * m**2 * s**4) + 1.0


def damping_exponent(cfg: TwoSlitConfig) -> float:
    """Collapse-induced suppression exponent of the interference term."""
    p = cfg.params
    K = spread_factor(cfg)
    return p.D * cfg.t**3 * cfg.mu**2 / (3.0 * K * p.mass**2 * cfg.sigma**4)


def fringe_wavenumber(cfg: TwoSlitConfig) -> float:
    p = cfg.params
    return p.hbar * cfg.t * cfg.mu / (2.0 * p.mass * spread_factor(cfg) * cfg.sigma**4)


def screen_pdf(x, cfg: TwoSlitConfig):
    """Probability density on the screen after flight time ``cfg.t``."""
    x = np.asarray(x, dtype=float)
    K = spread_factor(cfg)
    s2, mu = cfg.sigma**2, cfg.mu
    left = np.exp(-((x - mu) ** 2) / (2.0 * K * s2))
    right = np.exp(-((x + mu) ** 2) / (2.0 * K * s2))
    cross = (
        2.0
        * np.cos(fringe_wavenumber(cfg) * x)
        * np.exp(-((x - mu) ** 2 + (x + mu) ** 2) / (4.0 * K * s2) - damping_exponent(cfg))
    )
    return 0.5 / np.sqrt(2.0 * np.pi * K * s2) * (left + right + cross) * _norm_factor(cfg)


def screen_pdf_by_evolution(x, cfg: TwoSlitConfig):
    """Same density computed by propagating :func:`initial_state` with the Gaussian engine."""
    rho_t = propagator.evolve(initial_state(cfg), cfg.t, cfg.params)
    return propagator.position_pdf(rho_t, x)


def overlap_time(cfg: TwoSlitConfig) -> float:
    """Time for the two dispersing peaks to overlap, m sigma mu / hbar."""
    p = cfg.params
    return p.mass * cfg.sigma * cfg.mu / p.hbar


def critical_D(cfg: TwoSlitConfig) -> float:
    """D above which fringes are suppressed before they form: hbar^3 / (m sigma mu^3)."""
    if cfg.mu <= 0:
        raise DomainError("critical D needs a positive slit separation")
    p = cfg.params
    return p.hbar**3 / (p.mass * cfg.sigma * cfg.mu**3)


def fringe_visibility(cfg: TwoSlitConfig, n_samples: int = 4001) -> float:
    """(max - min) / (max + min) of the screen density over the central fringe.

    The window is one half period either side of x = 0, so it holds the
    central maximum and the two neighbouring minima.
    """
    k = fringe_wavenumber(cfg)
    if k <= 0:
        return 0.0
    x = np.linspace(-np.pi / k, np.pi / k, n_samples)
    f = screen_pdf(x, cfg)
    hi, lo = float(f.max()), float(f.min())
    return (hi - lo) / (hi + lo)
