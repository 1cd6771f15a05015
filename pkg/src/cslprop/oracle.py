"""Independent grid and Monte Carlo engines for checking the analytic propagators.

``step_master`` integrates the one-particle master equation on a uniform
(x, y) grid with Strang splitting: a half step of the pointwise
decoherence/potential factor, an exact spectral kinetic step, and another
half step. Both the quadratic decoherence rate D (x - y)^2 / hbar^2 and the
exponential form lam (1 - exp(-alpha (x - y)^2 / 4)) are supported.

``step_sde`` advances a batch of wavefunctions under the quadratic-coupling
stochastic Schrodinger equation

    d psi = [-i H / hbar - (D / hbar^2)(x - <x>)^2] dt psi + (sqrt(2D) / hbar)(x - <x>) dW psi,

whose ensemble average obeys the quadratic master equation. Each trajectory
draws its noise from its own Philox stream keyed by (seed, trajectory index),
so a trajectory's path does not depend on how the ensemble is batched.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np

from .gaussian import GaussianSum
from .params import PhysParams

MIN_GRID_POINTS = 64
MIN_POINTS_PER_SIGMA = 16
BOUNDARY_TOL = 1e-10
HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-6
DEFAULT_MAX_NORM_DRIFT = 0.5
FORMS = ("quadratic", "exponential")


class StepError(ArithmeticError):
    """Invalid time step or a per-step invariant (trace, hermiticity, norm) was violated."""


class ResolutionError(ArithmeticError):
    """Grid does not resolve the state, or the state has reached the grid edge."""


class GridMismatchError(ValueError):
    pass


def _check_grid(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < MIN_GRID_POINTS:
        raise ResolutionError(f"grid needs at least {MIN_GRID_POINTS} points, got {x.size}")
    dx = (x[-1] - x[0]) / (x.size - 1)
    if not dx > 0 or not np.allclose(np.diff(x), dx, rtol=1e-9, atol=0.0):
        raise ResolutionError("grid must be uniform and increasing")
    return float(dx)


def make_grid(n: int, dx: float) -> np.ndarray:
    """n points spaced dx, centred on zero."""
    return (np.arange(n) - n // 2) * float(dx)


@dataclass(frozen=True, eq=False)
class GridDensity:
    x: np.ndarray
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=float)
        _check_grid(x)
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (x.size, x.size):
            raise ValueError(f"values must have shape {(x.size, x.size)}, got {values.shape}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def dx(self) -> float:
        return float((self.x[-1] - self.x[0]) / (self.x.size - 1))

    @classmethod
    def from_gaussian(cls, rho: GaussianSum, x, time: float = 0.0) -> GridDensity:
        x = np.asarray(x, dtype=float)
        X, Y = np.meshgrid(x, x, indexing="ij")
        return cls(x, rho(np.stack([X, Y], axis=-1)), time)

    @classmethod
    def from_wavefunction(cls, psi, x, time: float = 0.0) -> GridDensity:
        psi = np.asarray(psi, dtype=complex)
        return cls(x, np.outer(psi, psi.conj()), time)

    def diagonal(self) -> np.ndarray:
        """Position density rho(x, x) (real part)."""
        return np.diagonal(self.values).real.copy()

    def trace(self) -> float:
        return float(np.sum(np.diagonal(self.values).real) * self.dx)

    def moments(self) -> tuple[float, float]:
        """Mean and variance of the diagonal."""
        p = self.diagonal()
        w = p / p.sum()
        mean = float(w @ self.x)
        return mean, float(w @ (self.x - mean) ** 2)

    def hermiticity_error(self) -> float:
        v = self.values
        return float(np.max(np.abs(v - v.conj().T)) / max(np.max(np.abs(v)), np.finfo(float).tiny))


def decoherence_rate(u, params: PhysParams, form: str = "quadratic"):
    """Rate multiplying rho(x, y) in the collapse term, as a function of u = x - y."""
    u = np.asarray(u, dtype=float)
    if form == "quadratic":
        return params.D / params.hbar**2 * u**2
    if form == "exponential":
        return params.lam * -np.expm1(-params.alpha * u**2 / 4.0)
    raise ValueError(f"form must be one of {FORMS}, got {form!r}")


def _wavenumbers(n: int, dx: float) -> np.ndarray:
    return 2.0 * np.pi * np.fft.fftfreq(n, dx)


def check_resolution(rho: GridDensity) -> None:
    """Raise :class:`ResolutionError` if the state is under-resolved or touches the edges."""
    _, var = rho.moments()
    pts = np.sqrt(max(var, 0.0)) / rho.dx
    if pts < MIN_POINTS_PER_SIGMA * (1.0 - 1e-9):
        raise ResolutionError(f"{pts:.1f} grid points per standard deviation, need {MIN_POINTS_PER_SIGMA}")
    v = np.abs(rho.values)
    edge = max(v[0].max(), v[-1].max(), v[:, 0].max(), v[:, -1].max()) / v.max()
    if edge > BOUNDARY_TOL:
        raise ResolutionError(f"relative density {edge:.2e} at the grid boundary exceeds {BOUNDARY_TOL:g}")


def _check_dt(dt: float) -> None:
    if not (np.isfinite(dt) and dt > 0):
        raise StepError(f"time step must be positive and finite, got {dt!r}")


def step_master(
    rho: GridDensity,
    dt: float,
    params: PhysParams,
    potential=None,
    form: str = "quadratic",
    kinetic: bool = True,
    check: bool = True,
) -> GridDensity:
    """One Strang-split step of the master equation.

    The split-step scheme is unconditionally stable (every factor has modulus
    at most one), so the only step-size condition is dt > 0; accuracy is
    second order in dt. ``potential`` is V sampled on ``rho.x``.
    """
    _check_dt(dt)
    x = rho.x
    if check:
        check_resolution(rho)
    expo = -decoherence_rate(x[:, None] - x[None, :], params, form)
    if potential is not None:
        V = np.asarray(potential, dtype=float)
        if V.shape != x.shape:
            raise ValueError("potential must be sampled on the density's grid")
        expo = expo - 1j / params.hbar * (V[:, None] - V[None, :])
    half = np.exp(0.5 * dt * expo)
    v = rho.values * half
    if kinetic:
        k = _wavenumbers(rho.n, rho.dx)
        ph = np.exp(-1j * params.hbar * k**2 * dt / (2.0 * params.mass))
        v = np.fft.ifft2(np.fft.fft2(v) * ph[:, None] * ph.conj()[None, :])
    v = v * half
    out = GridDensity(x, v, rho.time + dt)
    if check:
        herm = out.hermiticity_error()
        if herm > HERMITICITY_TOL:
            raise StepError(f"hermiticity violated by {herm:.2e}")
        gap = abs(out.trace() - rho.trace())
        if gap > TRACE_TOL:
            raise StepError(f"trace changed by {gap:.2e} in one step")
    return out


def _n_steps(t: float, dt: float) -> int:
    _check_dt(dt)
    n = int(round(t / dt))
    if n < 0 or abs(n * dt - t) > 1e-9 * max(t, dt):
        raise StepError(f"t={t!r} is not a whole number of steps of {dt!r}")
    return n


def evolve_master(
    rho: GridDensity,
    t: float,
    dt: float,
    params: PhysParams,
    potential=None,
    form: str = "quadratic",
    kinetic: bool = True,
) -> GridDensity:
    """Advance by ``t`` in steps of ``dt``; the trace is also checked against the initial value."""
    t0 = rho.trace()
    for _ in range(_n_steps(t, dt)):
        rho = step_master(rho, dt, params, potential, form, kinetic)
    gap = abs(rho.trace() - t0)
    if gap > TRACE_TOL:
        raise StepError(f"trace drifted by {gap:.2e}")
    check_resolution(rho)
    return rho


class Comparison(NamedTuple):
    l2_error: float
    sup_error: float
    trace_gap: float


def _as_grid(rho, like: GridDensity) -> GridDensity:
    if isinstance(rho, GaussianSum):
        return GridDensity.from_gaussian(rho, like.x, like.time)
    return rho


def compare(rho_a: GridDensity, rho_b: GridDensity | GaussianSum) -> Comparison:
    """Errors of ``rho_a`` relative to ``rho_b`` (which may be an analytic Gaussian sum).

    l2 and sup errors are normalized by the corresponding norm of ``rho_b``;
    the trace gap is absolute.
    """
    rho_b = _as_grid(rho_b, rho_a)
    if rho_a.x.shape != rho_b.x.shape or not np.array_equal(rho_a.x, rho_b.x):
        raise GridMismatchError("densities live on different grids")
    diff = rho_a.values - rho_b.values
    tiny = np.finfo(float).tiny
    l2 = np.linalg.norm(diff) / max(np.linalg.norm(rho_b.values), tiny)
    sup = np.max(np.abs(diff)) / max(np.max(np.abs(rho_b.values)), tiny)
    return Comparison(float(l2), float(sup), abs(rho_a.trace() - rho_b.trace()))


def trace_distance(rho_a: GridDensity, rho_b: GridDensity | GaussianSum) -> float:
    """1/2 || rho_a - rho_b ||_1 of the discretized operators (kernel times dx)."""
    rho_b = _as_grid(rho_b, rho_a)
    if not np.array_equal(rho_a.x, rho_b.x):
        raise GridMismatchError("densities live on different grids")
    diff = (rho_a.values - rho_b.values) * rho_a.dx
    diff = 0.5 * (diff + diff.conj().T)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))


# -- stochastic trajectories ------------------------------------------------


def trajectory_generator(seed: int, index: int) -> np.random.Generator:
    """Counter-based generator for trajectory ``index`` of a run seeded with ``seed``."""
    if not (0 <= seed < 2**64 and 0 <= index < 2**64):
        raise ValueError("seed and trajectory index must fit in 64 unsigned bits")
    return np.random.Generator(np.random.Philox(key=(int(seed) << 64) | int(index)))


@dataclass(frozen=True, eq=False)
class SdeTrajectory:
    """A batch of wavefunctions psi[j] on ``x``; trajectory j uses stream (noise_seed, indices[j])."""

    x: np.ndarray
    psi: np.ndarray
    noise_seed: int
    indices: tuple[int, ...]
    generators: tuple[np.random.Generator, ...]
    time: float = 0.0

    @classmethod
    def start(cls, psi0, x, n_traj: int, seed: int, first_index: int = 0) -> SdeTrajectory:
        x = np.asarray(x, dtype=float)
        dx = _check_grid(x)
        psi0 = np.asarray(psi0, dtype=complex)
        psi0 = psi0 / np.sqrt(np.sum(np.abs(psi0) ** 2) * dx)
        idx = tuple(range(first_index, first_index + n_traj))
        gens = tuple(trajectory_generator(seed, i) for i in idx)
        return cls(x, np.tile(psi0, (n_traj, 1)), int(seed), idx, gens)

    @property
    def dx(self) -> float:
        return float((self.x[-1] - self.x[0]) / (self.x.size - 1))

    def norms(self) -> np.ndarray:
        return np.sum(np.abs(self.psi) ** 2, axis=-1) * self.dx


def step_sde(
    traj: SdeTrajectory,
    dt: float,
    params: PhysParams,
    potential=None,
    max_norm_drift: float = DEFAULT_MAX_NORM_DRIFT,
) -> SdeTrajectory:
    """One step for every trajectory in the batch, then renormalization.

    Kinetic (and potential) evolution is applied in two half steps around the
    stochastic factor exp(L dW - L^2 dt) with L = sqrt(2D)(x - <x>)/hbar,
    which solves the noise part exactly for frozen <x>. Raises
    :class:`StepError` if any trajectory's squared norm moved by more than
    ``max_norm_drift`` before renormalization.
    """
    _check_dt(dt)
    x, dx = traj.x, traj.dx
    k = _wavenumbers(x.size, dx)
    kin = np.exp(-1j * params.hbar * k**2 * (0.5 * dt) / (2.0 * params.mass))
    pot = None if potential is None else np.exp(-0.5j * dt * np.asarray(potential, dtype=float) / params.hbar)

    def half(psi):
        if pot is not None:
            psi = psi * pot
        return np.fft.ifft(np.fft.fft(psi, axis=-1) * kin, axis=-1)

    psi = half(traj.psi)
    if params.D > 0:
        dens = np.abs(psi) ** 2
        mean = (dens @ x) / dens.sum(axis=-1)
        L = np.sqrt(2.0 * params.D) / params.hbar * (x[None, :] - mean[:, None])
        dW = np.sqrt(dt) * np.array([g.standard_normal() for g in traj.generators])
        psi = psi * np.exp(L * dW[:, None] - L**2 * dt)
    psi = half(psi)
    norms = np.sum(np.abs(psi) ** 2, axis=-1) * dx
    drift = float(np.max(np.abs(norms - 1.0)))
    if drift > max_norm_drift:
        raise StepError(f"norm drift {drift:.2e} exceeds {max_norm_drift:g}; reduce dt")
    psi = psi / np.sqrt(norms)[:, None]
    return replace(traj, psi=psi, time=traj.time + dt)


def evolve_sde(traj: SdeTrajectory, t: float, dt: float, params: PhysParams, potential=None, **kw) -> SdeTrajectory:
    for _ in range(_n_steps(t, dt)):
        traj = step_sde(traj, dt, params, potential, **kw)
    return traj


def ensemble_density(trajs: SdeTrajectory | Sequence[SdeTrajectory]) -> GridDensity:
    """Average of |psi><psi| over all trajectories (batches are summed in order)."""
    if isinstance(trajs, SdeTrajectory):
        trajs = [trajs]
    x = trajs[0].x
    total = np.zeros((x.size, x.size), dtype=complex)
    count = 0
    for tr in trajs:
        if not np.array_equal(tr.x, x):
            raise GridMismatchError("trajectory batches live on different grids")
        total += tr.psi.T @ tr.psi.conj()
        count += tr.psi.shape[0]
    return GridDensity(x, total / count, trajs[0].time)


def run_ensemble(
    psi0, x, n_traj: int, t: float, dt: float, params: PhysParams, seed: int, batch: int = 500, potential=None, **kw
) -> GridDensity:
    """Evolve ``n_traj`` trajectories in batches and return their average density matrix."""
    out = []
    for start in range(0, n_traj, batch):
        tr = SdeTrajectory.start(psi0, x, min(batch, n_traj - start), seed, first_index=start)
        out.append(evolve_sde(tr, t, dt, params, potential, **kw))
    return ensemble_density(out)


def statistical_scale(n_traj: int) -> float:
    """N^(-1/2): the Monte Carlo scale against which ensemble trace distances are judged."""
    return 1.0 / np.sqrt(n_traj)


# -- approximation-regime comparison ------------------------------------------


def form_gap(rho0: GridDensity, t: float, dt: float, params: PhysParams) -> float:
    """max |rho_exp(x,x) - rho_quad(x,x)| / max rho_quad(x,x) after evolving both forms by ``t``."""
    quad = evolve_master(rho0, t, dt, params, form="quadratic").diagonal()
    expo = evolve_master(rho0, t, dt, params, form="exponential").diagonal()
    return float(np.max(np.abs(expo - quad)) / np.max(quad))
