"""Physical constants, CSL parameters and unit handling.

Everything here is an immutable value type. Two unit conventions are used
throughout the package: SI, and "natural" units in which hbar, the particle
mass and one scenario length are all 1.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import constants

HBAR_SI = constants.hbar
AMU_SI = constants.physical_constants["atomic mass constant"][0]
NUCLEON_MASS_SI = constants.m_p

GRW_LAMBDA0 = 1e-16  # 1/s, per-nucleon localization rate
GRW_ALPHA = 1e14  # 1/m^2, i.e. localization length 1e-7 m


class DomainError(ValueError):
    """An input lies outside the domain where a quantity is defined."""


def _require_positive(**values: float) -> None:
    for name, value in values.items():
        if not np.isfinite(value) or value <= 0:
            raise DomainError(f"{name} must be positive, got {value!r}")


def lambda_from_mass(m: float, m0: float, lambda0: float) -> float:
    """Collapse rate of a body of mass ``m``: ``(m/m0)**2 * lambda0``."""
    _require_positive(m=m, m0=m0, lambda0=lambda0)
    return (m / m0) ** 2 * lambda0


def diffusion_coefficient(lam: float, alpha: float, hbar: float) -> float:
    """Momentum diffusion constant ``D = lam * alpha * hbar**2 / 4``."""
    _require_positive(lam=lam, alpha=alpha, hbar=hbar)
    return lam * alpha * hbar**2 / 4.0


@dataclass(frozen=True)
class PhysParams:
    """Constants and collapse parameters for a single particle species.

    ``lambda0`` may be zero, which switches the collapse dynamics off and
    recovers standard quantum mechanics (D = 0).
    """

    hbar: float = 1.0
    mass: float = 1.0
    m0: float = 1.0
    lambda0: float = 0.0
    alpha: float = 1.0

    def __post_init__(self) -> None:
        _require_positive(hbar=self.hbar, mass=self.mass, m0=self.m0, alpha=self.alpha)
        if not np.isfinite(self.lambda0) or self.lambda0 < 0:
            raise DomainError(f"lambda0 must be non-negative, got {self.lambda0!r}")

    @property
    def lam(self) -> float:
        if self.lambda0 == 0:
            return 0.0
        return lambda_from_mass(self.mass, self.m0, self.lambda0)

    @property
    def D(self) -> float:
        if self.lambda0 == 0:
            return 0.0
        return diffusion_coefficient(self.lam, self.alpha, self.hbar)

    @property
    def localization_length(self) -> float:
        return 1.0 / np.sqrt(self.alpha)

    @classmethod
    def natural(cls, D: float, alpha: float = 1.0, hbar: float = 1.0, mass: float = 1.0) -> PhysParams:
        """Parameters with a prescribed ``D`` (m0 = mass, so lambda = lambda0)."""
        if not np.isfinite(D) or D < 0:
            raise DomainError(f"D must be non-negative, got {D!r}")
        lambda0 = 4.0 * D / (alpha * hbar**2)
        return cls(hbar=hbar, mass=mass, m0=mass, lambda0=lambda0, alpha=alpha)

    @classmethod
    def grw(cls, mass: float) -> PhysParams:
        """SI parameters for a body of ``mass`` kg with the GRW rate and length."""
        return cls(hbar=HBAR_SI, mass=mass, m0=NUCLEON_MASS_SI, lambda0=GRW_LAMBDA0, alpha=GRW_ALPHA)

    def with_D(self, D: float) -> PhysParams:
        """Copy with ``lambda0`` adjusted so that the derived D equals ``D``."""
        if not np.isfinite(D) or D < 0:
            raise DomainError(f"D must be non-negative, got {D!r}")
        lam = 4.0 * D / (self.alpha * self.hbar**2)
        return dataclasses.replace(self, lambda0=lam * (self.m0 / self.mass) ** 2)


PRESETS = {"grw": {"lambda0": GRW_LAMBDA0, "alpha": GRW_ALPHA}}


@dataclass(frozen=True)
class UnitSystem:
    """Reference scales; a quantity in natural units is the SI value divided by its scale."""

    length_scale: float = 1.0
    mass_scale: float = 1.0
    time_scale: float = 1.0

    def __post_init__(self) -> None:
        _require_positive(
            length_scale=self.length_scale, mass_scale=self.mass_scale, time_scale=self.time_scale
        )

    @classmethod
    def natural(cls, hbar: float, mass: float, length: float) -> UnitSystem:
        """Scales for which hbar = mass = length = 1."""
        return cls(length_scale=length, mass_scale=mass, time_scale=mass * length**2 / hbar)

    # derived scales
    @property
    def action_scale(self) -> float:
        return self.mass_scale * self.length_scale**2 / self.time_scale

    @property
    def momentum_scale(self) -> float:
        return self.mass_scale * self.length_scale / self.time_scale

    @property
    def energy_scale(self) -> float:
        return self.mass_scale * self.length_scale**2 / self.time_scale**2

    @property
    def diffusion_scale(self) -> float:
        """Scale of D (momentum^2 / time)."""
        return self.momentum_scale**2 / self.time_scale


def to_natural(params: PhysParams, units: UnitSystem) -> PhysParams:
    return PhysParams(
        hbar=params.hbar / units.action_scale,
        mass=params.mass / units.mass_scale,
        m0=params.m0 / units.mass_scale,
        lambda0=params.lambda0 * units.time_scale,
        alpha=params.alpha * units.length_scale**2,
    )


def from_natural(params: PhysParams, units: UnitSystem) -> PhysParams:
    return PhysParams(
        hbar=params.hbar * units.action_scale,
        mass=params.mass * units.mass_scale,
        m0=params.m0 * units.mass_scale,
        lambda0=params.lambda0 / units.time_scale,
        alpha=params.alpha / units.length_scale**2,
    )


def parse_key_values(text: str) -> dict[str, str]:
    """Parse flat ``key=value`` text; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        out[key] = value
    return out


def read_config(path: str | Path) -> dict[str, str]:
    """Read a key=value file, or a flat JSON object if the content is JSON."""
    text = Path(path).read_text()
    if Path(path).suffix == ".json" or text.lstrip().startswith("{"):
        data = json.loads(text)
        if not isinstance(data, dict):
            raise ValueError("JSON config must be an object")
        return {str(k): v if isinstance(v, str) else json.dumps(v) for k, v in data.items()}
    return parse_key_values(text)


def load_params(path: str | Path) -> PhysParams:
    """SI parameters from a preset file with keys ``lambda0``, ``alpha``, ``mass_amu``
    (and optionally ``preset = grw`` to fill missing collapse parameters)."""
    cfg = read_config(path)
    allowed = {"preset", "lambda0", "alpha", "mass_amu"}
    unknown = set(cfg) - allowed
    if unknown:
        raise ValueError(f"unknown keys {sorted(unknown)}; valid keys are {sorted(allowed)}")
    base = dict(PRESETS[cfg["preset"]]) if "preset" in cfg else {}
    for key in ("lambda0", "alpha"):
        if key in cfg:
            base[key] = float(cfg[key])
    if "mass_amu" not in cfg:
        raise ValueError("mass_amu is required")
    missing = {"lambda0", "alpha"} - set(base)
    if missing:
        raise ValueError(f"missing keys {sorted(missing)}")
    return PhysParams(
        hbar=HBAR_SI,
        mass=float(cfg["mass_amu"]) * AMU_SI,
        m0=NUCLEON_MASS_SI,
        lambda0=base["lambda0"],
        alpha=base["alpha"],
    )
