"""Command-line front end: ``cslprop --scenario NAME [--config FILE] [--set k=v ...]``.

Each scenario has a fixed set of keys with defaults (natural units, hbar = m = 1,
unless physical keys select SI). Output is a ``#``-prefixed header holding the
resolved parameters, version, seed, warnings and column units, followed by the
data. Identical inputs give byte-identical output.

Exit codes: 0 success, 2 configuration error, 3 domain error, 4 numerical
non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import __version__, oracle, propagator, scattering, twoparticle, twoslit
from .gaussian import IntegrabilityError
from .params import AMU_SI, HBAR_SI, NUCLEON_MASS_SI, PRESETS, DomainError, PhysParams, read_config

EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_NUMERIC = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


# -- key handling -------------------------------------------------------------

_NATURAL_KEYS = {"hbar": "1", "mass": "1"}
_PHYSICAL_KEYS = ("preset", "lambda0", "mass_amu")

_SCENARIO_KEYS: dict[str, dict[str, str]] = {
    "twoslit": {
        "sigma": "1",
        "mu": "5",
        "t": "10",
        "D": "0,0.001,0.01",
        "x_min": "-40",
        "x_max": "40",
        "n_points": "801",
        "renormalize": "false",
    },
    "scatter": {
        "pbar": "1",
        "V0": "0.1",
        "a": "0.1",
        "t": "100",
        "D": "0.0001",
        "sigma": "",
        "p_min": "-2",
        "p_max": "2",
        "n_points": "201",
        "rel_tol": "1e-7",
    },
    "twoparticle": {
        "sigma": "1",
        "D": "0.1",
        "t": "",
        "t_min": "0",
        "t_max": "10",
        "n_times": "101",
        "X_max": "5",
        "xi_max": "5",
        "n_points": "41",
    },
    "oracle-check": {
        "sigma": "1",
        "D": "0.01",
        "n_grid": "512",
        "dx": "0.0625",
        "dt": "0.01",
        "t_final": "1",
        "form": "quadratic",
        "n_traj": "0",
        "seed": "0",
    },
}
_PHYSICAL_OK = {"twoslit", "twoparticle"}


def valid_keys(scenario: str) -> list[str]:
    keys = set(_SCENARIO_KEYS[scenario]) | set(_NATURAL_KEYS) | {"alpha"}
    if scenario in _PHYSICAL_OK:
        keys |= set(_PHYSICAL_KEYS)
    return sorted(keys)


def _float(values: dict, key: str) -> float:
    try:
        return float(values[key])
    except ValueError:
        raise ConfigError(f"key {key!r}: expected a number, got {values[key]!r}") from None


def _int(values: dict, key: str) -> int:
    v = _float(values, key)
    if v != int(v):
        raise ConfigError(f"key {key!r}: expected an integer, got {values[key]!r}")
    return int(v)


def _bool(values: dict, key: str) -> bool:
    v = str(values[key]).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"key {key!r}: expected true/false, got {values[key]!r}")


def _float_list(values: dict, key: str) -> list[float]:
    text = str(values[key]).strip()
    try:
        if text.startswith("["):
            items = json.loads(text)
            return [float(v) for v in items]
        return [float(v) for v in text.split(",") if v.strip()]
    except (ValueError, TypeError):
        raise ConfigError(f"key {key!r}: expected a comma-separated list of numbers, got {text!r}") from None


def resolve_values(scenario: str, file_values: dict, overrides: dict) -> dict[str, str]:
    if scenario not in _SCENARIO_KEYS:
        raise ConfigError(f"unknown scenario {scenario!r}; valid scenarios are {sorted(_SCENARIO_KEYS)}")
    allowed = set(valid_keys(scenario))
    given = {**file_values, **overrides}
    unknown = sorted(set(given) - allowed)
    if unknown:
        raise ConfigError(f"unknown keys {unknown} for scenario {scenario!r}; valid keys are {sorted(allowed)}")
    values = {**_NATURAL_KEYS, **_SCENARIO_KEYS[scenario], **{k: str(v) for k, v in given.items()}}
    physical = any(k in given for k in _PHYSICAL_KEYS)
    if physical:
        clash = sorted(k for k in ("hbar", "mass", "D") if k in given)
        if clash:
            raise ConfigError(f"keys {clash} cannot be combined with physical keys {list(_PHYSICAL_KEYS)}")
        if "mass_amu" not in given:
            raise ConfigError("physical parameters need mass_amu")
        if "preset" in given and given["preset"] not in PRESETS:
            raise ConfigError(f"unknown preset {given['preset']!r}; valid presets are {sorted(PRESETS)}")
        for k in ("hbar", "mass", "D"):
            if k not in given:
                values.pop(k, None)
        values["_physical"] = "true"
    return values


def _params(values: dict, D: float | None = None) -> PhysParams:
    if values.get("_physical") == "true":
        base = dict(PRESETS[values["preset"]]) if "preset" in values else {}
        for key in ("lambda0", "alpha"):
            if key in values:
                base[key] = _float(values, key)
        missing = sorted({"lambda0", "alpha"} - set(base))
        if missing:
            raise ConfigError(f"physical parameters need {missing} (or a preset)")
        return PhysParams(
            hbar=HBAR_SI,
            mass=_float(values, "mass_amu") * AMU_SI,
            m0=NUCLEON_MASS_SI,
            lambda0=base["lambda0"],
            alpha=base["alpha"],
        )
    D = _float(values, "D") if D is None else D
    alpha = _float(values, "alpha") if "alpha" in values else 1.0
    return PhysParams.natural(D, alpha=alpha, hbar=_float(values, "hbar"), mass=_float(values, "mass"))


def _length_checked(values: dict) -> bool:
    """The large-length validity check needs a localization length: SI runs, or natural runs with alpha set."""
    return values.get("_physical") == "true" or "alpha" in values


# -- results ---------------------------------------------------------------------


@dataclass
class Result:
    params: dict[str, str]
    derived: dict[str, float] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    units: dict[str, str] = field(default_factory=dict)
    columns: dict[str, np.ndarray] = field(default_factory=dict)
    stats: dict[str, float] = field(default_factory=dict)
    cost: dict[str, float] = field(default_factory=dict)


def _units(values: dict) -> dict[str, str]:
    if values.get("_physical") == "true":
        return {"length": "m", "time": "s", "momentum": "kg m/s", "D": "kg^2 m^2 s^-3", "mass": "kg"}
    return {
        "length": "natural length",
        "time": "natural time",
        "momentum": "natural momentum",
        "D": "natural momentum^2/time",
        "mass": "natural mass",
    }


def _linspace(values, lo, hi, n):
    n_points = _int(values, n)
    if n_points < 2:
        raise ConfigError(f"{n} must be at least 2")
    return np.linspace(_float(values, lo), _float(values, hi), n_points)


def _shown(values: dict) -> dict[str, str]:
    return {k: v for k, v in sorted(values.items()) if not k.startswith("_")}


def _twoslit(values: dict, validate: bool) -> Result:
    u = _units(values)
    physical = values.get("_physical") == "true"
    Ds = [None] if physical else _float_list(values, "D")
    if not Ds:
        raise ConfigError("D needs at least one value")
    x = _linspace(values, "x_min", "x_max", "n_points")
    res = Result(_shown(values), units={"x": u["length"]})
    if not validate:
        res.columns["x"] = x
    for D in Ds:
        p = _params(values, D)
        cfg = twoslit.TwoSlitConfig(
            _float(values, "sigma"), _float(values, "mu"), _float(values, "t"), p, _bool(values, "renormalize")
        )
        tag = f"D={p.D:.6g}"
        ws = cfg.warnings()
        if not _length_checked(values):
            ws = [w for w in ws if "localization length" not in w]
        res.warnings += [w for w in ws if w not in res.warnings]
        res.derived[f"K[{tag}]"] = twoslit.spread_factor(cfg)
        res.stats[f"damping_exponent[{tag}]"] = twoslit.damping_exponent(cfg)
        res.stats[f"fringe_visibility[{tag}]"] = twoslit.fringe_visibility(cfg)
        if cfg.mu > 0:
            res.derived["critical_D"] = twoslit.critical_D(cfg)
        res.derived["overlap_time"] = twoslit.overlap_time(cfg)
        res.units[f"pdf[{tag}]"] = f"1/{u['length']}"
        if not validate:
            res.columns[f"pdf[{tag}]"] = twoslit.screen_pdf(x, cfg)
    res.cost["evaluations"] = float(x.size * len(Ds))
    return res


def _scatter(values: dict, validate: bool) -> Result:
    p = _params(values)
    sigma = _float(values, "sigma") if values["sigma"] != "" else None
    cfg = scattering.ScatteringConfig(
        _float(values, "pbar"), _float(values, "V0"), _float(values, "a"), _float(values, "t"), p, sigma
    )
    quad = scattering.QuadratureSpec(rel_tol=_float(values, "rel_tol"))
    grid = _linspace(values, "p_min", "p_max", "n_points")
    res = Result(_shown(values), warnings=cfg.warnings())
    t_E, t_1, t_2 = scattering.time_scales(cfg)
    res.derived.update({"D": p.D, "sqrt_Dt": np.sqrt(cfg.Dt), "t_E": t_E, "t_1": t_1, "t_2": t_2})
    res.derived["born_reflection"] = scattering.born_reflection(cfg)
    res.units = {"p": "natural momentum", "zeroth": "1/natural momentum", "second_over_V0sq": "1/(natural momentum (energy length)^2)"}
    res.cost["quadrature_nodes_bound"] = float(quad.max_subdivisions * 21 * max(quad.inner_orders) * (grid.size + 4))
    if validate:
        return res
    second = scattering.second_order_pdf(grid, cfg, quad)
    V0sq = cfg.V0**2 if cfg.V0 != 0 else 1.0
    res.columns = {"p": grid, "zeroth": scattering.zeroth_order_pdf(grid, cfg), "second_over_V0sq": second.value / V0sq}
    res.stats["second_quadrature_error"] = second.error
    with warnings.catch_warnings():
        # reported in the header instead
        warnings.simplefilter("ignore", RuntimeWarning)
        flagged = scattering.check_perturbative(grid, second.value, cfg)
    res.warnings += [w for w in flagged if w not in res.warnings]
    mi = scattering.momentum_integrals(cfg, quad)
    res.stats.update(
        {
            "integral_second": mi.total,
            "reflection_probability": mi.reflected,
            "reflected_mean": mi.reflected_mean,
            "reflected_std": mi.reflected_std,
            "integral_error": mi.error,
        }
    )
    return res


def _twoparticle(values: dict, validate: bool) -> Result:
    u = _units(values)
    p = _params(values)
    sigma = _float(values, "sigma")
    res = Result(_shown(values))
    res.derived["D"] = p.D

    def note(cfg):
        ws = cfg.warnings() if _length_checked(values) else []
        res.warnings.extend(w for w in ws if w not in res.warnings)

    if values["t"] != "":
        cfg = twoparticle.TwoParticleConfig(sigma, _float(values, "t"), p)
        note(cfg)
        st = twoparticle.spread_statistics(cfg)
        res.stats.update({"sigma_X": st.sigma_X, "sigma_xi_half": st.sigma_xi_half, "ratio": st.ratio})
        n = _int(values, "n_points")
        X = np.linspace(-_float(values, "X_max"), _float(values, "X_max"), n)
        xi = np.linspace(-_float(values, "xi_max"), _float(values, "xi_max"), n)
        XX, XI = np.meshgrid(X, xi, indexing="ij")
        res.units = {"X": u["length"], "xi": u["length"], "pdf": f"1/{u['length']}^2"}
        res.cost["evaluations"] = float(n * n)
        if not validate:
            res.columns = {"X": XX.ravel(), "xi": XI.ravel(), "pdf": twoparticle.joint_pdf(XX, XI, cfg).ravel()}
        return res
    ts = _linspace(values, "t_min", "t_max", "n_times")
    if ts[0] < 0:
        raise DomainError("t_min must be non-negative")
    note(twoparticle.TwoParticleConfig(sigma, float(ts[-1]), p))
    res.units = {"t": u["time"], "sigma_X": u["length"], "sigma_xi_half": u["length"]}
    res.cost["evaluations"] = float(ts.size)
    if not validate:
        stats = [twoparticle.spread_statistics(twoparticle.TwoParticleConfig(sigma, float(t), p)) for t in ts]
        res.columns = {
            "t": ts,
            "sigma_X": np.array([s.sigma_X for s in stats]),
            "sigma_xi_half": np.array([s.sigma_xi_half for s in stats]),
        }
    return res


def _oracle(values: dict, validate: bool) -> Result:
    p = _params(values)
    form = values["form"]
    if form not in oracle.FORMS:
        raise ConfigError(f"form must be one of {list(oracle.FORMS)}, got {form!r}")
    n, dx, dt, t = _int(values, "n_grid"), _float(values, "dx"), _float(values, "dt"), _float(values, "t_final")
    n_traj, seed, sigma = _int(values, "n_traj"), _int(values, "seed"), _float(values, "sigma")
    if n_traj < 0:
        raise ConfigError("n_traj must be non-negative")
    x = oracle.make_grid(n, dx)
    res = Result(_shown(values))
    res.derived["D"] = p.D
    res.units = {"x": "natural length", "grid_pdf": "1/natural length", "analytic_pdf": "1/natural length"}
    steps = int(round(t / dt)) if dt > 0 else 0
    res.cost.update(
        {
            "grid_memory_bytes": float(16 * n * n),
            "master_steps": float(steps),
            "sde_memory_bytes": float(16 * n * min(n_traj, 500)),
            "sde_steps": float(steps * n_traj),
        }
    )
    rho0 = propagator.pure_gaussian_state(sigma, hbar=p.hbar)
    grid0 = oracle.GridDensity.from_gaussian(rho0, x)
    oracle.check_resolution(grid0)
    if validate:
        return res
    rho = oracle.evolve_master(grid0, t, dt, p, form=form)
    exact = propagator.evolve(rho0, t, p)
    cmp = oracle.compare(rho, exact)
    res.stats.update({"l2_error": cmp.l2_error, "sup_error": cmp.sup_error, "trace_gap": cmp.trace_gap})
    res.columns = {"x": x, "grid_pdf": rho.diagonal(), "analytic_pdf": propagator.position_pdf(exact, x)}
    if n_traj > 0:
        psi0 = (2.0 * np.pi * sigma**2) ** -0.25 * np.exp(-(x**2) / (4.0 * sigma**2))
        ens = oracle.run_ensemble(psi0, x, n_traj, t, dt, p, seed)
        res.stats["sde_trace_distance"] = oracle.trace_distance(ens, rho)
        res.stats["statistical_scale"] = oracle.statistical_scale(n_traj)
        res.columns["sde_pdf"] = ens.diagonal()
        res.units["sde_pdf"] = "1/natural length"
    return res


RUNNERS: dict[str, Callable[[dict, bool], Result]] = {
    "twoslit": _twoslit,
    "scatter": _scatter,
    "twoparticle": _twoparticle,
    "oracle-check": _oracle,
}


# -- output ----------------------------------------------------------------------


def _num(v) -> str:
    return "%.17g" % float(v)


def header_lines(scenario: str, seed: int, res: Result, values: dict) -> list[str]:
    units = "SI" if values.get("_physical") == "true" else "natural (hbar, mass and lengths as given)"
    out = [f"cslprop {__version__}", f"scenario: {scenario}", f"seed: {seed}", f"units: {units}"]
    out += [f"param {k} = {v}" for k, v in res.params.items()]
    out += [f"derived {k} = {_num(v)}" for k, v in sorted(res.derived.items())]
    out += [f"stat {k} = {_num(v)}" for k, v in sorted(res.stats.items())]
    out += [f"cost {k} = {_num(v)}" for k, v in sorted(res.cost.items())]
    out += [f"warning: {w}" for w in res.warnings]
    out += [f"column {k} [{res.units.get(k, 'dimensionless')}]" for k in (res.columns or res.units)]
    return out


def render(scenario: str, seed: int, res: Result, values: dict, fmt: str) -> str:
    if fmt == "json":
        doc = {
            "tool": "cslprop",
            "version": __version__,
            "scenario": scenario,
            "seed": seed,
            "units": "SI" if values.get("_physical") == "true" else "natural",
            "params": res.params,
            "derived": {k: float(v) for k, v in sorted(res.derived.items())},
            "stats": {k: float(v) for k, v in sorted(res.stats.items())},
            "cost": {k: float(v) for k, v in sorted(res.cost.items())},
            "warnings": res.warnings,
            "column_units": {k: res.units.get(k, "dimensionless") for k in (res.columns or res.units)},
            "columns": {k: [float(v) for v in np.asarray(c)] for k, c in res.columns.items()},
        }
        return json.dumps(doc, indent=1) + "\n"
    lines = ["# " + h for h in header_lines(scenario, seed, res, values)]
    if res.columns:
        names = list(res.columns)
        lines.append(",".join(names))
        data = np.column_stack([np.asarray(res.columns[k], dtype=float) for k in names])
        lines += [",".join(_num(v) for v in row) for row in data]
    return "\n".join(lines) + "\n"


def _parse_sets(items: list[str]) -> dict[str, str]:
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = (s.strip() for s in item.split("=", 1))
        out[k] = v
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cslprop", description="Collapse-model propagator scenarios.")
    ap.add_argument("--scenario", required=True, choices=sorted(RUNNERS))
    ap.add_argument("--config", help="key=value or JSON config file")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a key (repeatable)")
    ap.add_argument("--out", help="output file (default: stdout)")
    ap.add_argument("--format", choices=("csv", "json"), default="csv")
    ap.add_argument("--seed", type=int, help="random seed (overrides the config's seed key)")
    ap.add_argument("--validate", action="store_true", help="dry run: report parameters, warnings and cost")
    return ap


def _fail(category: str, code: int, message: str) -> int:
    print(json.dumps({"error": category, "message": message}), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        file_values = read_config(args.config) if args.config else {}
        values = resolve_values(args.scenario, file_values, _parse_sets(args.set))
        seed = args.seed if args.seed is not None else _int(values, "seed") if "seed" in values else 0
        if "seed" in values:
            values["seed"] = str(seed)
        res = RUNNERS[args.scenario](values, args.validate)
        text = render(args.scenario, seed, res, values, args.format)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        return _fail("config", EXIT_CONFIG, str(exc))
    except ValueError as exc:
        if isinstance(exc, (DomainError, oracle.GridMismatchError)):
            return _fail("domain", EXIT_DOMAIN, str(exc))
        return _fail("config", EXIT_CONFIG, str(exc))
    except oracle.ResolutionError as exc:
        return _fail("domain", EXIT_DOMAIN, str(exc))
    except (
        scattering.QuadratureError,
        scattering.BranchError,
        oracle.StepError,
        IntegrabilityError,
        propagator.HermiticityError,
        FloatingPointError,
    ) as exc:
        return _fail("non-convergence", EXIT_NUMERIC, str(exc))
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK
