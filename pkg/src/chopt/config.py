"""Flat key=value run configuration: parsing, validation, field builders.

Config files are INI-style with flat ``key = value`` entries grouped in
sections.  Recognized sections and keys (all optional unless noted):

[grid]      nx, ny (1 encodes d=1), lx, ly
[time]      final, steps
[potential] variant (regular|logarithmic|double_obstacle), c1, c2, eps,
            reg_kind (none|yosida|piecewise_log), stabilization (auto|float)
[control]   M, Mprime, initial  -- descriptor, see below
[initial]   phi0                -- descriptor, see below
[cost]      alpha1..alpha4, target (zero|inverse_crime), u_true (descriptor)
[optimizer] max_iters, tol, initial_step, armijo_c, backtrack, dykstra_iters
[verify]    checks (all | comma-separated invariant names)
[oracle]    modes, substeps
[run]       seed, out

Field descriptors:
    zero | constant:V | band_limited:AMP:NMODES | smooth:LO:HI | file:PATH
Control descriptors additionally accept random:AMP (smooth random slices).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .control import OptimizerConfig
from .errors import ParseError, ValidationError
from .potentials import PotentialSpec
from .runio import read_snapshots
from .spectral import Field, Grid, SpectralField, from_spectral
from .state import ControlFunction, TimeGrid, default_stabilization, validate_compatibility

__all__ = ["RunConfig", "parse_config", "build_field", "build_control"]

_DEFAULTS = {
    "grid": {"nx": "16", "ny": "16", "lx": "1.0", "ly": "1.0"},
    "time": {"final": "1.0", "steps": "100"},
    "potential": {
        "variant": "regular",
        "c1": "2.0",
        "c2": "1.0",
        "eps": "0.01",
        "reg_kind": "none",
        "stabilization": "auto",
    },
    "control": {"M": "1.0", "Mprime": "inf", "initial": "zero"},
    "initial": {"phi0": "zero"},
    "cost": {
        "alpha1": "1.0",
        "alpha2": "0.0",
        "alpha3": "0.0",
        "alpha4": "0.0",
        "target": "zero",
        "u_true": "zero",
    },
    "optimizer": {
        "max_iters": "200",
        "tol": "1e-6",
        "initial_step": "1.0",
        "armijo_c": "1e-4",
        "backtrack": "0.5",
        "dykstra_iters": "50",
    },
    "verify": {"checks": "all"},
    "oracle": {"modes": "8", "substeps": "10"},
    "run": {"seed": "0", "out": "out"},
}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run description; construction implies validity."""

    grid: Grid
    timegrid: TimeGrid
    spec: PotentialSpec
    M: float
    Mprime: float
    phi0: Field
    u0: ControlFunction
    alpha: tuple
    cost_target: str
    u_true: ControlFunction | None
    optimizer: OptimizerConfig
    checks: tuple
    oracle_modes: int
    oracle_substeps: int
    seed: int
    out_dir: str
    raw: dict = dc_field(repr=False, default_factory=dict)


def _band_limited_values(grid: Grid, nmodes: int, rng: np.random.Generator) -> np.ndarray:
    """Random field supported on the nmodes lowest-eigenvalue cosine modes."""
    lam = grid.eigenvalues()
    order = sorted(
        ((lam[j, k], j, k) for j in range(grid.nx) for k in range(grid.ny))
    )[: max(nmodes, 1)]
    coeffs = np.zeros((grid.nx, grid.ny))
    for l, j, k in order:
        coeffs[j, k] = rng.standard_normal()
    return from_spectral(SpectralField(grid, coeffs)).values


def build_field(grid: Grid, descriptor: str, rng: np.random.Generator) -> Field:
    """Resolve a field descriptor (see module docstring) to nodal values."""
    desc = descriptor.strip()
    if desc == "zero":
        return Field(grid, np.zeros(grid.size))
    kind, _, rest = desc.partition(":")
    if kind == "constant":
        return Field(grid, np.full(grid.size, float(rest)))
    if kind == "band_limited":
        amp_s, _, n_s = rest.partition(":")
        amp = float(amp_s)
        n = int(n_s) if n_s else 8
        v = _band_limited_values(grid, n, rng)
        peak = np.max(np.abs(v))
        if peak > 0:
            v = v * (amp / peak)
        return Field(grid, v)
    if kind == "smooth":
        lo_s, _, hi_s = rest.partition(":")
        lo, hi = float(lo_s), float(hi_s)
        v = _band_limited_values(grid, 6, rng)
        vmin, vmax = np.min(v), np.max(v)
        if vmax > vmin:
            v = lo + (hi - lo) * (v - vmin) / (vmax - vmin)
        else:
            v = np.full_like(v, 0.5 * (lo + hi))
        return Field(grid, v)
    if kind == "file":
        nx, ny, frames = read_snapshots(rest)
        if (nx, ny) != (grid.nx, grid.ny):
            raise ValidationError(f"snapshot {rest} is {nx}x{ny}, grid is {grid.nx}x{grid.ny}")
        return Field(grid, frames[0])
    raise ValidationError(f"unknown field descriptor {descriptor!r}")


def build_control(
    grid: Grid,
    timegrid: TimeGrid,
    descriptor: str,
    M: float,
    Mprime: float,
    rng: np.random.Generator,
) -> ControlFunction:
    desc = descriptor.strip()
    nt1 = timegrid.nt + 1
    kind, _, rest = desc.partition(":")
    if desc == "zero":
        slices = np.zeros((nt1, grid.size))
    elif kind == "constant":
        slices = np.full((nt1, grid.size), float(rest))
    elif kind == "random":
        amp = float(rest) if rest else min(M, 1.0)
        slices = np.empty((nt1, grid.size))
        base = _band_limited_values(grid, 4, rng)
        drift = _band_limited_values(grid, 4, rng)
        ts = timegrid.times() / max(timegrid.T, 1.0)
        for n in range(nt1):
            slices[n] = base + ts[n] * drift
        peak = np.max(np.abs(slices))
        if peak > 0:
            slices *= amp / peak
    elif kind == "file":
        nx, ny, frames = read_snapshots(rest)
        if (nx, ny) != (grid.nx, grid.ny):
            raise ValidationError(f"snapshot {rest} is {nx}x{ny}, grid is {grid.nx}x{grid.ny}")
        if frames.shape[0] != nt1:
            raise ValidationError(
                f"control snapshot {rest} has {frames.shape[0]} frames, need {nt1}"
            )
        slices = frames
    else:
        raise ValidationError(f"unknown control descriptor {descriptor!r}")
    # the raw descriptor may overshoot the bounds; feasibility is the
    # caller's concern (the optimizer projects, simulate only needs M)
    box = max(M, float(np.max(np.abs(slices))) if slices.size else 0.0)
    d = np.diff(slices, axis=0)
    dn = float(np.sqrt(grid.cell * np.sum(d * d) / timegrid.tau))
    return ControlFunction(grid, timegrid, slices, box, max(Mprime, dn))


def _get(cp: configparser.ConfigParser, section: str, key: str) -> str:
    if cp.has_option(section, key):
        return cp.get(section, key)
    return _DEFAULTS[section][key]


def parse_config(path, override_compatibility: bool = False, seed: int | None = None) -> RunConfig:
    """Parse and validate a run configuration file.

    Collects every violated invariant and raises a single ValidationError
    carrying the full message list.  ``seed`` overrides the file's seed.
    """
    p = Path(path)
    if not p.is_file():
        raise ParseError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case-sensitive (M vs Mprime)
    try:
        cp.read_string(p.read_text())
    except configparser.Error as exc:
        raise ParseError(f"{path}: {exc}") from exc
    for section in cp.sections():
        if section not in _DEFAULTS:
            raise ParseError(f"{path}: unknown section [{section}]")
        for key in cp.options(section):
            if key not in _DEFAULTS[section]:
                raise ParseError(f"{path}: unknown key {key!r} in [{section}]")

    errors: list[str] = []

    def number(section, key, cast=float):
        raw = _get(cp, section, key)
        try:
            return cast(raw)
        except ValueError:
            errors.append(f"[{section}] {key} = {raw!r} is not a number")
            return None

    nx = number("grid", "nx", int)
    ny = number("grid", "ny", int)
    lx = number("grid", "lx")
    ly = number("grid", "ly")
    T = number("time", "final")
    nt = number("time", "steps", int)
    c1 = number("potential", "c1")
    c2 = number("potential", "c2")
    eps = number("potential", "eps")
    M = number("control", "M")
    Mprime = number("control", "Mprime")
    alpha = tuple(number("cost", f"alpha{i}") for i in (1, 2, 3, 4))
    seed_val = seed if seed is not None else number("run", "seed", int)
    if errors:
        raise ValidationError(errors)

    grid = timegrid = spec = None
    try:
        grid = Grid(nx, ny, lx, ly)
    except ValueError as exc:
        errors.append(f"grid: {exc}")
    try:
        timegrid = TimeGrid(T, nt)
    except ValueError as exc:
        errors.append(f"time: {exc}")

    variant = _get(cp, "potential", "variant").strip()
    reg_kind_s = _get(cp, "potential", "reg_kind").strip()
    reg_kind = None if reg_kind_s in ("none", "") else reg_kind_s
    if not (eps is not None and 0.0 < eps < 1.0):
        errors.append(f"potential: eps = {eps} outside the required range (0, 1)")
    else:
        stab_s = _get(cp, "potential", "stabilization").strip()
        try:
            probe = PotentialSpec(variant, c1, c2, eps, reg_kind, 0.0)
            stab = default_stabilization(probe) if stab_s == "auto" else float(stab_s)
            spec = PotentialSpec(variant, c1, c2, eps, reg_kind, stab)
        except Exception as exc:
            errors.append(f"potential: {exc}")

    if M is not None and M < 0:
        errors.append("control: M must be nonnegative")
    if Mprime is not None and Mprime < 0:
        errors.append("control: Mprime must be nonnegative")
    if any(a is None or a < 0 for a in alpha):
        errors.append("cost: alpha weights must be nonnegative")
    elif all(a == 0 for a in alpha):
        errors.append("cost: alpha weights must not all vanish")
    target = _get(cp, "cost", "target").strip()
    if target not in ("zero", "inverse_crime"):
        errors.append(f"cost: unknown target {target!r}")
    if errors:
        raise ValidationError(errors)

    rng = np.random.default_rng(seed_val)
    try:
        phi0 = build_field(grid, _get(cp, "initial", "phi0"), rng)
        u0 = build_control(grid, timegrid, _get(cp, "control", "initial"), M, Mprime, rng)
        u_true = None
        if target == "inverse_crime":
            u_true = build_control(grid, timegrid, _get(cp, "cost", "u_true"), M, Mprime, rng)
    except ValidationError as exc:
        raise
    except Exception as exc:
        raise ValidationError([str(exc)])

    if spec.singular and not override_compatibility:
        # feasibility of the whole admissible set: phibar0 +/- M inside D(beta)
        probe = ControlFunction(grid, timegrid, u0.slices, max(M, u0.linf()), np.inf)
        report = validate_compatibility(phi0, probe, spec)
        if not report.passed:
            errors.append(
                f"compatibility: phi0 and the control bound M = {M:g} leave the "
                f"potential domain (margin {report.margin:g}); the run is refused "
                "without the override flag"
            )
    if errors:
        raise ValidationError(errors)

    try:
        opt = OptimizerConfig(
            max_iters=int(_get(cp, "optimizer", "max_iters")),
            armijo_c=float(_get(cp, "optimizer", "armijo_c")),
            backtrack=float(_get(cp, "optimizer", "backtrack")),
            initial_step=float(_get(cp, "optimizer", "initial_step")),
            tol=float(_get(cp, "optimizer", "tol")),
            dykstra_iters=int(_get(cp, "optimizer", "dykstra_iters")),
        )
    except ValueError as exc:
        raise ValidationError([f"optimizer: {exc}"])

    checks_s = _get(cp, "verify", "checks").strip()
    checks = ("all",) if checks_s == "all" else tuple(
        c.strip() for c in checks_s.split(",") if c.strip()
    )
    raw = {s: dict(cp.items(s)) for s in cp.sections()}
    return RunConfig(
        grid=grid,
        timegrid=timegrid,
        spec=spec,
        M=M,
        Mprime=Mprime,
        phi0=phi0,
        u0=u0,
        alpha=alpha,
        cost_target=target,
        u_true=u_true,
        optimizer=opt,
        checks=checks,
        oracle_modes=int(_get(cp, "oracle", "modes")),
        oracle_substeps=int(_get(cp, "oracle", "substeps")),
        seed=seed_val,
        out_dir=_get(cp, "run", "out"),
        raw=raw,
    )
