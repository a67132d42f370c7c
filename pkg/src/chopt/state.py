"""Forward solver for the controlled phase-field system.

The dynamics are

    d/dt phi + phi - Delta mu = u,      mu = -Delta phi + f'(phi),

with homogeneous Neumann boundary conditions on the rectangle.  Time stepping
uses a stabilized, linearly implicit spectral scheme: the linear fourth-order
part plus a splitting term S*phi is treated implicitly, the remaining
nonlinearity g = beta_reg(phi) + pi(phi) - S*phi explicitly.  Per cosine mode
(j,k) with eigenvalue lam,

    (1 + tau + tau*lam^2 + tau*lam*S) phi_hat^{n+1}
        = phi_hat^n + tau*u_hat^n - tau*lam*g_hat^n,

and mu^{n+1} = -Delta phi^{n+1} + S phi^{n+1} + g^n.  The constant mode
decouples and reproduces the implicit-Euler iterates of the scalar mean ODE
d/dt phibar + phibar = ubar exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dctn, idctn

from . import potentials
from .errors import NonFinite, ShapeMismatch
from .potentials import PotentialSpec
from .spectral import Field, Grid

__all__ = [
    "TimeGrid",
    "ControlFunction",
    "StateTrajectory",
    "CompatibilityReport",
    "validate_compatibility",
    "default_stabilization",
    "step",
    "simulate",
    "mean_closed_form",
    "energy",
    "energy_balance_residual",
]

FEASIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid on [0, T] with nt steps."""

    T: float
    nt: int

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("final time must be positive")
        if self.nt < 1:
            raise ValueError("need at least one time step")

    @property
    def tau(self) -> float:
        return self.T / self.nt

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.nt + 1)


@dataclass(frozen=True)
class ControlFunction:
    """Space-time control u with its box bound M and time-derivative bound M'.

    ``slices`` has shape (nt+1, nx*ny); slice n is u(., t_n).  The time
    derivative is measured by forward differences:
    ||d_t u||^2 = sum_n cell * |u^{n+1} - u^n|^2 / tau.
    """

    grid: Grid
    timegrid: TimeGrid
    slices: np.ndarray = field(repr=False)
    M: float = np.inf
    Mprime: float = np.inf

    def __post_init__(self):
        s = np.asarray(self.slices, dtype=float)
        if s.shape != (self.timegrid.nt + 1, self.grid.size):
            raise ShapeMismatch(
                f"control slices must have shape {(self.timegrid.nt + 1, self.grid.size)}"
            )
        if not np.all(np.isfinite(s)):
            raise ValueError("control values must be finite")
        object.__setattr__(self, "slices", s)
        if self.M < 0 or self.Mprime < 0:
            raise ValueError("bounds must be nonnegative")
        tol = FEASIBILITY_TOL
        if self.linf() > self.M + tol * (1.0 + self.M):
            raise ValueError(f"control violates the box bound: {self.linf():g} > {self.M:g}")
        if self.dt_l2() > self.Mprime + tol * (1.0 + self.Mprime):
            raise ValueError(
                f"control violates the derivative bound: {self.dt_l2():g} > {self.Mprime:g}"
            )

    def linf(self) -> float:
        return float(np.max(np.abs(self.slices))) if self.slices.size else 0.0

    def dt_l2(self) -> float:
        d = np.diff(self.slices, axis=0)
        return float(np.sqrt(self.grid.cell * np.sum(d * d) / self.timegrid.tau))

    def l2q(self) -> float:
        """Trapezoid-in-time L^2(Q) norm."""
        w = _trapezoid_weights(self.timegrid.nt)
        sq = self.grid.cell * np.sum(self.slices**2, axis=1)
        return float(np.sqrt(self.timegrid.tau * np.dot(w, sq)))

    def means(self) -> np.ndarray:
        return self.slices.mean(axis=1)

    @staticmethod
    def constant(grid: Grid, timegrid: TimeGrid, value: float, M=np.inf, Mprime=np.inf):
        s = np.full((timegrid.nt + 1, grid.size), float(value))
        return ControlFunction(grid, timegrid, s, M, Mprime)


def _trapezoid_weights(nt: int) -> np.ndarray:
    w = np.ones(nt + 1)
    w[0] = w[-1] = 0.5
    return w


@dataclass(frozen=True)
class StateTrajectory:
    """Snapshots of phi and mu for one forward solve, plus per-step diagnostics."""

    grid: Grid
    timegrid: TimeGrid
    spec: PotentialSpec
    phi: np.ndarray = field(repr=False)
    mu: np.ndarray = field(repr=False)
    diagnostics: dict = field(repr=False, default_factory=dict)

    def __post_init__(self):
        shape = (self.timegrid.nt + 1, self.grid.size)
        if self.phi.shape != shape or self.mu.shape != shape:
            raise ShapeMismatch(f"trajectory arrays must have shape {shape}")
        if not (np.all(np.isfinite(self.phi)) and np.all(np.isfinite(self.mu))):
            raise ValueError("trajectory contains non-finite values")

    def phi_field(self, n: int) -> Field:
        return Field(self.grid, self.phi[n])

    def mu_field(self, n: int) -> Field:
        return Field(self.grid, self.mu[n])

    def means(self) -> np.ndarray:
        return self.phi.mean(axis=1)


# ---------------------------------------------------------------------------
# compatibility of (phi0, u) with the potential domain

@dataclass(frozen=True)
class CompatibilityReport:
    passed: bool
    margin: float
    details: dict

    def __bool__(self) -> bool:
        return self.passed


def validate_compatibility(
    phi0: Field, u: ControlFunction, spec: PotentialSpec, delta_margin: float = 1e-3
) -> CompatibilityReport:
    """Check that phi0 and the shifted means phibar0 +/- M stay inside D(beta).

    For singular variants the extrema of phi0 and phibar0 +/- M must sit in
    (-1, 1) with margin at least ``delta_margin``.  The regular variant always
    passes (D(beta) is the whole line).
    """
    pmin = float(np.min(phi0.values))
    pmax = float(np.max(phi0.values))
    pbar = float(np.mean(phi0.values))
    M = u.M if np.isfinite(u.M) else u.linf()
    details = {
        "phi0_min": pmin,
        "phi0_max": pmax,
        "phi0_mean": pbar,
        "mean_low": pbar - M,
        "mean_high": pbar + M,
    }
    if not spec.singular:
        return CompatibilityReport(True, np.inf, details)
    lo, hi = -1.0, 1.0
    margin = min(pmin - lo, hi - pmax, (pbar - M) - lo, hi - (pbar + M))
    details["margin"] = margin
    return CompatibilityReport(margin >= delta_margin, margin, details)


def default_stabilization(spec: PotentialSpec, interval: tuple[float, float] | None = None) -> float:
    """Splitting constant S = sup |f''| over the working interval.

    Defaults to [-1.2, 1.2] for the regular variant and to the compatibility
    interval (clipped into D(beta)) for singular ones.
    """
    if interval is None:
        interval = (-1.2, 1.2)
    lo, hi = interval
    if spec.singular:
        lo = max(lo, -1.0 + 1e-6)
        hi = min(hi, 1.0 - 1e-6)
    rs = np.linspace(lo, hi, 513)
    vals = np.abs(potentials.f_d2_vec(spec, rs))
    return float(np.max(vals))


# ---------------------------------------------------------------------------
# time stepping

class _Stepper:
    """Caches the spectral multipliers of the semi-implicit update."""

    def __init__(self, grid: Grid, spec: PotentialSpec, tau: float):
        if not tau > 0:
            raise ValueError("tau must be positive")
        self.grid = grid
        self.spec = spec
        self.tau = tau
        self.lam = grid.eigenvalues()
        S = spec.stabilization
        self.S = S
        self.denom = 1.0 + tau + tau * self.lam**2 + tau * self.lam * S
        self.sqrt_cell = np.sqrt(grid.cell)

    def dct(self, values: np.ndarray) -> np.ndarray:
        return dctn(values.reshape(self.grid.nx, self.grid.ny), type=2, norm="ortho")

    def idct(self, coeffs: np.ndarray) -> np.ndarray:
        return idctn(coeffs, type=2, norm="ortho").reshape(-1)

    def nonlinear(self, phi: np.ndarray) -> np.ndarray:
        return (
            potentials.beta_reg_vec(self.spec, phi)
            + potentials.pi_d1(self.spec) * phi
            - self.S * phi
        )

    def advance(self, phi: np.ndarray, u: np.ndarray):
        """One step; returns (phi_next, mu_next) nodal arrays."""
        g = self.nonlinear(phi)
        phat = self.dct(phi)
        uhat = self.dct(u)
        ghat = self.dct(g)
        phat_next = (phat + self.tau * uhat - self.tau * self.lam * ghat) / self.denom
        phi_next = self.idct(phat_next)
        mu_next = self.idct((self.lam + self.S) * phat_next) + g
        return phi_next, mu_next

    def mu_of(self, phi: np.ndarray) -> np.ndarray:
        """Chemical potential -Delta phi + f'(phi) for a snapshot (used at t=0)."""
        phat = self.dct(phi)
        return self.idct(self.lam * phat) + potentials.f_d1_vec(self.spec, phi)


def step(phi_n: Field, u_n: Field, spec: PotentialSpec, tau: float):
    """Advance one step; returns (phi_next, mu_next) as Fields.

    Raises NonFinite if the update blows up (caller should reduce tau).
    """
    if phi_n.grid != u_n.grid:
        raise ShapeMismatch("phi and u live on different grids")
    stepper = _Stepper(phi_n.grid, spec, tau)
    phi_next, mu_next = stepper.advance(phi_n.values, u_n.values)
    if not (np.all(np.isfinite(phi_next)) and np.all(np.isfinite(mu_next))):
        raise NonFinite("time step produced non-finite values")
    return Field(phi_n.grid, phi_next), Field(phi_n.grid, mu_next)


def simulate(
    phi0: Field,
    u: ControlFunction,
    spec: PotentialSpec,
    timegrid: TimeGrid,
    check_compatibility: bool = True,
    delta_margin: float = 1e-3,
    with_diagnostics: bool = True,
) -> StateTrajectory:
    """Run the forward solver; deterministic for fixed inputs.

    Compatibility of (phi0, u) is validated first unless explicitly
    overridden (experiments on purpose-built infeasible data).
    """
    grid = phi0.grid
    if u.grid != grid or u.timegrid != timegrid:
        raise ShapeMismatch("control does not match the state grids")
    if check_compatibility:
        report = validate_compatibility(phi0, u, spec, delta_margin)
        if not report.passed:
            raise ValueError(
                f"initial data incompatible with the potential domain "
                f"(margin {report.margin:g} < {delta_margin:g}); "
                "pass check_compatibility=False to override"
            )
    nt = timegrid.nt
    stepper = _Stepper(grid, spec, timegrid.tau)
    phi = np.empty((nt + 1, grid.size))
    mu = np.empty((nt + 1, grid.size))
    phi[0] = phi0.values
    mu[0] = stepper.mu_of(phi[0])
    for n in range(nt):
        phi[n + 1], mu[n + 1] = stepper.advance(phi[n], u.slices[n])
        if not (np.all(np.isfinite(phi[n + 1])) and np.all(np.isfinite(mu[n + 1]))):
            raise NonFinite(f"blow-up at step {n + 1}", step=n + 1)
    diagnostics = {}
    if with_diagnostics:
        lam = grid.eigenvalues()
        cell = grid.cell
        ts = timegrid.times()
        grad_mu = np.empty(nt + 1)
        en = np.empty(nt + 1)
        for n in range(nt + 1):
            mhat = stepper.dct(mu[n]) * stepper.sqrt_cell
            grad_mu[n] = np.sqrt(np.sum(lam * mhat**2))
            phat = stepper.dct(phi[n]) * stepper.sqrt_cell
            en[n] = 0.5 * np.sum(lam * phat**2) + cell * np.sum(
                potentials.f_value_vec(spec, phi[n])
            )
        diagnostics = {
            "t": ts,
            "mean": phi.mean(axis=1),
            "energy": en,
            "min_phi": phi.min(axis=1),
            "max_phi": phi.max(axis=1),
            "grad_mu_norm": grad_mu,
        }
    return StateTrajectory(grid, timegrid, spec, phi, mu, diagnostics)


# ---------------------------------------------------------------------------
# mean dynamics and energy diagnostics

def mean_closed_form(phi0bar: float, ubar_series: np.ndarray, tau: float, t: float) -> float:
    """Exact mean value phibar(t) = e^{-t} phibar0 + int_0^t e^{-(t-s)} ubar(s) ds.

    ``ubar_series`` gives ubar as a step function: value k applies on
    [k*tau, (k+1)*tau).  Evaluated with the exact exponential integrator on
    each subinterval.
    """
    ubar_series = np.asarray(ubar_series, dtype=float)
    if t < 0:
        raise ValueError("t must be nonnegative")
    value = float(phi0bar)
    remaining = t
    k = 0
    while remaining > 1e-15:
        dt = min(tau, remaining)
        ub = float(ubar_series[min(k, ubar_series.size - 1)])
        e = np.exp(-dt)
        value = e * value + (1.0 - e) * ub
        remaining -= dt
        k += 1
    return value


def energy(phi: Field, spec: PotentialSpec) -> float:
    """Free energy E(phi) = int 0.5 |grad phi|^2 + f(phi)."""
    from .spectral import to_spectral

    s = to_spectral(phi)
    lam = phi.grid.eigenvalues()
    bulk = phi.grid.cell * float(np.sum(potentials.f_value_vec(spec, phi.values)))
    return float(0.5 * np.sum(lam * s.coeffs**2) + bulk)


def energy_balance_residual(
    traj: StateTrajectory, u: ControlFunction, spec: PotentialSpec
) -> np.ndarray:
    """Discrete residual of dE/dt = -||grad mu||^2 + int mu (u - phi).

    r^n = (E^{n+1} - E^n)/tau + ||grad mu^{n+1}||^2
          - <mu^{n+1}, u^n - phi^{n+1}>,  expected O(tau) + O(h^2).
    """
    grid = traj.grid
    tau = traj.timegrid.tau
    lam = grid.eigenvalues()
    cell = grid.cell
    stepper = _Stepper(grid, spec, tau)
    nt = traj.timegrid.nt
    en = np.empty(nt + 1)
    for n in range(nt + 1):
        phat = stepper.dct(traj.phi[n]) * stepper.sqrt_cell
        en[n] = 0.5 * np.sum(lam * phat**2) + cell * np.sum(
            potentials.f_value_vec(spec, traj.phi[n])
        )
    res = np.empty(nt)
    for n in range(nt):
        mhat = stepper.dct(traj.mu[n + 1]) * stepper.sqrt_cell
        gm2 = float(np.sum(lam * mhat**2))
        source = cell * float(np.dot(traj.mu[n + 1], u.slices[n] - traj.phi[n + 1]))
        res[n] = (en[n + 1] - en[n]) / tau + gm2 - source
    return res
