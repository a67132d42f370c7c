"""Tracking-type cost functional and its discrete quadrature."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatch
from .spectral import Grid
from .state import ControlFunction, StateTrajectory, TimeGrid, _trapezoid_weights

__all__ = ["CostSpec", "cost_J"]


@dataclass(frozen=True)
class CostSpec:
    """Weights and targets of the tracking cost.

    J = a1/2 |phi - phi_q|^2_Q + a2/2 |phi(T) - phi_omega|^2
      + a3/2 |mu - mu_q|^2_Q + a4/2 |u|^2_Q,

    discretized with trapezoid-in-time, midpoint-in-space quadrature.
    Targets left as None are treated as zero.
    """

    grid: Grid
    timegrid: TimeGrid
    alpha: tuple[float, float, float, float]
    phi_q: np.ndarray | None = field(default=None, repr=False)
    phi_omega: np.ndarray | None = field(default=None, repr=False)
    mu_q: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        a = tuple(float(x) for x in self.alpha)
        if len(a) != 4 or any(x < 0 for x in a):
            raise ValueError("alpha must be four nonnegative weights")
        if all(x == 0 for x in a):
            raise ValueError("alpha weights must not all vanish")
        object.__setattr__(self, "alpha", a)
        shape_qt = (self.timegrid.nt + 1, self.grid.size)
        for name, target, shape in (
            ("phi_q", self.phi_q, shape_qt),
            ("mu_q", self.mu_q, shape_qt),
            ("phi_omega", self.phi_omega, (self.grid.size,)),
        ):
            if target is None:
                continue
            t = np.asarray(target, dtype=float)
            if t.shape != shape:
                raise ShapeMismatch(f"{name} must have shape {shape}, got {t.shape}")
            object.__setattr__(self, name, t)

    def phi_q_at(self, n: int) -> np.ndarray:
        return self.phi_q[n] if self.phi_q is not None else 0.0

    def mu_q_at(self, n: int) -> np.ndarray:
        return self.mu_q[n] if self.mu_q is not None else 0.0

    def phi_omega_or_zero(self) -> np.ndarray:
        if self.phi_omega is not None:
            return self.phi_omega
        return np.zeros(self.grid.size)


def cost_J(traj: StateTrajectory, u: ControlFunction, cost: CostSpec) -> float:
    """Evaluate the discrete cost; always nonnegative."""
    if traj.grid != cost.grid or traj.timegrid != cost.timegrid:
        raise ShapeMismatch("trajectory does not match the cost grids")
    if u.grid != cost.grid or u.timegrid != cost.timegrid:
        raise ShapeMismatch("control does not match the cost grids")
    a1, a2, a3, a4 = cost.alpha
    tau = cost.timegrid.tau
    cell = cost.grid.cell
    w = _trapezoid_weights(cost.timegrid.nt)
    total = 0.0
    if a1 > 0:
        d = traj.phi - (cost.phi_q if cost.phi_q is not None else 0.0)
        total += 0.5 * a1 * tau * float(np.dot(w, cell * np.sum(d * d, axis=1)))
    if a2 > 0:
        d = traj.phi[-1] - cost.phi_omega_or_zero()
        total += 0.5 * a2 * cell * float(np.dot(d, d))
    if a3 > 0:
        d = traj.mu - (cost.mu_q if cost.mu_q is not None else 0.0)
        total += 0.5 * a3 * tau * float(np.dot(w, cell * np.sum(d * d, axis=1)))
    if a4 > 0:
        total += 0.5 * a4 * tau * float(
            np.dot(w, cell * np.sum(u.slices**2, axis=1))
        )
    return total
