"""Double-well potentials, their convex/smooth split, and regularizations.

Three variants of the potential f = betahat + pihat are supported:

* regular:          f(r) = (r^2 - 1)^2 / 4, split as betahat = r^4/4,
                    pihat = (1 - 2 r^2)/4, so beta(r) = r^3, pi(r) = -r.
* logarithmic:      f(r) = (1+r)ln(1+r) + (1-r)ln(1-r) - c1 r^2 on (-1, 1),
                    beta(r) = ln((1+r)/(1-r)), pi(r) = -2 c1 r.
* double_obstacle:  f(r) = -c2 r^2 on [-1, 1] (+infinity outside),
                    beta = subdifferential of the indicator of [-1, 1],
                    pi(r) = -2 c2 r.

The maximal monotone graph beta can be replaced by a single-valued Lipschitz
regularization: either the Moreau-Yosida approximation beta_eps (any variant)
or the piecewise C^1 continuation of the logarithmic beta that keeps the exact
graph on [-(1-eps), 1-eps] and continues affinely with the matched slope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, DomainViolation, WrongVariant

__all__ = [
    "PotentialSpec",
    "f_value",
    "f_d1",
    "f_d2",
    "f_d3",
    "beta_exact",
    "beta_yosida",
    "beta_piecewise_log",
    "beta_piecewise_log_d1",
    "betahat",
    "beta_reg",
    "beta_reg_d1",
    "check_exp_derivative_bound",
    "young_exp_constants",
    "pi_value",
    "pi_d1",
]

REGULAR = "regular"
LOGARITHMIC = "logarithmic"
DOUBLE_OBSTACLE = "double_obstacle"

_VARIANTS = (REGULAR, LOGARITHMIC, DOUBLE_OBSTACLE)
_REG_KINDS = (None, "yosida", "piecewise_log")

_ROOT_TOL = 1e-12
_ROOT_MAXIT = 200


@dataclass(frozen=True)
class PotentialSpec:
    """Potential variant plus regularization and stabilization parameters.

    ``reg_kind`` is None for the unregularized potential (invalid for the
    obstacle variant except through :func:`beta_yosida`), "yosida" for the
    Moreau-Yosida approximation, or "piecewise_log" for the C^1 logarithmic
    continuation (logarithmic variant only).  ``stabilization`` is the
    splitting constant S used by the semi-implicit scheme.
    """

    variant: str = REGULAR
    c1: float = 2.0
    c2: float = 1.0
    eps: float = 1e-2
    reg_kind: str | None = None
    stabilization: float = 0.0

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.reg_kind not in _REG_KINDS:
            raise ValueError(f"unknown reg_kind {self.reg_kind!r}")
        if not (0.0 < self.eps < 1.0):
            raise ValueError("eps must lie in (0, 1)")
        if self.variant == LOGARITHMIC and not self.c1 > 1.0:
            raise ValueError("c1 must exceed 1 for the logarithmic variant")
        if self.variant == DOUBLE_OBSTACLE and not self.c2 > 0.0:
            raise ValueError("c2 must be positive for the obstacle variant")
        if self.reg_kind == "piecewise_log" and self.variant != LOGARITHMIC:
            raise WrongVariant("piecewise_log applies to the logarithmic variant only")
        if self.stabilization < 0.0:
            raise ValueError("stabilization must be nonnegative")

    @property
    def singular(self) -> bool:
        return self.variant in (LOGARITHMIC, DOUBLE_OBSTACLE)

    def domain_interior(self) -> tuple[float, float]:
        """Interior of D(beta) for the unregularized graph."""
        if self.variant == REGULAR:
            return (-math.inf, math.inf)
        return (-1.0, 1.0)


# ---------------------------------------------------------------------------
# smooth perturbation pi

def pi_value(spec: PotentialSpec, r: float) -> float:
    if spec.variant == REGULAR:
        return -r
    if spec.variant == LOGARITHMIC:
        return -2.0 * spec.c1 * r
    return -2.0 * spec.c2 * r


def pi_d1(spec: PotentialSpec) -> float:
    """pi' is constant for every variant."""
    if spec.variant == REGULAR:
        return -1.0
    if spec.variant == LOGARITHMIC:
        return -2.0 * spec.c1
    return -2.0 * spec.c2


def _pihat(spec: PotentialSpec, r: float) -> float:
    if spec.variant == REGULAR:
        return (1.0 - 2.0 * r * r) / 4.0
    if spec.variant == LOGARITHMIC:
        return -spec.c1 * r * r
    return -spec.c2 * r * r


# ---------------------------------------------------------------------------
# exact convex part

def beta_exact(spec: PotentialSpec, r: float) -> float:
    """Minimal section beta°(r) of the unregularized graph."""
    if spec.variant == REGULAR:
        return r**3
    if spec.variant == LOGARITHMIC:
        if abs(r) >= 1.0:
            raise DomainViolation(f"r = {r:g} outside D(beta) = (-1, 1)")
        return math.log((1.0 + r) / (1.0 - r))
    if abs(r) > 1.0:
        raise DomainViolation(f"r = {r:g} outside D(beta) = [-1, 1]")
    return 0.0


def _beta_exact_d1(spec: PotentialSpec, r: float) -> float:
    if spec.variant == REGULAR:
        return 3.0 * r * r
    if spec.variant == LOGARITHMIC:
        if abs(r) >= 1.0:
            raise DomainViolation(f"r = {r:g} outside D(beta) = (-1, 1)")
        return 2.0 / (1.0 - r * r)
    return 0.0


def _beta_exact_d2(spec: PotentialSpec, r: float) -> float:
    if spec.variant == REGULAR:
        return 6.0 * r
    if spec.variant == LOGARITHMIC:
        if abs(r) >= 1.0:
            raise DomainViolation(f"r = {r:g} outside D(beta) = (-1, 1)")
        return 4.0 * r / (1.0 - r * r) ** 2
    return 0.0


def _betahat_exact(spec: PotentialSpec, r: float) -> float:
    if spec.variant == REGULAR:
        return r**4 / 4.0
    if spec.variant == LOGARITHMIC:
        if abs(r) > 1.0:
            raise DomainViolation(f"r = {r:g} outside [-1, 1]")
        # (1+r)ln(1+r) + (1-r)ln(1-r), continuous up to the endpoints
        a = (1.0 + r) * math.log1p(r) if r > -1.0 else 0.0
        b = (1.0 - r) * math.log1p(-r) if r < 1.0 else 0.0
        return a + b
    if abs(r) > 1.0:
        raise DomainViolation(f"r = {r:g} outside [-1, 1]")
    return 0.0


# ---------------------------------------------------------------------------
# Moreau-Yosida regularization

def _resolvent(spec: PotentialSpec, r: float, eps: float) -> float:
    """Solve t + eps*beta(t) = r for t (the resolvent point J_eps r).

    Safeguarded Newton with a bisection fallback; monotone scalar equation.
    """
    if spec.variant == DOUBLE_OBSTACLE:
        return min(1.0, max(-1.0, r))
    if spec.variant == REGULAR:
        lo, hi = -abs(r) - 1.0, abs(r) + 1.0
    else:  # logarithmic: t confined to (-1, 1)
        lo, hi = -1.0, 1.0
    t = min(hi - 1e-9, max(lo + 1e-9, r))

    def g(t: float) -> float:
        return t + eps * beta_exact(spec, t) - r

    for _ in range(_ROOT_MAXIT):
        gt = g(t)
        if abs(gt) <= _ROOT_TOL * max(1.0, abs(r)):
            return t
        if gt > 0:
            hi = t
        else:
            lo = t
        gp = 1.0 + eps * _beta_exact_d1(spec, t)
        t_new = t - gt / gp
        if not (lo < t_new < hi):
            t_new = 0.5 * (lo + hi)
        t = t_new
    raise ConvergenceFailure(
        f"resolvent solve failed for r = {r:g}, eps = {eps:g} (residual {g(t):.3e})"
    )


def beta_yosida(spec: PotentialSpec, r: float) -> float:
    """Yosida approximation beta_eps(r) = (r - J_eps r)/eps.

    Monotone, 1/eps-Lipschitz, beta_eps(0) = 0, |beta_eps| <= |beta°| on D(beta).
    """
    eps = spec.eps
    t = _resolvent(spec, r, eps)
    return (r - t) / eps


def _beta_yosida_d1(spec: PotentialSpec, r: float) -> float:
    # implicit differentiation of t + eps*beta(t) = r
    if spec.variant == DOUBLE_OBSTACLE:
        return 0.0 if abs(r) <= 1.0 else 1.0 / spec.eps
    t = _resolvent(spec, r, spec.eps)
    bp = _beta_exact_d1(spec, t)
    return bp / (1.0 + spec.eps * bp)


def _beta_yosida_d2(spec: PotentialSpec, r: float) -> float:
    if spec.variant == DOUBLE_OBSTACLE:
        return 0.0
    t = _resolvent(spec, r, spec.eps)
    bp = _beta_exact_d1(spec, t)
    bpp = _beta_exact_d2(spec, t)
    return bpp / (1.0 + spec.eps * bp) ** 3


def _betahat_yosida(spec: PotentialSpec, r: float) -> float:
    # Moreau envelope: betahat_eps(r) = eps/2 * beta_eps(r)^2 + betahat(J_eps r)
    eps = spec.eps
    t = _resolvent(spec, r, eps)
    s = (r - t) / eps
    return 0.5 * eps * s * s + _betahat_exact(spec, t)


# ---------------------------------------------------------------------------
# piecewise C^1 logarithmic regularization

def _require_log(spec: PotentialSpec):
    if spec.variant != LOGARITHMIC:
        raise WrongVariant("piecewise log regularization needs the logarithmic variant")


def beta_piecewise_log(spec: PotentialSpec, r: float) -> float:
    """C^1, odd, globally Lipschitz continuation of the logarithmic beta.

    Equals ln((1+r)/(1-r)) on [-(1-eps), 1-eps]; affine beyond, with the
    matched slope 2/(eps(2-eps)).
    """
    _require_log(spec)
    eps = spec.eps
    a = abs(r)
    if a <= 1.0 - eps:
        v = math.log((1.0 + a) / (1.0 - a))
    else:
        knee = 1.0 - eps
        slope = 2.0 / (eps * (2.0 - eps))
        v = math.log((2.0 - eps) / eps) + slope * (a - knee)
    return math.copysign(v, r) if r != 0.0 else 0.0


def beta_piecewise_log_d1(spec: PotentialSpec, r: float) -> float:
    """Derivative of :func:`beta_piecewise_log`; globally bounded by 2/(eps(2-eps))."""
    _require_log(spec)
    eps = spec.eps
    a = abs(r)
    if a <= 1.0 - eps:
        return 2.0 / (1.0 - a * a)
    return 2.0 / (eps * (2.0 - eps))


def _beta_piecewise_log_d2(spec: PotentialSpec, r: float) -> float:
    a = abs(r)
    if a <= 1.0 - spec.eps:
        return 4.0 * r / (1.0 - r * r) ** 2
    return 0.0


def _betahat_piecewise_log(spec: PotentialSpec, r: float) -> float:
    eps = spec.eps
    a = abs(r)
    knee = 1.0 - eps
    if a <= knee:
        return _betahat_exact(spec, a)
    slope = 2.0 / (eps * (2.0 - eps))
    bk = math.log((2.0 - eps) / eps)
    d = a - knee
    return _betahat_exact(spec, knee) + bk * d + 0.5 * slope * d * d


# ---------------------------------------------------------------------------
# dispatch on the selected regularization

def beta_reg(spec: PotentialSpec, r: float) -> float:
    """The single-valued beta selected by ``spec.reg_kind`` (exact graph if None)."""
    if spec.reg_kind == "yosida":
        return beta_yosida(spec, r)
    if spec.reg_kind == "piecewise_log":
        return beta_piecewise_log(spec, r)
    if spec.variant == DOUBLE_OBSTACLE:
        raise WrongVariant("the obstacle graph is exposed only through its Yosida regularization")
    return beta_exact(spec, r)


def beta_reg_d1(spec: PotentialSpec, r: float) -> float:
    if spec.reg_kind == "yosida":
        return _beta_yosida_d1(spec, r)
    if spec.reg_kind == "piecewise_log":
        return beta_piecewise_log_d1(spec, r)
    if spec.variant == DOUBLE_OBSTACLE:
        raise WrongVariant("the obstacle graph is exposed only through its Yosida regularization")
    return _beta_exact_d1(spec, r)


def _beta_reg_d2(spec: PotentialSpec, r: float) -> float:
    if spec.reg_kind == "yosida":
        return _beta_yosida_d2(spec, r)
    if spec.reg_kind == "piecewise_log":
        return _beta_piecewise_log_d2(spec, r)
    if spec.variant == DOUBLE_OBSTACLE:
        raise WrongVariant("the obstacle graph is exposed only through its Yosida regularization")
    return _beta_exact_d2(spec, r)


def betahat(spec: PotentialSpec, r: float) -> float:
    """Primitive of the selected beta regularization, vanishing at 0.

    Closed forms are available for every branch (the Yosida case via the
    Moreau envelope identity).
    """
    if spec.reg_kind == "yosida":
        return _betahat_yosida(spec, r)
    if spec.reg_kind == "piecewise_log":
        return _betahat_piecewise_log(spec, r)
    if spec.variant == DOUBLE_OBSTACLE:
        raise WrongVariant("the obstacle graph is exposed only through its Yosida regularization")
    return _betahat_exact(spec, r)


# ---------------------------------------------------------------------------
# full potential

def f_value(spec: PotentialSpec, r: float) -> float:
    """f(r) = betahat_reg(r) + pihat(r)."""
    return betahat(spec, r) + _pihat(spec, r)


def f_d1(spec: PotentialSpec, r: float) -> float:
    """f'(r) = beta_reg(r) + pi(r)."""
    return beta_reg(spec, r) + pi_value(spec, r)


def f_d2(spec: PotentialSpec, r: float) -> float:
    return beta_reg_d1(spec, r) + pi_d1(spec)


def f_d3(spec: PotentialSpec, r: float) -> float:
    return _beta_reg_d2(spec, r)


# ---------------------------------------------------------------------------
# inequality checks

@dataclass(frozen=True)
class BoundReport:
    max_violation: float
    worst_point: float
    n_samples: int

    @property
    def passed(self) -> bool:
        return self.max_violation <= 1e-12


def check_exp_derivative_bound(spec: PotentialSpec, samples) -> BoundReport:
    """Check beta_eps'(r) <= 2 exp(|beta_eps(r)|) at the sample points.

    Only meaningful for the piecewise C^1 logarithmic regularization.
    """
    _require_log(spec)
    if spec.reg_kind != "piecewise_log":
        raise WrongVariant("the exponential derivative bound targets piecewise_log")
    samples = np.asarray(samples, dtype=float).reshape(-1)
    worst = -math.inf
    worst_r = math.nan
    for r in samples:
        lhs = beta_piecewise_log_d1(spec, r)
        # exponent capped to stay finite; the bound holds trivially beyond
        rhs = 2.0 * math.exp(min(abs(beta_piecewise_log(spec, r)), 700.0))
        v = lhs - rhs
        if v > worst:
            worst, worst_r = v, r
    return BoundReport(worst, worst_r, samples.size)


def young_exp_constants(p: float) -> tuple[float, float]:
    """Constants (kappa, kappa') with r*s*e^{ps} <= s^2 e^{ps}/2 + e^{kappa r} + kappa'.

    Built from the delta > 0 solving delta*(1 + p + delta) = 1/2, with
    kappa = 1/delta and kappa' = (p + delta)^2 / (4 delta).
    """
    if p < 1.0:
        raise ValueError("p must be >= 1")
    delta = 0.5 * (-(1.0 + p) + math.sqrt((1.0 + p) ** 2 + 2.0))
    kappa = 1.0 / delta
    kappa_prime = (p + delta) ** 2 / (4.0 * delta)
    return kappa, kappa_prime


# vectorized wrappers used by the solvers -----------------------------------
# Fast numpy paths for the branches that show up in time-stepping loops;
# the Yosida branch falls back to the per-point scalar solve.

def _scalar_map(fn, spec: PotentialSpec, values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    return np.array([fn(spec, float(x)) for x in v.ravel()]).reshape(v.shape)


def _pwlog_beta_np(spec: PotentialSpec, v: np.ndarray) -> np.ndarray:
    eps = spec.eps
    a = np.abs(v)
    knee = 1.0 - eps
    slope = 2.0 / (eps * (2.0 - eps))
    inside = a <= knee
    safe = np.where(inside, a, 0.0)
    out = np.where(
        inside,
        np.log1p(safe) - np.log1p(-safe),
        math.log((2.0 - eps) / eps) + slope * (a - knee),
    )
    return np.sign(v) * out


def beta_reg_vec(spec: PotentialSpec, values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if spec.reg_kind is None and spec.variant == REGULAR:
        return v**3
    if spec.reg_kind == "piecewise_log":
        return _pwlog_beta_np(spec, v)
    if spec.reg_kind == "yosida" and spec.variant == DOUBLE_OBSTACLE:
        return (v - np.clip(v, -1.0, 1.0)) / spec.eps
    return _scalar_map(beta_reg, spec, v)


def beta_reg_d1_vec(spec: PotentialSpec, values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if spec.reg_kind is None and spec.variant == REGULAR:
        return 3.0 * v * v
    if spec.reg_kind == "piecewise_log":
        eps = spec.eps
        a = np.abs(v)
        inside = a <= 1.0 - eps
        safe = np.where(inside, a, 0.0)
        return np.where(inside, 2.0 / (1.0 - safe * safe), 2.0 / (eps * (2.0 - eps)))
    if spec.reg_kind == "yosida" and spec.variant == DOUBLE_OBSTACLE:
        return np.where(np.abs(v) <= 1.0, 0.0, 1.0 / spec.eps)
    return _scalar_map(beta_reg_d1, spec, v)


def f_d1_vec(spec: PotentialSpec, values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    return beta_reg_vec(spec, v) + pi_d1(spec) * v


def f_d2_vec(spec: PotentialSpec, values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    return beta_reg_d1_vec(spec, v) + pi_d1(spec)


def f_value_vec(spec: PotentialSpec, values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if spec.reg_kind is None and spec.variant == REGULAR:
        return 0.25 * (v * v - 1.0) ** 2
    if spec.variant == LOGARITHMIC and spec.reg_kind in (None, "piecewise_log"):
        pihat = -spec.c1 * v * v
        if spec.reg_kind is None:
            if np.any(np.abs(v) >= 1.0):
                raise DomainViolation("values outside D(beta) = (-1, 1)")
            return (1.0 + v) * np.log1p(v) + (1.0 - v) * np.log1p(-v) + pihat
        eps = spec.eps
        a = np.abs(v)
        knee = 1.0 - eps
        inside = a <= knee
        safe = np.where(inside, a, knee)
        base = (1.0 + safe) * np.log1p(safe) + (1.0 - safe) * np.log1p(-safe)
        slope = 2.0 / (eps * (2.0 - eps))
        bk = math.log((2.0 - eps) / eps)
        d = np.where(inside, 0.0, a - knee)
        return base + bk * d + 0.5 * slope * d * d + pihat
    return _scalar_map(f_value, spec, v)
