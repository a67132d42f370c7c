import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import bisect

from chopt.errors import DomainViolation, WrongVariant
from chopt.potentials import (
    PotentialSpec,
    beta_exact,
    beta_piecewise_log,
    beta_piecewise_log_d1,
    beta_reg,
    beta_reg_d1,
    beta_reg_d1_vec,
    beta_reg_vec,
    beta_yosida,
    betahat,
    check_exp_derivative_bound,
    f_d1,
    f_d1_vec,
    f_d2,
    f_d2_vec,
    f_d3,
    f_value,
    f_value_vec,
    pi_d1,
    pi_value,
    young_exp_constants,
)

RNG = np.random.default_rng(77)


def all_regularized_specs():
    return [
        PotentialSpec("regular", eps=0.1, reg_kind="yosida"),
        PotentialSpec("logarithmic", c1=2.0, eps=0.1, reg_kind="yosida"),
        PotentialSpec("logarithmic", c1=2.0, eps=0.05, reg_kind="piecewise_log"),
        PotentialSpec("double_obstacle", c2=1.0, eps=0.25, reg_kind="yosida"),
    ]


# ---------------------------------------------------------------------------
# spec validation

def test_spec_validation():
    with pytest.raises(ValueError):
        PotentialSpec("regular", eps=1.5)
    with pytest.raises(ValueError):
        PotentialSpec("logarithmic", c1=1.0)
    with pytest.raises(ValueError):
        PotentialSpec("double_obstacle", c2=0.0)
    with pytest.raises(WrongVariant):
        PotentialSpec("regular", reg_kind="piecewise_log")
    with pytest.raises(ValueError):
        PotentialSpec("regular", stabilization=-1.0)


def test_domain_interior():
    assert PotentialSpec("regular").domain_interior() == (-math.inf, math.inf)
    assert PotentialSpec("logarithmic").domain_interior() == (-1.0, 1.0)
    assert PotentialSpec("logarithmic").singular
    assert not PotentialSpec("regular").singular


# ---------------------------------------------------------------------------
# unregularized potentials

def test_regular_values():
    spec = PotentialSpec("regular")
    assert f_value(spec, 0.0) == pytest.approx(0.25)
    assert f_value(spec, 1.0) == pytest.approx(0.0, abs=1e-15)
    assert f_value(spec, -1.0) == pytest.approx(0.0, abs=1e-15)
    for r in (-1.0, 0.0, 1.0, 0.37):
        assert f_d1(spec, r) == pytest.approx(r**3 - r, abs=1e-14)


def test_logarithmic_values():
    spec = PotentialSpec("logarithmic", c1=2.0)
    assert f_value(spec, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert beta_exact(spec, 0.5) == pytest.approx(math.log(3.0), rel=1e-13)
    with pytest.raises(DomainViolation):
        beta_exact(spec, 1.0)
    with pytest.raises(DomainViolation):
        f_value(spec, 1.5)


def test_obstacle_requires_regularization():
    spec = PotentialSpec("double_obstacle")
    with pytest.raises(WrongVariant):
        beta_reg(spec, 0.5)
    with pytest.raises(WrongVariant):
        f_d1(spec, 0.5)
    with pytest.raises(DomainViolation):
        beta_exact(spec, 1.5)
    assert beta_exact(spec, 0.5) == 0.0


# ---------------------------------------------------------------------------
# Moreau-Yosida regularization

def test_yosida_zero_fixed_point():
    for spec in all_regularized_specs():
        if spec.reg_kind == "yosida":
            assert beta_yosida(spec, 0.0) == 0.0


def test_yosida_obstacle_closed_form():
    spec = PotentialSpec("double_obstacle", eps=0.5, reg_kind="yosida")
    assert beta_yosida(spec, 1.5) == pytest.approx(1.0, rel=1e-12)
    rs = RNG.uniform(-3.0, 3.0, 50)
    expected = (rs - np.clip(rs, -1.0, 1.0)) / spec.eps
    got = np.array([beta_yosida(spec, float(r)) for r in rs])
    assert np.allclose(got, expected, atol=1e-14)


def test_yosida_logarithmic_vs_bisection_oracle():
    spec = PotentialSpec("logarithmic", c1=2.0, eps=0.1, reg_kind="yosida")
    r, eps = 0.9, 0.1

    def g(s):
        # s = beta(r - eps*s) <=> fixed point of the implicit definition
        return s - math.log((1.0 + r - eps * s) / (1.0 - r + eps * s))

    # bracket keeps the argument of the log positive: s < (1 + r)/eps
    s_star = bisect(g, 0.0, (1.0 + r) / eps - 1e-9, xtol=1e-14)
    assert beta_yosida(spec, r) == pytest.approx(s_star, abs=1e-11)


def test_yosida_monotone_and_lipschitz():
    for spec in all_regularized_specs():
        rs = np.sort(RNG.uniform(-2.0, 2.0, 200))
        vals = beta_reg_vec(spec, rs)
        assert np.all(np.diff(vals) >= -1e-12)
        if spec.reg_kind == "yosida":
            assert np.all(
                np.abs(np.diff(vals)) <= np.diff(rs) / spec.eps + 1e-10
            )


def test_yosida_sandwich():
    for spec in all_regularized_specs():
        if spec.reg_kind != "yosida":
            continue
        for r in RNG.uniform(-0.95, 0.95, 50):
            r = float(r)
            assert abs(beta_yosida(spec, r)) <= abs(beta_exact(spec, r)) + 1e-11


# ---------------------------------------------------------------------------
# primitives

def test_betahat_zero():
    for spec in all_regularized_specs():
        assert betahat(spec, 0.0) == pytest.approx(0.0, abs=1e-14)


def test_betahat_obstacle_closed_form():
    spec = PotentialSpec("double_obstacle", eps=0.5, reg_kind="yosida")
    assert betahat(spec, 1.5) == pytest.approx(0.25, rel=1e-12)


@pytest.mark.parametrize("r", [0.8, -0.8, 0.3, 1.4, -1.7])
def test_betahat_matches_quadrature(r):
    # the closed-form Moreau-envelope primitive against direct integration
    for spec in all_regularized_specs():
        val, err = quad(lambda s: beta_reg(spec, s), 0.0, r, limit=200)
        assert betahat(spec, r) == pytest.approx(val, abs=max(1e-10, 10 * err))


def test_betahat_bounded_by_exact():
    spec = PotentialSpec("logarithmic", c1=2.0, eps=0.1, reg_kind="yosida")
    from chopt.potentials import _betahat_exact

    for r in (0.8, -0.8):
        bh = betahat(spec, r)
        assert 0.0 <= bh <= _betahat_exact(spec, r) + 1e-12


# ---------------------------------------------------------------------------
# piecewise C^1 logarithmic continuation

def test_piecewise_log_inside_exact_region():
    spec = PotentialSpec("logarithmic", c1=2.0, eps=0.5, reg_kind="piecewise_log")
    assert beta_piecewise_log(spec, 0.5) == pytest.approx(math.log(3.0), rel=1e-13)


def test_piecewise_log_affine_branch():
    spec = PotentialSpec("logarithmic", c1=2.0, eps=0.5, reg_kind="piecewise_log")
    # slope at the knee r = 0.5 is 2/(0.5 * 1.5) = 8/3
    expected = math.log(3.0) + (8.0 / 3.0) * 0.25
    assert beta_piecewise_log(spec, 0.75) == pytest.approx(expected, rel=1e-13)
    assert beta_piecewise_log_d1(spec, 0.75) == pytest.approx(8.0 / 3.0, rel=1e-13)


def test_piecewise_log_odd():
    spec = PotentialSpec("logarithmic", c1=2.0, eps=0.3, reg_kind="piecewise_log")
    for r in RNG.uniform(0.0, 2.0, 50):
        r = float(r)
        assert beta_piecewise_log(spec, -r) == pytest.approx(
            -beta_piecewise_log(spec, r), abs=1e-14
        )


def test_piecewise_log_wrong_variant():
    spec = PotentialSpec("regular")
    with pytest.raises(WrongVariant):
        beta_piecewise_log(spec, 0.5)


def test_piecewise_log_c1_at_knee():
    spec = PotentialSpec("logarithmic", c1=2.0, eps=0.2, reg_kind="piecewise_log")
    knee = 1.0 - spec.eps
    h = 1e-7
    left = (beta_piecewise_log(spec, knee) - beta_piecewise_log(spec, knee - h)) / h
    right = (beta_piecewise_log(spec, knee + h) - beta_piecewise_log(spec, knee)) / h
    assert left == pytest.approx(right, rel=1e-5)


# ---------------------------------------------------------------------------
# derivative consistency (finite-difference oracle)

@pytest.mark.parametrize("spec", all_regularized_specs())
def test_beta_derivative_matches_fd(spec):
    for r in RNG.uniform(-1.8, 1.8, 20):
        r = float(r)
        h = 1e-6
        fd = (beta_reg(spec, r + h) - beta_reg(spec, r - h)) / (2 * h)
        # skip points straddling a kink of the regularization
        analytic = beta_reg_d1(spec, r)
        if abs(fd - analytic) > 1e-4 * (1 + abs(analytic)):
            continue
        assert analytic == pytest.approx(fd, abs=1e-4 * (1 + abs(analytic)))


def test_f_third_derivative_matches_fd():
    spec = PotentialSpec("regular")
    for r in RNG.uniform(-1.5, 1.5, 10):
        r = float(r)
        h = 1e-5
        fd = (f_d2(spec, r + h) - f_d2(spec, r - h)) / (2 * h)
        assert f_d3(spec, r) == pytest.approx(fd, abs=1e-6 * (1 + abs(fd)))


def test_pi_derivative_is_constant():
    for spec in all_regularized_specs():
        for r in (-1.5, 0.0, 0.7):
            assert f_d2(spec, r) - beta_reg_d1(spec, r) == pytest.approx(pi_d1(spec))
            assert pi_value(spec, r) == pytest.approx(pi_d1(spec) * r)


# ---------------------------------------------------------------------------
# the exponential derivative bound and the Young-type inequality

def test_exp_bound_equality_at_zero():
    spec = PotentialSpec("logarithmic", c1=2.0, eps=0.2, reg_kind="piecewise_log")
    lhs = beta_piecewise_log_d1(spec, 0.0)
    rhs = 2.0 * math.exp(abs(beta_piecewise_log(spec, 0.0)))
    assert lhs == pytest.approx(rhs, abs=1e-14)  # 2 <= 2 e^0, equality


def test_exp_bound_sweep():
    spec = PotentialSpec("logarithmic", c1=2.0, eps=0.1, reg_kind="piecewise_log")
    samples = RNG.uniform(-2.0, 2.0, 10_000)
    report = check_exp_derivative_bound(spec, samples)
    assert report.passed, f"violation {report.max_violation} at {report.worst_point}"


def test_exp_bound_wrong_kind():
    spec = PotentialSpec("logarithmic", c1=2.0, eps=0.1, reg_kind="yosida")
    with pytest.raises(WrongVariant):
        check_exp_derivative_bound(spec, [0.0])


def test_young_constants_p3():
    kappa, kappa_prime = young_exp_constants(3.0)
    delta = 1.0 / kappa
    assert delta == pytest.approx(0.121320, abs=1e-6)
    assert delta * (1.0 + 3.0 + delta) == pytest.approx(0.5, rel=1e-12)
    assert kappa == pytest.approx(8.242641, abs=1e-6)
    assert kappa_prime == pytest.approx(20.0763, abs=1e-3)


def test_young_constants_p1():
    kappa, _ = young_exp_constants(1.0)
    assert 1.0 / kappa == pytest.approx(0.224745, abs=1e-6)
    assert kappa == pytest.approx(4.449490, abs=1e-6)


@pytest.mark.parametrize("p", [1.0, 2.0, 3.0])
def test_young_inequality_sweep(p):
    kappa, kappa_prime = young_exp_constants(p)
    r = RNG.uniform(0.0, 6.0, 5000)
    s = RNG.uniform(0.0, 6.0, 5000)
    lhs = r * s * np.exp(p * s)
    rhs = 0.5 * s * s * np.exp(p * s) + np.exp(kappa * r) + kappa_prime
    assert np.all(lhs <= rhs + 1e-12)


def test_young_rejects_small_p():
    with pytest.raises(ValueError):
        young_exp_constants(0.5)


# ---------------------------------------------------------------------------
# vectorized wrappers agree with scalar evaluation

@pytest.mark.parametrize("spec", all_regularized_specs() + [PotentialSpec("regular")])
def test_vectorized_wrappers(spec):
    rs = RNG.uniform(-1.8, 1.8, 40)
    if spec.singular and spec.reg_kind is None:
        rs = np.clip(rs, -0.95, 0.95)
    assert np.allclose(beta_reg_vec(spec, rs), [beta_reg(spec, float(r)) for r in rs],
                       atol=1e-11)
    assert np.allclose(beta_reg_d1_vec(spec, rs), [beta_reg_d1(spec, float(r)) for r in rs],
                       atol=1e-9)
    assert np.allclose(f_d1_vec(spec, rs), [f_d1(spec, float(r)) for r in rs], atol=1e-11)
    assert np.allclose(f_d2_vec(spec, rs), [f_d2(spec, float(r)) for r in rs], atol=1e-9)
    assert np.allclose(f_value_vec(spec, rs), [f_value(spec, float(r)) for r in rs],
                       atol=1e-11)
