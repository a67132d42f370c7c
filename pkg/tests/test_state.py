import math

import numpy as np
import pytest

from chopt.errors import NonFinite, ShapeMismatch
from chopt.potentials import PotentialSpec
from chopt.spectral import Field, Grid, SpectralField, basis_mode, from_spectral
from chopt.state import (
    ControlFunction,
    TimeGrid,
    default_stabilization,
    energy,
    energy_balance_residual,
    mean_closed_form,
    simulate,
    step,
    validate_compatibility,
)

RNG = np.random.default_rng(555)


def regular_spec():
    base = PotentialSpec("regular")
    return PotentialSpec("regular", stabilization=default_stabilization(base))


def constant_control(grid, tg, value, **kw):
    return ControlFunction.constant(grid, tg, value, **kw)


def smooth_field(grid, amp=0.5, nmodes=6, rng=RNG):
    lam = grid.eigenvalues()
    order = sorted(((lam[j, k], j, k) for j in range(grid.nx) for k in range(grid.ny)))
    c = np.zeros((grid.nx, grid.ny))
    for _, j, k in order[:nmodes]:
        c[j, k] = rng.standard_normal()
    v = from_spectral(SpectralField(grid, c)).values
    peak = np.max(np.abs(v))
    return Field(grid, v * (amp / peak) if peak > 0 else v)


# ---------------------------------------------------------------------------
# grids and controls

def test_timegrid():
    tg = TimeGrid(1.0, 4)
    assert tg.tau == 0.25
    assert np.allclose(tg.times(), [0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(ValueError):
        TimeGrid(0.0, 4)
    with pytest.raises(ValueError):
        TimeGrid(1.0, 0)


def test_control_bounds_enforced():
    g = Grid(4, 4, 1.0)
    tg = TimeGrid(1.0, 3)
    with pytest.raises(ValueError):
        ControlFunction(g, tg, np.full((4, 16), 2.0), M=1.0)
    slices = np.zeros((4, 16))
    slices[2] = 5.0
    with pytest.raises(ValueError):
        ControlFunction(g, tg, slices, M=10.0, Mprime=0.1)


def test_control_l2q_constant():
    g = Grid(4, 4, 2.0, 1.0)  # |Omega| = 2
    tg = TimeGrid(3.0, 6)
    u = constant_control(g, tg, 1.5)
    assert u.l2q() == pytest.approx(1.5 * math.sqrt(2.0 * 3.0), rel=1e-12)
    assert u.dt_l2() == 0.0
    assert u.linf() == 1.5


# ---------------------------------------------------------------------------
# compatibility

def test_compatibility_regular_always_passes():
    g = Grid(8, 8, 1.0)
    tg = TimeGrid(1.0, 10)
    phi0 = Field(g, 5.0 * RNG.standard_normal(g.size))
    u = constant_control(g, tg, 3.0, M=3.0)
    assert validate_compatibility(phi0, u, PotentialSpec("regular")).passed


def test_compatibility_logarithmic_fail():
    g = Grid(8, 8, 1.0)
    tg = TimeGrid(1.0, 10)
    phi0 = Field(g, np.zeros(g.size))
    u = constant_control(g, tg, 2.0, M=2.0)
    report = validate_compatibility(phi0, u, PotentialSpec("logarithmic", c1=2.0))
    assert not report.passed
    assert report.margin == pytest.approx(-1.0)


def test_compatibility_logarithmic_pass_with_margin():
    g = Grid(8, 8, 1.0)
    tg = TimeGrid(1.0, 10)
    phi0 = Field(g, np.full(g.size, 0.2))
    u = constant_control(g, tg, 0.5, M=0.5)
    report = validate_compatibility(phi0, u, PotentialSpec("logarithmic", c1=2.0))
    assert report.passed
    assert report.margin == pytest.approx(0.3)


def test_default_stabilization_regular():
    # sup |3 r^2 - 1| over [-1.2, 1.2] = 3 * 1.44 - 1
    assert default_stabilization(PotentialSpec("regular")) == pytest.approx(3.32, abs=1e-3)


# ---------------------------------------------------------------------------
# single step

def test_step_stationary_equilibrium():
    g = Grid(8, 8, 1.0)
    spec = regular_spec()
    phi = Field(g, np.ones(g.size))
    u = Field(g, np.ones(g.size))
    phi1, mu1 = step(phi, u, spec, tau=0.01)
    assert np.allclose(phi1.values, 1.0, atol=1e-13)
    assert np.allclose(mu1.values, 0.0, atol=1e-12)


def test_step_constant_mode_implicit_euler():
    g = Grid(8, 8, 1.0)
    spec = regular_spec()
    tau = 0.05
    phi = Field(g, np.full(g.size, 0.3))
    u = Field(g, np.full(g.size, 0.8))
    phi1, _ = step(phi, u, spec, tau)
    assert np.mean(phi1.values) == pytest.approx((0.3 + tau * 0.8) / (1 + tau), rel=1e-13)


def test_step_single_mode_recurrence():
    # obstacle variant inside [-1,1]: beta_eps = 0, pi linear, so the scheme
    # reduces to a scalar recurrence per mode that we can replay by hand
    g = Grid(8, 8, 1.0)
    c2 = 0.5
    spec = PotentialSpec("double_obstacle", c2=c2, eps=0.5, reg_kind="yosida",
                         stabilization=0.0)
    tau = 1e-3
    lam = g.eigenvalues()[1, 0]
    amp = 0.01
    phi = Field(g, amp * basis_mode(g, 1, 0).values)
    u = Field(g, np.zeros(g.size))
    phi1, mu1 = step(phi, u, spec, tau)
    # g_n = pi(phi) = -2 c2 phi, so phihat' = (1 + 2 c2 tau lam) phihat / denom
    expected = amp * (1.0 + 2.0 * c2 * tau * lam) / (1.0 + tau + tau * lam**2)
    got = float(np.dot(phi1.values, basis_mode(g, 1, 0).values) * g.cell)
    assert got == pytest.approx(expected, rel=1e-12)
    # mu = -Delta phi' + pi(phi) per the scheme
    expected_mu_coeff = lam * expected - 2.0 * c2 * amp
    got_mu = float(np.dot(mu1.values, basis_mode(g, 1, 0).values) * g.cell)
    assert got_mu == pytest.approx(expected_mu_coeff, rel=1e-12)


def test_step_blowup_raises():
    g = Grid(8, 8, 1.0)
    spec = regular_spec()
    phi = Field(g, 1e200 * basis_mode(g, 2, 2).values)
    u = Field(g, np.zeros(g.size))
    with pytest.raises(NonFinite):
        step(phi, u, spec, tau=0.1)


# ---------------------------------------------------------------------------
# simulate

def test_simulate_fixed_point():
    g = Grid(8, 8, 1.0)
    tg = TimeGrid(0.5, 20)
    spec = regular_spec()
    phi0 = Field(g, np.ones(g.size))
    u = constant_control(g, tg, 1.0)
    traj = simulate(phi0, u, spec, tg)
    assert np.max(np.abs(traj.phi - 1.0)) < 1e-12
    assert np.max(np.abs(traj.mu)) < 1e-11


def test_simulate_mean_tracks_closed_form():
    g = Grid(16, 16, 1.0)
    tg = TimeGrid(1.0, 200)
    spec = regular_spec()
    phi0 = Field(g, np.zeros(g.size))
    u = constant_control(g, tg, 2.0)
    traj = simulate(phi0, u, spec, tg)
    means = traj.means()
    ts = tg.times()
    exact = 2.0 * (1.0 - np.exp(-ts))
    assert np.max(np.abs(means - exact)) < 5e-3  # O(tau) bias
    crossing = ts[np.argmax(means > 1.0)]
    assert abs(crossing - math.log(2.0)) < 0.02


def test_simulate_mean_exactly_implicit_euler():
    g = Grid(8, 8, 1.0)
    tg = TimeGrid(0.5, 50)
    spec = regular_spec()
    phi0 = smooth_field(g, amp=0.4)
    u = ControlFunction(g, tg, RNG.uniform(-0.5, 0.5, (tg.nt + 1, g.size)))
    traj = simulate(phi0, u, spec, tg)
    means = traj.means()
    ubar = u.means()
    m = means[0]
    for n in range(tg.nt):
        m = (m + tg.tau * ubar[n]) / (1.0 + tg.tau)
        assert abs(means[n + 1] - m) < 1e-12


def test_simulate_refuses_incompatible_data():
    g = Grid(8, 8, 1.0)
    tg = TimeGrid(1.0, 10)
    spec = PotentialSpec("logarithmic", c1=2.0, eps=1e-2, reg_kind="piecewise_log",
                         stabilization=10.0)
    phi0 = Field(g, np.zeros(g.size))
    u = constant_control(g, tg, 2.0, M=2.0)
    with pytest.raises(ValueError, match="incompatible"):
        simulate(phi0, u, spec, tg)
    # override runs (regularized potential is globally defined)
    tg_short = TimeGrid(0.05, 10)
    u_short = constant_control(g, tg_short, 2.0, M=2.0)
    traj = simulate(phi0, u_short, spec, tg_short, check_compatibility=False)
    assert traj.phi.shape == (11, g.size)


def test_simulate_mean_drift_bound():
    g = Grid(8, 8, 1.0)
    tg = TimeGrid(2.0, 100)
    spec = regular_spec()
    phi0 = Field(g, np.full(g.size, 0.1))
    u = constant_control(g, tg, 0.7)
    traj = simulate(phi0, u, spec, tg)
    assert np.max(np.abs(traj.means() - 0.1)) <= 0.7 + 1e-12


def test_simulate_diagnostics_keys():
    g = Grid(8, 8, 1.0)
    tg = TimeGrid(0.1, 5)
    traj = simulate(Field(g, np.zeros(g.size)), constant_control(g, tg, 0.0),
                    regular_spec(), tg)
    for key in ("t", "mean", "energy", "min_phi", "max_phi", "grad_mu_norm"):
        assert len(traj.diagnostics[key]) == tg.nt + 1


def test_simulate_grid_mismatch():
    g = Grid(8, 8, 1.0)
    g2 = Grid(4, 4, 1.0)
    tg = TimeGrid(0.1, 5)
    with pytest.raises(ShapeMismatch):
        simulate(Field(g2, np.zeros(g2.size)), constant_control(g, tg, 0.0),
                 regular_spec(), tg)


# ---------------------------------------------------------------------------
# mean closed form

def test_mean_closed_form_equilibrium():
    ubar = np.full(11, 0.4)
    for t in (0.0, 0.3, 1.0):
        assert mean_closed_form(0.4, ubar, 0.1, t) == pytest.approx(0.4, rel=1e-12)


def test_mean_closed_form_remark_values():
    ubar = np.full(101, 2.0)
    t = math.log(2.0)
    assert mean_closed_form(0.0, ubar, 0.01, t) == pytest.approx(1.0, rel=1e-12)
    assert mean_closed_form(0.0, ubar, 0.01, 0.5) == pytest.approx(
        2.0 * (1.0 - math.exp(-0.5)), rel=1e-12
    )


def test_mean_closed_form_homogeneous():
    ubar = np.zeros(11)
    assert mean_closed_form(1.0, ubar, 0.1, 0.7) == pytest.approx(math.exp(-0.7), rel=1e-12)


# ---------------------------------------------------------------------------
# energy diagnostics

def test_energy_of_pure_phase():
    g = Grid(8, 8, 1.0)
    assert energy(Field(g, np.ones(g.size)), PotentialSpec("regular")) == pytest.approx(
        0.0, abs=1e-14
    )


def test_energy_balance_stationary():
    g = Grid(8, 8, 1.0)
    tg = TimeGrid(0.5, 20)
    spec = regular_spec()
    traj = simulate(Field(g, np.ones(g.size)), constant_control(g, tg, 1.0), spec, tg)
    res = energy_balance_residual(traj, constant_control(g, tg, 1.0), spec)
    assert np.max(np.abs(res)) < 1e-10


def test_energy_balance_first_order_in_tau():
    # linear dynamics (obstacle variant inside [-1,1]): residual ~ O(tau)
    g = Grid(8, 8, 1.0)
    spec = PotentialSpec("double_obstacle", c2=0.5, eps=0.5, reg_kind="yosida",
                         stabilization=0.0)
    # few, slow modes keep tau * lambda^2 small so the O(tau) regime is visible
    phi0 = smooth_field(g, amp=0.05, nmodes=3)

    def max_res(nt):
        tg = TimeGrid(0.1, nt)
        u = constant_control(g, tg, 0.0)
        traj = simulate(phi0, u, spec, tg)
        return np.max(np.abs(energy_balance_residual(traj, u, spec)))

    r1, r2 = max_res(100), max_res(200)
    assert 1.5 <= r1 / r2 <= 2.5
