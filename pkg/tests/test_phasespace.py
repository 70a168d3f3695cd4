"""Tests for the classical phase-space module."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alltoall.phasespace import (
    classical_hamiltonian,
    ellipk_quadrature,
    eom_integrate,
    eom_rhs,
    lmg_omega0,
    mc_autocorrelation,
    otoc_saddle_prediction,
    quadrature_autocorrelation,
    quadrature_ensemble,
    saddle_exponent,
    sample_gaussian,
)
from alltoall.symops import euler_top, lmg

EULER = euler_top(0.0, -1.0, 0.5)


# ---------------------------------------------------------------------------
# equations of motion


def test_euler_axis_fixed_points():
    t = np.linspace(0, 5, 11)
    for axis in range(3):
        p0 = np.zeros(3)
        p0[axis] = 1.3
        traj = eom_integrate(EULER, p0, t)
        np.testing.assert_allclose(traj - traj[0], 0.0, atol=1e-12)


def test_lmg_fixed_point_on_x():
    t = np.linspace(0, 5, 11)
    traj = eom_integrate(lmg(1.0), np.array([1.7, 0.0, 0.0]), t)
    np.testing.assert_allclose(traj - traj[0], 0.0, atol=1e-12)


def test_conservation_along_trajectories():
    rng = np.random.default_rng(1)
    s0 = rng.normal(0, 0.5, size=(20, 3))
    t = np.linspace(0, 5, 6)
    for model in (EULER, lmg(1.0)):
        traj = eom_integrate(model, s0, t)
        r2 = np.sum(traj**2, axis=-1)
        h = classical_hamiltonian(model, traj)
        assert np.max(np.abs(r2 - r2[0])) < 1e-8 * 5
        assert np.max(np.abs(h - h[0])) < 1e-8 * 5


def test_step_too_large_raises():
    with pytest.raises(RuntimeError):
        eom_integrate(
            lmg(1.0), np.array([0.0, 0.0, 3.0]), np.linspace(0, 10, 3), step=0.5
        )


def test_lmg_instability_exponent_measured():
    # deviation from the unstable fixed point grows like exp(sqrt(Jr-1) t)
    for r in (1.5, 2.0, 3.0):
        lam = np.sqrt(r - 1.0)
        t = np.linspace(0, 3.0 / lam, 40)
        eps = 1e-7
        traj = eom_integrate(lmg(1.0), np.array([r, 0.0, eps]), t)
        dev = np.linalg.norm(traj - np.array([r, 0.0, 0.0]), axis=-1)
        window = (dev > 10 * eps) & (dev < 1e-3)
        slope = np.polyfit(t[window], np.log(dev[window]), 1)[0]
        assert slope == pytest.approx(lam, rel=0.05)


def test_liouville_volume_preservation():
    # the flow is divergence-free: a small cloud keeps its volume
    model = lmg(1.0)
    center = np.array([0.4, -0.2, 0.3])
    eps = 1e-4
    corners = center + eps * np.array(
        [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1.0]]
    )
    traj = eom_integrate(model, corners, np.linspace(0, 2, 3))
    for snap in traj:
        vol = np.linalg.det((snap[1:] - snap[0]).T)
        assert vol == pytest.approx(eps**3, rel=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_divergence_free_vector_field(seed):
    # numerical divergence of the EOM vector field vanishes identically
    rng = np.random.default_rng(seed)
    s = rng.normal(0, 1, size=3)
    for model in (EULER, lmg(1.3)):
        div = 0.0
        eps = 1e-5
        for a in range(3):
            dp = s.copy()
            dm = s.copy()
            dp[a] += eps
            dm[a] -= eps
            div += (eom_rhs(model, dp)[a] - eom_rhs(model, dm)[a]) / (2 * eps)
        assert abs(div) < 1e-9


# ---------------------------------------------------------------------------
# ensembles


def test_sampler_moments():
    s = sample_gaussian(10**6, seed=42)
    n = s.shape[0]
    sig_var = 0.25 * np.sqrt(2.0 / n)  # std error of a variance estimate
    for a in range(3):
        assert abs(s[:, a].mean()) < 3 * 0.5 / np.sqrt(n)
        assert abs(s[:, a].var() - 0.25) < 3 * sig_var
        assert abs((s[:, a] ** 4).mean() - 3 * 0.25**2) < 3 * 0.2 / np.sqrt(n)
    for a in range(3):
        b = (a + 1) % 3
        assert abs((s[:, a] * s[:, b]).mean()) < 3 * 0.25 / np.sqrt(n)


def test_sampler_deterministic():
    np.testing.assert_array_equal(
        sample_gaussian(1000, seed=7), sample_gaussian(1000, seed=7)
    )


def test_sampler_count_validation():
    with pytest.raises(ValueError):
        sample_gaussian(0, seed=1)


def test_quadrature_ensemble_moments():
    pts, wts = quadrature_ensemble(24)
    assert wts.sum() == pytest.approx(1.0, abs=1e-12)
    for a in range(3):
        assert wts @ pts[:, a] == pytest.approx(0.0, abs=1e-12)
        assert wts @ pts[:, a] ** 2 == pytest.approx(0.25, abs=1e-12)
        assert wts @ pts[:, a] ** 4 == pytest.approx(3 * 0.25**2, abs=1e-12)


# ---------------------------------------------------------------------------
# autocorrelation


def test_mc_initial_value():
    ens = sample_gaussian(20000, seed=3)
    res = mc_autocorrelation(EULER, "x", ens, np.array([0.0, 0.5]))
    assert abs(res.G[0] - 0.25) < 3 * res.stderr[0]


def test_isotropic_euler_frozen():
    ens = sample_gaussian(2000, seed=5)
    res = mc_autocorrelation(
        euler_top(1.0, 1.0, 1.0), "x", ens, np.linspace(0, 3, 4)
    )
    np.testing.assert_allclose(res.G, res.G[0], atol=1e-10)


def test_quadrature_matches_mc():
    t = np.linspace(0, 3, 7)
    gq = quadrature_autocorrelation(EULER, "x", t, n_nodes=24)
    ens = sample_gaussian(40000, seed=11)
    res = mc_autocorrelation(EULER, "x", ens, t)
    assert np.all(np.abs(gq - res.G) < 4 * res.stderr)
    assert gq[0] == pytest.approx(0.25, abs=1e-10)


# ---------------------------------------------------------------------------
# saddles


def test_lmg_saddle_formula():
    info = saddle_exponent(lmg(1.0), 2.0)
    assert info.rate == pytest.approx(1.0)
    assert saddle_exponent(lmg(1.0), 0.5).rate is None


def test_euler_saddle_on_middle_axis():
    info = saddle_exponent(EULER, 1.0)
    assert info.omega == pytest.approx(np.sqrt(0.5))
    np.testing.assert_allclose(info.location, [1.0, 0.0, 0.0])


def test_euler_saddle_vs_jacobian():
    # linearization eigenvalues at the on-axis saddle match omega * r
    r = 1.4
    info = saddle_exponent(EULER, r)
    eps = 1e-7
    jac = np.empty((3, 3))
    for a in range(3):
        dp = info.location.copy()
        dm = info.location.copy()
        dp[a] += eps
        dm[a] -= eps
        jac[:, a] = (eom_rhs(EULER, dp) - eom_rhs(EULER, dm)) / (2 * eps)
    eig = np.linalg.eigvals(jac)
    assert np.max(eig.real) == pytest.approx(info.rate, abs=1e-6)


def test_lmg_saddle_vs_jacobian():
    r, j = 2.5, 1.0
    info = saddle_exponent(lmg(j), r)
    eps = 1e-7
    jac = np.empty((3, 3))
    for a in range(3):
        dp = info.location.copy()
        dm = info.location.copy()
        dp[a] += eps
        dm[a] -= eps
        jac[:, a] = (eom_rhs(lmg(j), dp) - eom_rhs(lmg(j), dm)) / (2 * eps)
    eig = np.linalg.eigvals(jac)
    assert np.max(eig.real) == pytest.approx(info.rate, abs=1e-6)


# ---------------------------------------------------------------------------
# OTOC saddle prediction


def test_euler_prediction_exponent():
    t = np.geomspace(2, 40, 25)
    pred = otoc_saddle_prediction(EULER, t)
    assert pred.exponent == pytest.approx(2.0, abs=0.05)


def test_euler_prediction_laplace_value():
    # max_r (omega r t - 2 r^2) = omega^2 t^2 / 8
    omega2 = 0.5
    t = np.geomspace(15, 40, 9)
    pred = otoc_saddle_prediction(EULER, t)
    np.testing.assert_allclose(pred.ln_c, omega2 * t**2 / 8, rtol=0.04)


def test_lmg_prediction_exponent():
    # the sqrt(Jr-1) rate has slowly decaying corrections; probe deep times
    t = np.geomspace(500, 5000, 21)
    pred = otoc_saddle_prediction(lmg(1.0), t)
    assert pred.exponent == pytest.approx(4.0 / 3.0, abs=0.05)


# ---------------------------------------------------------------------------
# elliptic growth rate


def test_omega0_against_quadrature():
    j, e = 1.0, 0.0
    disc = np.sqrt(j**2 - 2 * e * j + 1)
    m = (1 - e * j + disc) / (1 - e * j - disc)
    expected = np.sqrt(disc + e * j - 1) / (2 * np.sqrt(2) * ellipk_quadrature(m))
    assert lmg_omega0(j, e) == pytest.approx(expected, rel=1e-8)


def test_omega0_frozen_regression():
    # value at (J=1, E=0) computed once by independent quadrature and frozen
    assert lmg_omega0(1.0, 0.0) == pytest.approx(0.2477417317, abs=1e-6)


def test_omega0_vanishes_at_band_edge():
    vals = [lmg_omega0(2.0, e) for e in (-0.5, -0.9, -0.99, -0.999, -0.9999)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < vals[0] / 2


def test_omega0_domain_error():
    with pytest.raises(ValueError):
        lmg_omega0(1.0, -1.5)
    with pytest.raises(ValueError):
        lmg_omega0(1.0, 2.0)


def test_omega0_large_j_asymptote():
    r3 = lmg_omega0(1e3, 0.2e3) * np.log(1e3) / 1e3
    r4 = lmg_omega0(1e4, 0.2e4) * np.log(1e4) / 1e4
    assert abs(r3 - r4) / r4 < 0.1
