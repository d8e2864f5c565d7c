import numpy as np
import pytest
from hypothesis import assume, example, given, settings, strategies as st

from templelab.errors import InteractionReached, OutOfDomain
from templelab.riemann import (curve_nodes, glued_evolution, interaction_horizon,
                               rarefaction_curve, scalar_flux, scalar_riemann, solve_riemann,
                               stable_profile, straight_line_defect, wave_decomposition)
from templelab.system import compute_frame
from templelab.systems import get_system

from conftest import linear_scalar

small = st.floats(-0.3, 0.3)


def test_rarefaction_curve_examples():
    sys = get_system("rotated2")
    u = np.array([0.1, -0.05])
    assert np.array_equal(rarefaction_curve(sys, 0, u, 0.0), u)
    for i in range(2):
        r = compute_frame(sys, u).r[:, i]
        np.testing.assert_allclose(rarefaction_curve(sys, i, u, 0.3), u + 0.3 * r, atol=1e-14)


def test_langmuir_curves_are_straight():
    sys = get_system("langmuir")
    u = np.array([0.4, 0.3])
    for i in range(2):
        for sigma in (-0.1, 0.05, 0.1):
            assert straight_line_defect(sys, i, u, sigma) <= 1e-8


def test_curve_leaving_box_raises():
    sys = get_system("rotated2")
    with pytest.raises(OutOfDomain):
        rarefaction_curve(sys, 0, [0.4, 0.0], 0.5)


def test_curve_nodes_are_ordered():
    sys = get_system("langmuir")
    omega = np.linspace(-0.1, 0.1, 21)
    pts = curve_nodes(sys, 1, [0.4, 0.3], omega)
    np.testing.assert_allclose(np.linalg.norm(np.diff(pts, axis=0), axis=1), 0.01, rtol=1e-8)


def test_trivial_and_pure_wave_decomposition():
    sys = get_system("langmuir")
    u_l = np.array([0.4, 0.3])
    sigma, w = wave_decomposition(sys, u_l, u_l)
    assert np.all(sigma == 0) and np.all(w == u_l)
    u_r = rarefaction_curve(sys, 0, u_l, 0.2)
    sigma, w = wave_decomposition(sys, u_l, u_r)
    np.testing.assert_allclose(sigma, [0.2, 0.0], atol=1e-10)
    np.testing.assert_allclose(w[-1], u_r, atol=1e-12)


@given(small, small, small, small)
def test_constant_frame_strengths_are_linear(a, b, c, d):
    sys = get_system("rotated2")
    u_l, u_r = np.array([a, b]) / 2, np.array([c, d]) / 2
    sigma, w = wave_decomposition(sys, u_l, u_r)
    fr = compute_frame(sys, u_l)
    np.testing.assert_allclose(sigma, fr.l @ (u_r - u_l), atol=1e-13)
    np.testing.assert_allclose(w[0], u_l)
    np.testing.assert_allclose(w[-1], u_r, atol=1e-13)


def test_flux_examples():
    lin = scalar_flux(linear_scalar(speed=0.7), 0, [0.0], 1.0)
    np.testing.assert_allclose(lin.F, 0.7 * lin.omega, atol=1e-14)
    burg = scalar_flux(get_system("burgers"), 0, [0.0], 1.0)
    np.testing.assert_allclose(burg.F, 0.5 * burg.omega ** 2, atol=1e-10)
    for sigma in (0.5, -0.5):
        F = scalar_flux(get_system("langmuir"), 0, [0.4, 0.3], sigma * 0.3)
        assert F(0.0) == 0.0 and F.F[F.omega == 0.0][0] == 0.0


def test_burgers_fan_and_shock_closed_forms():
    F = scalar_flux(get_system("burgers"), 0, [0.0], 1.0)
    P = scalar_riemann(F)
    xi = F.omega  # tabulation grid; speeds equal states here
    assert np.max(np.abs(P(xi) - np.clip(xi, 0, 1))) <= 1e-10
    assert np.max(np.abs(P(np.array([-1.0, 2.0])) - [0, 1])) == 0
    assert [w.kind for w in P.waves] == ["rarefaction"]
    S = scalar_riemann(scalar_flux(get_system("burgers"), 0, [0.0], -1.0))
    xi = np.linspace(-2, 2, 4001)
    exact = np.where(xi < -0.5, 0.0, -1.0)
    away = np.abs(xi + 0.5) > 1e-12
    assert np.max(np.abs(S(xi) - exact)[away]) <= 1e-10
    assert len(S.waves) == 1 and S.waves[0].kind == "shock"
    assert S.waves[0].speeds[0] == pytest.approx(-0.5, abs=1e-10)
    assert P.entropy_defect <= 1e-12 and S.entropy_defect <= 1e-12


def test_linear_flux_gives_contact():
    P = scalar_riemann(scalar_flux(linear_scalar(speed=-0.4), 0, [0.0], 0.8))
    assert [w.kind for w in P.waves] == ["contact"]
    assert P.waves[0].speeds[0] == pytest.approx(-0.4, abs=1e-12)


@pytest.mark.parametrize("sigma", [0.25, -0.25])
def test_langmuir_envelope_entropy(sigma):
    sys = get_system("langmuir")
    F, P, change = stable_profile(sys, 1, [0.3, 0.3], sigma)
    assert change <= 1e-10
    env = P.envelope(F, F.omega)
    side = 1.0 if sigma > 0 else -1.0
    # lower envelope below F for sigma > 0, upper above for sigma < 0
    assert np.all(side * (env - F.F) <= 1e-12)
    assert P.entropy_defect <= 1e-12
    z = P(np.linspace(P.speed_range[0] - 1, P.speed_range[1] + 1, 500))
    assert np.all(np.diff(z) * np.sign(sigma) >= -1e-15)


def test_fan_constant_and_pure_wave():
    sys = get_system("rotated2")
    u = np.array([0.1, 0.1])
    fan = solve_riemann(sys, u, u)
    assert fan.span is None
    np.testing.assert_array_equal(fan.sample(1.0, np.linspace(-3, 3, 7)), np.tile(u, (7, 1)))
    r1 = compute_frame(sys, u).r[:, 0]
    fan = solve_riemann(sys, u, u + 0.2 * r1)
    np.testing.assert_allclose(fan.sigma, [0.2, 0.0], atol=1e-10)
    d = fan.to_dict()
    assert [len(f["waves"]) for f in d["families"]] == [1, 0]
    xi = np.linspace(-1, 3, 801)
    U = fan.sample(1.0, xi)
    z = fan.z[0](xi)
    np.testing.assert_allclose(U, u + z[:, None] * r1, atol=1e-12)


@settings(max_examples=10)
@given(small, small, small, small)
@example(0.0, 0.25, -0.25, -0.25)  # leaves the box in the middle state; must be skipped
def test_constant_frame_fan_decouples(a, b, c, d):
    sys = get_system("rotated2")
    u_l, u_r = np.array([a, b]), np.array([c, d])
    wl, wr = sys.to_w(u_l), sys.to_w(u_r)
    # the intermediate state must stay in the box
    mid = sys.from_w(np.array([wr[0], wl[1]]))
    assume(np.all(mid >= sys.lo) and np.all(mid <= sys.hi))
    fan = solve_riemann(sys, u_l, u_r)
    xi = np.linspace(-1, 3, 401)
    U = fan.sample(1.0, xi)
    W = sys.to_w(U)
    # component 1 is Burgers, component 2 is shifted Burgers with speed 2 + w
    for i, shift in ((0, 0.0), (1, 2.0)):
        lo, hi = wl[i], wr[i]
        if lo > hi:
            s = shift + 0.5 * (lo + hi)
            exact = np.where(xi < s, lo, hi)
            mask = np.abs(xi - s) > 1e-2
        else:
            exact = np.clip(xi - shift, lo, hi)
            mask = np.ones_like(xi, dtype=bool)
        assert np.max(np.abs(W[mask, i] - exact[mask])) <= 1e-9


def test_fan_self_similarity_and_sectors():
    sys = get_system("langmuir")
    fan = solve_riemann(sys, [0.2, 0.5], [0.5, 0.2])
    x = np.linspace(-2, 2, 101)
    np.testing.assert_array_equal(fan.sample(2.0, 2 * x), fan.sample(1.0, x))
    np.testing.assert_allclose(fan.w[-1], [0.5, 0.2], atol=1e-12)
    lo, hi = fan.speed_ranges[0], fan.speed_ranges[1]
    assert lo[1] < fan.lambda_bar[0] < hi[0]


def test_glued_single_jump_matches_fan():
    sys = get_system("rotated2")
    ul, ur = np.array([0.1, 0.1]), np.array([-0.1, 0.05])
    fan = solve_riemann(sys, ul, ur)
    glued = glued_evolution(sys, [0.3], [ul, ur], 0.5)
    x = np.linspace(-2, 3, 301)
    np.testing.assert_allclose(glued.sample(x), fan.sample(0.5, x - 0.3), atol=1e-14)


def test_glued_horizon_and_interaction():
    sys = get_system("burgers")
    states = [[1.0], [0.0], [1.0]]
    g = glued_evolution(sys, [0.0, 1.0], states, 0.1)
    lam_max = 1.0
    assert g.horizon >= 1.0 / (2 * lam_max)
    assert interaction_horizon(g.breaks, g.fans) == g.horizon
    mid = 0.5
    left, right = g.sample(np.array([mid - 1e-9, mid + 1e-9]))
    np.testing.assert_allclose(left, right, atol=1e-8)
    with pytest.raises(InteractionReached):
        glued_evolution(sys, [0.0, 1.0], states, 10.0)


def test_glued_single_family_waves_reproduce_sectors():
    sys = get_system("rotated2")
    delta = 0.5
    w0 = np.array([0.05, -0.05])
    fr = compute_frame(sys, w0)
    w1 = w0 + 0.15 * fr.r[:, 0]
    w2 = w1 - 0.1 * fr.r[:, 1]
    t = 0.2
    g = glued_evolution(sys, [0.0, delta], [w0, w1, w2], t)
    x = np.linspace(-1, 2, 601)
    U = g.sample(x)
    z1 = g.fans[0].z[0]((x - 0.0) / t)
    z2 = g.fans[1].z[1]((x - delta) / t)
    left = x < 0.5 * delta
    np.testing.assert_allclose(U[left], w0 + np.outer(z1[left], fr.r[:, 0]), atol=1e-12)
    np.testing.assert_allclose(U[~left], w1 + np.outer(z2[~left], fr.r[:, 1]), atol=1e-12)
