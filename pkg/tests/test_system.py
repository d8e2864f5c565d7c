import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from templelab.errors import ConfigError, OutOfDomain
from templelab.system import (SystemSpec, check_hypotheses, check_system, check_temple,
                              compute_frame, directional_derivative, frames, lattice_samples,
                              random_samples)
from templelab.systems import bundled_systems, get_system, system_names

from conftest import unit_interval_states

unit2 = st.tuples(st.floats(0, 1), st.floats(0, 1))


def diagonal_system():
    eye = np.eye(2)
    return SystemSpec(name="diag", n=2,
                      A=lambda U: np.broadcast_to(np.diag([1.0, 2.0]),
                                                  np.shape(U)[:-1] + (2, 2)).copy(),
                      B=lambda U: np.broadcast_to(eye, np.shape(U)[:-1] + (2, 2)).copy(),
                      lo=np.array([-1.0, -1.0]), hi=np.array([1.0, 1.0]), c0=1.0)


def test_diagonal_frame():
    fr = compute_frame(diagonal_system(), [0.3, -0.2])
    np.testing.assert_allclose(fr.lam, [1, 2])
    np.testing.assert_allclose(fr.mu, [1, 1])
    np.testing.assert_allclose(fr.r, np.eye(2))
    np.testing.assert_allclose(fr.l, np.eye(2))


@given(unit2)
def test_rotated_frame_matches_closed_form(unit):
    sys = get_system("rotated2")
    u = unit_interval_states(sys, unit)
    fr = compute_frame(sys, u)
    R = sys.frame_matrix / np.linalg.norm(sys.frame_matrix, axis=0)
    np.testing.assert_allclose(fr.r, R, atol=1e-12)
    np.testing.assert_allclose(fr.l @ fr.r, np.eye(2), atol=1e-12)
    w = sys.to_w(u)
    np.testing.assert_allclose(fr.lam, [w[0], 2 + w[1]], atol=1e-12)


def test_langmuir_frame_against_high_precision():
    sys = get_system("langmuir")
    mpmath.mp.dps = 40
    for u in random_samples(sys, 5, seed=3):
        fr = compute_frame(sys, u)
        E, ER = mpmath.eig(mpmath.matrix(sys.A(u).tolist()))
        order = sorted(range(2), key=lambda k: float(mpmath.re(E[k])))
        for col, k in enumerate(order):
            vec = np.array([float(mpmath.re(ER[m, k])) for m in range(2)])
            vec /= np.linalg.norm(vec)
            vec *= np.sign(vec[np.argmax(np.abs(vec))])
            assert abs(float(mpmath.re(E[k])) - fr.lam[col]) < 1e-13
            np.testing.assert_allclose(fr.r[:, col], vec, atol=1e-12)
        A, B = fr.reconstruct()
        np.testing.assert_allclose(A, sys.A(u), atol=1e-12)
        np.testing.assert_allclose(B, sys.B(u), atol=1e-12)


@pytest.mark.parametrize("sys", bundled_systems(), ids=lambda s: s.name)
def test_batched_frames_agree_with_compute_frame(sys):
    U = random_samples(sys, 20, seed=1)
    lam, mu, R, L = frames(sys, U)
    for k, u in enumerate(U):
        fr = compute_frame(sys, u)
        np.testing.assert_allclose(lam[k], fr.lam, atol=1e-12)
        np.testing.assert_allclose(mu[k], fr.mu, atol=1e-12)
        np.testing.assert_allclose(R[k], fr.r, atol=1e-10)


@pytest.mark.parametrize("sys", bundled_systems(), ids=lambda s: s.name)
def test_frame_invariants(sys):
    for u in lattice_samples(sys, 25):
        fr = compute_frame(sys, u)
        A, B = sys.A(u), sys.B(u)
        np.testing.assert_allclose(np.linalg.norm(fr.r, axis=0), 1.0, atol=1e-12)
        np.testing.assert_allclose(fr.l @ fr.r, np.eye(sys.n), atol=1e-10)
        np.testing.assert_allclose(A @ fr.r, fr.r * fr.lam, atol=1e-10)
        np.testing.assert_allclose(B @ fr.r, fr.r * fr.mu, atol=1e-10)
        assert np.all(np.diff(fr.lam) > 0)
        # sign convention: largest component positive
        idx = np.argmax(np.abs(fr.r), axis=0)
        assert np.all(fr.r[idx, np.arange(sys.n)] > 0)


def test_frame_outside_box_raises(rotated2):
    with pytest.raises(OutOfDomain):
        compute_frame(rotated2, [5.0, 0.0])


def test_directional_derivative_examples():
    u = np.array([1.0, 0.0])
    assert np.all(directional_derivative(lambda v: np.full(3, 2.0), u, [1, 1]) == 0)
    np.testing.assert_allclose(directional_derivative(lambda v: v, u, [0.3, -2.0]), [0.3, -2.0])
    d = directional_derivative(lambda v: v @ v, u, [0.0, 1.0], step=1e-4)
    assert abs(d) <= 1e-7


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_directional_derivative_of_quadratic(a, b, za, zb):
    u, z = np.array([a, b]), np.array([za, zb])
    d = directional_derivative(lambda v: v @ v, u, z, step=1e-3)
    assert abs(d - 2 * u @ z) <= 1e-9


def test_directional_derivative_rejects_stencil_outside(rotated2):
    with pytest.raises(OutOfDomain):
        directional_derivative(lambda v: v, rotated2.hi, [1.0, 0.0], step=1e-3, sys=rotated2)


@pytest.mark.parametrize("sys", bundled_systems(), ids=lambda s: s.name)
def test_bundled_systems_pass_all_checks(sys):
    reports = check_system(sys, count=100)
    assert all(r.passed for r in reports.values()), {k: r.scalars for k, r in reports.items()}
    assert reports["temple"].scalars["max_residual"] <= 1e-6


def test_psystem_fails_temple_only():
    sys = get_system("psystem")
    reports = check_system(sys, count=100)
    assert reports["hypotheses"].passed
    assert not reports["temple"].passed
    assert reports["temple"].scalars["max_residual"] > 1e-2


def test_constant_frame_temple_residual_is_zero(rotated2):
    assert check_temple(rotated2, lattice_samples(rotated2, 50)).scalars["max_residual"] < 1e-12


def test_rotated2_gap_and_burgers_viscosity():
    sys = get_system("rotated2")
    lam, _, _, _ = frames(sys, lattice_samples(sys, 400, margin=0.0))
    assert np.diff(lam, axis=-1).min() >= 1.0
    b = get_system("burgers")
    _, mu, _, _ = frames(b, np.linspace(-5, 5, 101)[:, None])
    assert mu.min() >= b.c0 == 1.0


def test_commutation_violation_detected():
    sys = SystemSpec(name="skew", n=2,
                     A=lambda U: np.broadcast_to(np.diag([1.0, 2.0]), np.shape(U)[:-1] + (2, 2)).copy(),
                     B=lambda U: np.broadcast_to(np.array([[2.0, 0.5], [0.0, 2.0]]),
                                                 np.shape(U)[:-1] + (2, 2)).copy(),
                     lo=np.array([-1.0, -1.0]), hi=np.array([1.0, 1.0]), c0=1.0)
    rep = check_hypotheses(sys, lattice_samples(sys, 10))
    assert not rep.passed and not rep.scalars["pass_commutation"]


def test_lattice_is_deterministic_and_inside(bundled):
    a, b = lattice_samples(bundled, 100), lattice_samples(bundled, 100)
    assert np.array_equal(a, b)
    assert np.all(bundled.contains(a))


def test_unknown_system():
    assert "psystem" in system_names()
    with pytest.raises(ConfigError):
        get_system("no-such-system")
