import numpy as np
import pytest
from hypothesis import given, strategies as st

from templelab.coefficients import source_coefficients, source_phi
from templelab.system import random_samples
from templelab.systems import bundled_systems, get_system

from conftest import linear_scalar, unit_interval_states


@pytest.mark.parametrize("sys", bundled_systems(), ids=lambda s: s.name)
def test_vanishing_identities(sys):
    for u in random_samples(sys, 50, seed=11):
        res = source_coefficients(sys, u).identity_residuals()
        assert max(res.values()) <= 1e-8, (u, res)


def test_constant_coefficients_vanish():
    c = source_coefficients(linear_scalar(1.0, 2.0), [0.3])
    for arr in (c.p, c.q, c.s, c.phat, c.qhat, c.shat, c.what):
        assert np.all(np.abs(arr) <= 1e-9)  # second differences at h ~ 1e-3


def test_langmuir_step_refinement():
    sys = get_system("langmuir")
    u = np.array([0.3, 0.45])
    coarse = source_coefficients(sys, u, h=2.4e-3)
    fine = source_coefficients(sys, u, h=1.2e-3)
    for name in ("p", "q", "s", "phat", "qhat", "shat", "what"):
        a, b = getattr(coarse, name), getattr(fine, name)
        assert np.max(np.abs(a - b)) <= 1e-6, name


@given(st.tuples(st.floats(0, 1), st.floats(0, 1)))
def test_constant_frame_only_off_diagonal_p(unit):
    # each lambda_i depends on w_i alone: p^i_jk with j != k is the only possible source
    sys = get_system("rotated2")
    c = source_coefficients(sys, unit_interval_states(sys, unit))
    assert np.all(np.abs(c.p) <= 1e-9)


def test_source_phi_zero_for_single_family_gradient():
    sys = get_system("langmuir")
    U = random_samples(sys, 8, seed=2)
    V = np.zeros_like(U)
    V[:, 0] = np.linspace(-1, 1, 8)
    Vx = np.zeros_like(U)
    Vx[:, 0] = 0.5
    phi = source_phi(sys, U, V, Vx, epsilon=1.0)
    assert np.max(np.abs(phi)) <= 1e-7
