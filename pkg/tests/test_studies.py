import numpy as np
import pytest
from hypothesis import given, strategies as st

from templelab.config import GridSpec, build_field
from templelab.errors import NoReference
from templelab.grid import GridField, SolveConfig, grid_from_function
from templelab.studies import (bv_study, common_step, decay_study, exact_reference, fit_power,
                               frame_condition, linearization_check, propagation_study,
                               stability_study, time_continuity_study, vanishing_viscosity_study)
from templelab.systems import get_system

from conftest import linear_scalar


@given(st.floats(0.1, 10), st.floats(-2, 2))
def test_fit_power_recovers_exponent(c, p):
    x = np.array([0.1, 0.05, 0.025, 0.0125])
    fit = fit_power(x, c * x ** p)
    assert fit["exponent"] == pytest.approx(p, abs=1e-9)
    assert fit["constant"] == pytest.approx(c, rel=1e-8)
    assert fit["residual"] < 1e-9


def test_frame_condition():
    assert frame_condition(get_system("rotated2")) == pytest.approx(2.0)
    assert frame_condition(get_system("burgers")) == 1.0


def constant(sys, value, cells=100):
    return GridField(-1.0, 2.0 / cells, 0.0, np.tile(value, (cells + 1, 1)))


def test_trivial_studies():
    sys = get_system("rotated2")
    u0 = constant(sys, [0.1, -0.1])
    bv = bv_study(sys, u0, [0.1, 0.05], 0.2, records=4)
    assert bv.scalars["sup_tv"] == 0.0 and bv.passed
    st_rep = stability_study(sys, u0, u0, 0.1, 0.2)
    assert st_rep.scalars["max_ratio"] == 0.0 and st_rep.passed
    tc = time_continuity_study(sys, u0, [0.1], [(0.1, 0.1), (0.0, 0.2)])
    assert all(d == 0.0 for d in tc.series["distance"])
    pr = propagation_study(sys, u0, u0, [0.02], 0.1, support=(-0.1, 0.1))
    assert pr.scalars["max_outside_sup"] == 0.0
    vv = vanishing_viscosity_study(sys, [0.0], [[0.1, 0.1], [0.1, 0.1]], [0.04, 0.02], 0.2,
                                   -0.5, 0.5)
    assert all(e == 0.0 for e in vv.series["l1_error"]) and vv.passed


def test_time_continuity_heat_and_transport():
    heat = linear_scalar(speed=0.0, viscosity=1.0)
    u0 = grid_from_function(lambda x: np.where(np.abs(x) < 0.5, 1.0, 0.0)[:, None], -3, 3, 600)
    pairs = [(0.0, 0.05), (0.05, 0.2), (0.1, 0.4), (0.0, 0.4)]
    rep = time_continuity_study(heat, u0, [0.1, 0.05], pairs)
    assert rep.fit["b"] > 0 and rep.fit["a"] < 0.05 * rep.fit["b"]
    move = linear_scalar(speed=1.0, viscosity=1.0)
    u0 = grid_from_function(lambda x: np.exp(-x ** 2 / 0.1)[:, None], -2, 3, 1000)
    rep = time_continuity_study(move, u0, [1e-4], pairs)
    tv = 2.0
    assert rep.fit["a"] == pytest.approx(1.0 * tv, rel=0.1)


def test_scalar_bv_and_stability_oracles():
    sys = get_system("burgers")
    grid = GridSpec(-2, 2, 400)
    u0 = build_field(sys, {"profiles": [{"shape": "wave", "center": 0, "width": 0.5,
                                         "amplitude": [0.3]}]}, grid)
    bv = bv_study(sys, u0, [0.02, 0.01], 0.3, records=6)
    assert bv.scalars["L1_fit"] <= 1 + 1e-8
    v0 = build_field(sys, {"profiles": [{"shape": "wave", "center": 0, "width": 0.5,
                                         "amplitude": [0.3]},
                                        {"center": 0.2, "width": 0.2, "amplitude": [0.05]}]}, grid)
    rep = stability_study(sys, u0, v0, 0.02, 0.3, theta_count=4, records=4)
    assert rep.scalars["max_ratio"] <= 1 + 1e-6
    assert rep.scalars["pass_homotopy"]


def test_common_step_respects_every_field():
    sys = get_system("burgers")
    a = constant(sys, [0.1])
    b = constant(sys, [1.5])
    cfg = SolveConfig(epsilon=0.01, t_end=1.0)
    dt = common_step(sys, [a, b], cfg)
    assert dt <= 0.5 * cfg.cfl * a.dx / 1.5


def test_linearization_and_decay_small():
    sys = get_system("rotated2")
    grid = GridSpec(-3, 3, 200)
    u0 = build_field(sys, {"profiles": [{"center": 0, "width": 0.4, "amplitude": [0.1, 0.05],
                                         "coords": "w"}]}, grid)
    h0 = build_field(sys, {"base": [0.0, 0.0], "profiles": [{"center": 0, "width": 0.3,
                                                             "amplitude": [1.0, 0.5]}]}, grid)
    rep = linearization_check(sys, u0, h0, SolveConfig(epsilon=0.05, t_end=0.3))
    assert rep.passed, rep.scalars
    burg = get_system("burgers")
    u0 = build_field(burg, {"pieces": {"breaks": [0.0], "states": [[0.0], [0.02]]}},
                     GridSpec(-15, 15, 300))
    rep = decay_study(burg, u0, 1.0, 5.0)
    assert rep.passed, rep.fit


def test_exact_reference_dispatch():
    ref = exact_reference(get_system("burgers"), [0.0], [[1.0], [0.0]], 1.0)
    np.testing.assert_allclose(np.ravel(ref(np.array([0.4, 0.6]))), [1.0, 0.0])
    ref = exact_reference(get_system("langmuir"), [0.0], [[0.3, 0.3], [0.3, 0.3]], 1.0)
    np.testing.assert_allclose(ref(np.array([0.0])).ravel(), [0.3, 0.3])
    with pytest.raises(NoReference):
        exact_reference(get_system("psystem"), [0.0], [[1.0, 0.0], [1.2, 0.0]], 1.0)
