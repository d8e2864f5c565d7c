import numpy as np
import pytest
from hypothesis import given, strategies as st

from templelab.errors import DomainExit, GridMismatch, InsufficientRecords
from templelab.grid import GridField, SolveConfig, grid_from_function, l1_distance
from templelab.system import compute_frame
from templelab.systems import constant_frame, get_system
from templelab.viscous import (gradient_decompose, residual_v_equation, solve_linearized,
                               solve_viscous)

from conftest import linear_scalar, smooth_field


def gaussian(x, t, a, nu, s=0.5):
    width2 = s * s + 4 * nu * t
    return s / np.sqrt(width2) * np.exp(-((x - a * t) ** 2) / width2)


@given(st.floats(-0.4, 0.4), st.floats(-0.4, 0.4))
def test_constant_data_is_fixed_point(a, b):
    sys = get_system("rotated2")
    u0 = GridField(-1.0, 0.05, 0.0, np.tile([a, b], (41, 1)))
    out = solve_viscous(sys, u0, SolveConfig(epsilon=0.1, t_end=0.3, record_times=(0.1, 0.3)))
    for f in out:
        assert np.array_equal(f.values, u0.values)


def test_advection_diffusion_closed_form():
    sys = linear_scalar(speed=1.0, viscosity=1.0)
    eps, t = 0.05, 1.0
    errors = []
    for cells in (200, 400, 800):
        u0 = grid_from_function(lambda x: gaussian(x, 0, 1.0, eps)[:, None], -4, 6, cells)
        u = solve_viscous(sys, u0, SolveConfig(epsilon=eps, t_end=t))[-1]
        exact = gaussian(u.x, t, 1.0, eps)[:, None]
        errors.append(u.with_values(u.values - exact).l1())
    # first order: the Rusanov flux adds a dx / 2 of numerical viscosity
    assert errors[-1] < 0.03
    order = np.polyfit(np.log([1, 0.5, 0.25]), np.log(errors), 1)[0]
    assert order > 0.8, errors


def test_rotated_system_decouples():
    sys = get_system("rotated2")
    x_cells = 300
    x = np.linspace(-3, 3, x_cells + 1)
    U0 = smooth_field(sys, x, seed=5)
    u0 = GridField(-3.0, 6 / x_cells, 0.0, U0)
    cfg = SolveConfig(epsilon=0.05, t_end=0.5, dt=2e-3)
    u = solve_viscous(sys, u0, cfg)[-1]
    W0 = sys.to_w(U0)
    W = np.empty_like(W0)
    for i, law in enumerate(sys.laws):
        scalar = constant_frame(f"w{i}", np.eye(1), [law], lo=[-2.0], hi=[2.0], c0=1.0)
        W[:, i] = solve_viscous(scalar, u0.with_values(W0[:, i:i + 1]), cfg)[-1].values[:, 0]
    assert np.max(np.abs(sys.from_w(W) - u.values)) < 1e-12


def test_domain_exit():
    sys = get_system("burgers")
    u0 = GridField(-1.0, 0.1, 0.0, np.full((21, 1), 3.0))
    with pytest.raises(DomainExit):
        solve_viscous(sys, u0, SolveConfig(epsilon=0.1, t_end=0.1))


def test_gradient_decomposition_examples():
    sys = get_system("rotated2")
    r1 = compute_frame(sys, [0.0, 0.0]).r[:, 0]
    u = grid_from_function(lambda x: np.outer(0.1 * np.sin(x), r1), -2, 2, 400)
    v = gradient_decompose(sys, u)
    assert np.max(np.abs(v[0].values - 0.1 * np.cos(u.x))[1:-1]) < 1e-5
    assert np.max(np.abs(v[1].values)) < 1e-13
    const = GridField(0.0, 0.1, 0.0, np.full((10, 2), 0.2))
    assert all(np.all(f.values == 0) for f in gradient_decompose(sys, const))


@pytest.mark.parametrize("name", ["rotated2", "langmuir", "rotated3"])
def test_gradient_basis_completeness(name):
    sys = get_system(name)
    x = np.linspace(-2, 2, 201)
    u = GridField(-2.0, 0.02, 0.0, smooth_field(sys, x, seed=7))
    v = np.stack([f.values for f in gradient_decompose(sys, u)], axis=1)
    from templelab.grid import central_derivative
    from templelab.system import frames
    _, _, R, _ = frames(sys, u.values)
    recon = np.einsum("mij,mj->mi", R, v)
    assert np.max(np.abs(recon - central_derivative(u.values, u.dx))) <= 1e-12


def test_linearized_zero_and_heat_kernel():
    sys = linear_scalar(speed=0.5, viscosity=2.0)
    cfg = SolveConfig(epsilon=0.05, t_end=1.0)
    base = GridField(-4.0, 0.02, 0.0, np.zeros((501, 1)))
    traj = solve_viscous(sys, base, cfg.but(record_times=(0.0, 1.0)))
    zero = solve_linearized(sys, traj, base, cfg.but(record_times=(0.0, 1.0)))
    assert all(np.all(h.values == 0) for h in zero)
    h0 = base.with_values(gaussian(base.x, 0, 0.5, 0.1)[:, None])
    h = solve_linearized(sys, traj, h0, cfg.but(record_times=(0.0, 1.0)))[-1]
    exact = gaussian(h.x, 1.0, 0.5, 0.1)[:, None]
    err = h.with_values(h.values - exact).l1()
    assert err < 1.5 * h.dx


def test_linearized_requires_matching_trajectory():
    sys = linear_scalar()
    base = GridField(-1.0, 0.05, 0.0, np.zeros((41, 1)))
    cfg = SolveConfig(epsilon=0.1, t_end=0.2, record_times=(0.0, 0.2))
    traj = solve_viscous(sys, base, cfg)
    with pytest.raises(InsufficientRecords):
        solve_linearized(sys, traj[1:], base, cfg)
    wrong = [traj[0], traj[1].with_values(traj[1].values + 1.0)]
    with pytest.raises(GridMismatch):
        solve_linearized(sys, wrong, base, cfg)


def test_residual_constant_trajectory_is_zero():
    sys = get_system("langmuir")
    u0 = GridField(0.0, 0.05, 0.0, np.tile([0.3, 0.4], (60, 1)))
    traj = solve_viscous(sys, u0, SolveConfig(epsilon=0.1, t_end=0.2, record_times=(0.1, 0.15, 0.2)))
    assert residual_v_equation(sys, traj, 0.1).scalars["l1_mismatch"] == 0.0
    with pytest.raises(InsufficientRecords):
        residual_v_equation(sys, traj[:2], 0.1)
