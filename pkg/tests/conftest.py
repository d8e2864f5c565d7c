import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from templelab.systems import bundled_systems, get_system

settings.register_profile("lab", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lab")


@pytest.fixture(params=["burgers", "rotated2", "rotated3", "langmuir"])
def bundled(request):
    return get_system(request.param)


@pytest.fixture
def rotated2():
    return get_system("rotated2")


@pytest.fixture
def burgers():
    return get_system("burgers")


@pytest.fixture
def langmuir():
    return get_system("langmuir")


def all_bundled():
    return bundled_systems()


def unit_interval_states(sys, unit):
    """Map points of [0, 1]^n into the interior of the domain box."""
    unit = np.asarray(unit, dtype=float)
    return sys.lo + (sys.hi - sys.lo) * (0.05 + 0.9 * unit)


def linear_scalar(speed: float = 1.0, viscosity: float = 1.0, bound: float = 5.0):
    """Advection-diffusion ``u_t + a u_x = eps mu u_xx`` as a one-family system."""
    from templelab.system import ScalarLaw
    from templelab.systems import constant_frame
    law = ScalarLaw(flux=lambda w: speed * w, speed=lambda w: speed + 0.0 * w,
                    viscosity=lambda w: viscosity + 0.0 * w)
    return constant_frame("linear", np.eye(1), [law], lo=[-bound], hi=[bound], c0=viscosity)


def smooth_field(sys, x, seed, modes=4, amplitude=0.6):
    """Random smooth state field inside the domain box, flat near the ends."""
    rng = np.random.default_rng(seed)
    mid = 0.5 * (sys.lo + sys.hi)
    half = 0.5 * (sys.hi - sys.lo)
    span = x[-1] - x[0]
    env = np.exp(-((x - 0.5 * (x[0] + x[-1])) / (0.25 * span)) ** 2)
    out = np.tile(mid, (x.size, 1)).astype(float)
    for i in range(sys.n):
        acc = np.zeros_like(x)
        for _ in range(modes):
            k = rng.uniform(1, 4) * 2 * np.pi / span
            acc += rng.normal() * np.sin(k * x + rng.uniform(0, 2 * np.pi))
        acc = acc / max(np.abs(acc).max(), 1e-12)
        out[:, i] += amplitude * half[i] * env * acc
    return out


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
