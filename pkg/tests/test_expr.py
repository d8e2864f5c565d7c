import numpy as np
import pytest
from hypothesis import given, strategies as st

from templelab.expr import ExprError, parse_expression, parse_system
from templelab.system import check_system
from templelab.systems import get_system

DIAG = """\
name: diag
n: 2
lo: -1, -1
hi: 1, 1
c0: 1
A[1,1]: u1
A[2,2]: 2 + u2
B[1,1]: 1 + u1^2/4
B[2,2]: 1
f[1]: u1^2/2
f[2]: 2*u2 + u2^2/2   # flux consistent with A
"""


@pytest.mark.parametrize("text, value", [
    ("1 + 2*3", 7.0), ("-2^2", -4.0), ("2^3^2", 512.0), ("(1+2)*3", 9.0),
    ("8/4/2", 1.0), ("2**-1", 0.5), ("exp(0)", 1.0), ("1.5e1", 15.0), ("u1*u2 - u2", 2.0 * 3 - 3),
])
def test_expression_values(text, value):
    f = parse_expression(text, 2)
    assert f(np.array([2.0, 3.0])) == pytest.approx(value)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_expression_vectorised(a, b):
    f = parse_expression("u1^2 + exp(u2) / (1 + u1*u1)", 2)
    U = np.array([[a, b], [b, a]])
    expect = [a * a + np.exp(b) / (1 + a * a), b * b + np.exp(a) / (1 + b * b)]
    np.testing.assert_allclose(f(U), expect, rtol=1e-14)


@pytest.mark.parametrize("text, col", [("u1 + * 2", 6), ("u3", 1), ("sin(u1)", 1), ("(u1", 4),
                                       ("u1 $ 2", 4)])
def test_expression_errors_carry_position(text, col):
    with pytest.raises(ExprError) as err:
        parse_expression(text, 2, line=7)
    assert err.value.line == 7
    assert err.value.col == col


def test_parse_system_and_check():
    sys = parse_system(DIAG)
    assert sys.name == "diag" and sys.n == 2
    np.testing.assert_allclose(sys.A(np.array([0.5, 0.1])), [[0.5, 0], [0, 2.1]])
    reports = check_system(sys, count=50)
    assert all(r.passed for r in reports.values())


def test_malformed_system_file_line_and_column(tmp_path):
    bad = DIAG.replace("A[2,2]: 2 + u2", "A[2,2]: 2 + (u2")
    with pytest.raises(ExprError) as err:
        parse_system(bad)
    assert err.value.line == 7
    path = tmp_path / "bad.sys"
    path.write_text(bad)
    with pytest.raises(ExprError):
        get_system(str(path))


def test_system_file_key_errors():
    with pytest.raises(ExprError):
        parse_system(DIAG + "C[1,1]: 1\n")
    with pytest.raises(ExprError):
        parse_system(DIAG + "A[3,1]: 1\n")
    with pytest.raises(Exception):
        parse_system(DIAG.replace("c0: 1\n", ""))
