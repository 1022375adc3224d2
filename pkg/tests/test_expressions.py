import math

import numpy as np
import pytest

from gelfand4.errors import ExpressionError
from gelfand4.expressions import parse_expression


def test_basic_arithmetic():
    assert parse_expression("2 + 3 * 4 ^ 2")(0.0) == 50.0
    assert parse_expression("(2 + 3) * 4")(0.0) == 20.0
    assert parse_expression("10 / 4")(0.0) == 2.5


def test_variable_and_functions():
    ex = parse_expression("exp(t) - 1/(1-t)^2 + 2*pi")
    t = 0.5
    assert ex(t) == pytest.approx(math.exp(t) - 1.0 / (1 - t) ** 2 + 2 * math.pi)
    assert parse_expression("log(t)")(math.e) == pytest.approx(1.0)
    assert parse_expression("e^t")(2.0) == pytest.approx(math.e**2)


def test_unary_minus_binds_looser_than_power():
    assert parse_expression("-t^2")(3.0) == -9.0
    assert parse_expression("(-t)^2")(3.0) == 9.0
    assert parse_expression("2^-1")(0.0) == 0.5


def test_power_right_associative():
    assert parse_expression("2^3^2")(0.0) == 512.0


def test_vectorized_eval():
    ex = parse_expression("(1+t)^3")
    ts = np.linspace(0.0, 2.0, 7)
    assert np.allclose(ex(ts), (1 + ts) ** 3)


def test_error_positions():
    with pytest.raises(ExpressionError) as err:
        parse_expression("exp(")
    assert err.value.line == 1 and err.value.col == 5

    with pytest.raises(ExpressionError) as err:
        parse_expression("1 + \n 2 * $")
    assert err.value.line == 2 and err.value.col == 6

    with pytest.raises(ExpressionError) as err:
        parse_expression("sin(t)")
    assert "unknown name" in str(err.value)

    with pytest.raises(ExpressionError) as err:
        parse_expression("1 + 2 3")
    assert "trailing" in str(err.value)


def test_missing_parenthesis_argument():
    with pytest.raises(ExpressionError):
        parse_expression("exp t")
