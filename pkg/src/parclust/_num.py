"""Small helpers that keep arithmetic exact when the inputs are rational."""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Union

Number = Union[int, float, Fraction]


def is_exact(x: object) -> bool:
    return isinstance(x, Rational) and not isinstance(x, bool)


def div(a: Number, b: Number) -> Number:
    """``a / b`` that stays a Fraction when both operands are rational."""
    if is_exact(a) and is_exact(b):
        return Fraction(a) / Fraction(b)
    return a / b


def to_number(x: object, exact: bool = False) -> Number:
    """Coerce a JSON scalar (or "p/q" string) to a number."""
    if isinstance(x, bool):
        raise TypeError(f"boolean is not a number: {x!r}")
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float) and exact:
        return Fraction(str(x))
    if isinstance(x, (int, float, Fraction)):
        return x
    raise TypeError(f"not a number: {x!r}")


def leq(a: Number, b: Number, rel: float = 1e-9) -> bool:
    """``a <= b`` with a relative slack for floating inputs only."""
    if is_exact(a) and is_exact(b):
        return a <= b
    return a <= b + rel * max(1.0, abs(float(a)), abs(float(b)))


def to_json_number(x: Number) -> int | float | str:
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return int(x.numerator)
        return f"{x.numerator}/{x.denominator}"
    return x
