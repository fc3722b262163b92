"""Exact rational parsing and formatting."""

from fractions import Fraction
from numbers import Rational

from .errors import InputError


def to_fraction(value) -> Fraction:
    """Parse ``value`` into an exact Fraction.

    Accepts ints, Fractions, and strings such as ``"3/4"``, ``"-2"`` or
    ``"0.125"``. Floats are rejected because they are not exact.
    """
    if isinstance(value, bool):
        raise InputError(f"boolean is not a number: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"not a rational number: {value!r}") from exc
    raise InputError(f"expected an exact rational, got {type(value).__name__}: {value!r}")


def fmt(q: Fraction) -> str:
    """Canonical text form: ``"p/q"`` or ``"p"`` for integers."""
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"
