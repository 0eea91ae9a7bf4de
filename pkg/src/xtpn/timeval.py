"""Exact time values.

Every time quantity in the package is a :class:`fractions.Fraction`.  The
single exception is :data:`INF`, used for unbounded interval ends.  ``INF``
is ``math.inf`` so that ordinary comparisons and ``min`` work across finite
and infinite values without special casing.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Union

Time = Union[Fraction, float]

INF = math.inf

_RATIONAL = re.compile(r"([0-9]+)(?:/([0-9]+))?")
_DECIMAL = re.compile(r"([0-9]+)\.([0-9]+)")


def is_inf(value: Time) -> bool:
    return isinstance(value, float) and value == INF


def as_time(value) -> Time:
    """Coerce ``value`` to a time value.

    Accepts ints, Fractions, strings in the net-file syntax, and ``INF``.
    Finite floats are rejected: they would silently bring rounding into the
    engine.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a time value")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if value == INF:
            return INF
        raise TypeError(f"finite float {value!r} is not an exact time value")
    if isinstance(value, str):
        return parse_time(value)
    raise TypeError(f"cannot convert {type(value).__name__} to a time value")


def parse_time(text: str) -> Time:
    """Parse ``"inf"``, ``"7"``, ``"3/4"`` or ``"1.25"``; raise ValueError otherwise."""
    if text == "inf":
        return INF
    m = _RATIONAL.fullmatch(text)
    if m:
        den = int(m.group(2)) if m.group(2) is not None else 1
        if den == 0:
            raise ValueError(f"zero denominator in {text!r}")
        return Fraction(int(m.group(1)), den)
    m = _DECIMAL.fullmatch(text)
    if m:
        return Fraction(int(m.group(1) + m.group(2)), 10 ** len(m.group(2)))
    raise ValueError(f"not a time value: {text!r}")


def format_time(value: Time) -> str:
    """Canonical text form: lowest terms, ``num`` or ``num/den``, or ``inf``."""
    if is_inf(value):
        return "inf"
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"
