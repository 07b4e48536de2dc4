"""Extended-integer utilities: finite 64-bit integers plus an absorbing -inf.

NEG_INF is the reserved minimum of the signed 64-bit range.  Checked
addition never produces it from finite operands; a sum that leaves the
open range (NEG_INF, INT64_MAX] raises UtilityOverflow instead.
"""

from __future__ import annotations

from typing import Iterable

from .errors import UtilityOverflow

INT64_MAX = 2**63 - 1
NEG_INF = -(2**63)


def is_finite(u: int) -> bool:
    return u != NEG_INF


def check_finite(u: int) -> int:
    """Validate that ``u`` is a representable finite utility."""
    if not isinstance(u, int) or isinstance(u, bool):
        raise TypeError(f"utility must be an int, got {type(u).__name__}")
    if u <= NEG_INF or u > INT64_MAX:
        raise UtilityOverflow(f"utility {u} is outside the finite 64-bit range")
    return u


def add(a: int, b: int) -> int:
    if a == NEG_INF or b == NEG_INF:
        return NEG_INF
    s = a + b
    if s <= NEG_INF or s > INT64_MAX:
        raise UtilityOverflow(f"{a} + {b} overflows 64-bit utility range")
    return s


def total(values: Iterable[int]) -> int:
    acc = 0
    for v in values:
        acc = add(acc, v)
        if acc == NEG_INF:
            return NEG_INF
    return acc


def fmt(u: int) -> str:
    return "neginf" if u == NEG_INF else str(u)
