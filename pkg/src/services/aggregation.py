"""
Round and daily averaging.

Means are carried as exact fractions; rounding to two decimals (half-up,
away from zero) happens only when a value is reported.
"""

from decimal import ROUND_HALF_UP, Decimal, localcontext
from fractions import Fraction
from typing import Iterable, List, Sequence, Tuple, Union

from src.core.errors import EmptyInput

Number = Union[Decimal, Fraction, int]

REPORT_QUANTUM = Decimal("0.01")


def to_fraction(value: Number) -> Fraction:
    return value if isinstance(value, Fraction) else Fraction(value)


def report(value: Number) -> Decimal:
    exact = to_fraction(value)
    with localcontext() as ctx:
        ctx.prec = 50
        quotient = Decimal(exact.numerator) / Decimal(exact.denominator)
        return quotient.quantize(REPORT_QUANTUM, rounding=ROUND_HALF_UP)


def exact_mean(values: Iterable[Number]) -> Fraction:
    values = [to_fraction(v) for v in values]
    if not values:
        raise EmptyInput("mean of an empty list")
    return sum(values, Fraction(0)) / len(values)


def round_mean(values: Sequence[Number]) -> Tuple[Fraction, Decimal]:
    exact = exact_mean(values)
    return exact, report(exact)


def daily_average(round_means_exact: List[Number]) -> Decimal:
    return report(exact_mean(round_means_exact))
