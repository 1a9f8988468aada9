from __future__ import annotations

import math
from fractions import Fraction

import pytest

from nsap.monitor.exponents import ExponentTable


@pytest.mark.parametrize(
    ("p", "dim", "alpha"),
    [(4, 3, Fraction(12)), (6, 3, Fraction(10)), (9, 3, Fraction(12)), (4, 2, Fraction(8)), (3, 2, Fraction(9))],
)
def test_alpha(p: int, dim: int, alpha: Fraction) -> None:
    assert ExponentTable.build(p, dim).alpha == alpha


def test_alpha_needs_supercritical_p() -> None:
    with pytest.raises(ValueError):
        ExponentTable.build(3, 3).alpha
    with pytest.raises(ValueError):
        ExponentTable.build(1.5, 3)
    with pytest.raises(ValueError):
        ExponentTable.build(4, 4)


def test_kappa_exponents_are_homogeneous_of_degree_one() -> None:
    for dim in (2, 3):
        for p in (3.5, 4, 6, 9):
            if p <= dim:
                continue
            a, b = ExponentTable.build(p, dim).kappa_exponents
            assert a + b == 1
    assert ExponentTable.build(4, 2).kappa_exponents == (Fraction(0), Fraction(1))


def test_three_dimensional_table() -> None:
    table = ExponentTable.build(4, 3)
    assert table.sobolev_target == 12
    assert table.interpolation_theta == Fraction(2, 3)
    assert table.initial_bound_exponent == 8
    assert table.holder_split == (Fraction(1, 2), Fraction(1, 2))
    assert table.balance_exponents == (Fraction(3, 2), Fraction(7, 8))
    assert ExponentTable.build(4, 2).sobolev_target is None


def test_smoothing_and_mixed_exponents() -> None:
    table = ExponentTable.build(4, 3)
    assert table.smoothing_sigma(time_order=0, space_order=0, q=math.inf) == pytest.approx(0.375)
    assert table.smoothing_sigma(time_order=1, space_order=2, q=8.0) == pytest.approx(2.1875)
    assert table.mixed_time_exponent(math.inf) == pytest.approx(8.0 / 3.0)
    with pytest.raises(ValueError):
        table.mixed_time_exponent(4.0)


def test_fraction_input_is_kept_exact() -> None:
    table = ExponentTable.build(Fraction(9, 2), 3)
    assert table.alpha == Fraction(9, 2) * Fraction(7, 2) / Fraction(3, 2)
    assert table.to_dict()["alpha"] == str(table.alpha)
