from fractions import Fraction
import pytest
from gmpy2 import mpq

from hypstrata.integrals import (
    IntersectionTable,
    genus0_closed_form,
    psi_integral,
    set_partitions,
    vertex_integral,
)


@pytest.mark.parametrize(
    "g, exps, value",
    [
        (0, (0, 0, 0), mpq(1)),
        (1, (1,), mpq(1, 24)),
        (1, (0, 2), mpq(1, 24)),
        (2, (4,), mpq(1, 1152)),
        (2, (3, 2), mpq(29, 5760)),
        (3, (7,), mpq(1, 82944)),
    ],
)
def test_known_correlators(g, exps, value):
    assert psi_integral(g, exps) == value


def test_off_dimension_is_zero():
    assert psi_integral(1, (2,)) == 0
    assert psi_integral(0, (1, 0, 0)) == 0


def test_genus_zero_matches_multinomial():
    for n in range(3, 8):
        for a in range(n - 2):
            exps = (a, n - 3 - a) + (0,) * (n - 2)
            assert psi_integral(0, exps) == genus0_closed_form(exps)


def test_kappa_on_one_pointed_elliptic():
    assert vertex_integral(1, 1, (0,), (1,)) == mpq(1, 24)


def test_kappa_three_on_m_two():
    # kappa_3 is the pushforward of psi^4 from the one-pointed space
    assert vertex_integral(2, 0, (), (3,)) == mpq(1, 1152)


def test_set_partitions_are_bell_numbers():
    assert [sum(1 for _ in set_partitions(range(k))) for k in range(6)] == [1, 1, 2, 5, 15, 52]


def test_table_round_trip(tmp_path):
    t = IntersectionTable()
    for g, exps in [(1, (1,)), (2, (2, 2, 0)), (0, (1, 1, 0, 0, 0))]:
        t.correlator(g, exps)
    path = tmp_path / "table.txt"
    t.save(path)
    u = IntersectionTable(path)
    assert u.dumps() == t.dumps()
    assert u.audit() == []


def test_table_text_format():
    t = IntersectionTable()
    t.correlator(1, (1,))
    assert "I g=1 a=1 v=1/24\n" in t.dumps()


def test_exact_rationals_only():
    v = psi_integral(2, (2, 2, 2))
    assert isinstance(v, type(mpq(1)))
    assert Fraction(int(v.numerator), int(v.denominator)) == Fraction(7, 240)
