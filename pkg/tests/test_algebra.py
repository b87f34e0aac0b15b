import pytest
from gmpy2 import mpq

from hypstrata.algebra import (
    AmbientError,
    TautClass,
    integrate,
    multiply,
    multiply_psi,
    pair,
    pullback_forget,
    pushforward_forget,
    standard_class as sc,
)
from hypstrata.verify import numerical_equal


def test_lambda_cubed_on_m_two():
    # Hodge integral: the top power of lambda_1 on \bar M_2
    assert integrate(sc("lambda", 2, ()) ** 3) == mpq(1, 2880)


def test_products_with_elliptic_split():
    lam, d1 = sc("lambda", 2, ()), sc("delta_1", 2, ())
    # on the split locus lambda restricts to lambda_a + lambda_b and the normal
    # bundle is -psi_a - psi_b; each factor integrates to 1/24
    assert integrate(lam * lam * d1) == mpq(1, 576)
    assert integrate(lam * d1 * d1) == mpq(-1, 576)


def test_lambda_on_two_pointed_elliptic():
    # dilaton: psi_1 against a class pulled back from \bar M_{1,1}
    assert integrate(multiply(sc("lambda", 1, 2), sc("psi", 1, 2, index=1))) == mpq(1, 24)


def test_boundary_self_intersection_genus_zero():
    d = sc("delta_total", 0, 4)
    assert integrate(d) == 3
    five = sc("delta_total", 0, 5)
    # ten divisors of self-intersection -1, fifteen disjoint pairs meeting once
    assert integrate(multiply(five, five)) == 10 * (-1) + 2 * 15


def test_psi_equal_on_four_points():
    assert numerical_equal(sc("psi", 0, 4, index=1), sc("psi", 0, 4, index=2)).status == "EQUAL_DEFINITIVE"


def test_mumford_relation_holds():
    lam = sc("lambda", 2, ())
    rhs = mpq(1, 10) * sc("delta_irr", 2, ()) + mpq(1, 5) * sc("delta_1", 2, ())
    assert lam == rhs


def test_ambient_mismatch_raises():
    with pytest.raises(AmbientError):
        sc("psi", 0, 4, index=1) + sc("psi", 0, 5, index=1)


def test_string_and_dilaton_pushforwards():
    psi = sc("psi", 1, 2, index=1)
    # pushing psi_2 times a pullback forward multiplies by 2g - 2 + n
    base = sc("psi", 1, 1, index=1)
    pulled = pullback_forget(base, 2)
    assert pushforward_forget(multiply_psi(pulled, {2: 1}), 2) == base.scale(1)
    assert pushforward_forget(pulled, 2).is_zero()
    assert integrate(psi) == 0


def test_pair_is_bilinear():
    a, b = sc("psi", 0, 5, index=1), sc("psi", 0, 5, index=2)
    d = sc("delta_total", 0, 5)
    assert pair(a + b, d) == pair(a, d) + pair(b, d)


def test_serialization_round_trip():
    x = sc("lambda", 2, 1) + 3 * sc("psi", 2, 1, index=1)
    text = x.dumps()
    assert TautClass.loads(text).dumps() == text
    assert TautClass.loads(text) == x


def test_relabel_swaps_points():
    x = sc("psi", 0, 4, index=1)
    assert x.relabel({1: 2, 2: 1}) == sc("psi", 0, 4, index=2)
