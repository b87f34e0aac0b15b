import pytest
from gmpy2 import mpq

from hypstrata import hyperelliptic as hyp
from hypstrata.algebra import TautClass, pushforward_forget, standard_class as sc
from hypstrata.graphs import make_graph
from hypstrata.verify import numerical_equal, seed_class


def test_tree_formula_gives_weierstrass_divisor():
    assert hyp.hyp_ct_formula(1) == seed_class()
    assert hyp.hyp_rt_formula(1) == hyp.hyp_ct_formula(1)
    assert hyp.hyp_recursive(1) == seed_class()


def test_six_weierstrass_points():
    # each smooth genus two curve has six Weierstrass points
    pushed = pushforward_forget(hyp.hyp_recursive(1))
    assert pushed == 6 * TautClass.one(2, ())


def test_forgetting_a_conjugate_point():
    # the n-th point may be any of the 7 - n remaining Weierstrass points
    for n in (2, 3):
        verdict = numerical_equal(pushforward_forget(hyp.hyp_recursive(n)), mpq(7 - n) * hyp.hyp_recursive(n - 1))
        assert verdict.positive, verdict.witness_text()


def test_recursive_class_is_pure_of_degree_n():
    for n in (1, 2, 3):
        assert hyp.hyp_recursive(n).degrees() == {n}


def test_tilde_sum_matches_recursion_small_n():
    for n in (1, 2, 3):
        verdict = numerical_equal(hyp.hyp_tilde_formula(n), hyp.hyp_recursive(n))
        assert verdict.positive, verdict.witness_text()


def test_tilde_range_is_enforced():
    with pytest.raises(ValueError):
        hyp.hyp_tilde_formula(0)
    with pytest.raises(ValueError):
        hyp.hyp_tilde_formula(5)


def test_phigamma_two_is_a_single_stratum():
    assert len(hyp.phigamma(2)) == 1


def test_closed_non_compact_part_agrees_with_its_recursion():
    assert hyp.nct_closed(2) == hyp.nct_recursive(2)
    verdict = numerical_equal(hyp.nct_closed(3), hyp.nct_recursive(3))
    assert verdict.positive, verdict.witness_text()


def test_template_counts_distinct_labellings():
    strata = hyp.template_strata("g1() g0(_,_) | 0-1 0-1", [1, 2])
    assert len(strata) == 1
    # four choices of the marking that sits alone
    assert len(hyp.template_strata("g1(*) g0(_) | 0-1 0-1", [1, 2, 3, 4])) == 4


def test_template_rejects_bad_labels():
    with pytest.raises(ValueError):
        hyp.template_strata("g1(1) g0(1,2) | 0-1 0-1", [1, 2])
    with pytest.raises(ValueError):
        hyp.template_strata("g1() g0(_) | 0-1 0-1", [1, 2])


def test_template_psi_marks_an_edge_side():
    plain = hyp.template_class("g1() g0(_,_) | 0-1 0-1", [1, 2])
    marked = hyp.template_class("g1() g0(_,_) | 0-1 0-1^s", [1, 2])
    assert plain.degrees() == {2}
    assert marked.degrees() == {3}


def test_stabilize_contracts_unstable_vertices():
    ban = make_graph([0, 1], [(1, 0), (2, 0)], [(0, 1), (0, 1)])[0]
    kept, _ = hyp.stabilize(ban, (1, 2))
    assert kept == ban
    contracted, _ = hyp.stabilize(ban, ())
    assert contracted.genera == (1,) and len(contracted.edges) == 1


def test_series_coefficients():
    assert hyp.e1_series_coefficient(1) == (mpq(-1), 0)
    assert hyp.e1_series_coefficient(4) == (mpq(-1, 24), 3)


def test_pixton_degree_one_part_is_the_divisor():
    e = hyp.pixton_exponential(2, 1, 3, -1, 1, 1)
    D = 3 * sc("psi", 2, 1, index=1) - sc("lambda", 2, 1) - sc("delta_total", 2, 1)
    assert e.degree_part(1) == D
    assert e.degree_part(0) == TautClass.one(2, (1,))
