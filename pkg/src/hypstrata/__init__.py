"""Tautological classes of hyperelliptic loci with marked Weierstrass points in genus 2.

Modules:

``graphs``
    stable graphs, canonical forms, automorphisms and the graph families used
    by the formulas;
``integrals``
    psi and kappa intersection numbers with a persistent memo table;
``algebra``
    the strata algebra: decorated boundary strata, products, pullbacks and
    pushforwards;
``hyperelliptic``
    graph-sum formulas and recursions for the hyperelliptic classes;
``verify``
    equality verdicts by pairing, and check suites;
``cli``
    the command-line front end.
"""
from .algebra import TautClass, integrate, multiply, pair, standard_class
from .graphs import StableGraph, enumerate_stable_graphs, is_in_G_tilde
from .hyperelliptic import (
    hyp_ct_formula,
    hyp_recursive,
    hyp_rt_formula,
    hyp_tilde_formula,
    nct_closed,
    nct_recursive,
    phigamma,
    pixton_exponential,
    prod_formula,
)
from .verify import Verdict, numerical_equal

__version__ = "0.1.0"

__all__ = [
    "StableGraph",
    "TautClass",
    "Verdict",
    "enumerate_stable_graphs",
    "hyp_ct_formula",
    "hyp_recursive",
    "hyp_rt_formula",
    "hyp_tilde_formula",
    "integrate",
    "is_in_G_tilde",
    "multiply",
    "nct_closed",
    "nct_recursive",
    "numerical_equal",
    "pair",
    "phigamma",
    "pixton_exponential",
    "prod_formula",
    "standard_class",
]
