"""Acceptance criteria A1 to A12, one test each.

Every test prints a single ``A<k> PASS|FAIL|SKIP ...`` line (visible in the
pytest log) and then asserts the criterion at its exact tolerance: all
identities are equalities of rationals, and runtimes are the stated bounds.
"""
import importlib.util
import itertools
import os
import time
from pathlib import Path

import pytest
from gmpy2 import mpq

from hypstrata import hyperelliptic as hyp
from hypstrata.algebra import TautClass, integrate, standard_class
from hypstrata.integrals import IntersectionTable, fmt, genus0_closed_form
from hypstrata.verify import (
    EQUAL_DEFINITIVE,
    forget_and_relabel,
    numerical_equal,
    seed_class,
    suite_hyp,
    suite_nct,
    suite_pixton,
    suite_trees,
)


@pytest.fixture
def emit(capsys):
    def _emit(tag: str, ok, detail: str = "") -> None:
        status = ok if isinstance(ok, str) else ("PASS" if ok else "FAIL")
        with capsys.disabled():
            print(f"\n{tag} {status} {detail}".rstrip())

    return _emit


def _lines(report, prefix):
    return [l for l in report.lines if l.ident.startswith(prefix)]


def _failures(lines):
    return [f"{l.ident}:{l.witness or l.detail}" for l in lines if not l.passed]


@pytest.fixture(scope="module")
def trees_report():
    return suite_trees()


@pytest.fixture(scope="module")
def hyp_report():
    return suite_hyp(max_n=4)


def test_a1_tree_euler_sums(trees_report, emit):
    lines = _lines(trees_report, "chi/") + _lines(trees_report, "ne/")
    secs = sum(l.seconds for l in lines)
    bad = _failures(lines)
    ok = len(lines) == 7 + 6 and not bad and secs < 30
    emit("A1", ok, f"checks={len(lines)} t={secs:.2f}s {' '.join(bad)}")
    assert ok, bad


def test_a2_top_degree_tree_integral(trees_report, emit):
    lines = _lines(trees_report, "euler/")
    secs = sum(l.seconds for l in lines)
    bad = _failures(lines)
    ok = len(lines) == 4 and not bad and secs < 10
    emit("A2", ok, f"n=3..6 t={secs:.2f}s {' '.join(bad)}")
    assert ok, bad


def test_a3_genus_zero_class_identities(trees_report, emit):
    lines = _lines(trees_report, "pullback/") + _lines(trees_report, "eulergen/")
    secs = sum(l.seconds for l in lines)
    bad = _failures(lines) + [l.ident for l in lines if l.detail != EQUAL_DEFINITIVE]
    ok = len(lines) == 6 and not bad and secs < 120
    emit("A3", ok, f"verdicts={','.join(sorted({l.detail for l in lines}))} t={secs:.2f}s {' '.join(bad)}")
    assert ok, bad


def test_a4_intersection_table_audit(emit):
    t0 = time.perf_counter()
    table = IntersectionTable()
    mismatches = []
    count = 0
    for n in range(3, 9):
        for a in itertools.combinations_with_replacement(range(n - 2), n):
            if sum(a) != n - 3:
                continue
            count += 1
            if table.correlator(0, a) != genus0_closed_form(a):
                mismatches.append(a)
    # populate some higher-genus entries so the audit sees recursion output too
    for g, n in ((1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (2, 3), (3, 1), (3, 2)):
        for a in itertools.combinations_with_replacement(range(3 * g - 2 + n), n):
            table.correlator(g, a)
    audit = table.audit()
    # <tau_1>_1 against psi = delta_irr / 12 on the one-pointed elliptic space,
    # where the boundary point has an automorphism of order two
    tau1 = table.correlator(1, (1,))
    via_boundary = integrate(standard_class("delta_irr", 1, 1)) / 12
    secs = time.perf_counter() - t0
    ok = not mismatches and not audit and tau1 == via_boundary == mpq(1, 24) and secs < 60
    emit("A4", ok, f"genus0={count} audited={len(table)} tau1={fmt(tau1)} t={secs:.2f}s")
    assert ok, (mismatches, audit[:5])


def test_a5_pixton_exponential(emit):
    t0 = time.perf_counter()
    rep = suite_pixton()
    secs = time.perf_counter() - t0
    bad = _failures(rep.lines)
    ok = len(rep.lines) == 9 and not bad and secs < 300
    emit("A5", ok, f"cases={len(rep.lines)} t={secs:.2f}s {' '.join(bad)}")
    assert ok, bad


def test_a6_seed_term_for_term(emit):
    got = hyp.hyp_ct_formula(1)
    ok = got == seed_class() and got.dumps() == seed_class().dumps()
    emit("A6", ok, f"terms={len(got)}")
    assert ok


def test_a7_graph_sum_equals_recursion(hyp_report, emit):
    lines = _lines(hyp_report, "tilde=rec/")
    bad = _failures(lines)
    ok = [l.ident for l in lines] == [f"tilde=rec/n={n}" for n in (2, 3, 4)] and not bad
    emit("A7", ok, " ".join(f"{l.ident}={'ok' if l.passed else 'DISTINCT'}" for l in lines) + (" " + " ".join(bad) if bad else ""))
    assert ok, bad


def test_a8_pushforward_identities(hyp_report, emit):
    lines = _lines(hyp_report, "push/") + _lines(hyp_report, "phigamma-push/")
    t0 = time.perf_counter()
    five = numerical_equal(forget_and_relabel(hyp.phigamma(5), 4, {5: 4}), 3 * hyp.phigamma(4))
    secs = sum(l.seconds for l in lines) + time.perf_counter() - t0
    bad = _failures(lines) + ([] if five.positive else [f"phigamma-push/n=5:{five.witness_text()}"])
    ok = len(lines) == 3 + 2 and not bad and secs < 1800
    emit("A8", ok, f"checks={len(lines) + 1} t={secs:.2f}s {' '.join(bad)}")
    assert ok, bad


def test_a9_recursive_class_symmetric(hyp_report, emit):
    lines = _lines(hyp_report, "symmetric/")
    bad = _failures(lines)
    ok = len(lines) == 1 + 2 + 3 and not bad
    emit("A9", ok, f"transpositions={len(lines)} {' '.join(bad)}")
    assert ok, bad


def test_a10_non_compact_closed_forms(emit):
    t0 = time.perf_counter()
    rep = suite_nct(max_n=5)
    secs = time.perf_counter() - t0
    wanted = ["closed=rec/n=3", "closed=rec/n=4", "spot/n=5/1", "spot/n=5/2"]
    lines = [l for l in rep.lines if l.ident in wanted]
    bad = _failures(rep.lines)
    ok = len(lines) == len(wanted) and not bad
    emit("A10", ok, f"{' '.join(l.ident for l in lines)} t={secs:.2f}s {' '.join(bad)}")
    assert ok, bad


@pytest.mark.slow
def test_a11_vanishing_beyond_six(emit):
    if os.environ.get("HYPSTRATA_RUN_A11") != "1":
        emit("A11", "SKIP", "optional proxy check, set HYPSTRATA_RUN_A11=1 to run")
        pytest.skip("optional: the n = 7 graph sum exceeds the memory and time of this host")
    t0 = time.perf_counter()
    H7 = hyp.hyp_ct_formula(7)
    v = numerical_equal(H7, TautClass(2, range(1, 8)), compact_only=True)
    secs = time.perf_counter() - t0
    emit("A11", v.positive, f"proxy=compact-type generators={v.generators} t={secs:.0f}s {v.witness_text()}")
    assert v.positive, v.witness_text()


def _load_properties():
    path = Path(__file__).with_name("test_properties.py")
    loader_spec = importlib.util.spec_from_file_location("_acceptance_properties", path)
    module = importlib.util.module_from_spec(loader_spec)
    loader_spec.loader.exec_module(module)
    return module


def test_a12_infrastructure_properties(emit):
    props = _load_properties()
    names = [
        "test_product_commutes",
        "test_product_associates",
        "test_projection_formula",
        "test_pull_then_push_vanishes",
        "test_dilaton_on_pullbacks",
        "test_serialization_is_byte_stable",
    ]
    t0 = time.perf_counter()
    failed = []
    for name in names:
        try:
            getattr(props, name)()
        except AssertionError as exc:  # hypothesis re-raises the shrunk failure
            failed.append(f"{name}:{exc}")
    secs = time.perf_counter() - t0
    ok = not failed and secs < 300
    emit("A12", ok, f"properties={len(names)} t={secs:.2f}s {' '.join(failed)}")
    assert ok, failed
