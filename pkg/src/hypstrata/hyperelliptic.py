r"""
Classes of hyperelliptic loci with marked Weierstrass points in genus two.

The module builds, as :class:`~hypstrata.algebra.TautClass` values on
``\bar M_{2,n}``:

* graph sums whose decorations are formal series (the exponential of a
  divisor, products of pulled-back divisors, and the closed formulas for
  the hyperelliptic class on compact type and on the whole space);
* the correction class supported on curves with an elliptic component
  meeting a rational bridge in two points, and the recursion built on it;
* closed expressions for the part supported outside compact type.

Graph sums are evaluated by expanding the decoration of each graph into a
polynomial in per-vertex atoms (psi of a flag, lambda of a vertex, the
pulled-back psi class ``omega`` attached to a flag of the core, and a
bookkeeping variable ``t``), then gluing per-vertex classes.

Strata drawn with some labels omitted are written in a small template
language: ``"g1(i,*) g0(_,_) | 0-1 0-1"`` lists vertices by genus with their
legs (integers, variables bound by the caller, ``_`` for a free slot and
``*`` for "all remaining markings") followed by edges between vertex
positions; an edge may carry ``^s`` or ``^e`` to put a psi class on its
first or second half-edge.  A template stands for the sum over the distinct
labelled graphs it produces, each weighted by ``1/|Aut|`` (the class of the
reduced stratum).

EXAMPLES::

    >>> from hypstrata.integrals import fmt
    >>> h1 = hyp_ct_formula(1)
    >>> h1 == hyp_recursive(1)
    True
    >>> [fmt(c) for _, c in phigamma(2)]
    ['1/2']
"""
from __future__ import annotations

import itertools
import re
from collections import defaultdict
from math import comb, factorial
from typing import Callable, Iterable, Mapping, Sequence

from gmpy2 import mpq

from .algebra import (
    TautClass,
    glue_classes,
    glue_pushforward,
    multiply,
    multiply_psi,
    pullback_forget,
    pullback_gluing,
    pullback_to,
    canonical_key,
    section_pushforward,
    standard_class,
)
from .graphs import (
    StableGraph,
    StructureError,
    automorphisms,
    canonical_form,
    check_stable,
    classify_edges,
    core_and_outward,
    enumerate_stable_graphs,
    make_graph,
)

__all__ = [
    "pixton_exponential",
    "prod_formula",
    "hyp_ct_formula",
    "hyp_rt_formula",
    "hyp_tilde_formula",
    "phigamma",
    "hyp_recursive",
    "nct_recursive",
    "nct_closed",
    "nct5_tail",
    "hyp_subset",
    "template_strata",
    "template_class",
    "pulled_product",
    "stabilize",
    "e1_series_coefficient",
    "clear_caches",
]

ZERO = mpq(0)
ONE = mpq(1)

# --------------------------------------------------------------------------
# series coefficients
# --------------------------------------------------------------------------


def e1_series_coefficient(j: int) -> tuple[mpq, int]:
    """Coefficient of ``t^j`` in ``(1 - e^{t x}) / x`` as ``(c, k)`` meaning ``c * x^k``.

    >>> e1_series_coefficient(3)
    (mpq(-1,6), 2)
    >>> e1_series_coefficient(0)
    (mpq(0,1), 0)
    """
    if j == 0:
        return ZERO, 0
    return mpq(-1, factorial(j)), j - 1


# --------------------------------------------------------------------------
# decoration polynomials
# --------------------------------------------------------------------------
#
# Atoms:  ("l", v)  lambda of vertex v
#         ("L", v)  -lambda - delta_1 pulled back from \bar M_2, on vertex v
#         ("p", f)  psi of flag f
#         ("w", f)  omega attached at the core flag f
#         ("t",)    formal variable (degree 0)

Mono = tuple  # sorted tuple of (atom, exponent)
Poly = dict  # Mono -> mpq


class _Ctx:
    """Degree bookkeeping for decoration polynomials on one graph."""

    def __init__(self, graph: StableGraph, max_degree: int):
        self.graph = graph
        self.max_degree = max_degree
        vf = graph.vertex_flags()
        self.dims = [3 * g - 3 + len(vf[v]) for v, g in enumerate(graph.genera)]

    def vertex_of(self, atom) -> int | None:
        kind = atom[0]
        if kind in ("l", "L"):
            return atom[1]
        if kind in ("p", "w"):
            return self.graph.flag_vertex(atom[1])
        return None

    def ok(self, mono: Mono) -> bool:
        deg = 0
        load = [0] * len(self.dims)
        for atom, e in mono:
            v = self.vertex_of(atom)
            if v is None:
                continue
            deg += e
            load[v] += e
            if load[v] > self.dims[v]:
                return False
        return deg <= self.max_degree

    def mul(self, P: Poly, Q: Poly) -> Poly:
        out: dict[Mono, mpq] = defaultdict(lambda: ZERO)
        for m1, c1 in P.items():
            for m2, c2 in Q.items():
                m = _mono_mul(m1, m2)
                if self.ok(m):
                    out[m] += c1 * c2
        return {k: v for k, v in out.items() if v}


def _mono_mul(a: Mono, b: Mono) -> Mono:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for atom, e in b:
        d[atom] = d.get(atom, 0) + e
    return tuple(sorted(d.items()))


def _mono(*pairs) -> Mono:
    d: dict = {}
    for atom, e in pairs:
        if e:
            d[atom] = d.get(atom, 0) + e
    return tuple(sorted(d.items()))


def _mono_degree(m: Mono) -> int:
    return sum(e for atom, e in m if atom[0] != "t")


def _t_power(m: Mono) -> int:
    for atom, e in m:
        if atom[0] == "t":
            return e
    return 0


def _exp_series(atom, scale, limit: int, with_t: bool) -> Poly:
    """``exp(scale * t * atom)`` (``t`` omitted unless ``with_t``) up to ``atom^limit``."""
    out: Poly = {}
    for k in range(limit + 1):
        c = mpq(scale) ** k / factorial(k)
        if c:
            out[_mono((atom, k), (("t",), k if with_t else 0))] = c
    return out


def _edge_series(h: int, hp: int, b, limit: int, with_t: bool) -> Poly:
    """``(1 - exp(b t (psi_h + psi_h'))) / (psi_h + psi_h')`` up to degree ``limit``."""
    out: Poly = defaultdict(lambda: ZERO)
    b = mpq(b)
    for m in range(1, limit + 2):
        c0, k = e1_series_coefficient(m)
        c0 *= b**m
        if not c0:
            continue
        for r in range(k + 1):
            mono = _mono((("p", h), r), (("p", hp), k - r), (("t",), m if with_t else 0))
            out[mono] += c0 * comb(k, r)
    return {k: v for k, v in out.items() if v}


def _e2_series(h: int, w_flag: int, limit: int) -> Poly:
    """``1 / (psi_h - (1 + 3 omega))`` expanded as ``-sum_k psi_h^k (1 + 3 omega)^{-k-1}``."""
    out: Poly = {}
    for k in range(limit + 1):
        for l in range(limit + 1 - k):
            c = -mpq((-1) ** l * comb(k + l, l) * 3**l)
            out[_mono((("p", h), k), (("w", w_flag), l))] = c
    return out


def _linear(const, pairs: Iterable[tuple[tuple, object]]) -> Poly:
    out: Poly = {}
    if const:
        out[()] = mpq(const)
    for atom, c in pairs:
        if c:
            out[_mono((atom, 1))] = mpq(c)
    return out


# --------------------------------------------------------------------------
# per-vertex classes
# --------------------------------------------------------------------------

_VBASE: dict = {}
_POW: dict = {}


def _power(name: str, g: int, n: int, k: int) -> TautClass:
    key = (name, g, n, k)
    got = _POW.get(key)
    if got is not None:
        return got
    marks = tuple(range(1, n + 1))
    if k == 0:
        res = TautClass.one(g, marks)
    elif k == 1:
        if name == "lambda":
            res = standard_class("lambda", g, marks)
        else:  # -lambda - delta_1, pulled back from genus two without points
            if g != 2:
                raise ValueError("the lambda + delta_1 atom needs a genus-2 vertex")
            base = -(standard_class("lambda", 2, ()) + standard_class("delta_1", 2, ()))
            res = pullback_to(base, marks)
    else:
        res = multiply(_power(name, g, n, k - 1), _power(name, g, n, 1))
    _POW[key] = res
    return res


def _omega_power(g: int, n: int, pos: int, core: tuple[int, ...], e: int) -> TautClass:
    """``omega^e`` for the point ``pos`` kept together with ``core`` (markings ``1..n``)."""
    key = ("omega", g, n, pos, core, e)
    got = _POW.get(key)
    if got is not None:
        return got
    small = tuple(sorted({pos, *core}))
    if 2 * g - 2 + len(small) <= 0 or e > 3 * g - 3 + len(small):
        res = TautClass(g, range(1, n + 1))
    else:
        one = TautClass.one(g, small)
        graph = next(iter(one.terms))[0]
        res = pullback_to(glue_pushforward(graph, {graph.leg_flag(pos): e}), range(1, n + 1))
    _POW[key] = res
    return res


def _vertex_class(g: int, n: int, lam: int, big_l: int, omegas: tuple, core: tuple, psis: tuple) -> TautClass:
    """Product of lambda/L powers, omega powers and psi powers on ``\\bar M_{g,n}``."""
    key = (g, n, lam, big_l, omegas, core)
    base = _VBASE.get(key)
    if base is None:
        if g == 0 and (lam or big_l):
            base = TautClass(g, range(1, n + 1))
        else:
            parts = []
            if lam:
                parts.append(_power("lambda", g, n, lam))
            if big_l:
                parts.append(_power("L", g, n, big_l))
            for pos, e in omegas:
                parts.append(_omega_power(g, n, pos, core, e))
            if not parts:
                base = TautClass.one(g, range(1, n + 1))
            else:
                base = parts[0]
                for p in parts[1:]:
                    if base.is_zero():
                        break
                    base = multiply(base, p)
        _VBASE[key] = base
    if not psis or base.is_zero():
        return base
    return multiply_psi(base, dict(psis))


class _Sum:
    """Accumulates glued classes on a fixed ambient space."""

    def __init__(self, g: int, markings: Iterable[int]):
        self.g = g
        self.markings = tuple(sorted(markings))
        self.terms: dict = defaultdict(lambda: ZERO)

    def add(self, cls: TautClass, c=ONE) -> None:
        c = mpq(c)
        if not c:
            return
        for k, v in cls.terms.items():
            self.terms[k] += c * v

    def result(self) -> TautClass:
        return TautClass(self.g, self.markings, {k: v for k, v in self.terms.items() if v})


def _core_data(graph: StableGraph):
    """``(w, core flags per vertex)``; ``w`` sends each flag to the core flag it hangs from."""
    core_v, core_e, outward, w = core_and_outward(graph)
    n = len(graph.legs)
    vf = graph.vertex_flags()
    core_flags = []
    for v, fl in enumerate(vf):
        core_flags.append(tuple(f for f in fl if f >= n and (f - n) // 2 in core_e))
    return w, core_flags


def _glue_decoration(graph: StableGraph, poly: Poly, coeff, acc: _Sum, core_flags=None, weight_t: bool = False) -> None:
    """Add ``coeff * xi_{graph*}(poly)`` to ``acc``."""
    vf = graph.vertex_flags()
    pos = {}
    for v, fl in enumerate(vf):
        for p, f in enumerate(fl):
            pos[f] = (v, p + 1)
    nv = len(graph.genera)
    for mono, c in poly.items():
        lam = [0] * nv
        big_l = [0] * nv
        psis: list[list] = [[] for _ in range(nv)]
        oms: list[list] = [[] for _ in range(nv)]
        for atom, e in mono:
            kind = atom[0]
            if kind == "l":
                lam[atom[1]] += e
            elif kind == "L":
                big_l[atom[1]] += e
            elif kind == "p":
                v, p = pos[atom[1]]
                psis[v].append((p, e))
            elif kind == "w":
                v, p = pos[atom[1]]
                oms[v].append((p, e))
        if weight_t:
            c = c * factorial(_t_power(mono))
        classes = []
        for v in range(nv):
            core = tuple(sorted(pos[f][1] for f in core_flags[v])) if core_flags else ()
            cl = _vertex_class(
                graph.genera[v], len(vf[v]), lam[v], big_l[v], tuple(sorted(oms[v])), core, tuple(sorted(psis[v]))
            )
            if cl.is_zero():
                break
            classes.append(cl)
        else:
            acc.add(glue_classes(graph, classes, coeff * c))


# --------------------------------------------------------------------------
# graph sums
# --------------------------------------------------------------------------


def _normalize_coeffs(a, n: int) -> list[mpq]:
    if isinstance(a, (list, tuple)):
        if len(a) != n:
            raise ValueError("one psi coefficient per marking")
        return [mpq(x) for x in a]
    return [mpq(a)] * n


def pixton_exponential(g: int, n: int, a, c, b, max_degree: int) -> TautClass:
    """Exponential of ``D = sum a_i psi_i + c lambda - b delta`` as a graph sum.

    Terms of degree at most ``max_degree`` are returned; the degree-``k``
    part equals ``D^k / k!``.

    >>> from hypstrata.algebra import standard_class as sc
    >>> e = pixton_exponential(1, 1, 3, -1, 1, 1)
    >>> D = 3 * sc("psi", 1, 1, index=1) - sc("lambda", 1, 1) - sc("delta_total", 1, 1)
    >>> e.degree_part(1) == D
    True
    """
    marks = tuple(range(1, n + 1))
    acoef = _normalize_coeffs(a, n)
    acc = _Sum(g, marks)
    for graph in enumerate_stable_graphs(g, n, "all", max_edges=max_degree):
        ne = len(graph.edges)
        room = max_degree - ne
        if room < 0:
            continue
        ctx = _Ctx(graph, room)
        poly: Poly = {(): ONE}
        for k, (m, v) in enumerate(graph.legs):
            poly = ctx.mul(poly, _exp_series(("p", k), acoef[m - 1], room, False))
        for v, gv in enumerate(graph.genera):
            if gv > 0:
                poly = ctx.mul(poly, _exp_series(("l", v), c, room, False))
        nl = len(graph.legs)
        for i in range(ne):
            poly = ctx.mul(poly, _edge_series(nl + 2 * i, nl + 2 * i + 1, b, room, False))
        _glue_decoration(graph, poly, mpq(1, len(automorphisms(graph))), acc)
    return acc.result()


def prod_formula(g: int, n: int, a, c, b) -> TautClass:
    """Degree-``n`` graph sum over trees without rational tails for ``prod_i rho_i^* F``.

    ``F = a psi + c lambda - b delta`` on ``\\bar M_{g,1}``; the output is
    meaningful on compact type.

    >>> from hypstrata.algebra import standard_class as sc
    >>> x = prod_formula(2, 1, 3, -1, 1)
    >>> x == 3 * sc("psi", 2, 1, index=1) - sc("lambda", 2, 1) - sc("delta_nrt", 2, 1)
    True
    """
    if g not in (1, 2):
        raise ValueError("g must be 1 or 2")
    marks = tuple(range(1, n + 1))
    acc = _Sum(g, marks)
    if n == 0:
        return TautClass.one(g, marks)
    for graph in enumerate_stable_graphs(g, n, "nrt", max_edges=n):
        ne = len(graph.edges)
        room = n - ne
        w, core_flags = _core_data(graph)
        ctx = _Ctx(graph, room)
        poly: Poly = {(): ONE}
        for k in range(len(graph.legs)):
            poly = ctx.mul(poly, _linear(1, [(("w", w[k]), a)]))
        for v, gv in enumerate(graph.genera):
            if gv > 0:
                poly = ctx.mul(poly, _exp_series(("l", v), c, room, True))
        nl = len(graph.legs)
        for i in range(ne):
            poly = ctx.mul(poly, _edge_series(nl + 2 * i, nl + 2 * i + 1, b, room, True))
        poly = {m: x for m, x in poly.items() if _mono_degree(m) == room}
        _glue_decoration(graph, poly, mpq(1, len(automorphisms(graph))), acc, core_flags, weight_t=True)
    return acc.result()


def _hyp_decoration(graph: StableGraph, n: int) -> tuple[Poly, list]:
    """Degree ``n - |E|`` part of the hyperelliptic decoration of ``graph`` (``t`` kept)."""
    ne = len(graph.edges)
    room = n - ne
    e1, e2, _nd = classify_edges(graph)
    w, core_flags = _core_data(graph)
    ctx = _Ctx(graph, room)
    poly: Poly = {(): ONE}
    for k in range(len(graph.legs)):
        poly = ctx.mul(poly, _linear(1, [(("w", w[k]), 3)]))
    for v, gv in enumerate(graph.genera):
        if gv > 0:
            poly = ctx.mul(poly, _exp_series(("l", v), -1, room, True))
    nl = len(graph.legs)
    for i in e1:
        poly = ctx.mul(poly, _edge_series(nl + 2 * i, nl + 2 * i + 1, 1, room, True))
    for h, hp in e2:
        poly = ctx.mul(poly, _e2_series(h, w[hp], room))
    poly = {m: x for m, x in poly.items() if _mono_degree(m) == room}
    return poly, core_flags


def _check_n(n: int, low: int, high: int, what: str) -> None:
    if not isinstance(n, int) or n < low or n > high:
        raise ValueError(f"{what} needs {low} <= n <= {high}, got {n}")


def hyp_ct_formula(n: int) -> TautClass:
    """Graph sum over trees giving the hyperelliptic class on compact type.

    For ``n = 7`` the locus is empty and the output vanishes on compact type
    (numerically).

    >>> from hypstrata.algebra import standard_class as sc
    >>> hyp_ct_formula(1) == 3 * sc("psi", 2, 1, index=1) - sc("lambda", 2, 1) - sc("delta_1", 2, 1)
    True
    """
    _check_n(n, 1, 7, "hyp_ct_formula")
    return _cached(("ct", n), lambda: _hyp_graph_sum(n, "ct"))


def hyp_tilde_formula(n: int, experimental: bool = False) -> TautClass:
    """Graph sum over the enlarged index set, with sign ``(-1)^{h^1}``.

    Proven for ``n <= 4``; ``n = 5, 6`` are only computed when
    ``experimental`` is set (no claim is attached to them).
    """
    _check_n(n, 1, 6 if experimental else 4, "hyp_tilde_formula")
    return _cached(("tilde", n), lambda: _hyp_graph_sum(n, "tilde"))


def _hyp_graph_sum(n: int, kind: str) -> TautClass:
    marks = tuple(range(1, n + 1))
    acc = _Sum(2, marks)
    for graph in enumerate_stable_graphs(2, n, kind, max_edges=n):
        poly, core_flags = _hyp_decoration(graph, n)
        sign = -1 if graph.h1 % 2 else 1
        _glue_decoration(graph, poly, mpq(sign, len(automorphisms(graph))), acc, core_flags, weight_t=True)
    return acc.result()


def hyp_rt_formula(n: int) -> TautClass:
    """Graph sum over rational-tails trees with powers of ``-lambda - delta_1``.

    >>> hyp_rt_formula(1) == hyp_ct_formula(1)
    True
    """
    _check_n(n, 1, 7, "hyp_rt_formula")

    def build() -> TautClass:
        marks = tuple(range(1, n + 1))
        acc = _Sum(2, marks)
        for graph in enumerate_stable_graphs(2, n, "rt", max_edges=n):
            ne = len(graph.edges)
            room = n - ne
            _e1, e2, _nd = classify_edges(graph)
            w, core_flags = _core_data(graph)
            top = graph.genera.index(2)
            ctx = _Ctx(graph, room)
            poly: Poly = {(): ONE}
            for k in range(len(graph.legs)):
                poly = ctx.mul(poly, _linear(1, [(("w", w[k]), 3)]))
            for h, hp in e2:
                poly = ctx.mul(poly, _e2_series(h, w[hp], room))
            poly = ctx.mul(poly, {_mono((("L", top), j)): ONE for j in range(room + 1)})
            poly = {m: x for m, x in poly.items() if _mono_degree(m) == room}
            _glue_decoration(graph, poly, mpq(1, len(automorphisms(graph))), acc, core_flags)
        return acc.result()

    return _cached(("rt", n), build)


# --------------------------------------------------------------------------
# products with strata: stabilization
# --------------------------------------------------------------------------


def stabilize(graph: StableGraph, keep: Iterable[int]):
    """Forget the legs not in ``keep`` and contract unstable vertices.

    Returns ``(stable, corr)`` where ``corr[u]`` is ``(v, flags)``: the
    vertex ``v`` of ``graph`` that survives as vertex ``u`` and, in the flag
    order of ``u``, the flags of ``v`` they come from.

    >>> ban = make_graph([0, 1], [(1, 0), (2, 0)], [(0, 1), (0, 1)])[0]
    >>> st, corr = stabilize(ban, ())
    >>> st
    StableGraph(genera=(1,), legs=(), edges=((0, 0),))
    """
    keep = set(keep)
    n = len(graph.legs)
    fv = {}
    leg = {}
    partner = {}
    for k, (m, v) in enumerate(graph.legs):
        fv[k] = v
        if m in keep:
            leg[k] = m
    for i, (a, b) in enumerate(graph.edges):
        f0, f1 = n + 2 * i, n + 2 * i + 1
        fv[f0], fv[f1] = a, b
        partner[f0], partner[f1] = f1, f0
    alive = set(leg) | set(partner)
    vflags: dict[int, set[int]] = defaultdict(set)
    for f in alive:
        vflags[fv[f]].add(f)
    vertices = set(range(len(graph.genera)))
    changed = True
    while changed:
        changed = False
        for v in sorted(vertices):
            fl = vflags[v]
            if 2 * graph.genera[v] - 2 + len(fl) > 0:
                continue
            if graph.genera[v] != 0 or len(fl) == 0:
                raise StructureError("stabilization leaves no stable curve")
            fl = sorted(fl)
            if len(fl) == 1:
                (f,) = fl
                if f not in partner:
                    raise StructureError("stabilization leaves no stable curve")
                p = partner.pop(f)
                partner.pop(p)
                vflags[fv[p]].discard(p)
            else:
                f1, f2 = fl
                if f1 in leg and f2 in leg:
                    raise StructureError("stabilization leaves no stable curve")
                if f1 in leg:
                    f1, f2 = f2, f1
                p1 = partner.pop(f1)
                partner.pop(p1)
                if p1 == f2:
                    raise StructureError("stabilization leaves no stable curve")
                if f2 in leg:
                    leg[p1] = leg.pop(f2)
                else:
                    p2 = partner.pop(f2)
                    partner.pop(p2)
                    partner[p1], partner[p2] = p2, p1
            vertices.discard(v)
            del vflags[v]
            changed = True
            break
    order = sorted(vertices)
    vid = {v: i for i, v in enumerate(order)}
    raw_flags = []
    legs = []
    for f in sorted(leg, key=lambda f: leg[f]):
        legs.append((leg[f], vid[fv[f]]))
        raw_flags.append(f)
    edges = []
    for f in sorted(partner):
        p = partner[f]
        if f < p:
            edges.append((vid[fv[f]], vid[fv[p]]))
            raw_flags.extend([f, p])
    stable, fm = make_graph([graph.genera[v] for v in order], legs, edges)
    inv = {fm[r]: raw_flags[r] for r in range(len(raw_flags))}
    corr = []
    for u, fl in enumerate(stable.vertex_flags()):
        corr.append((order[u], tuple(inv[f] for f in fl)))
    return stable, tuple(corr)


_PULLED: dict = {}


def pulled_product(X: TautClass, graph: StableGraph, psi: Mapping[int, int] | None = None) -> TautClass:
    """``pi^*(X) * xi_{graph*}(prod psi_f^{e_f})`` for ``X`` on ``\\bar M_{g,I}``.

    ``pi`` forgets the markings of ``graph`` outside ``I``.  The pullback of
    ``X`` to the stratum is computed on the stabilized graph and pulled back
    vertex by vertex, so ``X`` is never pulled back to all markings.
    """
    check_stable(graph)
    psi = {f: e for f, e in (psi or {}).items() if e}
    if X.g != graph.genus or not set(X.markings) <= set(graph.markings()):
        raise ValueError("class and stratum do not match")
    vf = graph.vertex_flags()
    pos = {f: (v, p + 1) for v, fl in enumerate(vf) for p, f in enumerate(fl)}
    vpsi: list[dict[int, int]] = [dict() for _ in vf]
    for f, e in psi.items():
        v, p = pos[f]
        vpsi[v][p] = vpsi[v].get(p, 0) + e
    stable, corr = stabilize(graph, X.markings)
    if not stable.edges:
        order = [m for m, _ in stable.legs]
        pieces = [(ONE, (X.relabel({m: k + 1 for k, m in enumerate(order)}),))]
    else:
        pieces = pullback_gluing(X, stable)
    acc = _Sum(graph.genus, graph.markings())
    for c, classes in pieces:
        per = [None] * len(vf)
        for u, cl in enumerate(classes):
            v, flags = corr[u]
            perm = {j + 1: pos[f][1] for j, f in enumerate(flags)}
            cl = cl.relabel(perm) if any(a != b for a, b in perm.items()) else cl
            per[v] = pullback_to(cl, range(1, len(vf[v]) + 1))
        for v in range(len(vf)):
            if per[v] is None:
                per[v] = TautClass.one(graph.genera[v], range(1, len(vf[v]) + 1))
            if vpsi[v]:
                per[v] = multiply_psi(per[v], vpsi[v])
        if any(p.is_zero() for p in per):
            continue
        acc.add(glue_classes(graph, per, c))
    return acc.result()


# --------------------------------------------------------------------------
# templates
# --------------------------------------------------------------------------

_VERTEX_RE = re.compile(r"g(\d+)\(([^)]*)\)")
_EDGE_RE = re.compile(r"(\d+)-(\d+)(?:\^([se]))?$")


def _parse_template(text: str):
    left, _, right = text.partition("|")
    vertices = []
    for m in _VERTEX_RE.finditer(left):
        labels = [x.strip() for x in m.group(2).split(",") if x.strip()]
        vertices.append((int(m.group(1)), labels))
    edges = []
    for tok in right.split():
        m = _EDGE_RE.match(tok)
        if not m:
            raise ValueError(f"bad edge token {tok!r}")
        edges.append((int(m.group(1)), int(m.group(2)), m.group(3)))
    return vertices, edges


def template_strata(text: str, markings: Sequence[int], bind: Mapping[str, int] | None = None) -> list[tuple[StableGraph, tuple]]:
    """Distinct decorated strata ``(graph, psi)`` described by a template.

    >>> len(template_strata("g1() g0(_) g0(4,_) g0(_) | 0-1 1-2 2-3 3-0", [1, 2, 3, 4]))
    3
    """
    bind = dict(bind or {})
    vertices, edges = _parse_template(text)
    genera = [g for g, _ in vertices]
    fixed = []
    free = []
    spill = None
    for v, (_, labels) in enumerate(vertices):
        for lab in labels:
            if lab == "_":
                free.append(v)
            elif lab == "*":
                if spill is not None:
                    raise ValueError("at most one spill vertex")
                spill = v
            elif lab.isdigit():
                fixed.append((int(lab), v))
            else:
                fixed.append((bind[lab], v))
    fixed_marks = [m for m, _ in fixed]
    if len(set(fixed_marks)) != len(fixed_marks) or not set(fixed_marks) <= set(markings):
        raise ValueError("fixed labels must be distinct markings")
    rest = sorted(set(markings) - set(fixed_marks))
    if len(rest) < len(free) or (len(rest) > len(free) and spill is None):
        raise ValueError(f"template {text!r} does not fit {len(rest)} remaining markings")
    out: dict = {}
    edge_pairs = [(a, b) for a, b, _ in edges]
    for chosen in itertools.permutations(rest, len(free)):
        legs = list(fixed) + list(zip(chosen, free))
        legs += [(m, spill) for m in rest if m not in chosen]
        raw, fm = make_graph(genera, legs, edge_pairs)
        check_stable(raw)
        nl = len(legs)
        psi = []
        for i, (_, _, mark) in enumerate(edges):
            if mark == "s":
                psi.append((fm[nl + 2 * i], 1))
            elif mark == "e":
                psi.append((fm[nl + 2 * i + 1], 1))
        key = canonical_key(raw, psi, ())
        out.setdefault(key[:2], None)
    return sorted(out)


#: A drawn stratum stands for ``xi_{Gamma*}(dec) / |Aut(Gamma)|``; with
#: ``False`` it would stand for ``xi_{Gamma*}(dec)``.  Only the first reading
#: makes the closed formula agree with the recursion.
PICTURES_DIVIDE_BY_AUT = True


def _stratum_weight(graph: StableGraph):
    return mpq(1, len(automorphisms(graph))) if PICTURES_DIVIDE_BY_AUT else ONE


def template_class(
    text: str,
    markings: Sequence[int],
    bind: Mapping[str, int] | None = None,
    factor: TautClass | None = None,
) -> TautClass:
    """Sum of the strata of a template, each times ``1/|Aut|``, optionally times ``factor``.

    ``factor`` lives on ``\\bar M_{2,I}`` for a subset ``I`` of the markings
    and is pulled back before multiplying.

    >>> from hypstrata.integrals import fmt
    >>> [fmt(c) for _, c in template_class("g1() g0(_,_) | 0-1 0-1", [1, 2])]
    ['1/2']
    """
    marks = tuple(sorted(markings))
    strata = template_strata(text, marks, bind)
    g = strata[0][0].genus if strata else 2
    acc = _Sum(g, marks)
    for graph, psi in strata:
        w = _stratum_weight(graph)
        if factor is None:
            acc.add(glue_pushforward(graph, dict(psi)), w)
        else:
            acc.add(pulled_product(factor, graph, dict(psi)), w)
    return acc.result()


# --------------------------------------------------------------------------
# recursion
# --------------------------------------------------------------------------

_CACHE: dict = {}


def _cached(key, build: Callable[[], TautClass]) -> TautClass:
    got = _CACHE.get(key)
    if got is None:
        got = build()
        _CACHE[key] = got
    return got


def clear_caches() -> None:
    """Forget memoized formula values (intersection numbers are kept)."""
    _CACHE.clear()
    _VBASE.clear()
    _POW.clear()
    _PULLED.clear()


def _hyp1() -> TautClass:
    return (
        3 * standard_class("psi", 2, 1, index=1)
        - standard_class("lambda", 2, 1)
        - standard_class("delta_1", 2, 1)
    )


def hyp_subset(I: Iterable[int], kind: str = "full") -> TautClass:
    """Hyperelliptic class for the markings ``I`` on ``\\bar M_{2,I}``.

    ``kind`` is ``"full"`` (from the recursion) or ``"ct"`` (the tree
    formula, used as a class on the whole space).  The empty set gives 1.
    """
    I = tuple(sorted(I))
    if not I:
        return TautClass.one(2, ())
    base = hyp_recursive(len(I)) if kind == "full" else hyp_ct_formula(len(I))
    return base.relabel({k + 1: m for k, m in enumerate(I)})


_PHI_TEMPLATES = [
    # (coefficient, variables, [(inner coefficient, template)])
    (mpq(1), "i", [(1, "g1(*) g0(n,i) | 0-1 0-1")]),
    (mpq(-1, 2), "ij", [(1, "g1(*) g0(j) g0(i,n) | 0-1 0-2 1-2")]),
    (mpq(1, 2), "ijk", [(1, "g1(*) g0(j) g0(n,i) g0(k) | 0-1 1-2 2-3 3-0")]),
    (
        mpq(1, 4),
        "ijkl",
        [
            (1, "g1(*) g0(l) g0(k) g0(j) g0(i,n) | 0-1 1-2 2-3 3-4 0-4"),
            (-3, "g1(*) g0(k) g0(j) g0(n,i) g0(l) | 0-1 1-2 2-3 3-4 0-4"),
        ],
    ),
    (
        mpq(1, 4),
        "ijklm",
        [
            (3, "g1(*) g0(k) g0(j) g0(n,i) g0(m) g0(l) | 0-1 1-2 2-3 3-4 4-5 5-0"),
            (-1, "g1(*) g0(m) g0(l) g0(k) g0(j) g0(i,n) | 0-1 1-2 2-3 3-4 4-5 5-0"),
        ],
    ),
]


def phigamma(n: int) -> TautClass:
    """Correction class of the recursion, supported on strata with ``h^1 = 1``.

    Sums over ordered tuples of distinct indices in ``[n-1]``; the elliptic
    vertex carries all markings not named in a template and the factor is
    the hyperelliptic class of those markings.
    """
    _check_n(n, 2, 6, "phigamma")

    def build() -> TautClass:
        marks = tuple(range(1, n + 1))
        acc = _Sum(2, marks)
        for coeff, names, templates in _PHI_TEMPLATES:
            if len(names) > n - 1:
                continue
            for tup in itertools.permutations(range(1, n), len(names)):
                bind = dict(zip(names, tup))
                bind["n"] = n
                I = [m for m in marks if m not in bind.values()]
                X = hyp_subset(I)
                for inner, text in templates:
                    strata = template_strata(text, marks, bind)
                    if len(strata) != 1:
                        raise StructureError("template does not determine a unique stratum")
                    graph, psi = strata[0]
                    acc.add(pulled_product(X, graph, dict(psi)), coeff * inner * _stratum_weight(graph))
        return acc.result()

    return _cached(("phigamma", n), build)


def hyp_recursive(n: int) -> TautClass:
    """Hyperelliptic class on ``\\bar M_{2,n}`` from the recursion in ``n``.

    ``H_n = pi^* H_{n-1} * rho_n^* H_1 - sum_i sigma_{i*} H_{n-1} - PhiGamma_n``
    with ``H_1 = 3 omega - lambda - delta_1``.
    """
    _check_n(n, 1, 6, "hyp_recursive")

    def build() -> TautClass:
        if n == 1:
            return _hyp1()
        prev = hyp_recursive(n - 1)
        return _recursion_step(prev, n) - phigamma(n)

    return _cached(("rec", n), build)


def _recursion_step(prev: TautClass, n: int) -> TautClass:
    marks = tuple(range(1, n + 1))
    rho = pullback_to(_hyp1().relabel({1: n}), marks)
    out = multiply(pullback_forget(prev, n), rho)
    for i in range(1, n):
        out = out - section_pushforward(prev, i, n)
    return out


def nct_recursive(n: int) -> TautClass:
    """Part outside compact type from its own recursion, seeded by ``n = 2``."""
    _check_n(n, 2, 6, "nct_recursive")

    def build() -> TautClass:
        if n == 2:
            return -phigamma(2)
        return _recursion_step(nct_recursive(n - 1), n) - phigamma(n)

    return _cached(("nct_rec", n), build)


# --------------------------------------------------------------------------
# closed forms outside compact type
# --------------------------------------------------------------------------


def _ld_power(k: int) -> TautClass:
    """``(lambda + delta_1)^k`` on ``\\bar M_2``."""
    return _cached(
        ("ld", k),
        lambda: (standard_class("lambda", 2, ()) + standard_class("delta_1", 2, ())) ** k,
    )


def _factor(I: Sequence[int], kind: str | None, ld: int) -> TautClass | None:
    """``[Hyp_I] * (lambda + delta_1)^ld`` on ``\\bar M_{2,I}`` (``None`` for 1)."""
    I = tuple(sorted(I))
    if kind is None and ld == 0:
        return None
    base = hyp_subset(I, kind) if kind else TautClass.one(2, I)
    if ld:
        base = multiply(base, pullback_to(_ld_power(ld), I))
    return base


def _closed_terms(n: int):
    """Yield ``(coefficient, I, kind, ld_power, template, bind)`` for the closed form."""
    marks = list(range(1, n + 1))
    if n == 2:
        yield (-1, (), None, 0, "g1() g0(_,_) | 0-1 0-1", {})
        return
    if n == 3:
        for i in marks:
            yield (-1, (i,), "full", 0, "g0(_,_) g1(i) | 0-1 0-1", {"i": i})
        yield (1, (), None, 1, "g0(_,_,_) g1() | 0-1 0-1", {})
        yield (1, (), None, 0, "g0(_,_,_) g1() g0() | 2-1 2-1 2-0", {})
        yield (1, (), None, 0, "g0(_,_) g1() g0(_) | 2-1 2-1 2-0", {})
        return
    if n == 4:
        for i, j in itertools.combinations(marks, 2):
            yield (-1, (i, j), "ct", 0, "g0(_,_) g1(i,j) | 0-1 0-1", {"i": i, "j": j})
        for i in marks:
            b = {"i": i}
            yield (1, (i,), "full", 1, "g0(_,_,_) g1(i) | 0-1 0-1", b)
            yield (1, (i,), "full", 0, "g0(_,_) g0(_) g1(i) | 2-1 2-1 1-0", b)
            yield (1, (i,), "full", 0, "g0(_,_,_) g0() g1(i) | 2-1 2-1 1-0", b)
        yield (-1, (), None, 2, "g0(_,_,_,_) g1() | 0-1 0-1", {})
        for t in (
            "g1() g0(_,_) g0(_,_) | 0-1 0-2 1-2",
            "g0(_,_) g0(_,_) g1() | 2-1 2-1 1-0",
            "g0(_,_,_) g0(_) g1() | 2-1 2-1 1-0",
            "g0(_,_,_,_) g0() g1() | 2-1 2-1 1-0",
        ):
            yield (-1, (), None, 1, t, {})
        yield (-1, (), None, 0, "g0(_,_) g0(_) g0(_) g1() | 3-2 3-2 2-1 0-1", {})
        yield (-1, (), None, 0, "g0(_,_) g0(_,_) g0() g1() | 3-2 3-2 2-1 0-1", {})
        yield (1, (), None, 0, "g0(_,_) g0() g0(_,_) | 1-2 1-2 1-0 1-0", {})
        return
    if n == 5:
        for i, j in itertools.combinations(marks, 2):
            b = {"i": i, "j": j}
            rest = tuple(m for m in marks if m not in (i, j))
            yield (-1, rest, "ct", 0, "g0(j,i) g1(_,_,_) | 0-1 0-1", b)
            yield (1, (i, j), "ct", 1, "g0(_,_,_) g1(j,i) | 0-1 0-1", b)
            yield (1, (i, j), "ct", 0, "g0(_,_) g0(_) g1(j,i) | 2-1 2-1 1-0", b)
            yield (1, (i, j), "ct", 0, "g0(_,_,_) g0() g1(j,i) | 2-1 2-1 1-0", b)
        for i in marks:
            b = {"i": i}
            yield (-1, (i,), "ct", 2, "g0(_,_,_,_) g1(i) | 0-1 0-1", b)
            for t in (
                "g1(i) g0(_,_) g0(_,_) | 0-1 0-2 1-2",
                "g0(_,_) g0(_,_) g1(i) | 2-1 2-1 1-0",
                "g0(_,_,_) g0(_) g1(i) | 2-1 2-1 1-0",
                "g0(_,_,_,_) g0() g1(i) | 2-1 2-1 1-0",
            ):
                yield (-1, (i,), "ct", 1, t, b)
            yield (-1, (i,), "ct", 0, "g0(_,_) g0(_) g0(_) g1(i) | 3-2 3-2 2-1 0-1", b)
            yield (-1, (i,), "ct", 0, "g0(_,_) g0(_,_) g0() g1(i) | 3-2 3-2 2-1 0-1", b)
            yield (1, (i,), "ct", 0, "g0(_,_) g0(i) g0(_,_) | 1-2 1-2 1-0 1-0", b)
        yield (-1, (), None, 1, "g0(_,_) g0() g0(_,_,_) | 1-2 1-2 1-0 1-0", {})
        yield (-1, (), None, 0, "g0(_,_) g0() g0(_) g0(_,_) | 0-1 0-1 1-2 1-2 2-3", {})
        yield (-1, (), None, 0, "g0(_,_) g0() g0() g0(_,_,_) | 0-1 0-1 1-2 1-2 2-3", {})
        yield (1, (), None, 3, "g0(_,_,_,_,_) g1() | 0-1 0-1", {})
        for t in (
            "g1() g0(_,_,_) g0(_,_) | 0-1 0-2 1-2",
            "g0(_,_) g0(_,_,_) g1() | 2-1 2-1 1-0",
            "g0(_,_,_) g0(_,_) g1() | 2-1 2-1 1-0",
            "g0(_,_,_,_) g0(_) g1() | 2-1 2-1 1-0",
            "g0(_,_,_,_,_) g0() g1() | 2-1 2-1 1-0",
        ):
            yield (1, (), None, 2, t, {})
        for c, t in (
            (1, "g1() g0() g0(_,_,_) g0(_,_) | 0-1 0-3 1-2 1-3"),
            (1, "g1() g0(_) g0(_,_) g0(_,_) | 0-1 0-3 1-2 1-3"),
            (1, "g1() g0(_,_,_) g0(_,5) | 0-1 1-2^s 0-2"),
            (1, "g0(_,5) g0(_,_) g0(_) g1() | 3-2 3-2 2-0 2-1"),
            (1, "g0(_,5) g0(_,_,_) g0() g1() | 3-2 3-2 2-0 2-1"),
            (-1, "g1() g0(_,_) g0(_) g0(5,_) | 0-1 1-2 2-3 3-0"),
            (1, "g0(_,_) g0(_,_) g0(_) g1() | 3-2 3-2 2-1 0-1"),
            (1, "g0(_,_) g0(_,_,_) g0() g1() | 3-2 3-2 2-1 0-1"),
            (1, "g0(5,_,_) g0(_) g0(_) g1() | 3-2 3-2 2-1 0-1"),
            (1, "g0(5,_,_) g0(_,_) g0() g1() | 3-2 3-2 2-1 0-1"),
            (1, "g0(5,_) g0(_) g0(_,_) g1() | 3-2 3-2 2-1 0-1"),
            (1, "g0(_,_) g0(_) g0(_,5) g1() | 3-2 3-2 2-1 0-1"),
        ):
            yield (c, (), None, 1, t, {})
        yield from _nct5_tail_terms()
        return
    raise ValueError("closed forms are available for 2 <= n <= 5")


_NCT5_TAIL = (
    (mpq(-1, 4), "g1() g0(_) g0(_) g0(_) g0(_,5) | 0-1 1-2 2-3 3-4 0-4"),
    (mpq(3, 4), "g1() g0(_) g0(_) g0(5,_) g0(_) | 0-1 1-2 2-3 3-4 0-4"),
    (1, "g1() g0(5) g0(_,_) g0(_,_) | 0-1 0-3 1-2 1-3^e"),
    (1, "g1() g0(_) g0(_,_) g0(_,5) | 0-1^e 0-3 1-2 1-3"),
    (-1, "g1() g0(_) g0(5) g0(_,_) g0(_) | 0-1 1-2 2-4 2-3 4-0"),
    (-1, "g1() g0(_) g0(5,_) g0() g0(_,_) | 0-1 1-2 2-3 3-0 3-4"),
    (1, "g0(_,5) g0(_) g0(_,_) g0() g1() | 4-3 4-3 1-2 3-0 3-1"),
    (1, "g0(_,5) g0(_,_) g0() g0(_) g1() | 4-3 4-3 3-2 2-0 2-1"),
    (1, "g0(_,5) g0(_,_) g0(_) g0() g1() | 4-3 4-3 3-2 2-0 2-1"),
    (1, "g0(_,5) g0(_) g0(_) g0(_) g1() | 4-3 4-3 3-2 2-1 1-0"),
    (1, "g0(_,5) g0(_) g0(_,_) g0() g1() | 4-3 4-3 3-2 2-1 1-0"),
)


def _nct5_tail_terms():
    for c, t in _NCT5_TAIL:
        yield (c, (), None, 0, t, {})


def _assemble(n: int, terms) -> TautClass:
    marks = tuple(range(1, n + 1))
    acc = _Sum(2, marks)
    for c, I, kind, ld, text, bind in terms:
        X = _factor(I, kind, ld)
        acc.add(template_class(text, marks, bind, X), c)
    return acc.result()


def nct_closed(n: int) -> TautClass:
    """Closed expression for the part outside compact type (``2 <= n <= 5``).

    For ``n = 5`` the expression is not symmetric in the markings.

    >>> nct_closed(2) == nct_recursive(2)
    True
    """
    _check_n(n, 2, 5, "nct_closed")
    return _cached(("nct_closed", n), lambda: _assemble(n, _closed_terms(n)))


def nct5_tail() -> TautClass:
    """The unsymmetrized block of strata without lambda or hyperelliptic factors for ``n = 5``."""
    return _cached(("nct5_tail", 5), lambda: _assemble(5, _nct5_tail_terms()))
