r"""
The strata algebra of decorated boundary classes.

A :class:`TautClass` is a finite sum of terms ``c * xi_{Gamma*}(m)`` where
``Gamma`` is a canonical stable graph and ``m`` a monomial in psi classes of
its flags and kappa classes of its vertices.  Terms are stored in a dict
keyed by ``(graph, psi, kappa)`` with

* ``psi``: sorted tuple of ``(flag, exponent)``;
* ``kappa``: sorted tuple of ``(vertex, index, exponent)``.

Keys are canonical: the graph is the canonical representative and the
decoration is the smallest image under the automorphisms of the graph.

EXAMPLES::

    >>> from hypstrata.algebra import standard_class, multiply
    >>> d = standard_class("delta_total", 0, 4)
    >>> len(d)
    3
    >>> from hypstrata.integrals import fmt
    >>> fmt(integrate(d))
    '3/1'
    >>> from hypstrata.graphs import make_graph
    >>> d12 = glue_pushforward(make_graph([0, 0], [(1, 0), (2, 0), (3, 1), (4, 1), (5, 1)], [(0, 1)])[0])
    >>> fmt(integrate(multiply(d12, d12)))
    '-1/1'
"""
from __future__ import annotations

import itertools
from collections import defaultdict
from math import comb, factorial
from typing import Iterable, Iterator, Mapping, Sequence

from gmpy2 import mpq

from .graphs import (
    StableGraph,
    StructureError,
    automorphisms,
    canonical_form,
    check_stable,
    contract_edges,
    enumerate_stable_graphs,
    flag_slots,
    graph_record,
    graphs_by_edges,
    make_graph,
    parse_graph_record,
)
from .integrals import fmt, vertex_integral

__all__ = [
    "TautClass",
    "AmbientError",
    "canonical_key",
    "glue_pushforward",
    "glue_classes",
    "multiply",
    "pullback_forget",
    "pushforward_forget",
    "section_pushforward",
    "pullback_gluing",
    "multiply_psi",
    "pullback_to",
    "multiply_kappa",
    "standard_class",
    "degree_part",
    "restrict_compact_type",
    "integrate",
    "pair",
    "term_degree",
]

ZERO = mpq(0)
ONE = mpq(1)

Psi = tuple  # tuple[tuple[int, int], ...]
Kappa = tuple  # tuple[tuple[int, int, int], ...]
Key = tuple  # (StableGraph, Psi, Kappa)


class AmbientError(ValueError):
    """Raised when classes on different moduli spaces are combined."""


# --------------------------------------------------------------------------
# monomials on a fixed graph
# --------------------------------------------------------------------------


def _merge_psi(p: Psi, q: Psi) -> Psi:
    if not p:
        return q
    if not q:
        return p
    d = dict(p)
    for f, e in q:
        d[f] = d.get(f, 0) + e
    return tuple(sorted(d.items()))


def _merge_kappa(p: Kappa, q: Kappa) -> Kappa:
    if not p:
        return q
    if not q:
        return p
    d: dict[tuple[int, int], int] = {}
    for v, a, e in p:
        d[(v, a)] = d.get((v, a), 0) + e
    for v, a, e in q:
        d[(v, a)] = d.get((v, a), 0) + e
    return tuple(sorted((v, a, e) for (v, a), e in d.items()))


def _vertex_loads(graph: StableGraph, psi: Psi, kappa: Kappa) -> list[int]:
    load = [0] * len(graph.genera)
    for f, e in psi:
        load[graph.flag_vertex(f)] += e
    for v, a, e in kappa:
        load[v] += a * e
    return load


_VDIM: dict[StableGraph, tuple[int, ...]] = {}


def _vertex_dims(graph: StableGraph) -> tuple[int, ...]:
    got = _VDIM.get(graph)
    if got is None:
        vf = graph.vertex_flags()
        got = tuple(3 * g - 3 + len(vf[v]) for v, g in enumerate(graph.genera))
        _VDIM[graph] = got
    return got


def _fits(graph: StableGraph, psi: Psi, kappa: Kappa) -> bool:
    """False when some vertex carries more degree than its dimension."""
    dims = _vertex_dims(graph)
    load = _vertex_loads(graph, psi, kappa)
    return all(x <= d for x, d in zip(load, dims))


def term_degree(key: Key) -> int:
    graph, psi, kappa = key
    return len(graph.edges) + sum(e for _, e in psi) + sum(a * e for _, a, e in kappa)


def canonical_key(graph: StableGraph, psi: Iterable[tuple[int, int]], kappa: Iterable[tuple[int, int, int]]) -> Key:
    """Canonical key of the decorated stratum ``(graph, psi, kappa)``."""
    canon, fmap, vmap = canonical_form(graph)
    p = tuple(sorted((fmap[f], e) for f, e in psi if e))
    k = tuple(sorted((vmap[v], a, e) for v, a, e in kappa if e))
    if p or k:
        auts = automorphisms(canon)
        if len(auts) > 1:
            best = (p, k)
            for fperm, vperm in auts:
                cand = (
                    tuple(sorted((fperm[f], e) for f, e in p)),
                    tuple(sorted((vperm[v], a, e) for v, a, e in k)),
                )
                if cand < best:
                    best = cand
            p, k = best
    return (canon, p, k)


# --------------------------------------------------------------------------
# the class type
# --------------------------------------------------------------------------


class TautClass:
    """An element of the strata algebra of ``\\bar M_{g, markings}``.

    >>> x = standard_class("psi", 0, 4, index=1)
    >>> (x + x - 2 * x).is_zero()
    True
    """

    __slots__ = ("g", "markings", "terms")

    def __init__(self, g: int, markings: Iterable[int], terms: Mapping[Key, object] | None = None):
        self.g = g
        self.markings = tuple(sorted(markings))
        self.terms: dict[Key, mpq] = {}
        if terms:
            for k, v in terms.items():
                if v:
                    self.terms[k] = mpq(v)

    # -- basic structure ----------------------------------------------

    @property
    def n(self) -> int:
        return len(self.markings)

    @property
    def dim(self) -> int:
        return 3 * self.g - 3 + len(self.markings)

    @property
    def ambient(self) -> tuple[int, tuple[int, ...]]:
        return (self.g, self.markings)

    @classmethod
    def zero(cls, g: int, markings: Iterable[int]) -> "TautClass":
        return cls(g, markings)

    @classmethod
    def one(cls, g: int, markings: Iterable[int]) -> "TautClass":
        marks = tuple(sorted(markings))
        graph = StableGraph((g,), tuple((m, 0) for m in marks), ())
        check_stable(graph)
        return cls(g, marks, {(graph, (), ()): ONE})

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[Key, mpq]]:
        return iter(sorted(self.terms.items(), key=lambda kv: _sort_key(kv[0])))

    def items(self):
        return self.terms.items()

    def is_zero(self) -> bool:
        return not self.terms

    def degrees(self) -> set[int]:
        return {term_degree(k) for k in self.terms}

    def _check(self, other: "TautClass") -> None:
        if not isinstance(other, TautClass):
            raise TypeError(f"expected TautClass, got {type(other).__name__}")
        if self.ambient != other.ambient:
            raise AmbientError(f"ambient mismatch: {self.ambient} vs {other.ambient}")

    def __add__(self, other: "TautClass") -> "TautClass":
        self._check(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, ZERO) + v
        return TautClass(self.g, self.markings, out)

    def __sub__(self, other: "TautClass") -> "TautClass":
        return self + (-1) * other

    def __neg__(self) -> "TautClass":
        return (-1) * self

    def scale(self, c) -> "TautClass":
        c = mpq(c)
        if not c:
            return TautClass(self.g, self.markings)
        return TautClass(self.g, self.markings, {k: v * c for k, v in self.terms.items()})

    def __rmul__(self, c) -> "TautClass":
        return self.scale(c)

    def __mul__(self, other) -> "TautClass":
        if isinstance(other, TautClass):
            return multiply(self, other)
        return self.scale(other)

    def __pow__(self, k: int) -> "TautClass":
        out = TautClass.one(self.g, self.markings)
        for _ in range(k):
            out = multiply(out, self)
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, TautClass):
            return NotImplemented
        return self.ambient == other.ambient and self.terms == other.terms

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"<TautClass g={self.g} n={self.n} terms={len(self.terms)} degrees={sorted(self.degrees())}>"

    def degree_part(self, d: int) -> "TautClass":
        return TautClass(self.g, self.markings, {k: v for k, v in self.terms.items() if term_degree(k) == d})

    def restrict_compact_type(self) -> "TautClass":
        return TautClass(self.g, self.markings, {k: v for k, v in self.terms.items() if k[0].h1 == 0})

    def relabel(self, perm: Mapping[int, int]) -> "TautClass":
        """Rename markings through ``perm`` (markings absent from ``perm`` stay)."""
        out: dict[Key, mpq] = defaultdict(lambda: ZERO)
        for (graph, psi, kappa), c in self.terms.items():
            legs = [(perm.get(m, m), v) for m, v in graph.legs]
            raw, fm = make_graph(graph.genera, legs, graph.edges)
            key = canonical_key(raw, [(fm[f], e) for f, e in psi], kappa)
            out[key] += c
        marks = [perm.get(m, m) for m in self.markings]
        if len(set(marks)) != len(marks):
            raise ValueError("relabelling is not injective")
        return TautClass(self.g, marks, out)

    # -- text format --------------------------------------------------

    def dumps(self) -> str:
        lines = [f"C g={self.g} n={self.n}" + ("" if self.markings == tuple(range(1, self.n + 1)) else f" m={','.join(map(str, self.markings))}")]
        for (graph, psi, kappa), c in self:
            slots = flag_slots(graph)
            ps = ",".join(f"{slots[f][0]}.{slots[f][1]}:{e}" for f, e in psi)
            ks = ",".join(f"{v}:{a}:{e}" for v, a, e in kappa)
            lines.append(f"{fmt(c)} | {graph_record(graph)} | psi={ps} | kappa={ks}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "TautClass":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        head = dict(tok.split("=", 1) for tok in lines[0].split()[1:])
        g = int(head["g"])
        n = int(head["n"])
        marks = tuple(int(x) for x in head["m"].split(",")) if "m" in head else tuple(range(1, n + 1))
        terms: dict[Key, mpq] = {}
        for ln in lines[1:]:
            cs, gs, ps, ks = (x.strip() for x in ln.split("|"))
            graph = parse_graph_record(gs)
            slots = {v: f for f, v in flag_slots(graph).items()}
            psi = []
            for tok in ps[len("psi="):].split(","):
                if tok:
                    fl, e = tok.split(":")
                    v, s = fl.split(".")
                    psi.append((slots[(int(v), int(s))], int(e)))
            kappa = []
            for tok in ks[len("kappa="):].split(","):
                if tok:
                    v, a, e = tok.split(":")
                    kappa.append((int(v), int(a), int(e)))
            key = canonical_key(graph, psi, kappa)
            terms[key] = terms.get(key, ZERO) + mpq(cs)
        return cls(g, marks, terms)


def _sort_key(key: Key):
    graph, psi, kappa = key
    return (term_degree(key), len(graph.edges), graph, psi, kappa)


class _Acc:
    """Accumulator of raw decorated terms into canonical keys."""

    __slots__ = ("g", "markings", "dim", "terms")

    def __init__(self, g: int, markings: Iterable[int]):
        self.g = g
        self.markings = tuple(sorted(markings))
        self.dim = 3 * g - 3 + len(self.markings)
        self.terms: dict[Key, mpq] = defaultdict(lambda: ZERO)

    def add(self, graph: StableGraph, psi, kappa, c) -> None:
        if not c:
            return
        pd: dict[int, int] = {}
        for f, e in psi:
            if e:
                pd[f] = pd.get(f, 0) + e
        psi = tuple(sorted(pd.items()))
        kappa = _normalize_kappa(kappa)
        if not _fits(graph, psi, kappa):
            return
        key = canonical_key(graph, psi, kappa)
        self.terms[key] += c

    def add_key(self, key: Key, c) -> None:
        if c:
            self.terms[key] += c

    def result(self) -> TautClass:
        return TautClass(self.g, self.markings, self.terms)


# --------------------------------------------------------------------------
# gluing
# --------------------------------------------------------------------------


class _Subst:
    """The graph obtained by substituting a graph into every vertex of ``outer``.

    ``inner[v]`` must be a graph whose markings are ``1..valence(v)``;
    marking ``p+1`` stands for the ``p``-th flag of ``v``.
    """

    __slots__ = ("graph", "outer_flag", "vertex_owner", "inner_flag", "inner_vertex", "new_edges")

    def __init__(self, outer: StableGraph, inner: Sequence[StableGraph]):
        vf = outer.vertex_flags()
        offsets = []
        genera: list[int] = []
        for v, gv in enumerate(inner):
            offsets.append(len(genera))
            genera.extend(gv.genera)
        where = {}  # outer flag -> raw vertex
        for v, fl in enumerate(vf):
            gv = inner[v]
            for p, f in enumerate(fl):
                m, u = gv.legs[p]
                assert m == p + 1
                where[f] = offsets[v] + u
        n = len(outer.legs)
        legs = [(m, where[k]) for k, (m, _) in enumerate(outer.legs)]
        edges = [(where[n + 2 * i], where[n + 2 * i + 1]) for i in range(len(outer.edges))]
        inner_raw_edge_start = []
        for v, gv in enumerate(inner):
            inner_raw_edge_start.append(len(edges))
            edges.extend((offsets[v] + a, offsets[v] + b) for a, b in gv.edges)
        graph, fm = make_graph(genera, legs, edges)
        self.graph = graph
        self.outer_flag = tuple(fm[f] for f in range(n + 2 * len(outer.edges)))
        owner = []
        for v, gv in enumerate(inner):
            owner.extend([v] * len(gv.genera))
        self.vertex_owner = tuple(owner)
        self.inner_vertex = tuple(tuple(offsets[v] + u for u in range(len(gv.genera))) for v, gv in enumerate(inner))
        inner_flag = []
        new_edges = []
        for v, gv in enumerate(inner):
            nv = len(gv.legs)
            fmap = [self.outer_flag[vf[v][p]] for p in range(nv)]
            for j in range(len(gv.edges)):
                raw = n + 2 * (inner_raw_edge_start[v] + j)
                fmap.append(fm[raw])
                fmap.append(fm[raw + 1])
                new_edges.append((fm[raw] - len(legs)) // 2)
            inner_flag.append(tuple(fmap))
        self.inner_flag = tuple(inner_flag)
        self.new_edges = frozenset(new_edges)


_SUBST: dict = {}


def _subst(outer: StableGraph, inner: tuple[StableGraph, ...]) -> _Subst:
    key = (outer, inner)
    got = _SUBST.get(key)
    if got is None:
        got = _Subst(outer, inner)
        if len(_SUBST) > 300_000:
            _SUBST.clear()
        _SUBST[key] = got
    return got


def glue_pushforward(
    graph: StableGraph,
    psi: Mapping[int, int] | None = None,
    kappa: Mapping[tuple[int, int], int] | None = None,
) -> TautClass:
    """``xi_{Gamma*}`` of a monomial, as a single-term class with coefficient 1.

    ``psi`` maps flags of ``graph`` to exponents and ``kappa`` maps
    ``(vertex, index)`` to exponents.  A monomial exceeding a vertex
    dimension gives the zero class.

    >>> loop = StableGraph((0,), ((1, 0), (2, 0)), ((0, 0),))
    >>> fmt(integrate(glue_pushforward(loop).scale(mpq(1, 2)) * standard_class("psi", 1, 2, index=1)))
    '1/2'
    """
    check_stable(graph)
    psi = dict(psi or {})
    kappa = dict(kappa or {})
    for f in psi:
        if not 0 <= f < graph.num_flags:
            raise StructureError(f"decoration on nonexistent flag {f}")
    for v, _a in kappa:
        if not 0 <= v < graph.num_vertices:
            raise StructureError(f"decoration on nonexistent vertex {v}")
    acc = _Acc(graph.genus, graph.markings())
    acc.add(graph, psi.items(), [(v, a, e) for (v, a), e in kappa.items()], ONE)
    return acc.result()


def glue_classes(outer: StableGraph, classes: Sequence[TautClass], coeff=1, markings=None) -> TautClass:
    """``xi_{outer*}`` of the exterior product of per-vertex classes.

    ``classes[v]`` lives on the moduli space of vertex ``v`` with markings
    ``1..valence(v)`` standing for the flags of ``v`` in order.
    """
    vf = outer.vertex_flags()
    for v, cl in enumerate(classes):
        if cl.g != outer.genera[v] or cl.markings != tuple(range(1, len(vf[v]) + 1)):
            raise AmbientError(f"class for vertex {v} lives on the wrong space")
    acc = _Acc(outer.genus, markings if markings is not None else outer.markings())
    coeff = mpq(coeff)
    for combo in itertools.product(*(list(cl.terms.items()) for cl in classes)):
        sub = _subst(outer, tuple(k[0] for k, _ in combo))
        c = coeff
        psi: list[tuple[int, int]] = []
        kappa: list[tuple[int, int, int]] = []
        for v, ((_, p, k), cv) in enumerate(combo):
            c *= cv
            fm = sub.inner_flag[v]
            vm = sub.inner_vertex[v]
            psi.extend((fm[f], e) for f, e in p)
            kappa.extend((vm[u], a, e) for u, a, e in k)
        acc.add(sub.graph, _sum_psi(psi), kappa, c)
    return acc.result()


def _sum_psi(items) -> list[tuple[int, int]]:
    d: dict[int, int] = {}
    for f, e in items:
        d[f] = d.get(f, 0) + e
    return list(d.items())


# --------------------------------------------------------------------------
# forgetful pullback / pushforward and sections
# --------------------------------------------------------------------------


def _new_mark(A: TautClass, mark: int | None) -> int:
    if mark is None:
        mark = (max(A.markings) + 1) if A.markings else 1
    if mark in A.markings:
        raise ValueError(f"marking {mark} already present")
    return mark


def pullback_forget(A: TautClass, mark: int | None = None) -> TautClass:
    """Pull back along the map forgetting the new marking ``mark``.

    >>> x = pullback_forget(standard_class("psi", 1, 1, index=1))
    >>> sorted(len(k[0].edges) for k, _ in x)
    [0, 1]
    """
    mark = _new_mark(A, mark)
    acc = _Acc(A.g, A.markings + (mark,))
    for (graph, psi, kappa), c in A.terms.items():
        n = len(graph.legs)
        vf = graph.vertex_flags()
        pd = dict(psi)
        for v in range(len(graph.genera)):
            # leg on vertex v
            legs = list(graph.legs) + [(mark, v)]
            raw, fm = make_graph(graph.genera, legs, graph.edges)
            shift = [fm[f] if f < n else fm[f + 1] for f in range(graph.num_flags)]
            newleg = fm[n]
            base_psi = [(shift[f], e) for f, e in psi]
            other_k = [(u, a, e) for u, a, e in kappa if u != v]
            here_k = [(a, e) for u, a, e in kappa if u == v]
            for choice in itertools.product(*(range(e + 1) for _, e in here_k)):
                cc = c
                extra = 0
                ks = list(other_k)
                for (a, e), j in zip(here_k, choice):
                    cc *= comb(e, j) * (-1) ** j
                    extra += a * j
                    if e - j:
                        ks.append((v, a, e - j))
                acc.add(raw, base_psi + [(newleg, extra)], ks, cc)
            # bubble: the new point collides with flag f of v
            for f in vf[v]:
                a_f = pd.get(f, 0)
                if a_f == 0:
                    continue
                w = len(graph.genera)
                genera = list(graph.genera) + [0]
                legs = [(m, w if k == f else u) for k, (m, u) in enumerate(graph.legs)]
                legs.append((mark, w))
                edges = []
                for i, (x, y) in enumerate(graph.edges):
                    fx, fy = n + 2 * i, n + 2 * i + 1
                    edges.append((w if fx == f else x, w if fy == f else y))
                edges.append((v, w))
                raw2, fm2 = make_graph(genera, legs, edges)
                shift2 = [fm2[ff] if ff < n else fm2[ff + 1] for ff in range(graph.num_flags)]
                h = fm2[(n + 1) + 2 * len(graph.edges)]  # side at v of the new edge
                ps = [(shift2[ff], e) for ff, e in psi if ff != f]
                ps.append((h, a_f - 1))
                acc.add(raw2, ps, kappa, -c)
    return acc.result()


def pushforward_forget(A: TautClass, mark: int | None = None) -> TautClass:
    """Push forward along the map forgetting ``mark`` (default: the largest).

    >>> x = standard_class("psi", 1, 2, index=2)
    >>> y = pushforward_forget(multiply(x, x))
    >>> [(k[2], fmt(c)) for k, c in y]
    [(((0, 1, 1),), '1/1')]
    """
    if mark is None:
        mark = max(A.markings)
    if mark not in A.markings:
        raise ValueError(f"marking {mark} not present")
    rest = tuple(m for m in A.markings if m != mark)
    if 2 * A.g - 2 + len(rest) <= 0:
        raise StructureError("pushforward to an unstable space")
    acc = _Acc(A.g, rest)
    for (graph, psi, kappa), c in A.terms.items():
        n = len(graph.legs)
        lf = graph.leg_flag(mark)
        v = graph.legs[lf][1]
        vf = graph.vertex_flags()
        gv, nv = graph.genera[v], len(vf[v])
        pd = dict(psi)
        b = pd.pop(lf, 0)
        legs = [lg for lg in graph.legs if lg[0] != mark]
        if 2 * gv - 2 + nv - 1 > 0:
            raw, fm = make_graph(graph.genera, legs, graph.edges)
            # old flag ids without the forgotten leg
            shift = {}
            for f in range(graph.num_flags):
                if f == lf:
                    continue
                raw_id = f if f < lf else f - 1
                shift[f] = fm[raw_id]
            base_psi = [(shift[f], e) for f, e in pd.items()]
            other_k = [(u, a, e) for u, a, e in kappa if u != v]
            here = [a for u, a, e in kappa if u == v for _ in range(e)]
            kappa0 = 2 * gv - 2 + nv - 1
            m = len(here)
            for size in range(m + 1):
                for S in itertools.combinations(range(m), size):
                    T = b + sum(here[j] for j in S)
                    kept = [here[j] for j in range(m) if j not in S]
                    if T == 0:
                        # string-type contribution
                        for f, e in pd.items():
                            if graph.flag_vertex(f) != v:
                                continue
                            ps = [(shift[ff], ee - (1 if ff == f else 0)) for ff, ee in pd.items()]
                            acc.add(raw, ps, other_k + [(v, a, 1) for a in kept], c)
                        continue
                    ks = other_k + [(v, a, 1) for a in kept]
                    if T - 1 == 0:
                        acc.add(raw, base_psi, ks, c * kappa0)
                    else:
                        acc.add(raw, base_psi, ks + [(v, T - 1, 1)], c)
        else:
            # genus-0 vertex with three flags collapses
            if b or any(u == v for u, _, _ in kappa):
                continue  # decoration of positive degree on a point
            others = [f for f in vf[v] if f != lf]
            f1, f2 = others
            if f1 < n and f2 < n:
                raise StructureError("pushforward to an unstable space")
            if f1 < n:
                f1, f2 = f2, f1
            # f1 is an edge half; f2 is a leg or an edge half
            o1 = graph.opposite(f1)
            u1 = graph.flag_vertex(o1)
            e1 = (f1 - n) // 2
            keep_vertices = [u for u in range(len(graph.genera)) if u != v]
            vid = {u: i for i, u in enumerate(keep_vertices)}
            genera = [graph.genera[u] for u in keep_vertices]
            raw_legs = []
            leg_src = []
            for k, (m_, u) in enumerate(graph.legs):
                if k == lf:
                    continue
                if k == f2:
                    raw_legs.append((m_, vid[u1]))
                else:
                    raw_legs.append((m_, vid[u]))
                leg_src.append(k)
            raw_edges = []
            edge_src = []  # pairs of old flags for each raw edge side
            if f2 >= n:
                o2 = graph.opposite(f2)
                u2 = graph.flag_vertex(o2)
                e2 = (f2 - n) // 2
                raw_edges.append((vid[u1], vid[u2]))
                edge_src.append((o1, o2))
            else:
                e2 = None
            for i, (x, y) in enumerate(graph.edges):
                if i == e1 or i == e2:
                    continue
                raw_edges.append((vid[x], vid[y]))
                edge_src.append((n + 2 * i, n + 2 * i + 1))
            raw, fm = make_graph(genera, raw_legs, raw_edges)
            nl = len(raw_legs)
            old_to_new = {}
            for j, k in enumerate(leg_src):
                old_to_new[k] = fm[j]
            if f2 < n:
                old_to_new[o1] = old_to_new[f2]
            for j, (s0, s1) in enumerate(edge_src):
                old_to_new[s0] = fm[nl + 2 * j]
                old_to_new[s1] = fm[nl + 2 * j + 1]
            ps = _sum_psi((old_to_new[f], e) for f, e in pd.items())
            ks = [(vid[u], a, e) for u, a, e in kappa]
            acc.add(raw, ps, ks, c)
    return acc.result()


def section_pushforward(A: TautClass, i: int, mark: int | None = None) -> TautClass:
    """Push forward along the section ``sigma_i`` (points ``i`` and ``mark`` on a bubble)."""
    if i not in A.markings:
        raise ValueError(f"index {i} out of range")
    mark = _new_mark(A, mark)
    acc = _Acc(A.g, A.markings + (mark,))
    for (graph, psi, kappa), c in A.terms.items():
        n = len(graph.legs)
        lf = graph.leg_flag(i)
        v = graph.legs[lf][1]
        w = len(graph.genera)
        legs = [(m, w if m == i else u) for m, u in graph.legs] + [(mark, w)]
        edges = list(graph.edges) + [(v, w)]
        raw, fm = make_graph(list(graph.genera) + [0], legs, edges)
        shift = [fm[f] if f < n else fm[f + 1] for f in range(graph.num_flags)]
        h = fm[(n + 1) + 2 * len(graph.edges)]
        ps = [((h if f == lf else shift[f]), e) for f, e in psi]
        acc.add(raw, ps, kappa, c)
    return acc.result()


# --------------------------------------------------------------------------
# products
# --------------------------------------------------------------------------


_CONTRACT: dict = {}


def _contraction(graph: StableGraph, keep: frozenset) -> tuple[StableGraph, tuple[int, ...], tuple[tuple[int, ...], ...]]:
    """Canonical contraction keeping ``keep``: ``(A, flag A->graph, vertex A->graph vertices)``."""
    key = (graph, keep)
    got = _CONTRACT.get(key)
    if got is not None:
        return got
    con, back, vmap = contract_edges(graph, keep)
    canon, fmap, vm = canonical_form(con)
    a_flag = [0] * len(fmap)
    for cf, af in enumerate(fmap):
        a_flag[af] = back[cf]
    pre: list[list[int]] = [[] for _ in canon.genera]
    for u, cv in enumerate(vmap):
        pre[vm[cv]].append(u)
    res = (canon, tuple(a_flag), tuple(tuple(p) for p in pre))
    if len(_CONTRACT) > 2_000_000:
        _CONTRACT.clear()
    _CONTRACT[key] = res
    return res


def _expand_kappa_sum(targets: Sequence[int], a: int, e: int) -> Iterator[tuple[int, list[tuple[int, int, int]]]]:
    """Expand ``(sum_{u in targets} kappa_a(u))^e`` into (multinomial coefficient, kappa list)."""
    if len(targets) == 1:
        yield 1, [(targets[0], a, e)]
        return
    k = len(targets)
    for split in _compositions(e, k):
        coef = factorial(e)
        ks = []
        for u, x in zip(targets, split):
            coef //= factorial(x)
            if x:
                ks.append((u, a, x))
        yield coef, ks


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _pull_poly(poly: Mapping[tuple[Psi, Kappa], mpq], flag_map: Sequence[int], vert_pre: Sequence[Sequence[int]]):
    """Pull a polynomial on a contracted graph back to the big graph."""
    out: dict[tuple[Psi, Kappa], mpq] = {}
    for (psi, kappa), c in poly.items():
        p = tuple(sorted((flag_map[f], e) for f, e in psi))
        if not kappa:
            out[(p, ())] = out.get((p, ()), ZERO) + c
            continue
        parts = [list(_expand_kappa_sum(vert_pre[v], a, e)) for v, a, e in kappa]
        for combo in itertools.product(*parts):
            cc = c
            ks: list[tuple[int, int, int]] = []
            for coef, kl in combo:
                cc *= coef
                ks.extend(kl)
            k = _normalize_kappa(ks)
            out[(p, k)] = out.get((p, k), ZERO) + cc
    return out


def _normalize_kappa(ks) -> Kappa:
    d: dict[tuple[int, int], int] = {}
    for v, a, e in ks:
        d[(v, a)] = d.get((v, a), 0) + e
    return tuple(sorted((v, a, e) for (v, a), e in d.items() if e))


def _poly_mul(P, Q, graph: StableGraph, max_deg: int | None = None):
    out: dict[tuple[Psi, Kappa], mpq] = {}
    dims = _vertex_dims(graph)
    for (p1, k1), c1 in P.items():
        for (p2, k2), c2 in Q.items():
            p = _merge_psi(p1, p2)
            k = _merge_kappa(k1, k2)
            load = _vertex_loads(graph, p, k)
            if any(x > d for x, d in zip(load, dims)):
                continue
            if max_deg is not None and sum(load) > max_deg:
                continue
            key = (p, k)
            out[key] = out.get(key, ZERO) + c1 * c2
    return out


def _symmetrized_by_graph(X: TautClass) -> dict[StableGraph, dict[tuple[Psi, Kappa], mpq]]:
    """Group terms by graph, summing each decoration over the automorphism group."""
    out: dict[StableGraph, dict[tuple[Psi, Kappa], mpq]] = defaultdict(dict)
    for (graph, psi, kappa), c in X.terms.items():
        poly = out[graph]
        for fperm, vperm in automorphisms(graph):
            p = tuple(sorted((fperm[f], e) for f, e in psi))
            k = tuple(sorted((vperm[v], a, e) for v, a, e in kappa))
            poly[(p, k)] = poly.get((p, k), ZERO) + c
    return out


def _by_graph(X: TautClass) -> dict[StableGraph, dict[tuple[Psi, Kappa], mpq]]:
    out: dict[StableGraph, dict[tuple[Psi, Kappa], mpq]] = defaultdict(dict)
    for (graph, psi, kappa), c in X.terms.items():
        out[graph][(psi, kappa)] = c
    return out


_VOPTS: dict = {}


def _vertex_options(g: int, n: int, max_edges: int) -> list[tuple[StableGraph, int, mpq]]:
    key = (g, n, max_edges)
    got = _VOPTS.get(key)
    if got is None:
        got = []
        for layer in graphs_by_edges(g, range(1, n + 1), max_edges):
            for gr in layer:
                got.append((gr, len(gr.edges), mpq(1, len(automorphisms(gr)))))
        _VOPTS[key] = got
    return got


def _degenerations(B: StableGraph, max_new: int) -> Iterator[tuple[_Subst, mpq]]:
    """Graphs with a structure of ``B``-graph, up to isomorphism of the pair."""
    vf = B.vertex_flags()
    opts = [_vertex_options(g, len(vf[v]), max_new) for v, g in enumerate(B.genera)]

    def rec(v: int, budget: int, chosen: list, w: mpq):
        if v == len(opts):
            yield _subst(B, tuple(chosen)), w
            return
        for gr, ne, inv in opts[v]:
            if ne > budget:
                continue
            chosen.append(gr)
            yield from rec(v + 1, budget - ne, chosen, w * inv)
            chosen.pop()

    yield from rec(0, max_new, [], ONE)


def _pull_b(poly, sub: _Subst, B: StableGraph):
    pre: list[list[int]] = [[] for _ in B.genera]
    for u, v in enumerate(sub.vertex_owner):
        pre[v].append(u)
    return _pull_poly(poly, sub.outer_flag, pre)


def _product_structures(X: TautClass, Y: TautClass, max_total: int):
    """Yield ``(graph, weight, polynomial)`` for every generic (X, Y) structure.

    The product class is ``sum weight * xi_{graph*}(polynomial)``.
    """
    if X.ambient != Y.ambient:
        raise AmbientError(f"ambient mismatch: {X.ambient} vs {Y.ambient}")
    if X.is_zero() or Y.is_zero():
        return
    ex = max(len(k[0].edges) for k in X.terms)
    ey = max(len(k[0].edges) for k in Y.terms)
    gx = len({k[0] for k in X.terms})
    gy = len({k[0] for k in Y.terms})
    # degenerate the side whose partner has fewer edges
    if (ex, gy) > (ey, gx):
        X, Y = Y, X
        ex, ey = ey, ex
    # now Y is degenerated by at most ex new edges; X is looked up
    dim = X.dim
    A_polys = _symmetrized_by_graph(X)
    a_edge_counts = {len(a.edges) for a in A_polys}
    min_deg_x = min(term_degree(k) for k in X.terms)
    for B, bpoly in _by_graph(Y).items():
        eb = len(B.edges)
        min_deg_b = min(term_degree((B,) + pk) for pk in bpoly)
        if min_deg_b + min_deg_x > max_total:
            continue
        budget = min(ex, dim - eb)
        for sub, w in _degenerations(B, budget):
            G = sub.graph
            N = sub.new_edges
            old = [i for i in range(len(G.edges)) if i not in N]
            total_poly: dict = {}
            q_cache = None
            for r in range(len(old) + 1):
                if len(N) + r not in a_edge_counts:
                    continue
                for extra in itertools.combinations(old, r):
                    S = frozenset(N).union(extra)
                    A, aflag, apre = _contraction(G, S)
                    apoly = A_polys.get(A)
                    if apoly is None:
                        continue
                    P = _pull_poly(apoly, aflag, apre)
                    if extra:
                        exc: dict = {((), ()): ONE}
                        nl = len(G.legs)
                        for i in extra:
                            h0, h1 = nl + 2 * i, nl + 2 * i + 1
                            lin = {(((h0, 1),), ()): mpq(-1), (((h1, 1),), ()): mpq(-1)}
                            exc = _poly_mul(exc, lin, G)
                        P = _poly_mul(P, exc, G)
                    if q_cache is None:
                        q_cache = _pull_b(bpoly, sub, B)
                    prod = _poly_mul(P, q_cache, G, max_total - len(G.edges))
                    for k, c in prod.items():
                        total_poly[k] = total_poly.get(k, ZERO) + c
            if total_poly:
                yield G, w, total_poly


def multiply(X: TautClass, Y: TautClass) -> TautClass:
    """Intersection product of two classes on the same space.

    >>> d12 = glue_pushforward(StableGraph((0, 0), ((1, 0), (2, 0), (3, 1), (4, 1), (5, 1)), ((0, 1),)))
    >>> fmt(integrate(multiply(d12, d12)))
    '-1/1'
    """
    acc = _Acc(X.g, X.markings)
    if X.ambient != Y.ambient:
        raise AmbientError(f"ambient mismatch: {X.ambient} vs {Y.ambient}")
    for G, w, poly in _product_structures(X, Y, X.dim):
        for (p, k), c in poly.items():
            if c:
                acc.add(G, p, k, c * w)
    return acc.result()


def pullback_gluing(X: TautClass, B: StableGraph) -> list[tuple[mpq, tuple[TautClass, ...]]]:
    """Pull ``X`` back along the gluing map of ``B``.

    Returns a list of ``(coefficient, per-vertex classes)``; the pullback is
    the sum of the exterior products.  Per-vertex classes use markings
    ``1..valence(v)`` for the flags of ``v``.
    """
    check_stable(B)
    canonB, fmapB, vmapB = canonical_form(B)
    # work on the canonical graph, translate back at the end
    Ycls = TautClass(X.g, X.markings, {(canonB, (), ()): ONE})
    vf = canonB.vertex_flags()
    out: dict[tuple, mpq] = defaultdict(lambda: ZERO)
    A_polys = _symmetrized_by_graph(X)
    a_edge_counts = {len(a.edges) for a in A_polys}
    ex = max((len(a.edges) for a in A_polys), default=0)
    eb = len(canonB.edges)
    for sub, w in _degenerations(canonB, min(ex, X.dim - eb)):
        G = sub.graph
        N = sub.new_edges
        old = [i for i in range(len(G.edges)) if i not in N]
        for r in range(len(old) + 1):
            if len(N) + r not in a_edge_counts:
                continue
            for extra in itertools.combinations(old, r):
                S = frozenset(N).union(extra)
                A, aflag, apre = _contraction(G, S)
                apoly = A_polys.get(A)
                if apoly is None:
                    continue
                P = _pull_poly(apoly, aflag, apre)
                nl = len(G.legs)
                for i in extra:
                    h0, h1 = nl + 2 * i, nl + 2 * i + 1
                    lin = {(((h0, 1),), ()): mpq(-1), (((h1, 1),), ()): mpq(-1)}
                    P = _poly_mul(P, lin, G)
                for (p, k), c in P.items():
                    if not c:
                        continue
                    parts = _split_by_vertex(sub, canonB, p, k)
                    out[parts] += c * w
    # assemble per-vertex classes
    result = []
    inv_v = {vmapB[v]: v for v in range(len(B.genera))}
    for parts, c in out.items():
        if not c:
            continue
        classes = []
        for v in range(len(B.genera)):
            cv = vmapB[v]
            # reorder markings: flag p of v in B corresponds to flag fmapB[...] in canonB
            key = parts[cv]
            cls = TautClass(canonB.genera[cv], range(1, len(vf[cv]) + 1), {key: ONE})
            perm = {}
            bflags = B.vertex_flags()[v]
            cflags = vf[cv]
            pos_in_c = {f: i for i, f in enumerate(cflags)}
            for p_, f in enumerate(bflags):
                perm[pos_in_c[fmapB[f]] + 1] = p_ + 1
            classes.append(cls.relabel(perm) if any(a != b for a, b in perm.items()) else cls)
        result.append((c, tuple(classes)))
    del inv_v
    result.sort(key=lambda t: tuple(sorted(_sort_key(k) for cl in t[1] for k in cl.terms)))
    return result


def _split_by_vertex(sub: _Subst, B: StableGraph, psi: Psi, kappa: Kappa) -> tuple:
    """Cut the big graph along the edges of ``B`` into canonical vertex terms."""
    G = sub.graph
    parts = []
    for v in range(len(B.genera)):
        inner_flags = sub.inner_flag[v]
        inner_verts = sub.inner_vertex[v]
        fl_inv = {gf: k for k, gf in enumerate(inner_flags)}
        vt_inv = {gv: k for k, gv in enumerate(inner_verts)}
        # reconstruct the inner graph from the substitution data
        gv_graph, fm = _inner_graph(sub, B, v)
        p = [(fm[fl_inv[f]], e) for f, e in psi if f in fl_inv]
        k = [(vt_inv[u], a, e) for u, a, e in kappa if u in vt_inv]
        parts.append(canonical_key(gv_graph, p, k))
    del G
    return tuple(parts)


def _inner_graph(sub: _Subst, B: StableGraph, v: int) -> tuple[StableGraph, tuple[int, ...]]:
    G = sub.graph
    verts = sub.inner_vertex[v]
    vid = {u: i for i, u in enumerate(verts)}
    flags = sub.inner_flag[v]
    nv = B.valence(v)
    legs = [(p + 1, vid[G.flag_vertex(flags[p])]) for p in range(nv)]
    edges = []
    for j in range(nv, len(flags), 2):
        edges.append((vid[G.flag_vertex(flags[j])], vid[G.flag_vertex(flags[j + 1])]))
    return make_graph([G.genera[u] for u in verts], legs, edges)


def multiply_psi(A: TautClass, exps: Mapping[int, int]) -> TautClass:
    """Multiply by ``prod psi_m^{e_m}`` over markings ``m``.

    A leg psi class restricts to the psi class of the same leg on every
    stratum, so this only raises exponents.

    >>> x = multiply_psi(TautClass.one(0, (1, 2, 3, 4)), {1: 1})
    >>> x == standard_class("psi", 0, 4, index=1)
    True
    """
    exps = {m: e for m, e in exps.items() if e}
    for m in exps:
        if m not in A.markings:
            raise ValueError(f"no marking {m}")
    if not exps:
        return A
    acc = _Acc(A.g, A.markings)
    for (graph, psi, kappa), c in A.terms.items():
        extra = [(graph.leg_flag(m), e) for m, e in exps.items()]
        acc.add(graph, _sum_psi(list(psi) + extra), kappa, c)
    return acc.result()


def multiply_kappa(A: TautClass, a: int, e: int = 1) -> TautClass:
    """Multiply by ``kappa_a^e``; on a stratum kappa_a restricts to the sum over vertices."""
    if a < 1:
        raise ValueError("kappa index must be positive")
    for _ in range(e):
        acc = _Acc(A.g, A.markings)
        for (graph, psi, kappa), c in A.terms.items():
            for v in range(len(graph.genera)):
                acc.add(graph, psi, list(kappa) + [(v, a, 1)], c)
        A = acc.result()
    return A


# --------------------------------------------------------------------------
# integration and pairing
# --------------------------------------------------------------------------


def _integrate_mono(graph: StableGraph, psi: Psi, kappa: Kappa) -> mpq:
    vf = graph.vertex_flags()
    pd = dict(psi)
    val = ONE
    for v, g in enumerate(graph.genera):
        ps = tuple(pd.get(f, 0) for f in vf[v])
        ks = tuple(a for u, a, e in kappa if u == v for _ in range(e))
        x = vertex_integral(g, len(vf[v]), ps, ks)
        if not x:
            return ZERO
        val *= x
    return val


def integrate(A: TautClass) -> mpq:
    """Degree of the top-degree part of ``A``.

    >>> fmt(integrate(standard_class("psi", 0, 4, index=1)))
    '1/1'
    """
    total = ZERO
    for key, c in A.terms.items():
        if term_degree(key) == A.dim:
            total += c * _integrate_mono(*key)
    return total


def pair(X: TautClass, Y: TautClass) -> mpq:
    """``integrate(multiply(X, Y))`` without building the product class."""
    total = ZERO
    for G, w, poly in _product_structures(X, Y, X.dim):
        ne = len(G.edges)
        for (p, k), c in poly.items():
            if ne + sum(e for _, e in p) + sum(a * e for _, a, e in k) == X.dim:
                total += w * c * _integrate_mono(G, p, k)
    return total


def degree_part(A: TautClass, d: int) -> TautClass:
    return A.degree_part(d)


def restrict_compact_type(A: TautClass) -> TautClass:
    return A.restrict_compact_type()


# --------------------------------------------------------------------------
# standard classes
# --------------------------------------------------------------------------


def _markings(n_or_marks) -> tuple[int, ...]:
    if isinstance(n_or_marks, int):
        return tuple(range(1, n_or_marks + 1))
    return tuple(sorted(n_or_marks))


def pullback_to(A: TautClass, marks: Sequence[int]) -> TautClass:
    """Pull back along the map forgetting every marking of ``marks`` not on ``A``."""
    for m in sorted(set(marks) - set(A.markings)):
        A = pullback_forget(A, m)
    return A


_pull_to = pullback_to


_STD: dict = {}


def standard_class(name: str, g: int, n, index: int | None = None, core: Sequence[int] = ()) -> TautClass:
    """Named classes on ``\\bar M_{g,n}`` (``n`` may be a marking list).

    ``psi``/``omega`` take the point as ``index``; ``kappa`` takes the
    subscript as ``index``.  For ``omega``, ``core`` optionally lists extra
    markings kept by the forgetful map (the class is then the pullback of
    ``psi_index`` from the space with markings ``{index} + core``).

    >>> om = standard_class("omega", 2, 2, index=1)
    >>> sorted(len(k[0].edges) for k, _ in om)
    [0, 1]
    >>> standard_class("lambda", 0, 4).is_zero()
    True
    """
    marks = _markings(n)
    key = (name, g, marks, index, tuple(core))
    got = _STD.get(key)
    if got is not None:
        return got
    if name == "psi":
        if index not in marks:
            raise ValueError(f"no marking {index}")
        one = TautClass.one(g, marks)
        graph = next(iter(one.terms))[0]
        res = glue_pushforward(graph, {graph.leg_flag(index): 1})
    elif name == "kappa":
        if not index or index < 1:
            raise ValueError("kappa index must be positive")
        one = TautClass.one(g, marks)
        graph = next(iter(one.terms))[0]
        res = glue_pushforward(graph, kappa={(0, index): 1})
    elif name == "omega":
        if index not in marks:
            raise ValueError(f"no marking {index}")
        small = tuple(sorted({index, *core}))
        if g == 0 and len(small) < 3:
            res = TautClass(g, marks)
        else:
            res = _pull_to(standard_class("psi", g, small, index=index), marks)
    elif name == "lambda":
        if g == 0:
            res = TautClass(g, marks)
        elif g == 1:
            if not marks:
                raise ValueError("no stable space of type (1, 0)")
            base = standard_class("psi", 1, (marks[0],), index=marks[0])
            res = _pull_to(base, marks)
        elif g == 2:
            loop = StableGraph((1,), (), ((0, 0),))
            split = StableGraph((1, 1), (), ((0, 1),))
            base = glue_pushforward(loop).scale(mpq(1, 20)) + glue_pushforward(split).scale(mpq(1, 10))
            res = _pull_to(base, marks)
        else:
            raise ValueError("lambda is only available in genus at most 2")
    elif name in ("delta_1", "delta_irr", "delta_total", "delta_nrt"):
        acc = _Acc(g, marks)
        layers = graphs_by_edges(g, marks, 1)
        for gr in (layers[1] if len(layers) > 1 else []):
            ok = {
                "delta_total": True,
                "delta_irr": gr.h1 == 1,
                "delta_1": gr.h1 == 0 and sorted(gr.genera) == [1, 1],
                "delta_nrt": gr.h1 == 0 and min(gr.genera) > 0,
            }[name]
            if ok:
                acc.add_key((gr, (), ()), mpq(1, len(automorphisms(gr))))
        res = acc.result()
    else:
        raise ValueError(f"unknown class {name!r}")
    _STD[key] = res
    return res
