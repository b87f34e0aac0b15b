r"""
Stable graphs in low genus.

A stable graph is stored as a plain named tuple ``(genera, legs, edges)``:

* ``genera[v]`` is the genus of vertex ``v``;
* ``legs`` is a tuple of ``(marking, vertex)`` pairs sorted by marking;
* ``edges`` is a tuple of ``(u, v)`` pairs with ``u <= v``, sorted.

Flags (half-edges and legs) carry integer ids: the leg in position ``k`` of
``legs`` is flag ``k``, and side ``s`` of edge ``i`` is flag
``len(legs) + 2*i + s``.  Side 0 of an edge sits at ``edges[i][0]``.  The
textual format writes a flag as ``vertex.slot``, where the slots of a vertex
list its legs first (by marking) and then its half-edges (by flag id).

EXAMPLES::

    >>> from hypstrata.graphs import StableGraph, canonicalize
    >>> theta = StableGraph((0, 0), (), ((0, 1), (0, 1), (0, 1)))
    >>> canonicalize(theta)[1]
    12
    >>> len(enumerate_stable_graphs(0, 5))
    26
"""
from __future__ import annotations

import itertools
from collections import defaultdict
from math import factorial
from typing import Iterable, Iterator, NamedTuple, Sequence

__all__ = [
    "ROOT",
    "StableGraph",
    "StructureError",
    "make_graph",
    "check_stable",
    "canonical_form",
    "canonicalize",
    "automorphisms",
    "graph_record",
    "parse_graph_record",
    "enumerate_stable_graphs",
    "one_edge_degenerations",
    "contract_edges",
    "classify_edges",
    "core_and_outward",
    "is_in_G_tilde",
    "RootedTrees",
    "rooted_tree_families",
    "expand_partial_labels",
]

#: Marking used for the root leg ``r`` of a rooted rational tree.
ROOT = 0


class StructureError(ValueError):
    """Raised for unstable or disconnected input graphs."""


class StableGraph(NamedTuple):
    genera: tuple[int, ...]
    legs: tuple[tuple[int, int], ...]
    edges: tuple[tuple[int, int], ...]

    @property
    def n(self) -> int:
        return len(self.legs)

    @property
    def num_vertices(self) -> int:
        return len(self.genera)

    @property
    def h1(self) -> int:
        return len(self.edges) - len(self.genera) + 1

    @property
    def genus(self) -> int:
        return sum(self.genera) + self.h1

    @property
    def num_flags(self) -> int:
        return len(self.legs) + 2 * len(self.edges)

    def markings(self) -> tuple[int, ...]:
        return tuple(m for m, _ in self.legs)

    def flag_vertex(self, f: int) -> int:
        n = len(self.legs)
        if f < n:
            return self.legs[f][1]
        i, s = divmod(f - n, 2)
        return self.edges[i][s]

    def opposite(self, f: int) -> int | None:
        """The other half of the edge containing flag ``f`` (``None`` for legs)."""
        n = len(self.legs)
        if f < n:
            return None
        return f + 1 if (f - n) % 2 == 0 else f - 1

    def leg_flag(self, marking: int) -> int:
        for k, (m, _) in enumerate(self.legs):
            if m == marking:
                return k
        raise KeyError(marking)

    def edge_flags(self, i: int) -> tuple[int, int]:
        n = len(self.legs)
        return (n + 2 * i, n + 2 * i + 1)

    def vertex_flags(self) -> tuple[tuple[int, ...], ...]:
        return _vertex_flags(self)

    def valence(self, v: int) -> int:
        return len(_vertex_flags(self)[v])

    def dim(self) -> int:
        return 3 * self.genus - 3 + len(self.legs)


_VF_CACHE: dict[StableGraph, tuple[tuple[int, ...], ...]] = {}


def _vertex_flags(g: StableGraph) -> tuple[tuple[int, ...], ...]:
    got = _VF_CACHE.get(g)
    if got is not None:
        return got
    per: list[list[int]] = [[] for _ in g.genera]
    for k, (_, v) in enumerate(g.legs):
        per[v].append(k)
    n = len(g.legs)
    for i, (a, b) in enumerate(g.edges):
        per[a].append(n + 2 * i)
        per[b].append(n + 2 * i + 1)
    out = tuple(tuple(p) for p in per)
    if len(_VF_CACHE) > 500_000:
        _VF_CACHE.clear()
    _VF_CACHE[g] = out
    return out


def make_graph(
    genera: Sequence[int],
    legs: Iterable[tuple[int, int]],
    edges: Iterable[tuple[int, int]],
) -> tuple[StableGraph, tuple[int, ...]]:
    """Normalize raw data into a :class:`StableGraph`.

    Raw flags are numbered like normalized ones but follow the order in which
    legs and edges were given.  Returns the graph and the map sending raw flag
    ids to normalized flag ids.

    >>> g, fm = make_graph([1, 0], [(2, 1), (1, 1)], [(1, 0)])
    >>> g
    StableGraph(genera=(1, 0), legs=((1, 1), (2, 1)), edges=((0, 1),))
    >>> fm
    (1, 0, 3, 2)
    """
    legs = list(legs)
    edges = list(edges)
    n = len(legs)
    leg_order = sorted(range(n), key=lambda k: legs[k][0])
    norm = [(min(a, b), max(a, b)) for a, b in edges]
    edge_order = sorted(range(len(edges)), key=lambda i: norm[i])
    fmap = [0] * (n + 2 * len(edges))
    for new, old in enumerate(leg_order):
        fmap[old] = new
    for new, old in enumerate(edge_order):
        a, b = edges[old]
        if a <= b:
            fmap[n + 2 * old] = n + 2 * new
            fmap[n + 2 * old + 1] = n + 2 * new + 1
        else:
            fmap[n + 2 * old] = n + 2 * new + 1
            fmap[n + 2 * old + 1] = n + 2 * new
    graph = StableGraph(
        tuple(genera),
        tuple(legs[k] for k in leg_order),
        tuple(norm[i] for i in edge_order),
    )
    return graph, tuple(fmap)


def check_stable(graph: StableGraph) -> None:
    """Raise :class:`StructureError` unless ``graph`` is stable and connected."""
    vf = _vertex_flags(graph)
    for v, g in enumerate(graph.genera):
        if g < 0:
            raise StructureError(f"vertex {v} has negative genus")
        if 2 * g - 2 + len(vf[v]) <= 0:
            raise StructureError(
                f"vertex {v} (genus {g}, valence {len(vf[v])}) is unstable"
            )
    if not _connected(len(graph.genera), graph.edges):
        raise StructureError("graph is disconnected (vertex 0 cannot reach all vertices)")
    marks = graph.markings()
    if len(set(marks)) != len(marks):
        raise StructureError("repeated leg marking")


def _connected(nv: int, edges: Iterable[tuple[int, int]]) -> bool:
    if nv == 0:
        return False
    adj: list[list[int]] = [[] for _ in range(nv)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == nv


# --------------------------------------------------------------------------
# canonical forms
# --------------------------------------------------------------------------


def _refined_cells(graph: StableGraph) -> list[list[int]]:
    nv = len(graph.genera)
    leg_at: list[list[int]] = [[] for _ in range(nv)]
    for m, v in graph.legs:
        leg_at[v].append(m)
    deg = [0] * nv
    loops = [0] * nv
    adj: list[list[int]] = [[] for _ in range(nv)]
    for a, b in graph.edges:
        deg[a] += 1
        deg[b] += 1
        if a == b:
            loops[a] += 1
        else:
            adj[a].append(b)
            adj[b].append(a)
    sig = [(graph.genera[v], tuple(leg_at[v]), deg[v], loops[v]) for v in range(nv)]
    ranks = _ranks(sig)
    ncolors = len(set(ranks))
    while True:
        sig2 = [(ranks[v], tuple(sorted(ranks[w] for w in adj[v]))) for v in range(nv)]
        new = _ranks(sig2)
        k = len(set(new))
        ranks = new
        if k == ncolors:
            break
        ncolors = k
    cells: dict[int, list[int]] = defaultdict(list)
    for v in range(nv):
        cells[ranks[v]].append(v)
    return [cells[c] for c in sorted(cells)]


def _ranks(sig: list) -> list[int]:
    order = {s: i for i, s in enumerate(sorted(set(sig)))}
    return [order[s] for s in sig]


_CANON: dict[StableGraph, tuple[StableGraph, tuple[int, ...], tuple[int, ...]]] = {}
_AUTS: dict[StableGraph, tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]] = {}


def _orderings(cells: list[list[int]]) -> Iterator[tuple[int, ...]]:
    for choice in itertools.product(*(itertools.permutations(c) for c in cells)):
        yield tuple(itertools.chain.from_iterable(choice))


def _edge_code(edges, pos) -> tuple[tuple[int, int], ...]:
    out = []
    for a, b in edges:
        pa, pb = pos[a], pos[b]
        out.append((pa, pb) if pa <= pb else (pb, pa))
    out.sort()
    return tuple(out)


def canonical_form(
    graph: StableGraph,
) -> tuple[StableGraph, tuple[int, ...], tuple[int, ...]]:
    """Canonical representative plus one isomorphism onto it.

    Returns ``(canon, flag_map, vertex_map)`` where ``flag_map[f]`` is the
    image of flag ``f`` and ``vertex_map[v]`` the image of vertex ``v``.
    """
    got = _CANON.get(graph)
    if got is not None:
        return got
    cells = _refined_cells(graph)
    best = None
    best_pos = None
    for order in _orderings(cells):
        pos = [0] * len(order)
        for i, v in enumerate(order):
            pos[v] = i
        code = _edge_code(graph.edges, pos)
        if best is None or code < best:
            best, best_pos = code, pos
    assert best is not None and best_pos is not None
    pos = best_pos
    genera = [0] * len(pos)
    for v, p in enumerate(pos):
        genera[p] = graph.genera[v]
    legs = tuple((m, pos[v]) for m, v in graph.legs)
    canon = StableGraph(tuple(genera), legs, best)
    fmap = _match_flags(graph, canon, pos)
    result = (canon, fmap, tuple(pos))
    if len(_CANON) > 2_000_000:
        _CANON.clear()
    _CANON[graph] = result
    return result


def _match_flags(
    graph: StableGraph, canon: StableGraph, pos: Sequence[int]
) -> tuple[int, ...]:
    n = len(graph.legs)
    fmap = list(range(n)) + [0] * (2 * len(graph.edges))
    slots: dict[tuple[int, int], list[int]] = defaultdict(list)
    for i, e in enumerate(canon.edges):
        slots[e].append(i)
    used: dict[tuple[int, int], int] = defaultdict(int)
    for i, (a, b) in enumerate(graph.edges):
        pa, pb = pos[a], pos[b]
        key = (pa, pb) if pa <= pb else (pb, pa)
        j = slots[key][used[key]]
        used[key] += 1
        if pa <= pb:
            fmap[n + 2 * i] = n + 2 * j
            fmap[n + 2 * i + 1] = n + 2 * j + 1
        else:
            fmap[n + 2 * i] = n + 2 * j + 1
            fmap[n + 2 * i + 1] = n + 2 * j
    return tuple(fmap)


def automorphisms(canon: StableGraph) -> tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]:
    """All leg-fixing automorphisms of a canonical graph as ``(flag_perm, vertex_perm)``.

    Multi-edge permutations and loop flips are included, so the length of
    the result is ``|Aut|``.
    """
    got = _AUTS.get(canon)
    if got is not None:
        return got
    cells = _refined_cells(canon)
    n = len(canon.legs)
    out = []
    groups: dict[tuple[int, int], list[int]] = defaultdict(list)
    for i, e in enumerate(canon.edges):
        groups[e].append(i)
    for order in _orderings(cells):
        pos = [0] * len(order)
        for i, v in enumerate(order):
            pos[v] = i
        if _edge_code(canon.edges, pos) != canon.edges:
            continue
        base = _match_flags(canon, canon, pos)
        # every permutation within a parallel class, every loop flip
        per_group = []
        for e, idx in groups.items():
            nflip = len(idx) if e[0] == e[1] else 0
            per_group.append(
                [
                    (idx, perm, fl)
                    for perm in itertools.permutations(idx)
                    for fl in itertools.product((0, 1), repeat=nflip)
                ]
            )
        for combo in itertools.product(*per_group):
            post = list(range(n + 2 * len(canon.edges)))
            for idx, perm, fl in combo:
                for k, (src, dst) in enumerate(zip(idx, perm)):
                    flip = fl[k] if fl else 0
                    post[n + 2 * src] = n + 2 * dst + flip
                    post[n + 2 * src + 1] = n + 2 * dst + 1 - flip
            fperm = tuple(post[base[f]] for f in range(len(base)))
            out.append((fperm, tuple(pos)))
    res = tuple(out)
    _AUTS[canon] = res
    return res


def canonicalize(graph: StableGraph, check: bool = True) -> tuple[StableGraph, int]:
    """Return ``(canonical graph, |Aut|)``.

    >>> g = StableGraph((1, 1), (), ((0, 1),))
    >>> canonicalize(g)
    (StableGraph(genera=(1, 1), legs=(), edges=((0, 1),)), 2)
    """
    if check:
        check_stable(graph)
    canon = canonical_form(graph)[0]
    return canon, len(automorphisms(canon))


def aut_count(graph: StableGraph) -> int:
    return len(automorphisms(canonical_form(graph)[0]))


# --------------------------------------------------------------------------
# text records
# --------------------------------------------------------------------------


def flag_slots(graph: StableGraph) -> dict[int, tuple[int, int]]:
    """Map flag id to ``(vertex, slot)``."""
    out = {}
    for v, fl in enumerate(_vertex_flags(graph)):
        for s, f in enumerate(fl):
            out[f] = (v, s)
    return out


def graph_record(graph: StableGraph) -> str:
    """One-line text record of a canonical graph.

    >>> graph_record(StableGraph((1, 1), (), ((0, 1),)))
    'G g=2 n=0 V=1,1 L= E=(0.0-1.0) aut=2 h1=0'
    """
    slots = flag_slots(graph)
    n = len(graph.legs)
    legs = ",".join(f"{_mark_str(m)}:{v}" for m, v in graph.legs)
    edges = ",".join(
        "({}.{}-{}.{})".format(*slots[n + 2 * i], *slots[n + 2 * i + 1])
        for i in range(len(graph.edges))
    )
    return (
        f"G g={graph.genus} n={n} V={','.join(map(str, graph.genera))} "
        f"L={legs} E={edges} aut={aut_count(graph)} h1={graph.h1}"
    )


def _mark_str(m: int) -> str:
    return "r" if m == ROOT else str(m)


def parse_graph_record(line: str) -> StableGraph:
    """Inverse of :func:`graph_record` (the ``aut`` and ``h1`` fields are checked)."""
    fields = dict(tok.split("=", 1) for tok in line.split()[1:])
    genera = tuple(int(x) for x in fields["V"].split(","))
    legs = []
    if fields["L"]:
        for tok in fields["L"].split(","):
            m, v = tok.split(":")
            legs.append((ROOT if m == "r" else int(m), int(v)))
    edges = []
    if fields["E"]:
        for tok in fields["E"].strip("()").split("),("):
            a, b = tok.split("-")
            edges.append((int(a.split(".")[0]), int(b.split(".")[0])))
    graph, _ = make_graph(genera, legs, edges)
    if int(fields["h1"]) != graph.h1 or int(fields["aut"]) != aut_count(graph):
        raise ValueError(f"inconsistent graph record: {line!r}")
    return graph


# --------------------------------------------------------------------------
# enumeration
# --------------------------------------------------------------------------


def one_edge_degenerations(graph: StableGraph, loops: bool = True) -> Iterator[StableGraph]:
    """Raw (non-canonical) graphs with one more edge that contract to ``graph``.

    With ``loops=False`` only vertex splittings are produced, which keeps
    trees trees.
    """
    vf = _vertex_flags(graph)
    n = len(graph.legs)
    for v, g in enumerate(graph.genera):
        flags = vf[v]
        # add a loop
        if loops and g >= 1:
            genera = list(graph.genera)
            genera[v] = g - 1
            if 2 * (g - 1) - 2 + len(flags) + 2 > 0:
                yield make_graph(genera, graph.legs, list(graph.edges) + [(v, v)])[0]
        # split into v and a new vertex w; flags in `moved` go to w
        w = len(graph.genera)
        k = len(flags)
        for mask in range(1 << k):
            moved = {flags[i] for i in range(k) if mask >> i & 1}
            for gw in range(g + 1):
                gv = g - gw
                if 2 * gv - 2 + (k - len(moved)) + 1 <= 0:
                    continue
                if 2 * gw - 2 + len(moved) + 1 <= 0:
                    continue
                # avoid generating both (moved, gw) and its mirror twice
                if mask & 1 and k > 0:
                    continue
                genera = list(graph.genera) + [gw]
                genera[v] = gv
                legs = [(m, w if i in moved else u) for i, (m, u) in enumerate(graph.legs)]
                edges = []
                for i, (a, b) in enumerate(graph.edges):
                    fa, fb = n + 2 * i, n + 2 * i + 1
                    edges.append((w if fa in moved else a, w if fb in moved else b))
                edges.append((v, w))
                yield make_graph(genera, legs, edges)[0]


_ENUM: dict[tuple, list[list[StableGraph]]] = {}


def graphs_by_edges(
    g: int,
    markings: Sequence[int],
    max_edges: int | None = None,
    compact: bool = False,
) -> list[list[StableGraph]]:
    """Canonical stable graphs of type ``(g, markings)`` grouped by edge count.

    ``max_edges`` stops the enumeration early; ``compact=True`` only lists
    trees.  Layers are cached and extended on demand.

    >>> [len(x) for x in graphs_by_edges(0, (1, 2, 3, 4, 5))]
    [1, 10, 15]
    """
    key = (g, tuple(sorted(markings)), compact)
    marks = key[1]
    if 3 * g - 3 + len(marks) < 0 or (g == 0 and len(marks) < 3) or (g == 1 and not marks):
        raise ValueError(f"no stable curves of type (g={g}, n={len(marks)})")
    dim = 3 * g - 3 + len(marks)
    limit = dim if max_edges is None else min(dim, max_edges)
    layers = _ENUM.get(key)
    if layers is None:
        start = canonical_form(StableGraph((g,), tuple((m, 0) for m in marks), ()))[0]
        layers = [[start]]
        _ENUM[key] = layers
    while len(layers) <= limit and layers[-1]:
        seen: dict[StableGraph, None] = {}
        for gr in layers[-1]:
            for raw in one_edge_degenerations(gr, loops=not compact):
                c = canonical_form(raw)[0]
                seen.setdefault(c, None)
        layers.append(sorted(seen))
    return [layer for layer in layers[: limit + 1] if layer]


def enumerate_stable_graphs(
    g: int,
    n: int | None = None,
    filter: str = "all",
    markings: Sequence[int] | None = None,
    max_edges: int | None = None,
) -> list[StableGraph]:
    """Canonical representatives of stable graphs of type ``(g, n)``.

    ``filter`` is one of ``all``, ``ct`` (tree-shaped), ``rt`` (a vertex of
    full genus), ``nrt`` (tree-shaped, every leaf vertex of positive genus)
    or ``tilde`` (genus 2 only, see :func:`is_in_G_tilde`).  ``max_edges``
    limits the number of edges.

    >>> [len(enumerate_stable_graphs(0, 4)), len(enumerate_stable_graphs(2, 0))]
    [4, 7]
    """
    if markings is None:
        if n is None:
            raise ValueError("give n or markings")
        markings = range(1, n + 1)
    if g < 0 or g > 2:
        raise ValueError("genus must be 0, 1 or 2")
    compact = filter in ("ct", "rt", "nrt")
    out = [gr for layer in graphs_by_edges(g, markings, max_edges, compact) for gr in layer]
    pred = _FILTERS.get(filter)
    if pred is None:
        raise ValueError(f"unknown filter {filter!r}")
    return [gr for gr in out if pred(gr)]


def is_compact_type(graph: StableGraph) -> bool:
    return graph.h1 == 0


def has_full_genus_vertex(graph: StableGraph) -> bool:
    return graph.h1 == 0 and graph.genus in graph.genera


def has_no_rational_tails(graph: StableGraph) -> bool:
    if graph.h1 != 0:
        return False
    deg = [0] * len(graph.genera)
    for a, b in graph.edges:
        deg[a] += 1
        deg[b] += 1
    if len(graph.genera) == 1:
        return graph.genera[0] > 0
    return all(graph.genera[v] > 0 for v in range(len(deg)) if deg[v] == 1)


_FILTERS = {
    "all": lambda gr: True,
    "ct": is_compact_type,
    "rt": has_full_genus_vertex,
    "nrt": has_no_rational_tails,
    "tilde": lambda gr: is_in_G_tilde(gr),
}


# --------------------------------------------------------------------------
# contractions
# --------------------------------------------------------------------------


def contract_edges(
    graph: StableGraph, keep: Iterable[int]
) -> tuple[StableGraph, tuple[int, ...], tuple[int, ...]]:
    """Contract every edge not listed in ``keep``.

    Returns ``(contracted, flag_map, vertex_map)``: ``flag_map`` sends each
    flag of the contracted graph to the flag of ``graph`` it came from, and
    ``vertex_map`` sends each vertex of ``graph`` to its image.
    """
    keep = sorted(set(keep))
    nv = len(graph.genera)
    parent = list(range(nv))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    kept = set(keep)
    extra_genus = defaultdict(int)
    for i, (a, b) in enumerate(graph.edges):
        if i in kept:
            continue
        ra, rb = find(a), find(b)
        if ra == rb:
            extra_genus[ra] += 1
        else:
            parent[ra] = rb
            extra_genus[rb] += extra_genus.pop(ra, 0)
    roots = sorted({find(v) for v in range(nv)})
    newid = {r: i for i, r in enumerate(roots)}
    genera = [0] * len(roots)
    for v in range(nv):
        genera[newid[find(v)]] += graph.genera[v]
    for r, e in extra_genus.items():
        genera[newid[find(r)]] += e
    vmap = tuple(newid[find(v)] for v in range(nv))
    legs = [(m, vmap[v]) for m, v in graph.legs]
    edges = [(vmap[graph.edges[i][0]], vmap[graph.edges[i][1]]) for i in keep]
    con, fm = make_graph(genera, legs, edges)
    n = len(graph.legs)
    back = [0] * (len(legs) + 2 * len(edges))
    for k in range(n):
        back[fm[k]] = k
    for j, i in enumerate(keep):
        back[fm[n + 2 * j]] = n + 2 * i
        back[fm[n + 2 * j + 1]] = n + 2 * i + 1
    return con, tuple(back), vmap


# --------------------------------------------------------------------------
# structural queries for genus 2
# --------------------------------------------------------------------------


def _components_without(graph: StableGraph, drop: int) -> list[int]:
    """Component label of each vertex after deleting edge ``drop``."""
    nv = len(graph.genera)
    adj: list[list[int]] = [[] for _ in range(nv)]
    for i, (a, b) in enumerate(graph.edges):
        if i != drop:
            adj[a].append(b)
            adj[b].append(a)
    comp = [-1] * nv
    c = 0
    for s in range(nv):
        if comp[s] >= 0:
            continue
        comp[s] = c
        stack = [s]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if comp[w] < 0:
                    comp[w] = c
                    stack.append(w)
        c += 1
    return comp


def is_disconnecting(graph: StableGraph, i: int) -> bool:
    a, b = graph.edges[i]
    if a == b:
        return False
    comp = _components_without(graph, i)
    return comp[a] != comp[b]


def _side_genus(graph: StableGraph, i: int, vertex: int) -> int:
    """Genus of the component containing ``vertex`` after cutting bridge ``i``."""
    comp = _components_without(graph, i)
    c = comp[vertex]
    verts = [v for v in range(len(graph.genera)) if comp[v] == c]
    inner = sum(
        1 for j, (a, b) in enumerate(graph.edges) if j != i and comp[a] == c
    )
    return sum(graph.genera[v] for v in verts) + inner - len(verts) + 1


def classify_edges(graph: StableGraph) -> tuple[list[int], list[tuple[int, int]], list[int]]:
    """Split the edges of a genus-2 graph into ``(E_1, E_2, non-disconnecting)``.

    ``E_1`` lists edge indices separating two genus-1 parts.  ``E_2`` lists
    ordered flag pairs ``(h, h')``: ``h`` sits on the rational side and points
    toward the genus-2 part, ``h'`` sits on the genus-2 side.

    >>> gr = make_graph([2, 0], [(1, 1), (2, 1)], [(0, 1)])[0]
    >>> classify_edges(gr)
    ([], [(3, 2)], [])
    """
    if graph.genus != 2:
        raise ValueError("classify_edges needs a genus-2 graph")
    e1, e2, nd = [], [], []
    n = len(graph.legs)
    for i, (a, b) in enumerate(graph.edges):
        if not is_disconnecting(graph, i):
            nd.append(i)
            continue
        ga = _side_genus(graph, i, a)
        if ga == 1:
            e1.append(i)
        elif ga == 0:
            e2.append((n + 2 * i, n + 2 * i + 1))
        else:
            e2.append((n + 2 * i + 1, n + 2 * i))
    return e1, e2, nd


def core_and_outward(graph: StableGraph) -> tuple[set[int], set[int], set[int], dict[int, int]]:
    """Core subgraph and outward-pointing flags.

    Returns ``(core_vertices, core_edges, outward_flags, w)``.  The core is
    the smallest connected subgraph carrying the whole genus (for a rational
    tree, the single root-free minimal subtree is not defined and the whole
    graph is returned).  ``w`` sends an outward flag to the flag of its
    external tree that is attached to the core.
    """
    nv = len(graph.genera)
    n = len(graph.legs)
    ne = len(graph.edges)
    # prune genus-0 leaf vertices repeatedly (legs do not count)
    alive = set(range(nv))
    edges_alive = set(range(ne))
    if graph.genus == 0:
        return alive, edges_alive, set(), {}
    changed = True
    while changed:
        changed = False
        for v in list(alive):
            if graph.genera[v] > 0:
                continue
            inc = [i for i in edges_alive if v in graph.edges[i]]
            deg = sum(2 if graph.edges[i][0] == graph.edges[i][1] else 1 for i in inc)
            if deg <= 1 and len(alive) > 1:
                alive.discard(v)
                edges_alive.difference_update(inc)
                changed = True
    core_v, core_e = alive, edges_alive
    vf = _vertex_flags(graph)
    outward: set[int] = set()
    w: dict[int, int] = {}
    # flags not in the core: legs, and halves of non-core edges
    for f in range(n + 2 * ne):
        if f >= n and (f - n) // 2 in core_e:
            continue
        v = graph.flag_vertex(f)
        # f points outward iff its vertex stays connected to the core after removing f
        if f < n:
            outward.add(f)
            continue
        i = (f - n) // 2
        comp = _components_without(graph, i)
        core_comp = {comp[c] for c in core_v}
        if comp[v] in core_comp:
            outward.add(f)
    # w: walk from each outward flag toward the core
    for f in outward:
        w[f] = _attach_flag(graph, f, core_v, core_e)
    return set(core_v), set(core_e), outward, w


def _attach_flag(graph: StableGraph, f: int, core_v: set[int], core_e: set[int]) -> int:
    n = len(graph.legs)
    v = graph.flag_vertex(f)
    if v in core_v:
        return f
    # BFS from v toward the core through non-core edges, remember last flag used
    prev: dict[int, int] = {v: -1}
    queue = [v]
    while queue:
        u = queue.pop(0)
        for i, (a, b) in enumerate(graph.edges):
            if i in core_e or u not in (a, b):
                continue
            for s, (x, y) in enumerate(((a, b), (b, a))):
                if x != u or y in prev:
                    continue
                flag_at_y = n + 2 * i + (1 if s == 0 else 0)
                prev[y] = flag_at_y
                if y in core_v:
                    return flag_at_y
                queue.append(y)
    raise StructureError("flag not connected to the core")


# -- named predicates for the conditions defining the tilde set ------------


def is_elliptic(graph: StableGraph, v: int) -> bool:
    return graph.genera[v] == 1


def is_rational_trivalent(graph: StableGraph, v: int) -> bool:
    return graph.genera[v] == 0 and graph.valence(v) == 3


def is_external(graph: StableGraph, v: int) -> bool:
    """A vertex meeting exactly one edge (a loop counts as two)."""
    k = 0
    for a, b in graph.edges:
        k += (a == v) + (b == v)
    return k == 1


def _disconnecting_path_to_elliptic(graph: StableGraph, v: int, disc: set[int]) -> bool:
    seen = {v}
    stack = [v]
    while stack:
        u = stack.pop()
        if is_elliptic(graph, u):
            return True
        for i in disc:
            a, b = graph.edges[i]
            for x, y in ((a, b), (b, a)):
                if x == u and y not in seen:
                    seen.add(y)
                    stack.append(y)
    return False


def is_in_G_tilde(graph: StableGraph) -> bool:
    """Membership of a genus-2 graph in the enlarged index set of the closed formula.

    The four conditions: no self-loops; three non-disconnecting edges meet at
    least three vertices; the trivalent-rational condition near cycles; and
    no cycle vertex adjacent to two external trivalent rational vertices.
    """
    if graph.genus != 2:
        raise ValueError("defined for genus 2 only")
    if graph.h1 == 0:
        return True
    ne = len(graph.edges)
    if any(a == b for a, b in graph.edges):
        return False
    disc = {i for i in range(ne) if is_disconnecting(graph, i)}
    nondisc = [i for i in range(ne) if i not in disc]
    if len(nondisc) == 3:
        touched = {v for i in nondisc for v in graph.edges[i]}
        if len(touched) < 3:
            return False
    neighbours: list[set[int]] = [set() for _ in graph.genera]
    bridge_neighbours: list[set[int]] = [set() for _ in graph.genera]
    for i, (a, b) in enumerate(graph.edges):
        if a != b:
            neighbours[a].add(b)
            neighbours[b].add(a)
        if i in disc:
            bridge_neighbours[a].add(b)
            bridge_neighbours[b].add(a)
    on_cycle = {v for i in nondisc for v in graph.edges[i]}
    for v in on_cycle:
        if _disconnecting_path_to_elliptic(graph, v, disc):
            continue
        if is_rational_trivalent(graph, v) and not any(
            not is_rational_trivalent(graph, u) for u in bridge_neighbours[v]
        ):
            return False
    for v in on_cycle:
        if graph.genera[v] != 0:
            continue
        ext = [
            u
            for u in neighbours[v]
            if is_external(graph, u) and is_rational_trivalent(graph, u)
        ]
        if len(ext) >= 2:
            return False
    return True


# --------------------------------------------------------------------------
# rooted rational trees
# --------------------------------------------------------------------------


class RootedTrees:
    """Rooted stable rational trees with leaves ``1..n`` and root leg ``r``."""

    def __init__(self, n: int):
        if n < 2:
            raise ValueError("need n >= 2")
        self.n = n
        self.markings = tuple(range(0, n + 1))

    def all(self) -> list[StableGraph]:
        return enumerate_stable_graphs(0, markings=self.markings)

    def not_external(self) -> list[StableGraph]:
        """Trees where leg ``n`` is not on a non-root external trivalent vertex."""
        return [t for t in self.all() if not leg_on_external_trivalent(t, self.n)]

    def sigma(self, i: int, tree: StableGraph) -> StableGraph:
        """Attach leaf ``n`` to an interior point of leaf ``i`` of a tree on ``n-1`` leaves."""
        return attach_to_leg(tree, i, self.n)

    def forget(self, tree: StableGraph) -> StableGraph:
        return forget_leg(tree, self.n)

    def balanced(self) -> list[StableGraph]:
        return sorted(_balanced_trees(self.n))

    def root_flag(self, tree: StableGraph) -> dict[int, int]:
        return root_flags(tree)


def rooted_tree_families(n: int) -> RootedTrees:
    return RootedTrees(n)


def leg_on_external_trivalent(tree: StableGraph, mark: int) -> bool:
    f = tree.leg_flag(mark)
    v = tree.flag_vertex(f)
    if any(m == ROOT for m, u in tree.legs if u == v):
        return False
    return is_external(tree, v) and is_rational_trivalent(tree, v)


def attach_to_leg(graph: StableGraph, i: int, new: int) -> StableGraph:
    """Bubble a new trivalent genus-0 vertex carrying legs ``i`` and ``new`` onto leg ``i``."""
    w = len(graph.genera)
    legs = []
    for m, v in graph.legs:
        if m == i:
            legs.append((m, w))
            anchor = v
        else:
            legs.append((m, v))
    legs.append((new, w))
    edges = list(graph.edges) + [(anchor, w)]
    return canonical_form(make_graph(list(graph.genera) + [0], legs, edges)[0])[0]


def forget_leg(graph: StableGraph, mark: int) -> StableGraph:
    """Remove a leg and stabilize (contract a resulting unstable genus-0 vertex)."""
    legs = [(m, v) for m, v in graph.legs if m != mark]
    v = dict(graph.legs)[mark]
    g0, fm = make_graph(graph.genera, legs, graph.edges)
    if g0.valence(v) >= 3 or g0.genera[v] > 0 and g0.valence(v) >= 1:
        return canonical_form(g0)[0]
    if g0.genera[v] == 0 and g0.valence(v) == 2:
        return canonical_form(_smooth_vertex(g0, v))[0]
    raise StructureError("forgetting this leg leaves an unstable curve")


def _smooth_vertex(graph: StableGraph, v: int) -> StableGraph:
    """Remove a bivalent genus-0 vertex, fusing its two flags."""
    vf = _vertex_flags(graph)[v]
    n = len(graph.legs)
    f1, f2 = vf
    legs = list(graph.legs)
    edges = [list(e) for e in graph.edges]
    drop_edges = []
    if f1 < n and f2 < n:
        raise StructureError("cannot smooth a vertex carrying only legs")
    if f1 < n or f2 < n:
        leg, fe = (f1, f2) if f1 < n else (f2, f1)
        i = (fe - n) // 2
        other = graph.edges[i][1 - (fe - n) % 2]
        legs[leg] = (legs[leg][0], other)
        drop_edges.append(i)
    else:
        i1, i2 = (f1 - n) // 2, (f2 - n) // 2
        o1 = graph.edges[i1][1 - (f1 - n) % 2]
        o2 = graph.edges[i2][1 - (f2 - n) % 2]
        drop_edges.append(i2)
        edges[i1] = [o1, o2]
    new_edges = [tuple(e) for j, e in enumerate(edges) if j not in drop_edges]
    keep_v = [u for u in range(len(graph.genera)) if u != v]
    rel = {u: k for k, u in enumerate(keep_v)}
    return make_graph(
        [graph.genera[u] for u in keep_v],
        [(m, rel[u]) for m, u in legs],
        [(rel[a], rel[b]) for a, b in new_edges],
    )[0]


def add_leg(graph: StableGraph, v: int, mark: int) -> StableGraph:
    legs = list(graph.legs) + [(mark, v)]
    return canonical_form(make_graph(graph.genera, legs, graph.edges)[0])[0]


def pull_out(graph: StableGraph, i: int, j: int) -> StableGraph | None:
    """Move legs ``i`` and ``j`` (on a common vertex) to a new trivalent external vertex."""
    at = dict(graph.legs)
    v = at[i]
    if at[j] != v:
        return None
    w = len(graph.genera)
    legs = [(m, w if m in (i, j) else u) for m, u in graph.legs]
    edges = list(graph.edges) + [(v, w)]
    raw = make_graph(list(graph.genera) + [0], legs, edges)[0]
    try:
        check_stable(raw)
    except StructureError:
        return None
    return canonical_form(raw)[0]


def _balanced_trees(n: int) -> set[StableGraph]:
    base = canonical_form(make_graph([0], [(ROOT, 0), (1, 0), (2, 0)], [])[0])[0]
    level = {base}
    for k in range(3, n + 1):
        seeds = set(level)
        if k >= 4:
            for t in level:
                for i in range(1, k - 2 + 1 - 0):
                    if i > k - 2:
                        break
                    p = pull_out(t, i, k - 1)
                    if p is not None:
                        seeds.add(p)
        nxt = set()
        for t in seeds:
            for v in range(len(t.genera)):
                nxt.add(add_leg(t, v, k))
        level = nxt
    return level


def root_flags(tree: StableGraph) -> dict[int, int]:
    """For each vertex, the flag pointing toward the root (the root leg at the root vertex)."""
    n = len(tree.legs)
    root_v = dict(tree.legs)[ROOT]
    out = {root_v: tree.leg_flag(ROOT)}
    queue = [root_v]
    seen = {root_v}
    while queue:
        u = queue.pop(0)
        for i, (a, b) in enumerate(tree.edges):
            if a == u and b not in seen:
                out[b] = n + 2 * i + 1
                seen.add(b)
                queue.append(b)
            elif b == u and a not in seen:
                out[a] = n + 2 * i
                seen.add(a)
                queue.append(a)
    return out


# --------------------------------------------------------------------------
# partially labelled templates
# --------------------------------------------------------------------------


def expand_partial_labels(
    genera: Sequence[int],
    fixed_legs: Sequence[tuple[int, int]],
    free_slots: Sequence[int],
    edges: Sequence[tuple[int, int]],
    markings: Iterable[int],
    spill_vertex: int | None = None,
) -> list[StableGraph]:
    """Expand a template with unlabeled legs into distinct labelled graphs.

    ``free_slots`` lists, for every unlabeled leg, the vertex carrying it.
    Every marking must be used.  When ``spill_vertex`` is given, markings
    beyond the free slots are placed on that vertex; when there are fewer
    markings than free slots the template does not apply and ``[]`` is
    returned.

    >>> sq = expand_partial_labels([1, 0, 0, 0], [(4, 2)], [1, 2, 3],
    ...                            [(0, 1), (1, 2), (2, 3), (3, 0)], [1, 2, 3])
    >>> len(sq)
    3
    """
    marks = sorted(set(markings) - {m for m, _ in fixed_legs})
    free = list(free_slots)
    if len(marks) < len(free):
        return []
    if len(marks) > len(free) and spill_vertex is None:
        raise ValueError("more markings than free legs in the template")
    out: dict[StableGraph, None] = {}
    for chosen in itertools.permutations(marks, len(free)):
        rest = [m for m in marks if m not in chosen]
        legs = list(fixed_legs) + list(zip(chosen, free))
        legs += [(m, spill_vertex) for m in rest]
        raw = make_graph(genera, legs, edges)[0]
        check_stable(raw)
        out.setdefault(canonical_form(raw)[0], None)
    return sorted(out)


def rooted_tree_shapes(leaves: Sequence[int]) -> Iterator[tuple]:
    """Rooted stable rational trees as nested tuples, without canonical forms.

    A tree is the tuple of children of the root vertex; a child is a leaf
    label or another such tuple.  Every vertex has at least two children, so
    with the root leg every vertex is at least trivalent.

    >>> sorted(rooted_tree_shapes([1, 2, 3]), key=str)
    [((1, 2), 3), (1, (2, 3)), (1, 2, 3), (2, (1, 3))]
    """
    leaves = tuple(sorted(leaves))
    if len(leaves) < 2:
        return
    first, rest = leaves[0], leaves[1:]
    # set partitions into at least two blocks; each block is a leaf or a subtree
    for part in _partitions_with_first(first, rest):
        if len(part) < 2:
            continue
        yield from _fill_blocks(part)


def _partitions_with_first(first, rest):
    from .integrals import set_partitions

    for part in set_partitions((first,) + tuple(rest)):
        yield [tuple(sorted(b)) for b in part]


def _fill_blocks(blocks):
    if not blocks:
        yield ()
        return
    head, tail = blocks[0], blocks[1:]
    options = [head[0]] if len(head) == 1 else list(rooted_tree_shapes(head))
    for rest in _fill_blocks(tail):
        for o in options:
            yield (o,) + rest


def shape_edges(shape) -> int:
    """Number of edges (non-root internal vertices) of a nested tree."""
    return sum(1 + shape_edges(c) for c in shape if isinstance(c, tuple))


def shape_has_cherry(shape, leaf: int, root: bool = True) -> bool:
    """True when ``leaf`` sits on a non-root vertex whose children are two leaves."""
    for c in shape:
        if isinstance(c, tuple):
            if len(c) == 2 and leaf in c and all(not isinstance(x, tuple) for x in c):
                return True
            if shape_has_cherry(c, leaf, False):
                return True
    return False


def shape_to_graph(shape, root: int = ROOT) -> StableGraph:
    """Canonical :class:`StableGraph` of a nested tree; the root leg is ``root``."""
    genera = [0]
    legs = [(root, 0)]
    edges = []

    def walk(node, v):
        for c in node:
            if isinstance(c, tuple):
                w = len(genera)
                genera.append(0)
                edges.append((v, w))
                walk(c, w)
            else:
                legs.append((c, v))

    walk(shape, 0)
    return canonical_form(make_graph(genera, legs, edges)[0])[0]


def tree_euler_sum(trees: Iterable[StableGraph]) -> int:
    return sum((-1) ** len(t.edges) for t in trees)


def factorial_sign(n: int) -> int:
    return (-1) ** n * factorial(n - 1)
