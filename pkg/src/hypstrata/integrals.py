r"""
Intersection numbers of psi and kappa classes.

The psi correlators ``<tau_{a_1} ... tau_{a_n}>_g`` are produced by the
Dijkgraaf-Verlinde-Verlinde recursion and memoized in an
:class:`IntersectionTable`, which can be saved to and reloaded from a text
file with one line per entry::

    I g=<g> a=<a1,a2,...> v=<p/q>

Kappa classes follow the convention ``kappa_a = pi_*(psi_{n+1}^{a+1})``.

EXAMPLES::

    >>> psi_integral(1, (1,))
    mpq(1,24)
    >>> psi_integral(2, (4,))
    mpq(1,1152)
    >>> vertex_integral(1, 1, (0,), (1,))
    mpq(1,24)
"""
from __future__ import annotations

import os
import threading
from itertools import combinations
from math import factorial
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from gmpy2 import mpq

__all__ = [
    "IntersectionTable",
    "default_table",
    "set_default_table",
    "psi_integral",
    "vertex_integral",
    "set_partitions",
    "genus0_closed_form",
    "fmt",
]

ZERO = mpq(0)
ONE = mpq(1)


def fmt(q) -> str:
    """Exact ``p/q`` text (denominator always written)."""
    q = mpq(q)
    return f"{q.numerator}/{q.denominator}"


def _dfact(k: int) -> int:
    """Double factorial with ``(-1)!! = 1``."""
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


class IntersectionTable:
    """Memo of psi correlators keyed by ``(g, sorted exponents)``."""

    def __init__(self, path: str | os.PathLike | None = None):
        self.path = Path(path) if path else None
        self._memo: dict[tuple[int, tuple[int, ...]], mpq] = {}
        self.dirty = False
        self._lock = threading.Lock()
        if self.path and self.path.exists():
            self.load(self.path)

    def __len__(self) -> int:
        return len(self._memo)

    def __contains__(self, key) -> bool:
        return key in self._memo

    def items(self) -> Iterator[tuple[tuple[int, tuple[int, ...]], mpq]]:
        return iter(sorted(self._memo.items()))

    # -- persistence --------------------------------------------------

    def load(self, path: str | os.PathLike) -> None:
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                tag, gs, as_, vs = line.split()
                if tag != "I":
                    raise ValueError(f"bad table line {line!r}")
                g = int(gs[2:])
                a = tuple(int(x) for x in as_[2:].split(",") if x != "")
                self._memo[(g, a)] = mpq(vs[2:])

    def dumps(self) -> str:
        return "".join(
            f"I g={g} a={','.join(map(str, a))} v={fmt(v)}\n" for (g, a), v in self.items()
        )

    def save(self, path: str | os.PathLike | None = None) -> None:
        target = Path(path) if path else self.path
        if target is None:
            raise ValueError("no table path")
        tmp = target.with_suffix(target.suffix + ".tmp")
        tmp.write_text(self.dumps())
        os.replace(tmp, target)
        self.dirty = False

    # -- evaluation ---------------------------------------------------

    def correlator(self, g: int, exps: Iterable[int]) -> mpq:
        a = tuple(sorted(exps, reverse=True))
        n = len(a)
        if g < 0 or any(x < 0 for x in a) or sum(a) != 3 * g - 3 + n:
            return ZERO
        if 2 * g - 2 + n <= 0:
            return ZERO
        key = (g, a)
        got = self._memo.get(key)
        if got is not None:
            return got
        val = self._dvv(g, a)
        with self._lock:
            self._memo[key] = val
            self.dirty = True
        return val

    def _dvv(self, g: int, a: tuple[int, ...]) -> mpq:
        if g == 0 and a == (0, 0, 0):
            return ONE
        if g == 1 and a == (1,):
            return mpq(1, 24)
        k = a[0] - 1
        if k < 0:
            # all exponents zero but not (0;0,0,0): dimension forbids it
            return ZERO
        rest = list(a[1:])
        total = ZERO
        for j, d in enumerate(rest):
            new = rest.copy()
            new[j] = d + k
            total += mpq(_dfact(2 * k + 2 * d + 1), _dfact(2 * d - 1)) * self.correlator(g, new)
        for r in range(0, k):
            s = k - 1 - r
            w = _dfact(2 * r + 1) * _dfact(2 * s + 1)
            total += mpq(w, 2) * self.correlator(g - 1, [r, s] + rest)
            m = len(rest)
            for g1 in range(0, g + 1):
                g2 = g - g1
                for size in range(m + 1):
                    for idx in combinations(range(m), size):
                        left = [rest[i] for i in idx]
                        right = [rest[i] for i in range(m) if i not in idx]
                        x = self.correlator(g1, [r] + left)
                        if x == 0:
                            continue
                        y = self.correlator(g2, [s] + right)
                        if y:
                            total += mpq(w, 2) * x * y
        return total / _dfact(2 * k + 3)

    # -- audits -------------------------------------------------------

    def audit(self) -> list[str]:
        """Re-derive every memoized entry through string or dilaton reductions.

        Returns a list of failure descriptions (empty when consistent).
        Entries that contain neither ``tau_0`` nor ``tau_1`` are checked by
        adding such a point and comparing both sides.
        """
        failures = []
        for (g, a), v in list(self._memo.items()):
            n = len(a)
            # string: <tau_0 prod tau_a> = sum_i <... tau_{a_i - 1} ...>
            lhs = self.correlator(g, a + (0,))
            rhs = ZERO
            for i in range(n):
                if a[i] > 0:
                    b = list(a)
                    b[i] -= 1
                    rhs += self.correlator(g, b)
            if lhs != rhs:
                failures.append(f"string g={g} a={a}: {lhs} != {rhs}")
            lhs = self.correlator(g, a + (1,))
            rhs = (2 * g - 2 + n) * v
            if lhs != rhs:
                failures.append(f"dilaton g={g} a={a}: {lhs} != {rhs}")
        return failures


_DEFAULT: IntersectionTable | None = None


def default_table() -> IntersectionTable:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = IntersectionTable(os.environ.get("STRATA_TABLE") or None)
    return _DEFAULT


def set_default_table(table: IntersectionTable) -> None:
    global _DEFAULT
    _DEFAULT = table
    _vertex_cache.clear()


def psi_integral(g: int, exponents: Sequence[int]) -> mpq:
    """``<tau_{a_1} ... tau_{a_n}>_g``; zero off dimension."""
    return default_table().correlator(g, exponents)


def genus0_closed_form(exponents: Sequence[int]) -> mpq:
    """Multinomial formula ``(n-3)! / prod a_i!`` for genus-0 correlators."""
    n = len(exponents)
    if n < 3 or sum(exponents) != n - 3:
        return ZERO
    den = 1
    for a in exponents:
        den *= factorial(a)
    return mpq(factorial(n - 3), den)


def set_partitions(items: Sequence) -> Iterator[list[list]]:
    """All set partitions of ``items`` (as lists of blocks)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]


_vertex_cache: dict = {}


def vertex_integral(
    g: int, n: int, psi: Sequence[int], kappa: Sequence[int] = ()
) -> mpq:
    """Integral over the moduli of genus ``g`` curves with ``n`` points.

    ``psi`` lists the exponent at each of the ``n`` points and ``kappa`` the
    indices of the kappa factors (with repetition).  Each kappa monomial is
    traded for psi powers at extra points: the product of ``kappa_{b_j}``
    equals the sum over set partitions ``P`` of the factors of
    ``(-1)^{m-|P|} pi_*(prod_B psi_B^{b(B)+1})``.

    >>> vertex_integral(0, 5, (0, 0, 0, 0, 0), (1, 1))
    mpq(5,1)
    """
    if len(psi) != n:
        raise ValueError("one psi exponent per marked point")
    key = (g, tuple(sorted(psi)), tuple(sorted(kappa)))
    got = _vertex_cache.get(key)
    if got is not None:
        return got
    if sum(psi) + sum(kappa) != 3 * g - 3 + n:
        val = ZERO
    elif not kappa:
        val = psi_integral(g, psi)
    else:
        m = len(kappa)
        val = ZERO
        for part in set_partitions(list(range(m))):
            extra = [sum(kappa[j] for j in block) + 1 for block in part]
            sign = -1 if (m - len(part)) % 2 else 1
            val += sign * psi_integral(g, list(psi) + extra)
    _vertex_cache[key] = val
    return val
