r"""
Command-line front end: graph listings, class files and check suites.

Three subcommands::

    hypstrata graphs -g 2 -n 2 --filter tilde
    hypstrata class hyp-ct -n 3 --out classes/
    hypstrata verify --suite hyp --max-n 3 --out reports/

Every number is written as an exact ``p/q``.  The psi intersection table is
read from ``--table`` (default: the ``STRATA_TABLE`` environment variable),
extended during the run and written back at the end; ``--rebuild-table``
starts from an empty table and audits the result.

EXAMPLES::

    >>> main(["graphs", "-g", "0", "-n", "5", "--count"])
    26
    0
    >>> main(["graphs", "-g", "2", "-n", "0", "--count"])
    7
    0
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from gmpy2 import mpq

from . import hyperelliptic as hyp
from .algebra import TautClass
from .graphs import enumerate_stable_graphs, graph_record
from .integrals import IntersectionTable, set_default_table
from .verify import SUITES, run_suites

__all__ = ["RunConfig", "build_class", "main", "CLASS_NAMES"]

CLASS_NAMES = (
    "hyp-ct",
    "hyp-rt",
    "hyp-tilde",
    "hyp-rec",
    "phigamma",
    "nct-rec",
    "nct-closed",
    "pixton",
    "prod",
)


@dataclass
class RunConfig:
    """Everything a run depends on; the defaults reproduce the acceptance runs."""

    table: str | None = None
    out: str | None = None
    jobs: int = 1
    suites: tuple[str, ...] = SUITES
    max_n: int = 4
    experimental_tilde: bool = False
    rebuild_table: bool = False


def _parse_rational(text: str) -> mpq:
    try:
        return mpq(text)
    except ValueError as exc:  # gmpy2 raises ValueError on junk
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc


def build_class(name: str, n: int, g: int = 2, a=3, c=-1, b=1, experimental: bool = False) -> TautClass:
    """Construct the class called ``name`` (see :data:`CLASS_NAMES`).

    >>> len(build_class("phigamma", 2))
    1
    >>> build_class("hyp-tilde", 0)
    Traceback (most recent call last):
    ...
    ValueError: hyp_tilde_formula needs 1 <= n <= 4, got 0
    """
    if name == "hyp-ct":
        return hyp.hyp_ct_formula(n)
    if name == "hyp-rt":
        return hyp.hyp_rt_formula(n)
    if name == "hyp-tilde":
        return hyp.hyp_tilde_formula(n, experimental=experimental)
    if name == "hyp-rec":
        return hyp.hyp_recursive(n)
    if name == "phigamma":
        return hyp.phigamma(n)
    if name == "nct-rec":
        return hyp.nct_recursive(n)
    if name == "nct-closed":
        return hyp.nct_closed(n)
    if name == "pixton":
        return hyp.pixton_exponential(g, n, a, c, b, max_degree=3 * g - 3 + n)
    if name == "prod":
        return hyp.prod_formula(g, n, a, c, b)
    raise ValueError(f"unknown class {name!r}")


def _open_table(cfg: RunConfig) -> IntersectionTable:
    path = cfg.table or os.environ.get("STRATA_TABLE") or None
    if cfg.rebuild_table:
        table = IntersectionTable()
        table.path = Path(path) if path else None
    else:
        table = IntersectionTable(path)
    set_default_table(table)
    return table


def _close_table(table: IntersectionTable, cfg: RunConfig, err) -> int:
    if cfg.rebuild_table:
        failures = table.audit()
        for f in failures:
            print(f"table audit: {f}", file=err)
        if failures:
            return 1
    if table.path is not None and (table.dirty or cfg.rebuild_table or not table.path.exists()):
        table.save()
    return 0


def _cmd_graphs(args, out) -> int:
    graphs = enumerate_stable_graphs(args.g, args.n, args.filter)
    if args.count:
        print(len(graphs), file=out)
    else:
        for gr in graphs:
            print(graph_record(gr), file=out)
    return 0


def _cmd_class(args, cfg: RunConfig, out) -> int:
    cls = build_class(
        args.name,
        args.n,
        g=args.g,
        a=args.a,
        c=args.c,
        b=args.b,
        experimental=cfg.experimental_tilde,
    )
    text = cls.dumps()
    if cfg.out:
        target = Path(cfg.out)
        target.mkdir(parents=True, exist_ok=True)
        fname = target / f"{args.name}-n{args.n}.cls"
        fname.write_text(text)
        print(fname, file=out)
    else:
        out.write(text)
    return 0


def _cmd_verify(cfg: RunConfig, out) -> int:
    rep = run_suites(cfg.suites, max_n=cfg.max_n, echo=lambda s: print(s, file=out, flush=True), jobs=cfg.jobs)
    if cfg.out:
        rep.write(cfg.out)
    return 0 if rep.passed else 1


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hypstrata", description="Tautological classes of hyperelliptic loci in genus 2.")
    p.add_argument("--table", default=None, help="psi intersection table (default: $STRATA_TABLE)")
    p.add_argument("--out", default=None, help="output directory for class files and reports")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for pairing sweeps")
    p.add_argument("--rebuild-table", action="store_true", help="recompute the table from scratch and audit it")
    p.add_argument(
        "--experimental-tilde-n56",
        action="store_true",
        help="allow the enlarged graph sum for n = 5, 6 (no correctness claim)",
    )
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("graphs", help="list stable graphs")
    g.add_argument("-g", type=int, required=True)
    g.add_argument("-n", type=int, required=True)
    g.add_argument("--filter", choices=("all", "ct", "rt", "nrt", "tilde"), default="all")
    g.add_argument("--count", action="store_true", help="print only the number of graphs")

    c = sub.add_parser("class", help="write a serialized class")
    c.add_argument("name", choices=CLASS_NAMES)
    c.add_argument("-n", type=int, required=True)
    c.add_argument("-g", type=int, default=2, help="genus (pixton and prod only)")
    c.add_argument("--a", type=_parse_rational, default=mpq(3))
    c.add_argument("--c", type=_parse_rational, default=mpq(-1))
    c.add_argument("--b", type=_parse_rational, default=mpq(1))

    v = sub.add_parser("verify", help="run check suites")
    v.add_argument("--suite", choices=SUITES + ("all",), default="all")
    v.add_argument("--max-n", type=int, default=4)
    return p


def main(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = _parser()
    args = parser.parse_args(argv)
    cfg = RunConfig(
        table=args.table,
        out=args.out,
        jobs=args.jobs,
        experimental_tilde=args.experimental_tilde_n56,
        rebuild_table=args.rebuild_table,
    )
    if args.command == "verify":
        cfg.suites = SUITES if args.suite == "all" else (args.suite,)
        cfg.max_n = args.max_n
    table = _open_table(cfg)
    try:
        if args.command == "graphs":
            code = _cmd_graphs(args, out)
        elif args.command == "class":
            code = _cmd_class(args, cfg, out)
        else:
            code = _cmd_verify(cfg, out)
    except ValueError as exc:
        print(f"error: {exc}", file=err)
        return 2
    return code or _close_table(table, cfg, err)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
