"""Command line: sieves, constants, class groups, exceptional integers, prime tables, table checks."""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from . import golden
from .arith import build_tables, is_fundamental, prime_divisors
from .constants import (
    b_coefficients,
    constant_set,
    exceptional_estimate,
    lsd_coefficients,
    two_term_estimate,
    wirsing_constants,
)
from .errors import QFBiasError, ResourceError
from .forms import QuadForm, class_group, exceptional_tuples, genus_structure, reduce
from .primeclass import load_or_build, prime_equidistribution_report
from .repsieve import apply_masks, classify_values, count_residues, exceptional_bitmap, genus_bitmap, rep_bitmap

log = logging.getLogger("qfbias")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    D: int | None = None
    form: QuadForm | None = None
    x: int = 0
    q: int = 1
    squarefree: bool = False
    coprime_2d: bool = False
    prime_bound: int = 10**7
    k_max: int = 15
    threads: int = 1
    out: str | None = None
    fmt: str = "csv"


def parse_int(text: str) -> int:
    """Integers, also written as 1e8 or 10**8."""
    t = text.strip().replace("_", "")
    if "**" in t:
        base, exp = t.split("**")
        return int(base) ** int(exp)
    if "e" in t.lower():
        mant, exp = t.lower().split("e")
        value = int(mant) * 10 ** int(exp)
        return value
    return int(t)


def _resolve(args) -> RunConfig:
    cfg = RunConfig(args.command, threads=getattr(args, "threads", 1), out=getattr(args, "out", None))
    cfg.fmt = getattr(args, "format", "csv")
    if getattr(args, "form", None):
        try:
            cfg.form = QuadForm.parse(args.form)
        except ValueError as e:
            raise UsageError(f"bad --form {args.form!r}: {e}") from None
        if not cfg.form.is_positive_definite():
            raise UsageError(f"form {args.form} is not positive definite")
    D = getattr(args, "disc", None)
    if D is None and cfg.form is not None:
        D = cfg.form.discriminant
    if D is not None:
        if D >= 0 or not is_fundamental(D):
            raise UsageError(f"--disc {D} is not a negative fundamental discriminant")
        if cfg.form is not None and cfg.form.discriminant != D:
            raise UsageError(f"form {args.form} has discriminant {cfg.form.discriminant}, not {D}")
    cfg.D = D
    cfg.x = getattr(args, "limit", 0) or 0
    cfg.q = getattr(args, "mod", 1) or 1
    if cfg.q < 1:
        raise UsageError("--mod must be >= 1")
    if getattr(args, "limit", None) is not None and cfg.x < 1:
        raise UsageError("--limit must be >= 1")
    cfg.squarefree = getattr(args, "squarefree", False)
    cfg.coprime_2d = getattr(args, "coprime_2d", False)
    cfg.prime_bound = getattr(args, "prime_bound", None) or cfg.prime_bound
    cfg.k_max = getattr(args, "k_max", 15)
    if cfg.threads < 1:
        raise UsageError("--threads must be >= 1")
    return cfg


def _need_coprime(cfg: RunConfig, what: str) -> None:
    if math.gcd(cfg.q, 2 * cfg.D) != 1:
        raise UsageError(f"{what} needs (q, 2D) = 1; gcd({cfg.q}, {2 * cfg.D}) = {math.gcd(cfg.q, 2 * cfg.D)}")


def _sig6(v: float) -> int:
    """Round to six significant digits, the precision of the published estimate columns."""
    return int(float(f"{v:.6g}"))


def render(header: list[str], rows: list[list], fmt: str) -> str:
    if fmt == "md":
        lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
        lines += ["| " + " | ".join("" if c is None else str(c) for c in r) + " |" for r in rows]
        return "\n".join(lines) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows([["" if c is None else c for c in r] for r in rows])
    return buf.getvalue()


def parse_report(text: str) -> list[dict[str, str]]:
    """Inverse of the CSV form of ``render``."""
    return list(csv.DictReader(io.StringIO(text)))


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


# --- commands ----------------------------------------------------------------


def cmd_sieve(args, cfg: RunConfig) -> int:
    if cfg.form is None or not cfg.x:
        raise UsageError("sieve needs --form and --limit")
    bm = rep_bitmap(cfg.form, cfg.x, cfg.threads, quadrant=args.quadrant)
    if cfg.squarefree or cfg.coprime_2d:
        tables = build_tables(max(cfg.x, 2)) if cfg.squarefree else None
        bm = apply_masks(bm, cfg.squarefree, 2 * cfg.D if cfg.coprime_2d else None, tables)
    counts = count_residues(bm, cfg.q).counts.tolist()
    if args.count_zero:
        counts[0] += 1
    header = ["a", "count"]
    rows = [[a, n] for a, n in enumerate(counts)]
    if args.estimates:
        _need_coprime(cfg, "--estimates")
        if cfg.squarefree or cfg.coprime_2d:
            raise UsageError("--estimates describe the unmasked count; drop --squarefree/--coprime-2d")
        lsd = lsd_coefficients(cfg.D, cfg.prime_bound)
        header += ["main_term", "two_term"]
        prime_q = cfg.q > 1 and prime_divisors(cfg.q) == [cfg.q]
        for row in rows:
            a = row[0]
            if prime_q:
                e = two_term_estimate(cfg.D, cfg.q, a, cfg.x, lsd.a0, lsd.a1)
                row += [_sig6(e.main), _sig6(e.two_term)]
            elif math.gcd(a, cfg.q) == 1:
                b0, b1 = b_coefficients(cfg.D, cfg.q, lsd.a0, lsd.a1)
                lx = math.log(cfg.x)
                main = b0 * cfg.x / math.sqrt(lx)
                row += [_sig6(main), _sig6(main + b1 * cfg.x / lx**1.5)]
            else:
                row += [None, None]
        cg = class_group(cfg.D)
        if cg.h != genus_structure(cg).num_genera:
            log.warning("D=%d has several classes per genus: estimates are genus-level", cfg.D)
    _emit(cfg, render(header, rows, cfg.fmt))
    return EXIT_OK


def cmd_constants(args, cfg: RunConfig) -> int:
    if cfg.D is None:
        raise UsageError("constants needs --disc")
    q = args.mod
    if q is not None:
        _need_coprime(cfg, "--mod")
    pct = None
    if args.wirsing:
        cg = class_group(cfg.D)
        pct = load_or_build(cg, args.wirsing_bound, args.cache, cfg.threads)
    cs = constant_set(cfg.D, q, cfg.prime_bound, pct, args.wirsing_bound if args.wirsing else None, cfg.k_max)
    if cfg.fmt == "csv":
        _emit(cfg, cs.to_csv())
    else:
        _emit(cfg, render(["name", "value"], [list(r) for r in cs.rows()], "md"))
    return EXIT_OK


def cmd_classgroup(args, cfg: RunConfig) -> int:
    if cfg.D is None:
        raise UsageError("classgroup needs --disc")
    cg = class_group(cfg.D)
    gs = genus_structure(cg)
    header = ["index", "form", "order", "inverse", "genus", "characters"]
    rows = [
        [i, ",".join(map(str, f.astuple())), cg.orders[i], cg.inverses[i], gs.genus_of_class[i],
         " ".join(f"{v:+d}" for v in gs.character_table[i])]
        for i, f in enumerate(cg.reps)
    ]
    text = render(header, rows, cfg.fmt)
    summary = f"D={cfg.D} h={cg.h} C(D)={cg.shape()} genera={gs.num_genera} mu={gs.mu}"
    summary += f" factorizations={' '.join(f'{u}*{v}' for u, v in gs.factorizations)}"
    if cfg.fmt == "md":
        text = summary + "\n\n" + text
    else:
        log.info(summary)
    _emit(cfg, text)
    return EXIT_OK


def cmd_exceptional(args, cfg: RunConfig) -> int:
    if cfg.form is None or not cfg.x:
        raise UsageError("exceptional needs --form and --limit")
    _need_coprime(cfg, "exceptional")
    cg = class_group(cfg.D)
    f = reduce(cfg.form)
    fam = exceptional_tuples(cg, f)
    gs = genus_structure(cg)
    members = [cg.reps[i] for i in gs.genus(gs.genus_of_class[cg.index(f)])]
    tables = build_tables(cfg.x)
    exc = exceptional_bitmap(genus_bitmap(members, cfg.x, cfg.threads), rep_bitmap(f, cfg.x, cfg.threads))
    exc = apply_masks(exc, True, 2 * cfg.D, tables)
    counts = count_residues(exc, cfg.q).counts
    bound = max(args.wirsing_bound, cfg.x)
    pct = load_or_build(cg, bound, args.cache, cfg.threads, tables if tables.limit >= bound else None)
    A4 = wirsing_constants(cg, fam.H, pct, args.wirsing_bound, cfg.k_max).A4
    values = exc.values()
    header = ["a", "count", "estimate", "conformity_rate"]
    rows = []
    for a in range(cfg.q):
        est = exceptional_estimate(cg, f, cfg.q, a, cfg.x, A4)
        sub = values[values % cfg.q == a]
        rep = _conformity(sub, fam, pct, tables)
        rows.append([a, int(counts[a]), f"{est.value:.0f}", f"{rep:.6f}"])
    if fam.r > 0:
        log.warning("r=%d: A2 assembled as tuple count x A4/h^r (interpretation)", fam.r)
    _emit(cfg, render(header, rows, cfg.fmt))
    return EXIT_OK


def _conformity(values, fam, pct, tables) -> float:
    if values.size == 0:
        return 1.0
    return classify_values(values, fam, pct, tables).rate


def cmd_classify(args, cfg: RunConfig) -> int:
    if cfg.D is None or not cfg.x:
        raise UsageError("classify needs --disc and --limit")
    cg = class_group(cfg.D)
    pct = load_or_build(cg, cfg.x, args.cache, cfg.threads)
    header = ["index", "form", "order", "primes"]
    rows = [
        [i, ",".join(map(str, f.astuple())), cg.orders[i], int(pct.primes_of_class(i, cfg.x).size)]
        for i, f in enumerate(cg.reps)
    ]
    _emit(cfg, render(header, rows, cfg.fmt))
    return EXIT_OK


def cmd_primes(args, cfg: RunConfig) -> int:
    if cfg.D is None or not cfg.x:
        raise UsageError("primes needs --disc and --limit")
    _need_coprime(cfg, "primes")
    cg = class_group(cfg.D)
    i = args.klass
    if cfg.form is not None:
        i = cg.index(reduce(cfg.form))
    if i is None or not 0 <= i < cg.h:
        raise UsageError(f"give --class in 0..{cg.h - 1} or --form")
    pct = load_or_build(cg, cfg.x, args.cache, cfg.threads)
    rep = prime_equidistribution_report(cg, i, cfg.q, cfg.x, pct)
    rows = [[a, n, f"{p:.1f}", f"{e:+.5f}"] for a, n, p, e in rep.rows()]
    _emit(cfg, render(["a", "count", "predicted", "rel_error"], rows, cfg.fmt))
    return EXIT_OK


def cmd_verify(args, cfg: RunConfig) -> int:
    ids = list(golden.TABLES) if args.table == "all" else [args.table]
    for t in ids:
        if t not in golden.TABLES:
            raise UsageError(f"unknown table id {t!r}; known: {', '.join(golden.TABLES)}")
    ws = golden.Workspace(threads=cfg.threads, cache_dir=args.cache, prime_bound=args.wirsing_bound)
    lines, failed = [], 0
    for tid in ids:
        v = golden.verify_table(golden.TABLES[tid], ws, estimates=not args.no_estimates)
        status = "pass" if v.ok else "FAIL"
        lines.append(f"{tid}: {status}, {v.checked} cells checked "
                     f"({len(v.table.counts)} counts + {len(v.estimate_rows)} estimates)")
        for c in v.failures():
            got = "-" if c.got is None else (f"{c.got:.1f}" if isinstance(c.got, float) else c.got)
            lines.append(f"  {c.label}: expected {c.expected}, got {got} {c.note}".rstrip())
        failed += not v.ok
    lines.append(f"{len(ids) - failed}/{len(ids)} tables pass")
    _emit(cfg, "\n".join(lines) + "\n")
    return EXIT_FAIL if failed else EXIT_OK


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qfbias", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, disc=True, form=False, limit=False, mod=False):
        if disc:
            sp.add_argument("--disc", type=parse_int, help="negative fundamental discriminant")
        if form:
            sp.add_argument("--form", help="a,b,c for a x^2 + b xy + c y^2")
        if limit:
            sp.add_argument("--limit", type=parse_int, help="count n <= LIMIT")
        if mod:
            sp.add_argument("--mod", type=parse_int, default=None, help="modulus q")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--out", help="write the report here instead of stdout")
        sp.add_argument("--format", choices=("csv", "md"), default="csv")
        sp.add_argument("--cache", help="prime class table cache file (or directory for verify)")
        sp.add_argument("--prime-bound", type=parse_int, default=10**7, help="Euler product cut-off")
        sp.add_argument("--k-max", type=int, default=15)

    s = sub.add_parser("sieve", help="residue counts of the integers a form represents")
    common(s, form=True, limit=True, mod=True)
    s.add_argument("--estimates", action="store_true", help="append main and two-term estimates")
    s.add_argument("--squarefree", action="store_true")
    s.add_argument("--coprime-2d", action="store_true")
    s.add_argument("--quadrant", action="store_true", help="only values f(u, v) with u, v >= 0")
    s.add_argument("--count-zero", action="store_true", help="count n = 0 in the class a = 0")
    s.set_defaults(func=cmd_sieve)

    s = sub.add_parser("constants", help="LSD, progression and Wirsing constants")
    common(s, mod=True)
    s.add_argument("--wirsing", action="store_true", help="also compute kappa, A3, A4 (cyclic odd h)")
    s.add_argument("--wirsing-bound", type=parse_int, default=10**8)
    s.set_defaults(func=cmd_constants)

    s = sub.add_parser("classgroup", help="reduced forms, composition orders and genera")
    common(s)
    s.set_defaults(func=cmd_classgroup)

    s = sub.add_parser("exceptional", help="squarefree exceptional integers per residue class")
    common(s, form=True, limit=True, mod=True)
    s.add_argument("--wirsing-bound", type=parse_int, default=10**8)
    s.set_defaults(func=cmd_exceptional)

    s = sub.add_parser("classify", help="build (and cache) the prime class table")
    common(s, limit=True)
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("primes", help="primes of one class in residue classes vs prediction")
    common(s, form=True, limit=True, mod=True)
    s.add_argument("--class", dest="klass", type=int)
    s.set_defaults(func=cmd_primes)

    s = sub.add_parser("verify", help="recompute reference tables and compare")
    common(s, disc=False)
    s.add_argument("--table", default="all", help=f"one of: all, {', '.join(golden.TABLES)}")
    s.add_argument("--no-estimates", action="store_true")
    s.add_argument("--wirsing-bound", type=parse_int, default=10**8)
    s.set_defaults(func=cmd_verify)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = _resolve(args)
        return args.func(args, cfg)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ResourceError, MemoryError) as e:
        print(f"resource error: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    except QFBiasError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
