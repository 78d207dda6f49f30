#!/usr/bin/env python3
"""
Hypersurface structure constant engine
Command-line entry point: virtual constants, virtual Gromov-Witten
invariants, true structure constants and the verification suites.
"""
import argparse
import csv
import io
import json
import logging
import sys
from typing import Dict, List, Optional, Sequence

from config import settings
from database import cache_file
from errors import EngineError, ResultsStoreError, ValidationError, VerificationError
from exact_core import format_rational
from gw_reconstruction import CorrelatorStore
from mirror_transform import cy_transform, generalized_transform
from recursion_engine import (
    TRUE,
    VIRTUAL,
    ConstantsTable,
    HypersurfaceParams,
    true_constants_near_fano,
    virtual_constants,
)
from verification import run_suite

logger = logging.getLogger(__name__)

COLUMNS = ["kind", "N", "k", "d", "n", "value"]


def parse_insertions(text: str) -> List[int]:
    try:
        return [int(a) for a in text.split(",") if a.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"insertions must be comma separated integers, got {text!r}")


def parse_range(text: str) -> range:
    """"a:b" -> a..b inclusive"""
    try:
        lo, hi = (int(part) for part in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"n-range must look like LO:HI, got {text!r}")
    return range(lo, hi + 1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vgw",
        description=f"{settings.APP_NAME}: exact structure constants of degree-k hypersurfaces in projective space.",
    )
    parser.add_argument("--log-level", default="DEBUG" if settings.DEBUG else settings.LOG_LEVEL,
                        help="Logging level (default: %(default)s)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, needs_params: bool = True) -> None:
        p.add_argument("--N", type=int, required=needs_params, help="Ambient projective space is CP^{N-1}")
        p.add_argument("--k", type=int, required=needs_params, help="Degree of the hypersurface")
        p.add_argument("--d", type=int, help="Single degree")
        p.add_argument("--dmax", type=int, help=f"All degrees 1..DMAX (default: {settings.DEFAULT_D_MAX})")
        p.add_argument("--n", type=int, help="Single index n")
        p.add_argument("--n-range", type=parse_range, help="Index range LO:HI (inclusive)")
        p.add_argument("--format", choices=["json", "csv", "plain"], default="plain")
        p.add_argument("--allow-unvalidated-degree", action="store_true",
                       help=f"Allow degrees above {settings.MAX_VALIDATED_DEGREE}")
        p.add_argument("--record", action="store_true", help="Store emitted rows in the results database")

    vsc = sub.add_parser("vsc", help="Virtual structure constants L~_n^{N,k,d}")
    common(vsc)

    gw = sub.add_parser("gw", help="Virtual Gromov-Witten invariant v(O_{e^a1} ... O_{e^an})_d")
    common(gw)
    gw.add_argument("--insertions", type=parse_insertions, required=True, help="Exponents a1,a2,...")
    gw.add_argument("--cache", help="Correlator cache file (default: per (N, k) file under CACHE_DIR)")

    lsc = sub.add_parser("lsc", help="True structure constants L_n^{N,k,d}")
    common(lsc)
    lsc.add_argument("--cache", help="Correlator cache file used when k > N")

    verify = sub.add_parser("verify", help="Run a verification suite")
    verify.add_argument("suite", help="hypergeometric (alias po), relations, published (alias paper-numbers), "
                                     "kernels, closed-forms, quartic, cy-collapse, hi, symmetry")
    common(verify, needs_params=False)
    return parser


def degrees(args) -> range:
    if args.d is not None and args.dmax is not None:
        raise ValidationError("pass either --d or --dmax, not both")
    if args.d is not None:
        if args.d < 1:
            raise ValidationError(f"degree must be positive, got {args.d}")
        return range(args.d, args.d + 1)
    d_max = args.dmax if args.dmax is not None else settings.DEFAULT_D_MAX
    if d_max < 1:
        raise ValidationError(f"dmax must be positive, got {d_max}")
    return range(1, d_max + 1)


def requested_indices(args, default: Sequence[int]) -> Sequence[int]:
    if args.n is not None and args.n_range is not None:
        raise ValidationError("pass either --n or --n-range, not both")
    if args.n is not None:
        return [args.n]
    if args.n_range is not None:
        return args.n_range
    return default


def table_rows(kind: str, table: ConstantsTable, N: int, ds: range, args) -> List[Dict]:
    rows = []
    for d in ds:
        # stored support padded out to the additive basis 0..N-2
        window = sorted({n for n, _ in table.entries(N, d)} | set(range(0, N - 1)))
        for n in requested_indices(args, window):
            rows.append({"kind": kind, "N": N, "k": table.k, "d": d, "n": n, "value": table.get(N, d, n)})
    return rows


def open_store(params: HypersurfaceParams, d_max: int, args) -> CorrelatorStore:
    store = CorrelatorStore(params, d_max=d_max, allow_unvalidated=args.allow_unvalidated_degree)
    path = args.cache or cache_file.default_cache_path(params.N, params.k)
    contents = cache_file.load(path)
    if contents is not None:
        cache_file.apply(contents, store)
    return store


def close_store(store: CorrelatorStore, args) -> None:
    path = args.cache or cache_file.default_cache_path(store.params.N, store.params.k)
    cache_file.save(store, path, store.seed_table)


def cmd_vsc(args) -> List[Dict]:
    params = HypersurfaceParams(args.N, args.k)
    ds = degrees(args)
    table = virtual_constants(params.N, params.k, ds[-1], allow_unvalidated=args.allow_unvalidated_degree)
    return table_rows(VIRTUAL, table, params.N, ds, args)


def cmd_gw(args) -> List[Dict]:
    params = HypersurfaceParams(args.N, args.k)
    if args.d is None:
        raise ValidationError("gw needs --d")
    if any(a < 0 or a > params.top for a in args.insertions):
        raise ValidationError(f"insertions must lie in 0..{params.top}, got {args.insertions}")
    store = open_store(params, max(args.d, 1), args)
    value = store.value(args.insertions, args.d)
    close_store(store, args)
    row = {
        "kind": "gw", "N": params.N, "k": params.k, "d": args.d,
        "n": ",".join(str(a) for a in args.insertions), "value": value,
    }
    if not params.selection_holds(args.d, args.insertions):
        row["note"] = "selection rule"
    return [row]


def cmd_lsc(args) -> List[Dict]:
    params = HypersurfaceParams(args.N, args.k)
    ds = degrees(args)
    N, k = params.N, params.k
    if params.chern >= 1:
        table = true_constants_near_fano(N, k, ds[-1], allow_unvalidated=args.allow_unvalidated_degree)
        return table_rows(TRUE, table, N, ds, args)
    rows = []
    if params.chern == 0:
        table = virtual_constants(N, k, ds[-1], allow_unvalidated=args.allow_unvalidated_degree)
        for d in ds:
            for n in requested_indices(args, range(2, k - 2)):
                rows.append({"kind": TRUE, "N": N, "k": k, "d": d, "n": n, "value": cy_transform(n, d, k, table)})
        return rows
    store = open_store(params, ds[-1], args)
    try:
        for d in ds:
            for n in requested_indices(args, range(1 + (k - N) * d, N - 1)):
                rows.append({"kind": TRUE, "N": N, "k": k, "d": d, "n": n,
                             "value": generalized_transform(n, d, store)})
    finally:
        close_store(store, args)
    return rows


def cmd_verify(args) -> List[Dict]:
    report = run_suite(args.suite, N=args.N, k=args.k, d_max=args.dmax)
    for check in report.checks:
        status = "ok" if check.passed else "FAIL"
        print(f"[{report.suite}] {status} {check.name} ({check.seconds:.2f}s)")
        if not check.passed:
            print(f"    expected: {check.expected}")
            print(f"    actual:   {check.actual}")
    if not report.passed:
        raise VerificationError(f"{len(report.failures)} of {len(report.checks)} checks failed in {report.suite}")
    print(f"[{report.suite}] OK ({len(report.checks)} checks)")
    return []


COMMANDS = {
    "vsc": cmd_vsc,
    "gw": cmd_gw,
    "lsc": cmd_lsc,
    "verify": cmd_verify,
}


def render(rows: List[Dict], output_format: str) -> str:
    if output_format == "json":
        return json.dumps([{**row, "value": format_rational(row["value"])} for row in rows], indent=2)
    if output_format == "csv":
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=COLUMNS, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({**row, "value": format_rational(row["value"])})
        return buffer.getvalue().rstrip("\n")
    lines = []
    for row in rows:
        line = " ".join(str(row[column]) for column in COLUMNS)
        if "note" in row:
            line += f"  ({row['note']})"
        lines.append(line)
    return "\n".join(lines)


def record(rows: List[Dict]) -> None:
    from sqlalchemy.exc import SQLAlchemyError

    from database.models import get_db, init_db, record_rows

    try:
        init_db()
        with get_db() as session:
            count = record_rows(session, [row for row in rows if row["kind"] in (VIRTUAL, TRUE)])
    except SQLAlchemyError as e:
        raise ResultsStoreError(f"could not record rows in the results database: {e}") from e
    logger.info(f"recorded {count} rows")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        rows = COMMANDS[args.command](args)
        if rows:
            print(render(rows, args.format))
            if args.record:
                record(rows)
    except EngineError as e:
        print(f"[error] {e}", file=sys.stderr)
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
