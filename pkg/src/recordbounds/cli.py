"""Command-line interface: ``recordbounds {bound,table,project,verify,selftest}``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from decimal import ROUND_HALF_EVEN, Decimal

import numpy as np

from . import __version__
from .bounds import bound, equality_quantile
from .distributions import DomainError, GfrAlpha, RecordIndex, gpd_cdf, h_fn, x_of_L
from .projection import KnotCase
from .verify import (
    mc_record_mean,
    naive_record_stream,
    residual_report,
    shape_check,
    worker_count,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

RECORD_FIELDS = [
    "k", "n", "alpha", "family", "case",
    "y_star", "beta_star", "bound", "gap", "degenerate",
    "y_display", "bound_display", "italic",
]
_INT = {"k", "n"}
_FLOAT = {"alpha", "y_star", "beta_star", "bound", "gap"}
_BOOL = {"degenerate", "italic"}


class UsageError(Exception):
    pass


def fmt4(v) -> str:
    """4-decimal display string, rounding half to even on the decimal repr."""
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return str(Decimal(repr(float(v))).quantize(Decimal("0.0001"), rounding=ROUND_HALF_EVEN))


# -- records -----------------------------------------------------------------

def make_record(res) -> dict:
    tag = res.case_tag
    shown_y = res.beta_star if tag is KnotCase.HC else res.y_star
    if tag in (KnotCase.LINEAR_WHOLE, KnotCase.COINCIDE):
        shown_y = None
    return {
        "k": res.idx.k,
        "n": res.idx.n,
        "alpha": res.fam.alpha,
        "family": res.fam.label,
        "case": tag.value,
        "y_star": res.y_star,
        "beta_star": res.beta_star,
        "bound": res.bound,
        "gap": res.agreement_gap,
        "degenerate": res.degenerate_flag,
        "y_display": fmt4(shown_y),
        "bound_display": fmt4(res.bound),
        "italic": tag is KnotCase.LHC,
    }


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_csv(rows, fields=None) -> str:
    fields = fields or (list(rows[0]) if rows else RECORD_FIELDS)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_cell(r.get(f)) for f in fields])
    return buf.getvalue()


def _parse_value(key, s):
    if key in _INT:
        return int(s)
    if key in _BOOL:
        return s == "true"
    if key in _FLOAT:
        return None if s == "" else float(s)
    return s


def parse_csv(text: str) -> list[dict]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    return [{k: _parse_value(k, v) for k, v in zip(header, row)} for row in reader]


def render_json(rows, meta) -> str:
    return json.dumps({"meta": meta, "rows": rows}, indent=2, allow_nan=False) + "\n"


def parse_json(text: str) -> tuple[dict, list[dict]]:
    obj = json.loads(text)
    return obj["meta"], obj["rows"]


def render_md(rows, fields) -> str:
    lines = ["| " + " | ".join(fields) + " |", "|" + "---|" * len(fields)]
    for r in rows:
        lines.append("| " + " | ".join(_cell(r.get(f)) for f in fields) + " |")
    return "\n".join(lines) + "\n"


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _render_records(rows, fmt, seed=None):
    if fmt == "csv":
        return render_csv(rows, RECORD_FIELDS)
    if fmt == "json":
        return render_json(rows, {"version": __version__, "seed": seed})
    md_rows = []
    for r in rows:
        y, b = r["y_display"], r["bound_display"]
        if r["italic"] and y:
            y = f"*{y}*"
        md_rows.append({"k": r["k"], "n": r["n"], "family": r["family"], "case": r["case"],
                        "y": y, "bound": b, "degenerate": r["degenerate"]})
    return render_md(md_rows, ["k", "n", "family", "case", "y", "bound", "degenerate"])


# -- argument handling -------------------------------------------------------

def _family(args) -> GfrAlpha:
    if args.family is not None and args.alpha is not None:
        raise UsageError("use either --family or --alpha, not both")
    if args.family is not None:
        return GfrAlpha(1.0 if args.family == "id" else 0.0)
    return GfrAlpha(0.0 if args.alpha is None else args.alpha)


def _cells(args):
    fam = _family(args)
    return [(fam, RecordIndex(k, n)) for k in args.k for n in args.n]


def _map_cells(cells):
    workers = min(worker_count(), len(cells)) or 1
    if workers == 1:
        return [bound(f, i) for f, i in cells]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(lambda c: bound(*c), cells))


# -- commands ----------------------------------------------------------------

def cmd_bound(args) -> int:
    rows = [make_record(r) for r in _map_cells(_cells(args))]
    _emit(_render_records(rows, args.format), args.out)
    return EXIT_OK


TABLES = {
    1: [(a, 2, n) for n in range(1, 10) for a in (1.0, 0.0)],
    2: [(a, k, 5) for k in range(1, 11) for a in (1.0, 0.0)],
}


def table_records(table_id: int) -> list[dict]:
    cells = [(GfrAlpha(a), RecordIndex(k, n)) for a, k, n in TABLES[table_id]]
    return [make_record(r) for r in _map_cells(cells)]


def _table_md(rows, table_id) -> str:
    key = "n" if table_id == 1 else "k"
    by = {}
    for r in rows:
        y = r["y_display"] or "-"
        if r["italic"]:
            y = f"*{y}*"
        by.setdefault(r[key], {})[r["family"]] = (y, r["bound_display"])
    out = [f"| {key} | y (ID) | bound (ID) | y (IFR) | bound (IFR) |", "|---|---|---|---|---|"]
    for v in sorted(by):
        (yi, bi), (yf, bf) = by[v]["ID"], by[v]["IFR"]
        out.append(f"| {v} | {yi} | {bi} | {yf} | {bf} |")
    return "\n".join(out) + "\n"


def cmd_table(args) -> int:
    rows = table_records(args.id)
    text = _table_md(rows, args.id) if args.format == "md" else _render_records(rows, args.format)
    _emit(text, args.out)
    return EXIT_OK


def project_rows(fam: GfrAlpha, idx: RecordIndex, grid: int):
    res = bound(fam, idx)
    curve = res.curve
    if fam.alpha > 0:
        x_hi = fam.support_end
    else:
        last = max(curve.knots_L, default=0.0)
        x_hi = float(x_of_L(fam.alpha, max(-math.log(1e-6), 1.5 * last)))
    xs = np.linspace(0.0, x_hi, grid)
    rows = []
    for x in xs:
        x = float(x)
        at_end = x >= fam.support_end
        u = 1.0 if at_end else float(gpd_cdf(fam, x))
        h = (-1.0 if idx.k > 1 else None) if at_end else float(h_fn(fam, idx, x))
        ph = float(curve.eval_L(math.inf if at_end else -math.log1p(-u)))
        rows.append({"x": x, "u": u, "h": h, "Ph": ph})
    meta = {
        "version": __version__,
        "seed": None,
        "k": idx.k,
        "n": idx.n,
        "alpha": fam.alpha,
        "case": res.case_tag.value,
        "knots": curve.knots,
        "bound": res.bound,
    }
    return rows, meta


def cmd_project(args) -> int:
    fam = _family(args)
    if len(args.k) != 1 or len(args.n) != 1:
        raise UsageError("project takes a single --k and --n")
    if args.grid < 2:
        raise UsageError("--grid must be at least 2")
    rows, meta = project_rows(fam, RecordIndex(args.k[0], args.n[0]), args.grid)
    if args.format == "json":
        text = render_json(rows, meta)
    elif args.format == "csv":
        text = render_csv(rows, ["x", "u", "h", "Ph"])
    else:
        knots = ", ".join(fmt4(t) for t in meta["knots"]) or "none"
        text = f"case {meta['case']}, knots: {knots}\n\n" + render_md(rows, ["x", "u", "h", "Ph"])
    _emit(text, args.out)
    return EXIT_OK


def verify_cell(fam, idx, samples, seed, sampler="gamma") -> dict:
    res = bound(fam, idx)
    model = equality_quantile(fam, idx, result=res)
    rr = residual_report(fam, idx, res.curve)
    mono, conc = shape_check(res.curve)
    if sampler == "naive":
        mc = naive_record_stream(idx, model, samples, seed)
    else:
        mc = mc_record_mean(model, idx, samples, seed)
    z = (mc.estimate - res.bound) / mc.std_error if mc.std_error > 0 else 0.0
    ok = rr.ok() and mono and conc and abs(z) <= 4.0 and res.agreement_gap < 1e-6
    return {
        "k": idx.k, "n": idx.n, "alpha": fam.alpha, "case": res.case_tag.value,
        "bound": res.bound, "estimate": mc.estimate, "std_error": mc.std_error, "z": z,
        "samples": samples, "sampler": sampler,
        "inner_residual": rr.inner_residual, "mean_violation": rr.mean_violation,
        "max_cone_inner": rr.max_cone_inner, "monotone": mono, "concave": conc,
        "gap": res.agreement_gap, "status": "PASS" if ok else "FAIL",
    }


def cmd_verify(args) -> int:
    cells = _cells(args)
    rows = [verify_cell(f, i, args.samples, args.seed, args.sampler) for f, i in cells]
    if args.format == "json":
        text = render_json(rows, {"version": __version__, "seed": args.seed})
    elif args.format == "csv":
        text = render_csv(rows)
    else:
        text = render_md(rows, list(rows[0]))
    _emit(text, args.out)
    return EXIT_OK if all(r["status"] == "PASS" for r in rows) else EXIT_FAIL


def selftest_checks():
    """Quick internal consistency checks; yields (name, passed, detail)."""
    for n in (1, 5, 12):
        b = bound(GfrAlpha(0.0), RecordIndex(1, n)).bound
        yield f"exponential k=1 n={n} equals n", abs(b - n) < 1e-12, repr(b)
    b = bound(GfrAlpha(-0.25), RecordIndex(1, 1)).bound
    yield "alpha<0 k=1 n=1 equals 1", abs(b - 1.0) < 1e-10, repr(b)
    r1 = bound(GfrAlpha(1.0), RecordIndex(2, 1))
    r0 = bound(GfrAlpha(0.0), RecordIndex(2, 1))
    yield "k=2 n=1 bound shared by both families", abs(r1.bound - r0.bound) < 1e-12, f"{r1.bound!r} {r0.bound!r}"
    for a, k, n in [(0.0, 2, 2), (1.0, 2, 5), (-0.25, 1, 3), (2.0, 3, 2)]:
        fam, idx = GfrAlpha(a), RecordIndex(k, n)
        r = bound(fam, idx)
        rr = residual_report(fam, idx, r.curve)
        yield f"oracles alpha={a:g} k={k} n={n}", rr.ok() and r.agreement_gap < 1e-6, (
            f"gap={r.agreement_gap:.1e} inner={rr.inner_residual:.1e} cone={rr.max_cone_inner:.1e}"
        )


def cmd_selftest(args) -> int:
    ok = True
    for name, passed, detail in selftest_checks():
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}  ({detail})")
    return EXIT_OK if ok else EXIT_FAIL


# -- parser ------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="recordbounds", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def cell_args(sp, multi=True):
        nargs = "+" if multi else None
        sp.add_argument("--k", type=int, nargs=nargs, required=True)
        sp.add_argument("--n", type=int, nargs=nargs, required=True)
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--family", choices=["id", "ifr"])

    def out_args(sp, default="csv"):
        sp.add_argument("--format", choices=["csv", "json", "md"], default=default)
        sp.add_argument("--out")

    sp = sub.add_parser("bound", help="optimal bound for one or more cells")
    cell_args(sp)
    out_args(sp)
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("table", help="reproduce table 1 (k=2) or table 2 (n=5)")
    sp.add_argument("--id", type=int, choices=[1, 2], required=True)
    out_args(sp, default="md")
    sp.set_defaults(func=cmd_table)

    sp = sub.add_parser("project", help="sample the projection curve on a grid")
    cell_args(sp)
    sp.add_argument("--grid", type=int, default=65)
    out_args(sp)
    sp.set_defaults(func=cmd_project)

    sp = sub.add_parser("verify", help="residual and Monte Carlo checks of a cell")
    cell_args(sp)
    sp.add_argument("--samples", type=int, default=1_000_000)
    sp.add_argument("--seed", type=int, default=2024)
    sp.add_argument("--sampler", choices=["gamma", "naive"], default="gamma")
    out_args(sp, default="md")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("selftest", help="fast internal consistency checks")
    sp.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        for name in ("k", "n"):
            vals = getattr(args, name, None)
            if vals is not None and any(v < 1 for v in (vals if isinstance(vals, list) else [vals])):
                raise UsageError(f"--{name} must be >= 1")
        if getattr(args, "samples", 1) < 1:
            raise UsageError("--samples must be >= 1")
        return args.func(args)
    except (UsageError, DomainError) as exc:
        # CostGuardError is a DomainError and lands here too
        print(f"recordbounds: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
