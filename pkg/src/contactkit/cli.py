"""Command-line front end.

Exit codes: 0 every check zero-class, 1 some check ProvenNonzero, 2 usage or
parse error, 3 some check Inconclusive and none failed.
"""

from __future__ import annotations

import argparse
import os
import sys

from .algebra import UnknownTable, builtin_table, jacobi_check
from .catalog import (
    STATED_COUNTS,
    CatalogEntry,
    CatalogError,
    catalog_index,
    load_catalog,
    shipped_path,
    tally_lines,
    validate_entry,
    verify_all,
    verify_entry,
)
from .contact import (
    ContactTransformation,
    InvalidGeneratingFunction,
    TransformError,
    bracket,
    check_contact_condition,
    transform_equation,
    transform_generating_function,
    vector_field,
)
from .expr import (
    INCONCLUSIVE,
    PROVEN_NONZERO,
    ParseError,
    ProbeConfig,
    SymbolTable,
    parse,
    to_text,
)
from .jet import JetOrderError
from .verify import check_invariance

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INCONCLUSIVE = 0, 1, 2, 3
DEFAULT_SEED = 7


class UsageError(Exception):
    pass


def _exit_for(kinds) -> int:
    kinds = list(kinds)
    if PROVEN_NONZERO in kinds:
        return EXIT_FAIL
    if INCONCLUSIVE in kinds:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def _default_seed() -> int:
    raw = os.environ.get("CONTACTKIT_SEED")
    if raw is None or raw == "":
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"CONTACTKIT_SEED must be an integer, got {raw!r}") from None


def _config(args) -> ProbeConfig:
    seed = args.seed if args.seed is not None else _default_seed()
    try:
        return ProbeConfig(seed=seed, samples=args.samples, tol_rel=args.tol)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _table(args) -> SymbolTable:
    table = SymbolTable()
    for decl in args.opaque or []:
        table.declare(*tuple_decl(decl))
    return table


def _verdict_line(label: str, verdict) -> str:
    return f"{label}: {verdict}"


def _record(source: str, kind: str, target: str, verdict) -> str:
    res = verdict.max_residual
    return f"CHECK {source} {kind} {target} {verdict.kind} {'-' if res is None else f'{res:.3e}'}"


# ------------------------------------------------------------------ commands


def _resolve_catalog(path: str | None) -> str | None:
    # relative paths that miss the working directory are looked up in the package
    if path is None or os.path.exists(path):
        return path
    if not os.path.isabs(path):
        parts = path.replace("\\", "/").split("/")
        if parts[0] == "data" and len(parts) == 2:
            candidate = shipped_path(parts[1])
            if os.path.exists(candidate):
                return candidate
    raise UsageError(f"catalog file not found: {path}")


def cmd_verify(args, out) -> int:
    cfg = _config(args)
    entries = load_catalog(_resolve_catalog(args.file))
    if args.id:
        chosen = [e for e in entries if e.id in set(args.id)]
        missing = set(args.id) - {e.id for e in chosen}
        if missing:
            raise UsageError(f"no entry with id {', '.join(sorted(missing))}")
        entries = chosen
    summary = verify_all(entries, cfg, parallelism=args.jobs)
    out.write(f"SEED {cfg.seed} samples={cfg.samples} tol={cfg.tol_rel:g}\n")
    kinds = []
    stale = []
    for rep in summary.reports:
        kinds.extend(c.verdict.kind for c in rep.checks)
        if rep.error:
            kinds.append(PROVEN_NONZERO)
        if rep.erratum_confirmed is False:
            stale.append(rep.id)
        if args.format == "records":
            for c in rep.checks:
                out.write(c.record(rep.id) + "\n")
            for c in rep.errata:
                out.write("ERRATUM " + c.record(rep.id)[len("CHECK "):] + "\n")
            if rep.error:
                out.write(f"ERROR {rep.id} {rep.error}\n")
            out.write(f"ENTRY {rep.id} {rep.status}\n")
        else:
            line = f"{rep.status.upper():13s}{rep.id}"
            if rep.note:
                line += f"  [{rep.note}]"
            out.write(line + "\n")
            if rep.error:
                out.write(f"    error: {rep.error}\n")
            for c in rep.failures():
                out.write(f"    {c.kind} {c.target}: {c.verdict}\n")
            if rep.errata:
                bad = [c.target for c in rep.errata if c.verdict.kind == PROVEN_NONZERO]
                out.write(f"    erratum: printed form fails invariance under {', '.join(bad) or 'nothing'}\n")
    for eid in stale:
        # a printed form that verifies means the recorded correction is unnecessary
        out.write(f"STALE-ERRATUM {eid} printed form verifies\n")
        kinds.append(PROVEN_NONZERO)
    if not args.id and any(e.group in STATED_COUNTS for e in entries):
        for line in tally_lines(entries):
            out.write(line + "\n")
    c = summary.counts
    out.write(f"SUMMARY entries={len(summary.reports)} pass={c['pass']} fail={c['fail']} "
              f"inconclusive={c['inconclusive']}\n")
    return _exit_for(kinds)


def cmd_index(args, out) -> int:
    entries = load_catalog(_resolve_catalog(args.file))
    for line in catalog_index(entries):
        out.write(line + "\n")
    for line in tally_lines(entries):
        out.write(line + "\n")
    return EXIT_OK


def cmd_bracket(args, out) -> int:
    table = _table(args)
    out.write(str(bracket(parse(args.f, table), parse(args.g, table))) + "\n")
    return EXIT_OK


def cmd_vf(args, out) -> int:
    field = vector_field(parse(args.g, _table(args))).simplified()
    for name, coef in field.components().items():
        out.write(f"d/d{name}: {to_text(coef)}\n")
    return EXIT_OK


def _split_gens(text: str) -> list[str]:
    return [g.strip() for g in text.split(";") if g.strip()]


def cmd_algebra_check(args, out) -> int:
    cfg = _config(args)
    bindings = {}
    for item in args.param or []:
        k, eq, v = item.partition("=")
        if not eq:
            raise UsageError(f"--param expects k=v, got {item!r}")
        bindings[k.strip()] = v.strip()
    entry = CatalogEntry(
        id="cli", algebra=args.algebra, bindings=bindings,
        opaque_decls=[tuple_decl(d) for d in args.opaque or []],
        generators=_split_gens(args.gens), expected="closure-only",
    )
    try:
        validate_entry(entry)
    except CatalogError as exc:
        raise UsageError(str(exc).removeprefix("entry cli: ")) from None
    out.write(f"SEED {cfg.seed}\n")
    rep = verify_entry(entry, cfg)
    if rep.error:
        raise UsageError(rep.error)
    for c in rep.checks:
        out.write(_record(args.algebra, "closure", c.target, c.verdict) + "\n")
        if not c.verdict.is_zero:
            out.write("    " + _verdict_line(c.target, c.verdict) + "\n")
    return _exit_for(c.verdict.kind for c in rep.checks)


def tuple_decl(decl: str):
    name, slash, arity = decl.partition("/")
    if not slash or not arity.isdigit():
        raise UsageError(f"--opaque expects NAME/ARITY, got {decl!r}")
    return name, int(arity)


def cmd_algebra_jacobi(args, out) -> int:
    cfg = _config(args)
    sc = builtin_table(args.algebra)
    out.write(f"SEED {cfg.seed}\n")
    verdicts = jacobi_check(sc, cfg)
    for (i, j, k), v in sorted(verdicts.items()):
        out.write(_record(sc.name, "jacobi", f"g{i},g{j},g{k}", v) + "\n")
    if not verdicts:
        out.write(f"{sc.name}: no triples (dimension {sc.dim})\n")
    return _exit_for(v.kind for v in verdicts.values())


def cmd_transform(args, out) -> int:
    cfg = _config(args)
    table = _table(args)
    tr = ContactTransformation.parse(args.T, args.X, args.U, table)
    if args.action == "check":
        out.write(f"SEED {cfg.seed}\n")
        v = check_contact_condition(tr, cfg)
        out.write(_record("transform", "contact-cond", "-", v) + "\n")
        if not v.is_zero:
            out.write("    " + _verdict_line("contact condition", v) + "\n")
        return _exit_for([v.kind])
    if (args.g is None) == (args.rhs is None):
        raise UsageError("transform apply needs exactly one of --g and --rhs")
    if args.g is not None:
        out.write(str(transform_generating_function(tr, parse(args.g, table))) + "\n")
    else:
        out.write(to_text(transform_equation(tr, parse(args.rhs, table))) + "\n")
    return EXIT_OK


def cmd_invariance(args, out) -> int:
    cfg = _config(args)
    table = _table(args)
    rhs, g = parse(args.rhs, table), parse(args.g, table)
    out.write(f"SEED {cfg.seed}\n")
    rep = check_invariance(rhs, g, cfg, task="cli")
    out.write(_record("invariance", "invariance", "g", rep.verdict) + "\n")
    out.write(_verdict_line("verdict", rep.verdict) + "\n")
    return _exit_for([rep.verdict.kind])


# -------------------------------------------------------------------- parser


def _probe_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None,
                   help=f"probe seed (default: $CONTACTKIT_SEED or {DEFAULT_SEED})")
    p.add_argument("--samples", type=int, default=32)
    p.add_argument("--tol", type=float, default=1e-8, help="relative tolerance")


def _opaque_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--opaque", action="append", metavar="NAME/ARITY",
                   help="declare an arbitrary function, e.g. F/2 (repeatable)")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="contactkit",
                     description="Contact symmetries of u_t = F(t,x,u,u_x,u_xx).")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    verify = sub.add_parser("verify", help="verify the catalog")
    vsub = verify.add_subparsers(dest="what", required=True, parser_class=_Parser)
    vc = vsub.add_parser("catalog", help="closure and invariance of every entry")
    vc.add_argument("--file", default=None, help="catalog file (default: shipped transcription)")
    vc.add_argument("--id", action="append", help="verify only this entry (repeatable)")
    vc.add_argument("--jobs", type=int, default=1)
    vc.add_argument("--format", choices=("human", "records"), default="human")
    _probe_flags(vc)
    vc.set_defaults(func=cmd_verify)

    idx = sub.add_parser("index", help="cross-index of catalog entries and tallies")
    idx.add_argument("--file", default=None)
    idx.set_defaults(func=cmd_index)

    br = sub.add_parser("bracket", help="contact bracket of two generating functions")
    br.add_argument("f")
    br.add_argument("g")
    _opaque_flag(br)
    br.set_defaults(func=cmd_bracket)

    vf = sub.add_parser("vf", help="contact vector field of a generating function")
    vf.add_argument("g")
    _opaque_flag(vf)
    vf.set_defaults(func=cmd_vf)

    alg = sub.add_parser("algebra", help="structure tables and realizations")
    asub = alg.add_subparsers(dest="action", required=True, parser_class=_Parser)
    ac = asub.add_parser("check", help="check a realization against a table")
    ac.add_argument("--algebra", required=True)
    ac.add_argument("--param", action="append", metavar="K=V")
    ac.add_argument("--gens", required=True, help='generators separated by ";"')
    _opaque_flag(ac)
    _probe_flags(ac)
    ac.set_defaults(func=cmd_algebra_check)
    aj = asub.add_parser("jacobi", help="Jacobi identity of a built-in table")
    aj.add_argument("--algebra", required=True)
    _probe_flags(aj)
    aj.set_defaults(func=cmd_algebra_jacobi)

    tr = sub.add_parser("transform", help="contact transformations")
    tr.add_argument("action", choices=("check", "apply"))
    tr.add_argument("--T", required=True)
    tr.add_argument("--X", required=True)
    tr.add_argument("--U", required=True)
    tr.add_argument("--g", default=None, help="generating function in new variables")
    tr.add_argument("--rhs", default=None, help="right-hand side in new variables")
    _opaque_flag(tr)
    _probe_flags(tr)
    tr.set_defaults(func=cmd_transform)

    inv = sub.add_parser("invariance", help="is g a symmetry of u_t = rhs?")
    inv.add_argument("--rhs", required=True)
    inv.add_argument("--g", required=True)
    _opaque_flag(inv)
    _probe_flags(inv)
    inv.set_defaults(func=cmd_invariance)
    return parser


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, out)
    except UsageError as exc:
        err.write(f"contactkit: {exc}\n")
        return EXIT_USAGE
    except (ParseError, CatalogError, UnknownTable, TransformError,
            InvalidGeneratingFunction, JetOrderError, ValueError) as exc:
        err.write(f"contactkit: {type(exc).__name__}: {exc}\n")
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


__all__ = ["run", "main", "build_parser"]
