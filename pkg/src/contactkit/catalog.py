"""Catalog of classified (algebra, generators, invariant equation) triples.

File format, one ``key = value`` per line::

    [entry]
    id = A_3.7^2
    group = dim3
    anchor = A_{3.7}^2
    algebra = A3.7(q=symbolic)
    opaque = F/2
    where w = exp((1 - q)*t)*u_x
    g1 = 1
    g2 = u_x
    g3 = u_t + u - q*x*u_x
    rhs = exp(-t)*F(w, exp((1 - 2*q)*t)*u_xx)
    constraint = q - 1/2 != 0
    constraint = -1 < q < 1
    constraint = u_x > 0
    instance = F: y1^2 + 2*y2

Other keys: ``expected = closure-only`` skips the invariance check (and makes
``rhs`` optional).  ``printed = EXPR`` keeps the verbatim right-hand side of a
display whose printed form is not invariant; ``rhs`` then holds the corrected
form, and verification re-checks the printed one and reports it as an erratum.
``algebra = span`` (or ``span:NAME``) means the display gives the span only
up to isomorphism; closure is then checked by fitting constants."""

from __future__ import annotations

import multiprocessing
import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

from .algebra import Realization, builtin_table, check_realization, fit_structure
from .contact import GeneratingFunction, InvalidGeneratingFunction
from .expr import (
    INCONCLUSIVE,
    PROVEN_NONZERO,
    ExprInstance,
    ParseError,
    ProbeConfig,
    ProbeDomain,
    SymbolTable,
    ZeroVerdict,
    num,
    param,
    parse,
    sub,
    to_text,
)
from .jet import EQUATION_VARS, jet_vars
from .verify import check_invariance

GROUP_ORDER = ("dim1", "semisimple", "dim2", "dim3", "dim4", "levi", "fixture")
# counts stated in the concluding summary, per group
STATED_COUNTS = {"dim1": 2, "semisimple": 4, "dim2": 5, "dim3": 26, "dim4": 88, "levi": 11}


class CatalogError(ValueError):
    def __init__(self, message, entry_id=None, line=None):
        self.entry_id = entry_id
        self.line = line
        where = []
        if entry_id:
            where.append(f"entry {entry_id}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass
class CatalogEntry:
    id: str
    algebra: str
    bindings: dict = field(default_factory=dict)
    opaque_decls: list = field(default_factory=list)
    where_bindings: list = field(default_factory=list)
    generators: list = field(default_factory=list)
    rhs: str | None = None
    printed: str | None = None
    constraints: list = field(default_factory=list)
    instances: dict = field(default_factory=dict)
    expected: str = "pass"
    group: str = ""
    anchor: str = ""
    line: int = 0

    @property
    def span_only(self) -> bool:
        return self.algebra == "span" or self.algebra.startswith("span:")

    def symbol_table(self) -> SymbolTable:
        table = SymbolTable()
        for name, arity in self.opaque_decls:
            table.declare(name, arity)
        for name, text in self.where_bindings:
            table.macros[name] = parse(text, table)
        return table

    def table(self):
        if self.span_only:
            return None
        sc = builtin_table(self.algebra)
        values = {}
        for k, v in self.bindings.items():
            if v != "symbolic":
                values[k] = parse(v)
        return sc.bind(**values) if values else sc

    def parsed(self):
        """(generators, rhs, domain) with every text parsed."""
        table = self.symbol_table()
        gens = [GeneratingFunction(parse(g, table)) for g in self.generators]
        rhs = parse(self.rhs, table) if self.rhs is not None else None
        return gens, rhs, self.domain(table)

    def printed_rhs(self):
        return parse(self.printed, self.symbol_table()) if self.printed else None

    def domain(self, table: SymbolTable | None = None) -> ProbeDomain:
        table = table or self.symbol_table()
        nonzero, positive, ranges = [], [], {}
        if not self.span_only:
            sc = builtin_table(self.algebra)
            for name, rng in sc.params.items():
                if self.bindings.get(name, "symbolic") != "symbolic":
                    continue
                ranges[name] = rng.sampling_span()
                for ex in rng.exclude:
                    nonzero.append(sub(param(name), num(ex)))
        for kind, a, b, c in self.constraints:
            if kind == "nonzero":
                nonzero.append(parse(a, table))
            elif kind == "positive":
                positive.append(parse(a, table))
            else:
                ranges[b] = (Fraction(a), Fraction(c))
        instances = {}
        arity = dict(self.opaque_decls)
        for name, body in self.instances.items():
            instances[name] = ExprInstance(parse(body), arity[name])
        return ProbeDomain(tuple(nonzero), tuple(positive), ranges, instances)


# ------------------------------------------------------------------ parsing

_ALGEBRA = re.compile(r"^([^()\s]+)\s*(?:\((.*)\))?$")
_RANGE = re.compile(r"^(\S+)\s*<\s*([A-Za-z_][A-Za-z0-9_]*)\s*<\s*(\S+)$")
_KEY = re.compile(r"^(g\d+|[a-z]+)\s*=\s*(.*)$")


def _fraction(text):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        return None


def _parse_constraint(text: str):
    text = text.strip()
    if text.endswith("!= 0"):
        return ("nonzero", text[:-4].strip(), None, None)
    if text.endswith("> 0"):
        return ("positive", text[:-3].strip(), None, None)
    m = _RANGE.match(text)
    if m and _fraction(m.group(1)) is not None and _fraction(m.group(3)) is not None:
        return ("range", m.group(1), m.group(2), m.group(3))
    raise ValueError(f"unsupported constraint {text!r}")


def parse_catalog(text: str) -> list[CatalogEntry]:
    entries: list[CatalogEntry] = []
    cur: dict | None = None
    start = 0

    def finish():
        if cur is not None:
            entries.append(_build(cur, start))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "[entry]":
            finish()
            cur = {"gens": [], "opaque": [], "where": [], "constraint": [], "instance": {},
                   "_lines": {}}
            start = lineno
            continue
        if cur is None:
            raise CatalogError("content before the first [entry]", line=lineno)
        eid = cur.get("id")
        if line.startswith("where "):
            name, eq, body = line[6:].partition("=")
            if not eq or not name.strip():
                raise CatalogError("malformed where binding", eid, lineno)
            cur["where"].append((name.strip(), body.strip()))
            continue
        m = _KEY.match(line)
        if m is None:
            raise CatalogError(f"cannot parse {line!r}", eid, lineno)
        key, value = m.group(1), m.group(2).strip()
        cur["_lines"].setdefault(key, lineno)
        if key.startswith("g") and key[1:].isdigit():
            idx = int(key[1:])
            if idx != len(cur["gens"]) + 1:
                raise CatalogError(f"generator {key} out of order", eid, lineno)
            cur["gens"].append(value)
        elif key == "opaque":
            name, slash, arity = value.partition("/")
            if not slash or not arity.strip().isdigit():
                raise CatalogError(f"bad opaque declaration {value!r}", eid, lineno)
            cur["opaque"].append((name.strip(), int(arity)))
        elif key == "constraint":
            try:
                cur["constraint"].append(_parse_constraint(value))
            except ValueError as exc:
                raise CatalogError(str(exc), eid, lineno) from None
        elif key == "instance":
            name, colon, body = value.partition(":")
            if not colon:
                raise CatalogError("instance needs 'name: body'", eid, lineno)
            cur["instance"][name.strip()] = body.strip()
        elif key in ("id", "algebra", "rhs", "printed", "expected", "group", "anchor"):
            if key in cur:
                raise CatalogError(f"duplicate key {key}", eid, lineno)
            cur[key] = value
        else:
            raise CatalogError(f"unknown key {key!r}", eid, lineno)
    finish()
    seen = set()
    for e in entries:
        if e.id in seen:
            raise CatalogError("duplicate id", e.id, e.line)
        seen.add(e.id)
    return entries


def _build(cur: dict, line: int) -> CatalogEntry:
    eid = cur.get("id")
    if not eid:
        raise CatalogError("entry without id", line=line)
    if "algebra" not in cur:
        raise CatalogError("missing algebra", eid, line)
    m = _ALGEBRA.match(cur["algebra"])
    if m is None:
        raise CatalogError(f"bad algebra {cur['algebra']!r}", eid, line)
    bindings = {}
    if m.group(2):
        for item in m.group(2).split(","):
            k, eq, v = item.partition("=")
            if not eq:
                raise CatalogError(f"bad parameter binding {item!r}", eid, line)
            bindings[k.strip()] = v.strip()
    expected = cur.get("expected", "pass")
    if expected not in ("pass", "closure-only"):
        raise CatalogError(f"unknown expectation {expected!r}", eid, line)
    entry = CatalogEntry(
        id=eid,
        algebra=m.group(1),
        bindings=bindings,
        opaque_decls=cur["opaque"],
        where_bindings=cur["where"],
        generators=cur["gens"],
        rhs=cur.get("rhs"),
        printed=cur.get("printed"),
        constraints=cur["constraint"],
        instances=cur["instance"],
        expected=expected,
        group=cur.get("group", ""),
        anchor=cur.get("anchor", ""),
        line=line,
    )
    validate_entry(entry)
    return entry


def validate_entry(e: CatalogEntry) -> None:
    """Structural invariants: texts parse, dimension matches, rhs variables allowed."""
    if e.rhs is None and e.expected != "closure-only":
        raise CatalogError("missing rhs", e.id, e.line)
    if e.printed is not None and e.rhs is None:
        raise CatalogError("printed form without a corrected rhs", e.id, e.line)
    if not e.generators:
        raise CatalogError("no generators", e.id, e.line)
    if not e.span_only:
        try:
            sc = builtin_table(e.algebra)
        except KeyError as exc:
            raise CatalogError(str(exc), e.id, e.line) from None
        if sc.dim != len(e.generators):
            raise CatalogError(
                f"dimension mismatch: {e.algebra} has dimension {sc.dim}, "
                f"{len(e.generators)} generators given", e.id, e.line)
        unknown = set(e.bindings) - set(sc.params)
        if unknown:
            raise CatalogError(f"{e.algebra} has no parameters {sorted(unknown)}", e.id, e.line)
    arity = dict(e.opaque_decls)
    for name in e.instances:
        if name not in arity:
            raise CatalogError(f"instance for undeclared {name!r}", e.id, e.line)
    try:
        gens, rhs, _ = e.parsed()
        printed = e.printed_rhs()
        if not e.span_only:
            e.table()
    except (ParseError, InvalidGeneratingFunction, ValueError) as exc:
        raise CatalogError(str(exc), e.id, e.line) from None
    for form in (rhs, printed):
        if form is not None:
            extra = jet_vars(form) - EQUATION_VARS
            if extra:
                raise CatalogError(f"rhs depends on {sorted(extra)}", e.id, e.line)


def load_catalog(path=None) -> list[CatalogEntry]:
    """Load a catalog file; ``None`` loads the shipped transcription."""
    if path is None:
        text = resources.files("contactkit").joinpath("data/catalog.txt").read_text()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return parse_catalog(text)


def shipped_path(name: str = "catalog.txt") -> str:
    return str(resources.files("contactkit").joinpath(f"data/{name}"))


# ------------------------------------------------------------- verification


@dataclass
class Check:
    kind: str
    target: str
    verdict: ZeroVerdict

    def record(self, entry_id: str) -> str:
        res = self.verdict.max_residual
        res_text = "-" if res is None else f"{res:.3e}"
        return f"CHECK {entry_id} {self.kind} {self.target} {self.verdict.kind} {res_text}"


@dataclass
class EntryReport:
    id: str
    checks: list = field(default_factory=list)
    error: str = ""
    note: str = ""
    # invariance of the printed form of a corrected display; not part of status
    errata: list = field(default_factory=list)

    @property
    def status(self) -> str:
        if self.error:
            return "fail"
        kinds = [c.verdict.kind for c in self.checks]
        if PROVEN_NONZERO in kinds:
            return "fail"
        if INCONCLUSIVE in kinds:
            return "inconclusive"
        return "pass"

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.verdict.is_zero]

    @property
    def erratum_confirmed(self) -> bool | None:
        """True if the printed form fails somewhere, None without a printed form."""
        if not self.errata:
            return None
        return any(c.verdict.kind == PROVEN_NONZERO for c in self.errata)


def verify_entry(e: CatalogEntry, cfg: ProbeConfig | None = None) -> EntryReport:
    """Closure of the realization plus invariance of the rhs under each generator."""
    cfg = cfg or ProbeConfig()
    rep = EntryReport(e.id)
    try:
        gens, rhs, domain = e.parsed()
        if e.span_only:
            sc, pairs = fit_structure(gens, cfg, domain, name=e.id)
            rep.note = "; ".join(sc.relations()) or "abelian"
        else:
            r = Realization(e.table(), gens, domain=domain)
            pairs = check_realization(r, cfg, task=e.id)
        for (i, j), v in sorted(pairs.items()):
            rep.checks.append(Check("closure", f"g{i},g{j}", v))
        if e.expected == "pass":
            for k, g in enumerate(gens, start=1):
                ir = check_invariance(rhs, g, cfg, domain, task=f"{e.id}:g{k}")
                rep.checks.append(Check("invariance", f"g{k}", ir.verdict))
            printed = e.printed_rhs()
            if printed is not None:
                for k, g in enumerate(gens, start=1):
                    ir = check_invariance(printed, g, cfg, domain, task=f"{e.id}:printed:g{k}")
                    rep.errata.append(Check("printed-invariance", f"g{k}", ir.verdict))
    except Exception as exc:  # report content, never a crash
        rep.error = f"{type(exc).__name__}: {exc}"
    return rep


@dataclass
class Summary:
    reports: list
    seed: int

    @property
    def counts(self) -> dict[str, int]:
        out = {"pass": 0, "fail": 0, "inconclusive": 0}
        for r in self.reports:
            out[r.status] += 1
        return out


def _work(args):
    entry, cfg = args
    return verify_entry(entry, cfg)


def verify_all(entries, cfg: ProbeConfig | None = None, parallelism: int = 1) -> Summary:
    """Verify every entry; results come back in catalog order whatever the scheduling."""
    cfg = cfg or ProbeConfig()
    entries = list(entries)
    jobs = [(e, cfg) for e in entries]
    if parallelism > 1 and len(entries) > 1:
        with multiprocessing.get_context("fork").Pool(parallelism) as pool:
            reports = pool.map(_work, jobs, chunksize=1)
    else:
        reports = [_work(j) for j in jobs]
    return Summary(reports, cfg.seed)


def tallies(entries) -> dict[str, int]:
    """Entries expected to pass, per group; closure-only fixtures are not counted."""
    out = {g: 0 for g in STATED_COUNTS}
    for e in entries:
        if e.expected == "pass" and e.group in out:
            out[e.group] += 1
    return out


def tally_lines(entries) -> list[str]:
    got = tallies(entries)
    lines = []
    for g, stated in STATED_COUNTS.items():
        mark = "ok" if got[g] == stated else "MISMATCH"
        lines.append(f"TALLY {g} transcribed={got[g]} stated={stated} {mark}")
    closure = sum(1 for e in entries if e.expected == "closure-only")
    lines.append(f"TALLY closure-only transcribed={closure}")
    return lines


def catalog_index(entries) -> list[str]:
    """Cross-index for auditing the transcription against the source displays."""
    out = []
    for e in entries:
        gens = ", ".join(e.generators)
        alg = e.algebra + (f"({', '.join(f'{k}={v}' for k, v in e.bindings.items())})"
                           if e.bindings else "")
        out.append(f"{e.id}\t{e.group}\t{e.anchor}\t{alg}\t<{gens}>\t{e.rhs or '-'}")
    return out


def rhs_text(e: CatalogEntry) -> str:
    _, rhs, _ = e.parsed()
    return to_text(rhs) if rhs is not None else "-"


__all__ = [
    "CatalogEntry",
    "CatalogError",
    "Check",
    "EntryReport",
    "Summary",
    "load_catalog",
    "parse_catalog",
    "validate_entry",
    "verify_entry",
    "verify_all",
    "tallies",
    "tally_lines",
    "catalog_index",
    "shipped_path",
    "STATED_COUNTS",
]
