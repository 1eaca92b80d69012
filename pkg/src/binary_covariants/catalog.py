from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Iterator, Sequence

from ._helpers import _resolve_dir
from .program import CovariantProgram, ProgramPool, format_program

__all__ = [
    "CATALOG_DIR_ENV",
    "CATALOG_FOR_N",
    "HSOP_IDENTIFICATIONS",
    "Catalog",
    "CatalogEntry",
    "CatalogError",
    "CatalogTable",
    "hsop_parameters",
    "hsop_programs",
    "load_basis",
    "load_bound_data",
    "load_catalog",
    "parse_catalog",
    "read_data_text",
    "table_counts",
]

CATALOG_DIR_ENV = "BINARY_COVARIANTS_CATALOG_DIR"

CATALOG_FOR_N = {6: "sextic", 8: "octic", 9: "nonic", 10: "decimic"}
HSOP_FOR_N = {9: "nonic_hsop", 10: "decimic_hsop"}

# h.s.o.p. invariants and the catalog generators they coincide with (up to scale)
HSOP_IDENTIFICATIONS: dict[int, dict[str, str]] = {
    9: {"p4": "c16", "q4": "c17", "p8": "c121"},
    10: {"p2": "c2", "p4": "c19", "p6": "c73", "q6": "c74"},
}

# top generator degree of the classical small bases, used as Olver's d_max
_SMALL_DMAX = {1: 1, 2: 2, 3: 4, 4: 3, 5: 18}

_RESERVED = {"f", "n", "degree", "order", "tr", "mul", "pow", "sum"}
_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_']*)|(\S))")
_ASSIGN = re.compile(r"^([A-Za-z_][A-Za-z0-9_']*)\s*=\s*(.+)$")


class CatalogError(ValueError):
    """Syntax or consistency error in a catalog file."""

    def __init__(self, message: str, line: int | None = None, source: str = "<string>") -> None:
        self.line = line
        self.source = source
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(f"{where}{message}")


@dataclass(frozen=True)
class CatalogEntry:
    label: str
    n: int
    expr: str
    degree: int
    order: int
    program: CovariantProgram
    line: int = 0


@dataclass
class Catalog:
    """Named covariant programs over a shared pool, in definition order."""

    n: int
    pool: ProgramPool
    entries: list[CatalogEntry] = field(default_factory=list)
    name: str = "<string>"

    def __post_init__(self) -> None:
        self._by_label = {e.label: e for e in self.entries}

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[CatalogEntry]:
        return iter(self.entries)

    def __getitem__(self, label: str) -> CatalogEntry:
        try:
            return self._by_label[label]
        except KeyError:
            raise KeyError(f"{label!r} is not defined in catalog {self.name}") from None

    def __contains__(self, label: object) -> bool:
        return label in self._by_label

    @property
    def labels(self) -> list[str]:
        return [e.label for e in self.entries]

    def program(self, label: str) -> CovariantProgram:
        return self[label].program

    def programs(self) -> list[CovariantProgram]:
        return [e.program for e in self.entries]

    def label_map(self) -> dict[int, str]:
        """Pool index -> label, for rendering programs with catalog names."""

        return {e.program.root: e.label for e in reversed(self.entries)}

    def _add(self, entry: CatalogEntry) -> None:
        self.entries.append(entry)
        self._by_label[entry.label] = entry

    @classmethod
    def from_programs(
        cls,
        n: int,
        programs: Iterable[tuple[str, CovariantProgram]],
        name: str = "<programs>",
    ) -> Catalog:
        items = list(programs)
        pool = items[0][1].pool if items else ProgramPool(n)
        cat = cls(n, pool, [], name)
        labels: dict[int, str] = {}
        for label, prog in items:
            root = pool.import_program(prog)
            program = CovariantProgram(pool, root)
            expr = format_program(program, labels)
            labels.setdefault(root, label)
            cat._add(CatalogEntry(label, n, expr, program.degree, program.order, program))
        return cat

    def to_text(self, header: str | None = None) -> str:
        lines = [f"# {header}"] if header else []
        lines.append(f"n = {self.n}")
        degree = order = None
        labels: dict[int, str] = {}
        for e in self.entries:
            if e.degree != degree:
                degree, order = e.degree, None
                lines += ["", f"degree = {degree}"]
            if e.order != order:
                order = e.order
                lines.append(f"order = {order}")
            lines.append(f"{e.label} = {format_program(e.program, labels)}")
            labels.setdefault(e.program.root, e.label)
        return "\n".join(lines) + "\n"


class _ExprParser:
    def __init__(self, text: str, cat: Catalog, line: int) -> None:
        self.cat = cat
        self.pool = cat.pool
        self.line = line
        self.tokens: list[str] = []
        for num, name, other in _TOKEN.findall(text):
            self.tokens.append(num or name or other)
        self.pos = 0

    def error(self, message: str) -> CatalogError:
        return CatalogError(message, self.line, self.cat.name)

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, expected: str | None = None) -> str:
        tok = self.peek()
        if tok is None:
            raise self.error("unexpected end of expression")
        if expected is not None and tok != expected:
            raise self.error(f"expected {expected!r}, got {tok!r}")
        self.pos += 1
        return tok

    def integer(self) -> int:
        tok = self.take()
        if not tok.isdigit():
            raise self.error(f"expected an integer, got {tok!r}")
        return int(tok)

    def parse(self) -> int:
        idx = self.expr()
        if self.peek() is not None:
            raise self.error(f"trailing input {self.peek()!r}")
        return idx

    def args(self) -> list[int]:
        out = [self.expr()]
        while self.peek() == ",":
            self.take(",")
            out.append(self.expr())
        return out

    def expr(self) -> int:
        tok = self.take()
        if tok == "f":
            return 0
        if tok in ("tr", "mul", "pow", "sum"):
            self.take("(")
            try:
                if tok == "tr":
                    left = self.expr()
                    self.take(",")
                    right = self.expr()
                    self.take(",")
                    idx = self.pool.transvect(left, right, self.integer())
                elif tok == "pow":
                    base = self.expr()
                    self.take(",")
                    idx = self.pool.power(base, self.integer())
                elif tok == "mul":
                    idx = self.pool.product([(a, 1) for a in self.args()])
                else:
                    idx = self.pool.add(*self.args())
            except ValueError as exc:
                if isinstance(exc, CatalogError):
                    raise
                raise self.error(str(exc)) from None
            self.take(")")
            return idx
        if tok in self.cat:
            return self.cat.program(tok).root
        if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_']*", tok):
            raise self.error(f"undefined label {tok!r}")
        raise self.error(f"unexpected token {tok!r}")


def parse_catalog(text: str, n: int | None = None, *, name: str = "<string>") -> Catalog:
    """Parse catalog DSL text.

    One entry per line, `label = expr` with expr one of `f`, a previously
    defined label, `tr(e, e, r)`, `mul(e, e)`, `pow(e, k)`, `sum(e, e)`.
    The pragmas `n = ...`, `degree = ...` and `order = ...` set the form
    degree and the declared bidegree checked against each following entry;
    `degree` clears the declared order.
    """

    cat: Catalog | None = None if n is None else Catalog(n, ProgramPool(n), [], name)
    degree: int | None = None
    order: int | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        match = _ASSIGN.match(line)
        if not match:
            raise CatalogError(f"cannot parse {line!r}", lineno, name)
        key, value = match.group(1), match.group(2).strip()

        if key in ("n", "degree", "order"):
            if not value.isdigit():
                raise CatalogError(f"{key} must be a nonnegative integer", lineno, name)
            number = int(value)
            if key == "n":
                if cat is not None and cat.entries:
                    raise CatalogError("n must precede the entries", lineno, name)
                if cat is not None and cat.n != number:
                    raise CatalogError(f"file is for n={number}, expected n={cat.n}", lineno, name)
                if cat is None:
                    if number < 1:
                        raise CatalogError("n must be >= 1", lineno, name)
                    cat = Catalog(number, ProgramPool(number), [], name)
            elif key == "degree":
                degree, order = number, None
            else:
                order = number
            continue

        if key in _RESERVED:
            raise CatalogError(f"{key!r} is reserved", lineno, name)
        if cat is None:
            raise CatalogError("missing 'n = ...' header", lineno, name)
        if key in cat:
            raise CatalogError(f"label {key!r} defined twice", lineno, name)

        idx = _ExprParser(value, cat, lineno).parse()
        program = CovariantProgram(cat.pool, idx)
        d, m = program.degree, program.order
        if degree is not None and d != degree:
            raise CatalogError(f"{key} has degree {d}, declared {degree}", lineno, name)
        if order is not None and m != order:
            raise CatalogError(f"{key} has order {m}, declared {order}", lineno, name)
        cat._add(CatalogEntry(key, cat.n, value, d, m, program, lineno))

    if cat is None:
        raise CatalogError("missing 'n = ...' header", None, name)
    return cat


def _catalog_dir(explicit: str | os.PathLike[str] | None = None) -> Path | None:
    return _resolve_dir(explicit, CATALOG_DIR_ENV, None)


def read_data_text(filename: str, catalog_dir: str | os.PathLike[str] | None = None) -> str:
    """Text of a data file, from the override directory when it has one."""

    override = _catalog_dir(catalog_dir)
    if override is not None:
        candidate = override / filename
        if candidate.is_file():
            return candidate.read_text(encoding="utf-8")
    return resources.files("binary_covariants.data").joinpath(filename).read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def _load_catalog_cached(name: str, override: str | None) -> Catalog:
    return parse_catalog(read_data_text(f"{name}.cat", override), name=f"{name}.cat")


def load_catalog(name: str, catalog_dir: str | os.PathLike[str] | None = None) -> Catalog:
    """Load a shipped catalog by name (`nonic`, `decimic`, `sextic`, ...), cached per process."""

    override = _catalog_dir(catalog_dir)
    return _load_catalog_cached(name, None if override is None else str(override))


def load_basis(n: int, catalog_dir: str | os.PathLike[str] | None = None) -> Catalog:
    """Minimal basis of the covariants of the binary n-ic.

    Shipped for n in {6, 8, 9, 10}; computed with Olver's algorithm for n <= 5.
    """

    if n in CATALOG_FOR_N:
        return load_catalog(CATALOG_FOR_N[n], catalog_dir)
    if n in _SMALL_DMAX:
        return _small_basis(n)
    raise CatalogError(f"no basis available for n={n}")


@lru_cache(maxsize=None)
def _small_basis(n: int) -> Catalog:
    from .gordan import olver_candidate_basis

    family = olver_candidate_basis(n, _SMALL_DMAX[n], progress=False)
    return Catalog.from_programs(n, family.members, name=f"olver-{n}")


def hsop_programs(
    n: int,
    catalog_dir: str | os.PathLike[str] | None = None,
) -> list[tuple[str, CovariantProgram, int]]:
    """All h.s.o.p. construction programs for n in {9, 10}: (label, program, degree)."""

    if n not in HSOP_FOR_N:
        raise CatalogError(f"no h.s.o.p. data for n={n}")
    cat = load_catalog(HSOP_FOR_N[n], catalog_dir)
    return [(e.label, e.program, e.degree) for e in cat]


def hsop_parameters(
    n: int,
    catalog_dir: str | os.PathLike[str] | None = None,
) -> list[tuple[str, CovariantProgram, int]]:
    """The invariants (p*, q*) of the h.s.o.p., sorted by degree."""

    params = [item for item in hsop_programs(n, catalog_dir) if item[1].order == 0]
    return sorted(params, key=lambda item: item[2])


def load_bound_data(n: int, catalog_dir: str | os.PathLike[str] | None = None) -> dict[str, Any]:
    """Candidate h.s.o.p. degrees, reduction degrees and published bounds for n."""

    data = json.loads(read_data_text("bounds.json", catalog_dir))
    if data.get("version") != 1:
        raise CatalogError(f"unsupported bounds.json version {data.get('version')!r}")
    try:
        return data[str(n)]
    except KeyError:
        raise CatalogError(f"no bound data for n={n}") from None


@dataclass
class CatalogTable:
    """Generator counts per (degree, order) cell."""

    counts: dict[tuple[int, int], int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def rows(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for (d, _), c in self.counts.items():
            out[d] = out.get(d, 0) + c
        return dict(sorted(out.items()))

    def columns(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for (_, m), c in self.counts.items():
            out[m] = out.get(m, 0) + c
        return dict(sorted(out.items()))

    def cumulative(self) -> dict[int, int]:
        running = 0
        out = {}
        for d, c in self.rows().items():
            running += c
            out[d] = running
        return out

    def to_json(self) -> dict[str, Any]:
        cum = self.cumulative()
        return {
            "total": self.total,
            "columns": {str(m): c for m, c in self.columns().items()},
            "rows": [
                {
                    "degree": d,
                    "total": c,
                    "cumulative": cum[d],
                    "cells": {str(m): k for (dd, m), k in sorted(self.counts.items()) if dd == d},
                }
                for d, c in self.rows().items()
            ],
        }


def table_counts(entries: Iterable[CatalogEntry] | Sequence[CovariantProgram]) -> CatalogTable:
    table = CatalogTable()
    for e in entries:
        key = (e.degree, e.order)
        table.counts[key] = table.counts.get(key, 0) + 1
    return table
