from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

from ._helpers import _jsonable
from .rankcheck import BUDGET_FACTOR, FORMS_SLACK, ROWS_SLACK
from .scalar_forms import DEFAULT_PRIME

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCOMPLETE = 2


@dataclass(frozen=True)
class RunConfig:
    """Settings shared by every subcommand; recorded in each JSON artifact."""

    prime: int = DEFAULT_PRIME
    seed: int = 0
    workers: int | None = None
    truncation: int | None = None
    budget_factor: int = BUDGET_FACTOR
    rows_slack: int = ROWS_SLACK
    forms_slack: int = FORMS_SLACK
    catalog_dir: str | None = None
    ledger_dir: str | None = None

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        if out["workers"] is None:
            out["workers"] = os.cpu_count() or 1
        return out

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> RunConfig:
        return cls(
            prime=args.prime,
            seed=args.seed,
            workers=args.workers,
            truncation=args.truncation,
            budget_factor=args.budget_factor,
            rows_slack=args.rows_slack,
            forms_slack=args.forms_slack,
            catalog_dir=args.catalog_dir,
            ledger_dir=args.ledger_dir,
        )


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _cell(text: str) -> tuple[int, int]:
    values = _int_list(text)
    if len(values) != 2:
        raise argparse.ArgumentTypeError(f"expected d,m, got {text!r}")
    return values[0], values[1]


def _emit(args: argparse.Namespace, config: RunConfig, result: dict[str, Any], lines: Sequence[str]) -> None:
    if args.json:
        payload = {"command": args.command, "config": config.to_dict(), **result}
        print(json.dumps(_jsonable(payload), indent=2, sort_keys=True))
    else:
        for line in lines:
            print(line)


def _write_json(path: str | os.PathLike[str], config: RunConfig, result: dict[str, Any]) -> None:
    from .ledger import _atomic_write_text

    text = json.dumps(_jsonable({"config": config.to_dict(), **result}), indent=2, sort_keys=True)
    if not _atomic_write_text(Path(path), text):
        raise OSError(f"could not write {path}")


# subcommands


def cmd_dim(args: argparse.Namespace, config: RunConfig) -> int:
    from .hilbert import quotient_dim, springer_dim

    if args.reduce:
        value = quotient_dim(args.n, args.d, args.m, args.reduce)
    else:
        value = springer_dim(args.n, args.d, args.m)
    result = {"n": args.n, "d": args.d, "m": args.m, "reduction": list(args.reduce or ()), "dim": value}
    _emit(args, config, result, [str(value)])
    return EXIT_OK


def cmd_dioph(args: argparse.Namespace, config: RunConfig) -> int:
    from .diophantine import DiophSystem, brute_force_basis, companion, expansion_count, hilbert_basis

    if args.n is not None:
        from .gordan import b_family, seed_family, solve_step
        from .program import ProgramPool

        pool = ProgramPool(args.n)
        step = solve_step(seed_family(args.n, 2, pool), b_family(args.n, 3, pool, config.catalog_dir))
        system, merged, solutions = step.system, step.merged, step.solutions
    else:
        if not args.lhs1 or not args.lhs2:
            raise ValueError("give --n or both --lhs1 and --lhs2")
        system = DiophSystem(tuple(args.lhs1), tuple(args.lhs2))
        merged = companion(system)
        solutions = hilbert_basis(merged)

    expanded = expansion_count(solutions, merged)
    result: dict[str, Any] = {
        "lhs1": list(system.lhs1),
        "lhs2": list(system.lhs2),
        "companion": {"lhs1": list(merged.lhs1), "mult1": list(merged.mult1),
                      "lhs2": list(merged.lhs2), "mult2": list(merged.mult2)},
        "solutions": len(solutions),
        "expanded": expanded,
    }
    lines = [f"solutions {len(solutions)}", f"expanded {expanded}"]
    status = EXIT_OK
    if args.n is None:
        result["basis"] = [list(s.as_vector()) for s in solutions]
        lines += [" ".join(map(str, s.as_vector())) for s in solutions]
        small = len(merged.lhs1) + len(merged.lhs2) <= 4 and max(merged.lhs1 + merged.lhs2) <= 6
        if small:
            agree = brute_force_basis(merged) == solutions
            result["brute_force_agrees"] = agree
            lines.append(f"brute force {'agrees' if agree else 'DISAGREES'}")
            status = EXIT_OK if agree else EXIT_INCOMPLETE
    _emit(args, config, result, lines)
    return status


def _reduction_degrees(args: argparse.Namespace, n: int) -> tuple[int, ...]:
    from .gordan import _default_reduction_degrees

    if args.reduce == "none":
        return ()
    if args.reduce == "default":
        return () if args.cell else _default_reduction_degrees(n)
    return _int_list(args.reduce)


def cmd_verify_catalog(args: argparse.Namespace, config: RunConfig) -> int:
    from .catalog import load_basis, table_counts
    from .gordan import cell_target, reduction_for, verify_cells
    from .ledger import open_ledger

    n = args.n
    basis = load_basis(n, config.catalog_dir)
    degrees = _reduction_degrees(args, n)
    if args.cell:
        wanted = list(dict.fromkeys(args.cell))
    else:
        wanted = sorted(table_counts(basis.entries).counts)

    groups: dict[tuple[int, ...], list[tuple[int, int, int]]] = {}
    for d, m in wanted:
        target, red = cell_target(n, d, m, degrees)
        if args.cell or 0 < target <= args.max_dim:
            groups.setdefault(red, []).append((d, m, target))

    ledger = None
    if not args.no_ledger:
        ledger = open_ledger(f"verify-n{n}", config.ledger_dir)
        ledger.set_config(config.to_dict())
    records = []
    for red, cells in groups.items():
        cells.sort(key=lambda c: (c[2], c[0], c[1]))
        records += verify_cells(
            n, cells, basis,
            reduction=reduction_for(n, red, config.prime, config.catalog_dir),
            seed=config.seed,
            workers=config.workers,
            ledger=ledger,
            resume=args.resume,
            budget_factor=config.budget_factor,
            rows_slack=config.rows_slack,
            forms_slack=config.forms_slack,
            progress=args.progress,
        )
    complete = sum(1 for r in records if r.get("status") == "complete")
    lines = [
        f"cell {r['cell'][0]},{r['cell'][1]} rank {r['achieved_rank']}/{r['target_dim']} {r['status']}"
        for r in records
    ]
    lines.append(f"{complete}/{len(records)} cells complete")
    result = {"n": n, "cells": records, "complete": complete, "total": len(records)}
    if ledger is not None:
        result["ledger"] = str(ledger.path)
    _emit(args, config, result, lines)
    return EXIT_OK if complete == len(records) else EXIT_INCOMPLETE


def _table_lines(table: Any) -> list[str]:
    cum = table.cumulative()
    lines = [f"degree {d}: {c} (cumulative {cum[d]})" for d, c in table.rows().items()]
    lines.append("orders " + " ".join(f"{m}:{c}" for m, c in table.columns().items()))
    lines.append(f"total {table.total}")
    return lines


def cmd_olver(args: argparse.Namespace, config: RunConfig) -> int:
    from .catalog import Catalog, table_counts
    from .gordan import olver_candidate_basis

    family = olver_candidate_basis(args.n, args.dmax, seed=config.seed, prime=config.prime, progress=args.progress)
    cat = Catalog.from_programs(args.n, family.members, name=f"olver-{args.n}")
    table = table_counts(cat.entries)
    if args.out:
        from .ledger import _atomic_write_text

        header = f"Candidate basis of the binary form of degree {args.n}, degrees <= {args.dmax}"
        if not _atomic_write_text(Path(args.out), cat.to_text(header)):
            raise OSError(f"could not write {args.out}")
    result = {"n": args.n, "dmax": args.dmax, "generators": len(cat), "table": table.to_json()}
    _emit(args, config, result, [f"generators {len(cat)}", *_table_lines(table)])
    return EXIT_OK


def cmd_bounds(args: argparse.Namespace, config: RunConfig) -> int:
    from .hilbert import bound_table

    table = bound_table(args.n, use_published=not args.computed_only, truncation=config.truncation)
    lines = []
    for m in sorted(table.entries):
        hsop = table.hsop.get(m)
        lines.append(
            f"m={m} bound={table.entries[m]} computed={table.computed.get(m)} "
            f"published={table.published.get(m)} hsop={','.join(map(str, hsop)) if hsop else '-'}"
        )
    _emit(args, config, table.to_json(), lines)
    return EXIT_OK


def cmd_plan(args: argparse.Namespace, config: RunConfig) -> int:
    from .gordan import b_family, plan_cells, seed_family, solve_step
    from .hilbert import bound_table
    from .program import ProgramPool
    from .relations import load_relations

    n = args.n
    pool = ProgramPool(n)
    step = solve_step(seed_family(n, 2, pool), b_family(n, 3, pool, config.catalog_dir))
    bounds = None if args.no_bounds else bound_table(n, truncation=config.truncation)
    relations = None
    if not args.no_relations:
        if args.relations:
            from .relations import RelationSet

            relations = RelationSet.from_json(json.loads(Path(args.relations).read_text(encoding="utf-8")))
        elif n == 9:
            relations = load_relations("sextic", config.catalog_dir)
    plan = plan_cells(step, bounds, relations, prime=config.prime)
    result = {"solutions": len(step.solutions), "plan": plan.to_json()}
    if args.out:
        _write_json(args.out, config, result)
    lines = [
        f"solutions {len(step.solutions)}",
        f"cells {len(plan)}",
        f"transvectants {plan.total_transvectants}",
    ]
    if len(plan):
        largest = plan.cells[-1]
        lines.append(f"largest cell {largest.d},{largest.m} target {largest.target_dim}")
    _emit(args, config, result, lines)
    return EXIT_OK


def cmd_relations(args: argparse.Namespace, config: RunConfig) -> int:
    from .catalog import load_catalog
    from .relations import discover_relations, dump_relations, load_relations

    if args.discover:
        rs = discover_relations(
            load_catalog(args.basis, config.catalog_dir),
            args.e_max,
            basis=args.basis,
            pairs=not args.powers_only,
            prime=config.prime,
            seed=config.seed,
            progress=args.progress,
        )
    else:
        rs = load_relations(args.basis, config.catalog_dir)
    if args.out and not dump_relations(rs, args.out):
        raise OSError(f"could not write {args.out}")
    lines = [str(r) for r in rs]
    lines.append(f"{len(rs.power)} power relations, {len(rs.pairs)} pair relations")
    _emit(args, config, rs.to_json(), lines)
    return EXIT_OK


def cmd_catalog(args: argparse.Namespace, config: RunConfig) -> int:
    from .catalog import CATALOG_FOR_N, load_catalog, table_counts

    name = args.name or CATALOG_FOR_N.get(args.n)
    if name is None:
        raise ValueError("give --name or an --n with a shipped catalog")
    cat = load_catalog(name, config.catalog_dir)
    table = table_counts(cat.entries)
    invariants = table.columns().get(0, 0)
    result = {"name": name, "n": cat.n, "table": table.to_json(), "invariants": invariants}
    _emit(args, config, result, [f"{name}: n={cat.n}, {len(cat)} generators, {invariants} invariants", *_table_lines(table)])
    return EXIT_OK


def cmd_hsop(args: argparse.Namespace, config: RunConfig) -> int:
    import numpy as np

    from .catalog import HSOP_IDENTIFICATIONS, hsop_programs, load_basis
    from .program import evaluate, scale_free_compare
    from .scalar_forms import GF, random_form

    n = args.n
    ring = GF(config.prime)
    forms = random_form(n, ring, np.random.default_rng(config.seed), count=args.forms)
    programs = {label: (prog, degree) for label, prog, degree in hsop_programs(n, config.catalog_dir)}
    params = {label: item for label, item in programs.items() if label[0] in "pq"}
    lines = []
    ok = True
    rows = []
    for label, (prog, degree) in params.items():
        good = prog.order == 0 and prog.degree == degree
        ok &= good
        rows.append({"label": label, "degree": prog.degree, "order": prog.order, "ok": good})
        lines.append(f"{label}: degree {prog.degree} order {prog.order} {'ok' if good else 'MISMATCH'}")
    basis = load_basis(n, config.catalog_dir)
    idents = []
    for label, catalog_label in HSOP_IDENTIFICATIONS.get(n, {}).items():
        same = scale_free_compare(evaluate(programs[label][0], forms), evaluate(basis.program(catalog_label), forms))
        ok &= same
        idents.append({"hsop": label, "catalog": catalog_label, "agrees": same})
        lines.append(f"{label} ~ {catalog_label}: {'agrees' if same else 'DIFFERS'}")
    result = {"n": n, "parameters": rows, "identifications": idents, "ok": ok}
    _emit(args, config, result, lines)
    return EXIT_OK if ok else EXIT_INCOMPLETE


def cmd_gordan(args: argparse.Namespace, config: RunConfig) -> int:
    from .gordan import run_gordan

    run = run_gordan(args.n, seed=config.seed, prime=config.prime, progress=args.progress)
    lines = [
        f"k={s.step.k} {s.step.case}: {s.solutions} solutions, {s.transvectants} transvectants, "
        f"{s.cells} cells, family {s.family}"
        for s in run.steps
    ]
    lines.append(f"generators {len(run.basis)}")
    _emit(args, config, run.to_json(), lines)
    return EXIT_OK


# parser


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--prime", type=int, default=DEFAULT_PRIME, help="Prime for modular evaluation")
    p.add_argument("--seed", type=int, default=0, help="Run seed")
    p.add_argument("--workers", type=int, default=None, help="Worker processes (default: all cores)")
    p.add_argument("--truncation", type=int, default=None, help="Power-series truncation for Hilbert series")
    p.add_argument("--budget-factor", type=int, default=BUDGET_FACTOR, help="Draw budget per unit of target dimension")
    p.add_argument("--rows-slack", type=int, default=ROWS_SLACK, help="Extra rows drawn beyond the target")
    p.add_argument("--forms-slack", type=int, default=FORMS_SLACK, help="Extra sample forms beyond the target")
    p.add_argument("--catalog-dir", default=None, help="Directory overriding the shipped data files")
    p.add_argument("--ledger-dir", default=None, help="Directory for run ledgers")
    p.add_argument("--json", action="store_true", help="Machine-readable output")
    p.add_argument("--progress", action=argparse.BooleanOptionalAction, default=None, help="Progress bars")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    p = argparse.ArgumentParser(prog="binary-covariants", description="Gordan's algorithm toolkit for binary forms")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("dim", parents=[common], help="Dimension of Cov_{d,m}")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--reduce", type=_int_list, default=None, metavar="D1,D2,...",
                   help="Quotient by a regular sequence of invariants of these degrees")
    s.set_defaults(func=cmd_dim)

    s = sub.add_parser("dioph", parents=[common], help="Hilbert basis of a transvectant system")
    s.add_argument("--n", type=int, choices=(9, 10), default=None, help="The A_3 system of the nonic or decimic")
    s.add_argument("--lhs1", type=int, nargs="+", default=None)
    s.add_argument("--lhs2", type=int, nargs="+", default=None)
    s.set_defaults(func=cmd_dioph)

    s = sub.add_parser("verify", parents=[common], help="Rank-check catalog cells")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--max-dim", type=int, default=2000, help="Largest target dimension swept")
    s.add_argument("--cell", type=_cell, action="append", default=[], metavar="D,M")
    s.add_argument("--reduce", default="default", metavar="default|none|D1,D2,...")
    s.add_argument("--resume", action="store_true", help="Skip cells already complete in the ledger")
    s.add_argument("--no-ledger", action="store_true")
    s.set_defaults(func=cmd_verify_catalog)

    s = sub.add_parser("olver", parents=[common], help="Candidate basis with Olver's algorithm")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--dmax", type=int, required=True)
    s.add_argument("--out", default=None, help="Write the basis as a catalog file")
    s.set_defaults(func=cmd_olver)

    s = sub.add_parser("bounds", parents=[common], help="Degree bounds per order")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--computed-only", action="store_true", help="Ignore published values")
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("plan", parents=[common], help="Cells of the A_3 step")
    s.add_argument("--n", type=int, choices=(9, 10), required=True)
    s.add_argument("--no-bounds", action="store_true")
    s.add_argument("--no-relations", action="store_true")
    s.add_argument("--relations", default=None, help="Relation JSON file instead of the shipped one")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("relations", parents=[common], help="Monomial relations of a basis")
    s.add_argument("--basis", default="sextic")
    s.add_argument("--discover", action="store_true", help="Search instead of loading the shipped set")
    s.add_argument("--powers-only", action="store_true")
    s.add_argument("--e-max", type=int, default=12)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_relations)

    s = sub.add_parser("catalog", parents=[common], help="Per-cell generator counts of a catalog")
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--name", default=None)
    s.set_defaults(func=cmd_catalog)

    s = sub.add_parser("hsop", parents=[common], help="Check the h.s.o.p. programs")
    s.add_argument("--n", type=int, choices=(9, 10), required=True)
    s.add_argument("--forms", type=int, default=20)
    s.set_defaults(func=cmd_hsop)

    s = sub.add_parser("gordan", parents=[common], help="Full Gordan cycle for a small form")
    s.add_argument("--n", type=int, required=True)
    s.set_defaults(func=cmd_gordan)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config = RunConfig.from_args(args)
    if config.catalog_dir is not None:
        from .catalog import CATALOG_DIR_ENV

        os.environ[CATALOG_DIR_ENV] = config.catalog_dir
    func: Callable[[argparse.Namespace, RunConfig], int] = args.func
    try:
        return func(args, config)
    except (ValueError, RuntimeError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
