from __future__ import annotations

import math
import os
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Iterable, Iterator, Sequence

import numpy as np

from ._helpers import _progress, _warn_once
from .diophantine import (
    DiophSystem,
    MinimalSolution,
    companion,
    expand_solution,
    expand_to_transvectants,
    expansion_count,
    hilbert_basis,
)
from .hilbert import BoundTable, cohen_macaulay_limit, quotient_dim, springer_dim
from .ledger import Ledger
from .program import CovariantProgram, ProgramPool
from .rankcheck import (
    BUDGET_FACTOR,
    FORMS_SLACK,
    ROWS_SLACK,
    EvalMatrix,
    FormBank,
    Reduction,
    SpanCertificate,
    cell_seed,
    find_missing_from,
    forms_needed,
    verify_dimension,
)
from .relations import RelationSet
from .scalar_forms import DEFAULT_PRIME, HomPoly, mul, transvectant

__all__ = [
    "CellPlan",
    "Family",
    "FamilyError",
    "GordanRun",
    "IncompleteCellError",
    "PlannedCell",
    "ScheduleStep",
    "StepSolutions",
    "b_family",
    "cell_target",
    "build_A3_system",
    "build_system",
    "gordan_schedule",
    "olver_candidate_basis",
    "plan_cells",
    "reduce_family",
    "reduction_for",
    "run_gordan",
    "seed_families",
    "seed_family",
    "solve_step",
    "verify_cells",
]

Member = tuple[str, CovariantProgram]

# non-invariant B members of the A3 step: 26 - 5 (sextic), 69 - 9 (octic)
_A3_B_SIZE = {9: 21, 10: 60}

# product values kept by Olver's algorithm before the memo is reset
_PRODUCT_CACHE = 4096


class FamilyError(ValueError):
    """A family is requested outside the range where it is defined."""


class IncompleteCellError(RuntimeError):
    """Olver's candidates do not span a cell of the covariant algebra."""


@dataclass
class Family:
    """Labelled covariant programs: a Gordan family A_k, B_k or a candidate basis G."""

    kind: str
    members: list[Member] = field(default_factory=list)

    def __post_init__(self) -> None:
        labels = [label for label, _ in self.members]
        dup = [label for label, c in Counter(labels).items() if c > 1]
        if dup:
            raise FamilyError(f"duplicate labels in family {self.kind}: {', '.join(sorted(dup))}")

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[Member]:
        return iter(self.members)

    @property
    def labels(self) -> list[str]:
        return [label for label, _ in self.members]

    def programs(self) -> list[CovariantProgram]:
        return [prog for _, prog in self.members]

    def bidegrees(self) -> list[tuple[int, int]]:
        return [(prog.degree, prog.order) for _, prog in self.members]

    def noninvariants(self) -> Family:
        return Family(self.kind, [(label, prog) for label, prog in self.members if prog.order > 0])

    def invariants(self) -> Family:
        return Family(self.kind, [(label, prog) for label, prog in self.members if prog.order == 0])


# seed families


def seed_family(n: int, k: int, pool: ProgramPool | None = None) -> Family:
    """A_0 = {f}; A_1 = {f, H, T}; A_2 adds K, (f,K)_1, (f,K)_2, (H,K)_1. Sorted by order."""

    if k not in (0, 1, 2):
        raise FamilyError(f"no closed form for A_{k}")
    need = {0: 1, 1: 4, 2: 8}[k]
    if n < need:
        raise FamilyError(f"A_{k} is defined for n >= {need}, got n={n}")
    pool = pool or ProgramPool(n)
    if pool.n != n:
        raise FamilyError(f"pool is over binary forms of degree {pool.n}, not {n}")
    f = 0
    roots = [("f", f)]
    if k >= 1:
        h = pool.transvect(f, f, 2)
        roots += [("H", h), ("T", pool.transvect(f, h, 1))]
    if k >= 2:
        kk = pool.transvect(f, f, 4)
        roots += [
            ("K", kk),
            ("fK1", pool.transvect(f, kk, 1)),
            ("fK2", pool.transvect(f, kk, 2)),
            ("HK1", pool.transvect(roots[1][1], kk, 1)),
        ]
    members = [(label, pool.program(root)) for label, root in roots]
    members.sort(key=lambda item: (item[1].order, item[1].degree))
    return Family(f"A{k}", members)


def seed_families(n: int, pool: ProgramPool | None = None) -> tuple[Family, Family, Family]:
    pool = pool or ProgramPool(n)
    return seed_family(n, 0, pool), seed_family(n, 1, pool), seed_family(n, 2, pool)


def _ground_family(
    n: int,
    k: int,
    pool: ProgramPool,
    catalog_dir: str | os.PathLike[str] | None = None,
) -> tuple[Family, Family]:
    """Basis of S_m substituted at H_2k = (f, f)_2k, m = ord H_2k < n.

    Returns the non-invariant members and the invariant ones separately; the
    labels are those of the S_m basis.
    """

    from .catalog import CatalogError, load_basis

    order = 2 * n - 4 * k
    if not 0 < order < n:
        raise FamilyError(f"(f, f)_{2 * k} has order {order}; a substituted basis needs 0 < order < {n}")
    ground = pool.program(pool.transvect(0, 0, 2 * k))
    try:
        basis = load_basis(order, catalog_dir)
    except CatalogError as exc:
        raise FamilyError(f"no basis of binary forms of degree {order}") from exc
    from .program import substitute

    members = [(e.label, substitute(e.program, ground, pool)) for e in basis]
    family = Family(f"B{k}", members)
    return family.noninvariants(), family.invariants()


def b_family(
    n: int,
    k: int = 3,
    pool: ProgramPool | None = None,
    catalog_dir: str | os.PathLike[str] | None = None,
) -> Family:
    """Non-invariant covariants of H_2k = (f, f)_2k, i.e. the basis of S_{ord H_2k} evaluated at H_2k."""

    noninv, _ = _ground_family(n, k, pool or ProgramPool(n), catalog_dir)
    return noninv


# Diophantine step


def build_system(A: Family, B: Family) -> DiophSystem:
    """S(A, B): one unknown per member, coefficients are the member orders."""

    for fam in (A, B):
        inv = [label for label, prog in fam if prog.order == 0]
        if inv:
            raise FamilyError(f"invariants cannot enter a transvectant system: {', '.join(inv)}")
        if not len(fam):
            raise FamilyError(f"family {fam.kind} is empty")
    return DiophSystem(tuple(p.order for p in A.programs()), tuple(p.order for p in B.programs()))


def build_A3_system(n: int, B: Family | None = None, pool: ProgramPool | None = None) -> DiophSystem:
    """S(A_2, B_2) for the nonic (B from the sextic basis) or decimic (B from the octic basis)."""

    if n not in _A3_B_SIZE:
        raise FamilyError(f"the A_3 step is tabulated for n in (9, 10), got n={n}")
    pool = pool or (B.programs()[0].pool if B is not None and len(B) else ProgramPool(n))
    B = b_family(n, 3, pool) if B is None else B
    if len(B) != _A3_B_SIZE[n]:
        raise FamilyError(f"B family for n={n} must have {_A3_B_SIZE[n]} members, got {len(B)}")
    return build_system(seed_family(n, 2, pool), B)


@dataclass
class StepSolutions:
    """Minimal solutions of the injective companion of S(A, B), with the families."""

    A: Family
    B: Family
    system: DiophSystem
    merged: DiophSystem
    solutions: list[MinimalSolution]

    @property
    def n(self) -> int:
        return self.A.programs()[0].pool.n

    def groups(self) -> tuple[list[list[int]], list[list[int]]]:
        """Member indices behind each merged coefficient, per side."""

        def side(merged: Sequence[int], lhs: Sequence[int]) -> list[list[int]]:
            return [[i for i, a in enumerate(lhs) if a == c] for c in merged]

        return side(self.merged.lhs1, self.system.lhs1), side(self.merged.lhs2, self.system.lhs2)

    def expansion_count(self) -> int:
        return expansion_count(self.solutions, self.merged)

    def transvectants(self, pool: ProgramPool | None = None) -> Iterator[CovariantProgram]:
        """Every transvectant of the original system; only sensible for small families."""

        A, B = self.A.programs(), self.B.programs()
        for sol in self.solutions:
            for expanded in expand_solution(sol, self.merged, self.system):
                yield expand_to_transvectants(expanded, A, B, pool)


def solve_step(A: Family, B: Family) -> StepSolutions:
    A, B = A.noninvariants(), B.noninvariants()
    system = build_system(A, B)
    merged = companion(system)
    return StepSolutions(A, B, system, merged, hilbert_basis(merged))


# cell planning


@lru_cache(maxsize=None)
def _multiset_degree_counts(degrees: tuple[int, ...], k: int) -> tuple[tuple[int, int], ...]:
    """(degree sum, number of k-multisets of members with that sum)."""

    # coefficient of y^k in prod_j 1 / (1 - y z^deg_j)
    poly: list[dict[int, int]] = [{0: 1}] + [{} for _ in range(k)]
    for dg in degrees:
        for j in range(1, k + 1):
            row = poly[j]
            for s, c in poly[j - 1].items():
                row[s + dg] = row.get(s + dg, 0) + c
    return tuple(sorted(poly[k].items()))


def _side_distribution(exponents: Sequence[int], groups: Sequence[Sequence[int]], degrees: Sequence[int]) -> dict[int, int]:
    dist = {0: 1}
    for k, group in zip(exponents, groups):
        if not k:
            continue
        counts = _multiset_degree_counts(tuple(degrees[i] for i in group), k)
        nxt: dict[int, int] = {}
        for a, c in dist.items():
            for b, c2 in counts:
                nxt[a + b] = nxt.get(a + b, 0) + c * c2
        dist = nxt
    return dist


def _multisets(members: Sequence[int], k: int, start: int = 0) -> Iterator[tuple[int, ...]]:
    if k == 0:
        yield ()
        return
    for i in range(start, len(members)):
        for rest in _multisets(members, k - 1, i):
            yield (members[i],) + rest


@dataclass
class PlannedCell:
    d: int
    m: int
    transvectants: int
    target_dim: int
    reduction: tuple[int, ...] = ()
    status: str = "planned"

    def to_json(self) -> dict[str, Any]:
        return {
            "cell": [self.d, self.m],
            "transvectants": self.transvectants,
            "target_dim": self.target_dim,
            "reduction": list(self.reduction),
            "status": self.status,
        }


@dataclass
class CellPlan:
    """Cells (d, m) reached by a Gordan step, smallest target dimension first."""

    n: int
    cells: list[PlannedCell] = field(default_factory=list)
    prime: int = DEFAULT_PRIME
    filters: dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.cells)

    def __iter__(self) -> Iterator[PlannedCell]:
        return iter(self.cells)

    @property
    def total_transvectants(self) -> int:
        return sum(c.transvectants for c in self.cells)

    def cell(self, d: int, m: int) -> PlannedCell:
        for c in self.cells:
            if (c.d, c.m) == (d, m):
                return c
        raise KeyError((d, m))

    def keys(self) -> set[tuple[int, int]]:
        return {(c.d, c.m) for c in self.cells}

    def to_json(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "prime": self.prime,
            "filters": dict(self.filters),
            "cells_count": len(self.cells),
            "transvectants": self.total_transvectants,
            "max_target_dim": max((c.target_dim for c in self.cells), default=0),
            "cells": [c.to_json() for c in self.cells],
        }


def plan_cells(
    solutions: StepSolutions,
    bounds: BoundTable | None = None,
    relations: RelationSet | None = None,
    *,
    reduction_degrees: Sequence[int] | None = None,
    prime: int = DEFAULT_PRIME,
) -> CellPlan:
    """Group the transvectants of a step by (degree, order), then filter and sort.

    A transvectant (U, V)_r with U a product over A and V a product over B is
    kept when its cell passes `bounds` and no relation divides the monomial of
    V. Without relations the counts come from generating polynomials;
    with relations the V-monomials are enumerated with degree pruning.
    """

    n = solutions.n
    a_groups, b_groups = solutions.groups()
    a_deg = [p.degree for p in solutions.A.programs()]
    b_deg = [p.degree for p in solutions.B.programs()]
    b_labels = solutions.B.labels
    rels = list(relations or [])
    by_label: dict[str, list[Any]] = {}
    for rel in rels:
        for label in rel.labels:
            by_label.setdefault(label, []).append(rel)

    def bound_for(m: int) -> float | None:
        if bounds is None:
            return math.inf
        if m not in bounds.entries:
            return None
        return bounds.entries[m]

    counts: Counter[tuple[int, int]] = Counter()
    for sol in solutions.solutions:
        m = sol.order
        limit = bound_for(m)
        if limit is None:
            continue
        a_dist = _side_distribution(sol.alpha, a_groups, a_deg)
        if not rels:
            b_dist = _side_distribution(sol.beta, b_groups, b_deg)
            for da, ca in a_dist.items():
                for db, cb in b_dist.items():
                    if da + db <= limit:
                        counts[(da + db, m)] += ca * cb
            continue

        da_min = min(a_dist)
        parts = [(b_groups[j], k) for j, k in enumerate(sol.beta) if k]
        monomial: Counter[str] = Counter()

        def rec(pi: int, deg: int) -> None:
            if deg + da_min > limit:
                return
            if pi == len(parts):
                for da, ca in a_dist.items():
                    if da + deg <= limit:
                        counts[(da + deg, m)] += ca
                return
            group, k = parts[pi]
            for ms in _multisets(group, k):
                for i in ms:
                    monomial[b_labels[i]] += 1
                touched = {b_labels[i] for i in ms}
                if not any(r.divides(monomial) for label in touched for r in by_label.get(label, ())):
                    rec(pi + 1, deg + sum(b_deg[i] for i in ms))
                for i in ms:
                    monomial[b_labels[i]] -= 1

        rec(0, 0)

    if reduction_degrees is None:
        reduction_degrees = _default_reduction_degrees(n)
    cells = []
    for (d, m), count in counts.items():
        if not count:
            continue
        target, red = cell_target(n, d, m, reduction_degrees)
        cells.append(PlannedCell(d, m, count, target, red))
    cells.sort(key=lambda c: (c.target_dim, c.d, c.m))
    filters = {
        "bounds": bounds is not None,
        "relations": relations.basis if isinstance(relations, RelationSet) else bool(rels),
        "reduction": list(reduction_degrees),
    }
    return CellPlan(n, cells, prime, filters)


def cell_target(n: int, d: int, m: int, reduction_degrees: Sequence[int] = ()) -> tuple[int, tuple[int, ...]]:
    """Target dimension of cell (d, m) and the reduction degrees that apply to it.

    A reduction only applies below the Cohen-Macaulay order limit.
    """

    red = tuple(reduction_degrees) if m < cohen_macaulay_limit(n) else ()
    return quotient_dim(n, d, m, red), red


def _default_reduction_degrees(n: int) -> tuple[int, ...]:
    from .catalog import CatalogError, load_bound_data

    try:
        return tuple(load_bound_data(n).get("reduction") or ())
    except CatalogError:
        return ()


def reduction_for(
    n: int,
    degrees: Sequence[int] | None = None,
    prime: int = DEFAULT_PRIME,
    catalog_dir: str | os.PathLike[str] | None = None,
) -> Reduction:
    """Reduction modulo the h.s.o.p. invariants of the given degrees (default: the shipped prefix)."""

    from .catalog import hsop_parameters

    degrees = tuple(_default_reduction_degrees(n) if degrees is None else degrees)
    if not degrees:
        return Reduction(prime)
    params = list(hsop_parameters(n, catalog_dir))
    zeroify = []
    for dg in degrees:
        pick = next((item for item in params if item[2] == dg), None)
        if pick is None:
            raise ValueError(f"no unused h.s.o.p. invariant of degree {dg} for n={n}")
        params.remove(pick)
        zeroify.append((pick[0], pick[1]))
    return Reduction(prime, degrees, tuple(zeroify))


# Olver's algorithm


def _olver_nforms(n: int, d_max: int) -> int:
    need = 1
    for d in range(2, d_max + 1):
        for m in range(n * d + 1):
            dim = springer_dim(n, d, m)
            if dim:
                need = max(need, forms_needed(dim, m))
    return need


def _products(
    gens: Sequence[tuple[int, int]],
    d: int,
    allowed: Sequence[bool] | None = None,
) -> Iterator[tuple[int, ...]]:
    """Multisets of generator indices (non-decreasing) whose degrees sum to d."""

    cur: list[int] = []

    def rec(start: int, rem: int) -> Iterator[tuple[int, ...]]:
        if rem == 0:
            yield tuple(cur)
            return
        for g in range(start, len(gens)):
            if gens[g][0] > rem or (allowed is not None and not allowed[g]):
                continue
            cur.append(g)
            yield from rec(g, rem - gens[g][0])
            cur.pop()

    yield from rec(0, d)


def olver_candidate_basis(
    n: int,
    d_max: int,
    *,
    seed: int = 0,
    prime: int = DEFAULT_PRIME,
    progress: bool | None = None,
) -> Family:
    """Candidate minimal basis G of the covariants of degree <= d_max.

    For each degree d and order m (descending), products of earlier generators
    are adjoined while they raise the rank of the cell; then transvectants
    (F, f)_r with F a product of non-invariant generators of degree d - 1 (each
    factor of degree >= 2 once d > 2) are tried, and those outside the span
    become new generators. Spans are tested on the first forms of a shared
    form bank; a cell left short of its dimension is redone on a disjoint
    slice of forms before giving up.
    """

    if n < 1:
        raise FamilyError(f"binary forms need n >= 1, got {n}")
    if d_max < 1:
        raise FamilyError(f"d_max must be >= 1, got {d_max}")
    pool = ProgramPool(n)
    nforms = _olver_nforms(n, d_max)
    bank = FormBank(n, prime, (), seed)
    forms = bank.take(2 * nforms)
    gens: list[tuple[int, int]] = [(1, n)]  # (degree, order)
    roots = [0]
    values: list[HomPoly] = [forms]
    cache: dict[tuple[int, ...], HomPoly] = {}

    def product_value(mono: tuple[int, ...]) -> HomPoly:
        if len(mono) == 1:
            return values[mono[0]]
        hit = cache.get(mono)
        if hit is None:
            if len(cache) >= _PRODUCT_CACHE:
                cache.clear()
            hit = mul(product_value(mono[:-1]), values[mono[-1]])
            cache[mono] = hit
        return hit

    def order_of(mono: tuple[int, ...]) -> int:
        return sum(gens[g][1] for g in mono)

    def fill_cell(d: int, m: int, dim: int, products: list[tuple[int, ...]], pi: list[tuple[int, ...]], window: slice) -> tuple[int, list[tuple[tuple[int, ...], int, HomPoly]]]:
        k = window.stop - window.start
        matrix = EvalMatrix(prime, k * (m + 1))

        def vector(value: HomPoly) -> np.ndarray:
            return np.ascontiguousarray(value.coeffs[window]).reshape(-1)

        for mono in products:
            if matrix.rank >= dim:
                break
            matrix.add_row(vector(product_value(mono)))
        found = []
        for mono in pi:
            if matrix.rank >= dim:
                break
            mf = order_of(mono)
            twice_r = mf + n - m
            if twice_r % 2 or not 0 <= twice_r // 2 <= min(mf, n):
                continue
            r = twice_r // 2
            value = transvectant(product_value(mono), forms, r)
            if matrix.add_row(vector(value)):
                found.append((mono, r, value))
        return matrix.rank, found

    for d in _progress(range(2, d_max + 1), desc=f"olver n={n}", enabled=progress):
        by_order: dict[int, list[tuple[int, ...]]] = {}
        for mono in _products(gens, d):
            by_order.setdefault(order_of(mono), []).append(mono)
        allowed = [gm > 0 and (gd >= 2 or d == 2) for gd, gm in gens]
        pi = list(_products(gens, d - 1, allowed))
        new: list[tuple[int, int, int, HomPoly]] = []
        for m in range(n * d, -1, -1):
            dim = springer_dim(n, d, m)
            if not dim:
                continue
            k = forms_needed(dim, m)
            products = by_order.get(m, [])
            rank, found = fill_cell(d, m, dim, products, pi, slice(0, k))
            if rank < dim:
                rank, found = fill_cell(d, m, dim, products, pi, slice(nforms, nforms + k))
            if rank < dim:
                raise IncompleteCellError(f"cell ({d}, {m}) of S_{n}: rank {rank} < {dim}")
            for mono, r, value in found:
                left = pool.product(Counter(roots[g] for g in mono).items())
                new.append((pool.transvect(left, 0, r), d, m, value))
        for root, dd, mm, value in new:
            gens.append((dd, mm))
            roots.append(root)
            values.append(value)
    members = [(f"c{i + 1}", pool.program(root)) for i, root in enumerate(roots)]
    return Family("G", members)


@lru_cache(maxsize=8)
def _olver_cached(n: int, d_max: int, seed: int, prime: int) -> Family:
    return olver_candidate_basis(n, d_max, seed=seed, prime=prime, progress=False)


# Gordan's cycle


def reduce_family(A_k: Iterable[Any], G: Family, kind: str = "A'") -> Family:
    """Members of G dominated by some element of A_k in both degree and order.

    `A_k` holds programs or (degree, order) pairs.
    """

    cells = set()
    for item in A_k:
        if isinstance(item, tuple):
            cells.add((int(item[0]), int(item[1])))
        else:
            cells.add((item.degree, item.order))
    if not cells:
        return Family(kind, [])
    kept = [
        (label, prog)
        for label, prog in G
        if any(prog.degree <= d and prog.order <= m for d, m in cells)
    ]
    return Family(kind, kept)


@dataclass(frozen=True)
class ScheduleStep:
    """Step k of Gordan's cycle, driven by H_2k = (f, f)_2k.

    case: "above" (ord H_2k > n, B = {H_2k}), "delta" (ord H_2k = n, B = {H_2k}
    and the invariant ((f, f)_{n/2}, f)_n), "below" (ord H_2k < n, B = basis of
    S_{ord} at H_2k) or "invariant" (ord H_2k = 0, n even: H_n is adjoined).
    """

    k: int
    ground_order: int
    case: str

    @property
    def ground(self) -> str:
        return f"tr(f, f, {2 * self.k})"

    def to_json(self) -> dict[str, Any]:
        return {"k": self.k, "ground": self.ground, "ground_order": self.ground_order, "case": self.case}


def gordan_schedule(n: int) -> list[ScheduleStep]:
    if n < 1:
        raise FamilyError(f"binary forms need n >= 1, got {n}")
    steps = []
    for k in range(1, n // 2 + 1):
        order = 2 * n - 4 * k
        if order > n:
            case = "above"
        elif order == n:
            case = "delta"
        elif order > 0:
            case = "below"
        else:
            case = "invariant"
        steps.append(ScheduleStep(k, order, case))
    return steps


def _step_families(n: int, step: ScheduleStep, pool: ProgramPool) -> tuple[Family, list[CovariantProgram]]:
    h = pool.transvect(0, 0, 2 * step.k)
    if step.case == "above":
        return Family(f"B{step.k}", [(f"H{2 * step.k}", pool.program(h))]), []
    if step.case == "delta":
        delta = pool.transvect(pool.transvect(0, 0, n // 2), 0, n)
        return Family(f"B{step.k}", [(f"H{2 * step.k}", pool.program(h))]), [pool.program(delta)]
    if step.case == "below":
        noninv, inv = _ground_family(n, step.k, pool)
        return noninv, inv.programs()
    return Family(f"B{step.k}", []), [pool.program(h)]


@dataclass
class StepReport:
    step: ScheduleStep
    solutions: int = 0
    transvectants: int = 0
    cells: int = 0
    family: int = 0
    added: int = 0

    def to_json(self) -> dict[str, Any]:
        return {
            **self.step.to_json(),
            "solutions": self.solutions,
            "transvectants": self.transvectants,
            "cells": self.cells,
            "family": self.family,
            "added": self.added,
        }


@dataclass
class GordanRun:
    n: int
    basis: Family
    steps: list[StepReport] = field(default_factory=list)

    def to_json(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "generators": len(self.basis),
            "labels": self.basis.labels,
            "steps": [s.to_json() for s in self.steps],
        }


def run_gordan(
    n: int,
    *,
    seed: int = 0,
    prime: int = DEFAULT_PRIME,
    progress: bool | None = None,
) -> GordanRun:
    """Run every step of Gordan's cycle for a small binary form.

    Each step solves S(A_{k-1}, B_{k-1}), expands all transvectants, checks
    every non-zero cell they reach against Olver's candidate basis G and
    replaces A_k by the members of G dominated by those cells (plus any
    transvectant found outside their span).
    """

    pool = ProgramPool(n)
    current = Family("A0", [("f", pool.f)])
    kept_invariants: dict[str, CovariantProgram] = {}
    run = GordanRun(n, current)
    extra = 0
    for step in gordan_schedule(n):
        report = StepReport(step)
        B, invariants = _step_families(n, step, pool)
        transvectants: list[CovariantProgram] = list(invariants)
        noninv = current.noninvariants()
        if len(B) and len(noninv):
            solved = solve_step(noninv, B)
            report.solutions = len(solved.solutions)
            transvectants += list(solved.transvectants(pool))
        elif step.case == "invariant":
            transvectants += current.programs()
        report.transvectants = len(transvectants)

        by_cell: dict[tuple[int, int], list[CovariantProgram]] = {}
        for c in transvectants:
            if springer_dim(n, c.degree, c.order):
                by_cell.setdefault((c.degree, c.order), []).append(c)
        report.cells = len(by_cell)
        d_need = max((d for d, _ in by_cell), default=1)
        G = _olver_cached(n, max(d_need, 1), seed, prime)
        reduced = reduce_family(by_cell, G, kind=f"A{step.k}")
        members = list(reduced.members)
        for (d, m), cands in sorted(by_cell.items()):
            cert = verify_dimension(
                n, d, m, springer_dim(n, d, m), members,
                Reduction(prime), seed=cell_seed(seed, d, m),
            )
            if cert.complete:
                continue
            for c in find_missing_from(cands, cert):
                extra += 1
                members.append((f"t{extra}", c))
            if not cert.complete:
                _warn_once(
                    f"gordan.short:{n}:{d}:{m}",
                    f"cell ({d}, {m}) of S_{n} stays at rank {cert.achieved_rank} < {cert.target_dim}",
                )
        report.added = len(members) - len(reduced)
        current = Family(f"A{step.k}", members)
        report.family = len(current)
        for label, prog in current.invariants():
            kept_invariants.setdefault(label, prog)
        run.steps.append(report)
    final = list(current.members)
    seen = set(current.labels)
    final += [(label, prog) for label, prog in kept_invariants.items() if label not in seen]
    run.basis = Family("A", sorted(final, key=lambda item: (item[1].degree, -item[1].order, item[0])))
    return run


# parallel verification


_WORKER: dict[str, Any] = {}


def _init_worker(
    n: int,
    generators: list[Member],
    reduction: Reduction,
    seed: int,
    rows_slack: int = ROWS_SLACK,
    forms_slack: int = FORMS_SLACK,
    bank: FormBank | None = None,
) -> None:
    _WORKER.clear()
    _WORKER.update(
        n=n,
        generators=generators,
        reduction=reduction,
        seed=seed,
        rows_slack=rows_slack,
        forms_slack=forms_slack,
        bank=bank,
    )


def _verify_job(d: int, m: int, target: int, budget_factor: int) -> SpanCertificate:
    n = _WORKER["n"]
    reduction = _WORKER["reduction"]
    bank = _WORKER["bank"]
    if bank is None:
        bank = FormBank(n, reduction.prime, [p for _, p in reduction.zeroify], _WORKER["seed"])
        _WORKER["bank"] = bank
    cert = verify_dimension(
        n, d, m, target, _WORKER["generators"], reduction,
        budget=budget_factor * max(target, 1),
        seed=cell_seed(_WORKER["seed"], d, m),
        forms=bank,
        rows_slack=_WORKER["rows_slack"],
        forms_slack=_WORKER["forms_slack"],
    )
    cert._state = None
    return cert


def verify_cells(
    n: int,
    cells: Iterable[PlannedCell | tuple[int, int, int]],
    generators: Any,
    *,
    reduction: Reduction | None = None,
    seed: int = 0,
    workers: int | None = None,
    ledger: Ledger | None = None,
    resume: bool = False,
    budget_factor: int = BUDGET_FACTOR,
    rows_slack: int = ROWS_SLACK,
    forms_slack: int = FORMS_SLACK,
    progress: bool | None = None,
) -> list[dict[str, Any]]:
    """Rank-check each cell against `generators`; one JSON record per cell, in input order.

    Cells run in a process pool when `workers` > 1. The sample forms are
    generated once, spread over the pool, and shipped to every worker. Only
    this process writes the ledger; with `resume`, cells already complete in
    it are not redone.
    """

    from .rankcheck import _members

    members = _members(generators)
    reduction = reduction or Reduction()
    todo = []
    for item in cells:
        if isinstance(item, PlannedCell):
            todo.append((item.d, item.m, item.target_dim))
        else:
            d, m, target = item
            todo.append((int(d), int(m), int(target)))
    done = ledger.completed() if (ledger is not None and resume) else set()
    records: dict[tuple[int, int], dict[str, Any]] = {}
    for d, m, _ in todo:
        if (d, m) in done:
            rec = dict(ledger.get(d, m) or {})
            rec["resumed"] = True
            records[(d, m)] = rec
    pending = [cell for cell in todo if (cell[0], cell[1]) not in done]

    def keep(cert: SpanCertificate) -> None:
        rec = cert.to_json()
        records[(cert.d, cert.m)] = rec
        if ledger is not None:
            ledger.record(cert.d, cert.m, rec)

    workers = (os.cpu_count() or 1) if workers is None else max(1, workers)
    if workers == 1 or len(pending) <= 1:
        _init_worker(n, members, reduction, seed, rows_slack, forms_slack)
        for d, m, target in _progress(pending, desc=f"verify n={n}", enabled=progress):
            keep(_verify_job(d, m, target, budget_factor))
    else:
        from concurrent.futures import ProcessPoolExecutor, as_completed

        bank = FormBank(n, reduction.prime, [p for _, p in reduction.zeroify], seed)
        need = max((forms_needed(t, m, forms_slack) for _, m, t in pending if t > 0), default=0)
        if need:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                bank.prefill(need, pool.map)
        with ProcessPoolExecutor(
            max_workers=workers,
            initializer=_init_worker,
            initargs=(n, members, reduction, seed, rows_slack, forms_slack, bank),
        ) as pool:
            futures = [pool.submit(_verify_job, d, m, target, budget_factor) for d, m, target in pending]
            for fut in _progress(as_completed(futures), desc=f"verify n={n}", total=len(futures), enabled=progress):
                keep(fut.result())
    return [records[(d, m)] for d, m, _ in todo]
