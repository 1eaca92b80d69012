from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator, Mapping, Sequence, TypeVar

import numpy as np

from ._helpers import _progress, _warn_once
from .hilbert import springer_dim
from .program import CovariantProgram, evaluate_many
from .rankcheck import EvalMatrix, FormBank, forms_needed
from .scalar_forms import DEFAULT_PRIME, HomPoly, mul

__all__ = [
    "MonomialRelation",
    "RelationSet",
    "check_relation",
    "discover_relations",
    "dump_relations",
    "filter_solutions",
    "find_pair_relations",
    "find_power_relation",
    "load_relations",
    "order_basis",
]

E_MAX = 12
MONOMIAL_CAP = 200_000

T = TypeVar("T")
Member = tuple[str, CovariantProgram]


@dataclass(frozen=True)
class MonomialRelation:
    """x^e (power) or x^e1 y^e2 (pair) lies in the algebra of smaller generators.

    Power relations allow lower powers of x as coefficients. The monomial
    itself is forbidden: transvectants whose V-part it divides are redundant.
    """

    kind: str
    labels: tuple[str, ...]
    exponents: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.kind not in ("power", "pair"):
            raise ValueError(f"unknown relation kind {self.kind!r}")
        expected = 1 if self.kind == "power" else 2
        if len(self.labels) != expected or len(self.exponents) != expected:
            raise ValueError(f"{self.kind} relation needs {expected} label(s) and exponent(s)")

    @property
    def monomial(self) -> dict[str, int]:
        return dict(zip(self.labels, self.exponents))

    def divides(self, monomial: Mapping[str, int]) -> bool:
        return all(monomial.get(label, 0) >= e for label, e in zip(self.labels, self.exponents))

    def __str__(self) -> str:
        return " * ".join(f"{label}^{e}" for label, e in zip(self.labels, self.exponents))


@dataclass
class RelationSet:
    basis: str
    prime: int = DEFAULT_PRIME
    relations: list[MonomialRelation] = field(default_factory=list)
    seed: int | None = None
    certified: str = "mod-p span membership"

    def __len__(self) -> int:
        return len(self.relations)

    def __iter__(self) -> Iterator[MonomialRelation]:
        return iter(self.relations)

    @property
    def power(self) -> dict[str, int]:
        return {r.labels[0]: r.exponents[0] for r in self.relations if r.kind == "power"}

    @property
    def pairs(self) -> list[MonomialRelation]:
        return [r for r in self.relations if r.kind == "pair"]

    def forbids(self, monomial: Mapping[str, int]) -> bool:
        return any(r.divides(monomial) for r in self.relations)

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "version": 1,
            "basis": self.basis,
            "prime": self.prime,
            "certified": self.certified,
            "power": [{"label": r.labels[0], "exponent": r.exponents[0]} for r in self.relations if r.kind == "power"],
            "pair": [{"labels": list(r.labels), "exponents": list(r.exponents)} for r in self.pairs],
        }
        if self.seed is not None:
            out["seed"] = self.seed
        return out

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> RelationSet:
        if data.get("version") != 1:
            raise ValueError(f"unsupported relation file version {data.get('version')!r}")
        rels = [MonomialRelation("power", (p["label"],), (int(p["exponent"]),)) for p in data.get("power", [])]
        rels += [
            MonomialRelation("pair", tuple(p["labels"]), tuple(int(e) for e in p["exponents"]))
            for p in data.get("pair", [])
        ]
        return cls(
            basis=str(data.get("basis", "")),
            prime=int(data.get("prime", DEFAULT_PRIME)),
            relations=rels,
            seed=data.get("seed"),
            certified=str(data.get("certified", "mod-p span membership")),
        )


def load_relations(name: str = "sextic", catalog_dir: str | os.PathLike[str] | None = None) -> RelationSet:
    """Shipped relation set of a basis (`<name>_relations.json`)."""

    from .catalog import read_data_text

    return RelationSet.from_json(json.loads(read_data_text(f"{name}_relations.json", catalog_dir)))


def dump_relations(relations: RelationSet, path: str | os.PathLike[str]) -> bool:
    from .ledger import _atomic_write_text

    text = json.dumps(relations.to_json(), indent=2) + "\n"
    return _atomic_write_text(Path(path), text)


def _as_members(family: Any) -> list[Member]:
    if hasattr(family, "entries"):
        return [(e.label, e.program) for e in family.entries]
    return [(str(label), prog) for label, prog in family]


def order_basis(family: Any) -> list[Member]:
    """Total order used by the relations, largest first.

    Non-invariants by degree descending, then order ascending; invariants
    last, by degree descending. Ties keep the family order.
    """

    members = _as_members(family)
    indexed = list(enumerate(members))

    def key(item: tuple[int, Member]) -> tuple[int, int, int, int]:
        idx, (_, prog) = item
        return (1 if prog.order == 0 else 0, -prog.degree, prog.order, idx)

    return [member for _, member in sorted(indexed, key=key)]


def _monomials(
    allowed: Sequence[int],
    bidegrees: Sequence[tuple[int, int]],
    d: int,
    m: int,
) -> Iterator[dict[int, int]]:
    """All monomials in the `allowed` members with bidegree (d, m)."""

    cur: dict[int, int] = {}

    def rec(pos: int, rd: int, rm: int) -> Iterator[dict[int, int]]:
        if rd == 0:
            if rm == 0:
                yield dict(cur)
            return
        if pos >= len(allowed):
            return
        i = allowed[pos]
        gd, gm = bidegrees[i]
        for k in range(rd // gd, -1, -1):
            if k * gm > rm:
                continue
            if k:
                cur[i] = k
            yield from rec(pos + 1, rd - k * gd, rm - k * gm)
            cur.pop(i, None)

    yield from rec(0, d, m)


class _SpanTester:
    """Membership of generator monomials in spans of other monomials, mod p."""

    def __init__(self, members: Sequence[Member], prime: int, seed: int, cap: int) -> None:
        self.members = list(members)
        self.n = self.members[0][1].pool.n
        self.bidegrees = [(p.degree, p.order) for _, p in self.members]
        self.bank = FormBank(self.n, prime, (), seed)
        self.cap = cap
        self._values: dict[int, list[HomPoly]] = {}

    def values(self, nforms: int) -> list[HomPoly]:
        if nforms not in self._values:
            batch = self.bank.take(nforms)
            self._values[nforms] = evaluate_many([p for _, p in self.members], batch)
        return self._values[nforms]

    def vector(self, mono: Mapping[int, int], nforms: int) -> np.ndarray:
        vals = self.values(nforms)
        out: HomPoly | None = None
        for i, e in sorted(mono.items()):
            for _ in range(e):
                out = vals[i] if out is None else mul(out, vals[i])
        assert out is not None
        return out.coeffs.reshape(-1)

    def bidegree(self, mono: Mapping[int, int]) -> tuple[int, int]:
        d = sum(self.bidegrees[i][0] * e for i, e in mono.items())
        m = sum(self.bidegrees[i][1] * e for i, e in mono.items())
        return d, m

    def in_span(
        self,
        target: Mapping[int, int],
        below: Sequence[int],
        prefixes: Sequence[Mapping[int, int]] = ({},),
    ) -> bool | None:
        """Is `target` in the span of prefix * M, M a monomial in `below`?

        None when the monomial cap is hit before a verdict.
        """

        d, m = self.bidegree(target)
        dim = springer_dim(self.n, d, m)
        if dim == 0:
            return True
        nforms = forms_needed(dim, m)
        matrix = EvalMatrix(self.bank.prime, nforms * (m + 1))
        count = 0
        for pre in prefixes:
            pd, pm = self.bidegree(pre)
            if pd > d or pm > m:
                continue
            for mono in _monomials(below, self.bidegrees, d - pd, m - pm):
                count += 1
                if count > self.cap:
                    return None
                for i, e in pre.items():
                    mono[i] = mono.get(i, 0) + e
                matrix.add_row(self.vector(mono, nforms))
                if matrix.rank >= dim:
                    return True
        return matrix.contains(self.vector(target, nforms))


def _tester(ordered: Sequence[Member], prime: int, seed: int, cap: int) -> tuple[_SpanTester, dict[str, int]]:
    tester = _SpanTester(ordered, prime, seed, cap)
    position = {label: i for i, (label, _) in enumerate(ordered)}
    return tester, position


def find_power_relation(
    label: str,
    ordered: Sequence[Member],
    e_max: int = E_MAX,
    *,
    prime: int = DEFAULT_PRIME,
    seed: int = 0,
    cap: int = MONOMIAL_CAP,
    _tester_state: tuple[_SpanTester, dict[str, int]] | None = None,
) -> MonomialRelation | None:
    """Least e <= e_max with C^e in span{C^k M : k < e, M in generators below C}.

    A found relation certifies mod-p span membership only.
    """

    tester, position = _tester_state or _tester(ordered, prime, seed, cap)
    idx = position[label]
    below = list(range(idx + 1, len(ordered)))
    for e in range(1, e_max + 1):
        verdict = tester.in_span({idx: e}, below, [({idx: k} if k else {}) for k in range(e)])
        if verdict is None:
            _warn_once(f"relations.cap:{label}:{e}", f"monomial cap reached for {label}^{e}; giving up")
            return None
        if verdict:
            return MonomialRelation("power", (label,), (e,))
    return None


def find_pair_relations(
    label1: str,
    label2: str,
    ordered: Sequence[Member],
    e_max: int = E_MAX,
    *,
    power: Mapping[str, int] | None = None,
    prime: int = DEFAULT_PRIME,
    seed: int = 0,
    cap: int = MONOMIAL_CAP,
    _tester_state: tuple[_SpanTester, dict[str, int]] | None = None,
) -> list[MonomialRelation]:
    """Pareto-minimal (e1, e2) with C1^e1 C2^e2 in the algebra below C2.

    C1 must precede C2 in `ordered`. Exponents stay below the power relations
    of C1 and C2 when those are known, and e1 + e2 <= e_max.
    """

    tester, position = _tester_state or _tester(ordered, prime, seed, cap)
    i1, i2 = position[label1], position[label2]
    if i1 >= i2:
        raise ValueError(f"{label1} must come before {label2} in the basis order")
    power = power or {}
    a1 = power.get(label1) or e_max + 1
    last_e2 = power.get(label2) or e_max + 1
    below = list(range(i2 + 1, len(ordered)))
    out = []
    for e1 in range(1, min(a1, e_max)):
        found = None
        for e2 in range(1, last_e2):
            if e1 + e2 > e_max:
                break
            verdict = tester.in_span({i1: e1, i2: e2}, below)
            if verdict is None:
                _warn_once(
                    f"relations.cap:{label1}:{label2}",
                    f"monomial cap reached for {label1}^{e1} {label2}^{e2}",
                )
                break
            if verdict:
                found = e2
                break
        if found is not None:
            out.append(MonomialRelation("pair", (label1, label2), (e1, found)))
            last_e2 = found
        if last_e2 == 1:
            break
    return out


def discover_relations(
    family: Any,
    e_max: int = E_MAX,
    *,
    basis: str = "",
    pairs: bool = True,
    prime: int = DEFAULT_PRIME,
    seed: int = 0,
    cap: int = MONOMIAL_CAP,
    progress: bool | None = None,
) -> RelationSet:
    """Power relations for every generator but the last, then pair relations.

    Invariants take part in the power search (the sextic invariant of degree
    15 squares into the lower invariants). Pairs are formed among the
    non-invariants only.
    """

    ordered = order_basis(family)
    state = _tester(ordered, prime, seed, cap)
    noninv = [label for label, prog in ordered if prog.order > 0]
    result = RelationSet(basis, prime, [], seed)
    heads = [label for label, _ in ordered[:-1]]
    for label in _progress(heads, desc="power relations", enabled=progress):
        rel = find_power_relation(label, ordered, e_max, _tester_state=state)
        if rel is not None:
            result.relations.append(rel)
    if pairs:
        power = result.power
        todo = [(a, b) for i, a in enumerate(noninv) for b in noninv[i + 1 :]]
        for a, b in _progress(todo, desc="pair relations", enabled=progress):
            result.relations += find_pair_relations(a, b, ordered, e_max, power=power, _tester_state=state)
    return result


def check_relation(
    relation: MonomialRelation,
    family: Any,
    *,
    prime: int = DEFAULT_PRIME,
    seed: int = 1,
    cap: int = MONOMIAL_CAP,
) -> bool | None:
    """Re-check a relation with fresh forms (None if the cap is hit)."""

    ordered = order_basis(family)
    tester, position = _tester(ordered, prime, seed, cap)
    idx = [position[label] for label in relation.labels]
    target = dict(zip(idx, relation.exponents))
    below = list(range(max(idx) + 1, len(ordered)))
    if relation.kind == "power":
        e = relation.exponents[0]
        return tester.in_span(target, below, [({idx[0]: k} if k else {}) for k in range(e)])
    return tester.in_span(target, below)


def filter_solutions(
    solutions: Iterable[T],
    relations: Iterable[MonomialRelation] | None,
    key: Callable[[T], Mapping[str, int]] | None = None,
    *,
    labels: Sequence[str] | None = None,
) -> list[T]:
    """Drop solutions whose V-monomial is divisible by a forbidden monomial.

    A solution is either a monomial mapping or a `MinimalSolution` of the
    uncompressed system, whose `beta` is read against `labels` (one B label
    per unknown). `key` overrides both.
    """

    rels = list(relations or [])
    if not rels:
        return list(solutions)
    get = key or (lambda s: _v_monomial(s, labels))
    return [s for s in solutions if not any(r.divides(get(s)) for r in rels)]


def _v_monomial(solution: Any, labels: Sequence[str] | None) -> Mapping[str, int]:
    if isinstance(solution, Mapping):
        return solution
    beta = getattr(solution, "beta", None)
    if beta is None:
        raise TypeError(f"cannot read a V-monomial from {type(solution).__name__}")
    if labels is None:
        raise ValueError("labels are required to read V-monomials from solutions")
    if len(labels) != len(beta):
        raise ValueError(f"{len(labels)} labels for a solution with {len(beta)} B unknowns")
    return {label: k for label, k in zip(labels, beta) if k}
