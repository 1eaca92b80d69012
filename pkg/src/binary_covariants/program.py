from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .scalar_forms import HomPoly, RingMismatchError, Scalar, add, mul, transvectant

__all__ = [
    "CovariantProgram",
    "Leaf",
    "Product",
    "ProgramError",
    "ProgramPool",
    "Sum",
    "Transvect",
    "degree_order",
    "evaluate",
    "evaluate_many",
    "format_program",
    "scale_factor",
    "scale_free_compare",
    "substitute",
]


class ProgramError(ValueError):
    """Malformed program node or evaluation at an incompatible form."""


@dataclass(frozen=True)
class Leaf:
    n: int


@dataclass(frozen=True)
class Transvect:
    left: int
    right: int
    r: int


@dataclass(frozen=True)
class Product:
    # (node index, exponent), sorted by index, exponents >= 1
    factors: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class Sum:
    terms: tuple[int, ...]


Node = Union[Leaf, Transvect, Product, Sum]


class ProgramPool:
    """Append-only, hash-consed store of program nodes over the generic form f.

    Node 0 is always the leaf f of order `n`. Every node references earlier
    nodes only, and identical nodes are stored once, so catalog programs share
    their sub-DAGs.
    """

    def __init__(self, n: int) -> None:
        if n < 1:
            raise ProgramError(f"form degree must be >= 1, got {n}")
        self.n = n
        self._nodes: list[Node] = []
        self._bidegree: list[tuple[int, int]] = []
        self._index: dict[Node, int] = {}
        self._append(Leaf(n), (1, n))

    def __len__(self) -> int:
        return len(self._nodes)

    def __getstate__(self) -> dict:
        return {"n": self.n, "nodes": self._nodes, "bidegree": self._bidegree}

    def __setstate__(self, state: dict) -> None:
        self.n = state["n"]
        self._nodes = list(state["nodes"])
        self._bidegree = list(state["bidegree"])
        self._index = {node: i for i, node in enumerate(self._nodes)}

    def node(self, index: int) -> Node:
        return self._nodes[index]

    def bidegree(self, index: int) -> tuple[int, int]:
        return self._bidegree[index]

    def _append(self, node: Node, bidegree: tuple[int, int]) -> int:
        found = self._index.get(node)
        if found is not None:
            return found
        self._nodes.append(node)
        self._bidegree.append(bidegree)
        idx = len(self._nodes) - 1
        self._index[node] = idx
        return idx

    def _check(self, *indices: int) -> None:
        for i in indices:
            if not 0 <= i < len(self._nodes):
                raise ProgramError(f"node {i} is not defined in this pool")

    @property
    def f(self) -> CovariantProgram:
        return CovariantProgram(self, 0)

    def transvect(self, left: int, right: int, r: int) -> int:
        self._check(left, right)
        (dl, ml), (dr, mr) = self._bidegree[left], self._bidegree[right]
        if r < 0 or r > min(ml, mr):
            raise ProgramError(f"transvectant index {r} needs 0 <= r <= min({ml}, {mr})")
        return self._append(Transvect(left, right, r), (dl + dr, ml + mr - 2 * r))

    def product(self, factors: Mapping[int, int] | Iterable[tuple[int, int]]) -> int:
        """Node for prod_i x_i^e_i; nested products are flattened."""

        items = factors.items() if isinstance(factors, Mapping) else factors
        merged: dict[int, int] = {}
        for idx, e in items:
            self._check(idx)
            if e < 0:
                raise ProgramError(f"negative exponent {e}")
            if e == 0:
                continue
            node = self._nodes[idx]
            if isinstance(node, Product):
                for sub, se in node.factors:
                    merged[sub] = merged.get(sub, 0) + se * e
            else:
                merged[idx] = merged.get(idx, 0) + e
        if not merged:
            raise ProgramError("empty product")
        key = tuple(sorted(merged.items()))
        if len(key) == 1 and key[0][1] == 1:
            return key[0][0]
        d = sum(self._bidegree[i][0] * e for i, e in key)
        m = sum(self._bidegree[i][1] * e for i, e in key)
        return self._append(Product(key), (d, m))

    def mul(self, a: int, b: int) -> int:
        return self.product([(a, 1), (b, 1)])

    def power(self, a: int, e: int) -> int:
        if e < 1:
            raise ProgramError(f"power exponent must be >= 1, got {e}")
        return self.product([(a, e)])

    def add(self, *terms: int) -> int:
        if not terms:
            raise ProgramError("empty sum")
        self._check(*terms)
        bidegrees = {self._bidegree[t] for t in terms}
        if len(bidegrees) != 1:
            raise ProgramError(f"sum of terms with different bidegrees {sorted(bidegrees)}")
        flat: list[int] = []
        for t in terms:
            node = self._nodes[t]
            flat.extend(node.terms if isinstance(node, Sum) else (t,))
        if len(flat) == 1:
            return flat[0]
        return self._append(Sum(tuple(sorted(flat))), bidegrees.pop())

    def program(self, index: int) -> CovariantProgram:
        self._check(index)
        return CovariantProgram(self, index)

    def import_program(
        self,
        program: CovariantProgram,
        leaf: int = 0,
        _memo: dict[int, int] | None = None,
    ) -> int:
        """Copy `program` into this pool, mapping its leaf f to node `leaf`."""

        src = program.pool
        if src is self and leaf == 0:
            return program.root
        memo = {} if _memo is None else _memo
        memo.setdefault(0, leaf)
        for i in _dependencies(src, program.root):
            if i in memo:
                continue
            node = src.node(i)
            if isinstance(node, Transvect):
                memo[i] = self.transvect(memo[node.left], memo[node.right], node.r)
            elif isinstance(node, Product):
                memo[i] = self.product([(memo[j], e) for j, e in node.factors])
            elif isinstance(node, Sum):
                memo[i] = self.add(*(memo[j] for j in node.terms))
            else:  # pragma: no cover
                raise ProgramError(f"unexpected node {node!r}")
        return memo[program.root]


@dataclass(frozen=True)
class CovariantProgram:
    """A covariant given by the operations producing it from f."""

    pool: ProgramPool
    root: int

    @property
    def degree(self) -> int:
        return self.pool.bidegree(self.root)[0]

    @property
    def order(self) -> int:
        return self.pool.bidegree(self.root)[1]

    @property
    def node(self) -> Node:
        return self.pool.node(self.root)

    def __str__(self) -> str:
        return format_program(self)


def _dependencies(pool: ProgramPool, root: int) -> list[int]:
    """Indices needed to evaluate `root`, in increasing (topological) order."""

    seen = {root}
    stack = [root]
    while stack:
        node = pool.node(stack.pop())
        if isinstance(node, Transvect):
            children: Sequence[int] = (node.left, node.right)
        elif isinstance(node, Product):
            children = [j for j, _ in node.factors]
        elif isinstance(node, Sum):
            children = node.terms
        else:
            children = ()
        for j in children:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return sorted(seen)


def degree_order(c: CovariantProgram) -> tuple[int, int]:
    return c.pool.bidegree(c.root)


def _power(p: HomPoly, e: int) -> HomPoly:
    result: HomPoly | None = None
    base = p
    while e:
        if e & 1:
            result = base if result is None else mul(result, base)
        e >>= 1
        if e:
            base = mul(base, base)
    assert result is not None
    return result


def _evaluate_into(
    pool: ProgramPool,
    roots: Iterable[int],
    form: HomPoly,
    memo: dict[int, HomPoly],
) -> None:
    if form.order != pool.n:
        raise ProgramError(f"program expects a form of degree {pool.n}, got {form.order}")
    needed: set[int] = set()
    for root in roots:
        if root not in memo:
            needed.update(_dependencies(pool, root))
    for i in sorted(needed):
        if i in memo:
            continue
        node = pool.node(i)
        if isinstance(node, Leaf):
            value = form
        elif isinstance(node, Transvect):
            value = transvectant(memo[node.left], memo[node.right], node.r)
        elif isinstance(node, Product):
            value = None
            for j, e in node.factors:
                term = _power(memo[j], e)
                value = term if value is None else mul(value, term)
        else:
            value = memo[node.terms[0]]
            for j in node.terms[1:]:
                value = add(value, memo[j])
        memo[i] = value


def evaluate(c: CovariantProgram, form: HomPoly) -> HomPoly:
    """Value of `c` at `form`; `form` may be a batch of forms."""

    memo: dict[int, HomPoly] = {}
    _evaluate_into(c.pool, [c.root], form, memo)
    return memo[c.root]


def evaluate_many(programs: Sequence[CovariantProgram], form: HomPoly) -> list[HomPoly]:
    """Evaluate programs sharing pools at one form (or batch), reusing subresults."""

    memos: dict[int, dict[int, HomPoly]] = {}
    by_pool: dict[int, tuple[ProgramPool, list[int]]] = {}
    for c in programs:
        by_pool.setdefault(id(c.pool), (c.pool, []))[1].append(c.root)
    for key, (pool, roots) in by_pool.items():
        memo = memos.setdefault(key, {})
        _evaluate_into(pool, roots, form, memo)
    return [memos[id(c.pool)][c.root] for c in programs]


def scale_factor(a: HomPoly, b: HomPoly) -> Scalar | None:
    """Return the nonzero scalar lam with a = lam * b, or None.

    Batches are compared as one vector, so lam is common to all forms.
    Two zero polynomials compare with lam = 1.
    """

    if a.ring != b.ring:
        raise RingMismatchError(f"{a.ring} vs {b.ring}")
    if a.coeffs.shape != b.coeffs.shape:
        return None
    ring = a.ring
    va = a.coeffs.reshape(-1)
    vb = b.coeffs.reshape(-1)
    nz = np.flatnonzero(vb != 0)
    if nz.size == 0:
        return Scalar(1, ring) if not np.any(va != 0) else None
    i = int(nz[0])
    if va[i] == 0:
        return None
    cross = ring.reduce(va * vb[i] - vb * va[i])
    if np.any(cross != 0):
        return None
    return Scalar(va[i] * ring.inverse(vb[i]), ring)


def scale_free_compare(a: HomPoly, b: HomPoly) -> bool:
    return scale_factor(a, b) is not None


def substitute(
    c: CovariantProgram,
    ground: CovariantProgram,
    pool: ProgramPool | None = None,
) -> CovariantProgram:
    """Compose `c` with `ground`: the leaf of `c` is replaced by `ground`.

    `ground.order` must equal the leaf order of `c`; degrees multiply by
    `ground.degree` and orders are unchanged.
    """

    if ground.order != c.pool.n:
        raise ProgramError(
            f"cannot substitute an order-{ground.order} covariant for a degree-{c.pool.n} form"
        )
    target = ground.pool if pool is None else pool
    leaf = target.import_program(ground)
    return CovariantProgram(target, target.import_program(c, leaf=leaf))


def format_program(c: CovariantProgram, labels: Mapping[int, str] | None = None) -> str:
    """Render `c` in the catalog expression language.

    `labels` maps node indices to names used instead of their expansion.
    """

    names = dict(labels or {})
    pool = c.pool
    rendered: dict[int, str] = {}
    for i in _dependencies(pool, c.root):
        if i in names and i != c.root:
            rendered[i] = names[i]
            continue
        node = pool.node(i)
        if isinstance(node, Leaf):
            text = "f"
        elif isinstance(node, Transvect):
            text = f"tr({rendered[node.left]}, {rendered[node.right]}, {node.r})"
        elif isinstance(node, Product):
            parts = [rendered[j] if e == 1 else f"pow({rendered[j]}, {e})" for j, e in node.factors]
            text = parts[0]
            for part in parts[1:]:
                text = f"mul({text}, {part})"
        else:
            text = rendered[node.terms[0]]
            for j in node.terms[1:]:
                text = f"sum({text}, {rendered[j]})"
        rendered[i] = text
    return rendered[c.root]
