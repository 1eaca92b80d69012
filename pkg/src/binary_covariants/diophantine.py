from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Iterator, Sequence

if TYPE_CHECKING:
    from .program import CovariantProgram, ProgramPool

__all__ = [
    "DiophSystem",
    "InconsistentSolutionError",
    "MinimalSolution",
    "brute_force_basis",
    "companion",
    "expand_solution",
    "expand_to_transvectants",
    "expansion_count",
    "hilbert_basis",
]


class InconsistentSolutionError(ValueError):
    """A solution does not describe a valid transvectant of the given families."""


@dataclass(frozen=True)
class DiophSystem:
    """sum_i lhs1[i] alpha_i = u + r and sum_j lhs2[j] beta_j = v + r, all unknowns >= 0.

    `mult1`/`mult2` record how many original variables a coefficient stands
    for; they are all ones unless the system is an injective companion.
    """

    lhs1: tuple[int, ...]
    lhs2: tuple[int, ...]
    mult1: tuple[int, ...] = ()
    mult2: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "lhs1", tuple(int(a) for a in self.lhs1))
        object.__setattr__(self, "lhs2", tuple(int(b) for b in self.lhs2))
        if not self.lhs1 or not self.lhs2:
            raise ValueError("both equations need at least one coefficient")
        if any(a <= 0 for a in self.lhs1 + self.lhs2):
            raise ValueError("coefficients must be positive integers")
        for name, lhs in (("mult1", self.lhs1), ("mult2", self.lhs2)):
            mult = tuple(getattr(self, name)) or (1,) * len(lhs)
            if len(mult) != len(lhs) or any(k < 1 for k in mult):
                raise ValueError(f"{name} must hold one positive multiplicity per coefficient")
            object.__setattr__(self, name, mult)

    @property
    def is_injective(self) -> bool:
        return len(set(self.lhs1)) == len(self.lhs1) and len(set(self.lhs2)) == len(self.lhs2)


@dataclass(frozen=True, order=True)
class MinimalSolution:
    alpha: tuple[int, ...]
    beta: tuple[int, ...]
    u: int
    v: int
    r: int

    @property
    def order(self) -> int:
        """Order u + v of the associated transvectant."""

        return self.u + self.v

    def as_vector(self) -> tuple[int, ...]:
        return self.alpha + self.beta + (self.u, self.v, self.r)

    def satisfies(self, system: DiophSystem) -> bool:
        s = sum(a * x for a, x in zip(system.lhs1, self.alpha))
        t = sum(b * x for b, x in zip(system.lhs2, self.beta))
        return s == self.u + self.r and t == self.v + self.r


def companion(system: DiophSystem) -> DiophSystem:
    """Injective companion: merge variables sharing a coefficient, keeping multiplicities."""

    def merge(lhs: Sequence[int], mult: Sequence[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
        counts: dict[int, int] = {}
        for a, k in zip(lhs, mult):
            counts[a] = counts.get(a, 0) + k
        keys = sorted(counts)
        return tuple(keys), tuple(counts[a] for a in keys)

    lhs1, mult1 = merge(system.lhs1, system.mult1)
    lhs2, mult2 = merge(system.lhs2, system.mult2)
    return DiophSystem(lhs1, lhs2, mult1, mult2)


def hilbert_basis(system: DiophSystem) -> list[MinimalSolution]:
    """All minimal nonzero solutions, sorted lexicographically.

    Depth-first completion: vectors grow one variable at a time, on the side
    whose weighted sum is behind. Subset sums of each side are kept as bitsets;
    a vector whose two sides share a nonzero subset sum contains a smaller
    solution and is pruned. For every surviving vector the (u, v, r) splits
    that are not reducible by a sub-vector are emitted.
    """

    A, B = system.lhs1, system.lhs2
    p, q = len(A), len(B)
    out: list[MinimalSolution] = []
    zero_a, zero_b = (0,) * p, (0,) * q
    for i, a in enumerate(A):
        alpha = list(zero_a)
        alpha[i] = 1
        out.append(MinimalSolution(tuple(alpha), zero_b, a, 0, 0))
    for j, b in enumerate(B):
        beta = list(zero_b)
        beta[j] = 1
        out.append(MinimalSolution(zero_a, tuple(beta), 0, b, 0))

    alpha = [0] * p
    beta = [0] * q
    big = max(A) + max(B) + 1

    def candidates(sa: int, sb: int, s: int, t: int, amin: int, bmin: int) -> None:
        diff = s - t
        for u in range(max(0, diff), amin):
            v = u - diff
            if v >= bmin:
                break
            reducible = False
            for k in range(-v, u + 1):
                if k >= 0:
                    x = (sa >> k) & sb
                    if k == 0:
                        x &= ~1
                    if k == diff:
                        x &= ~(1 << t)
                else:
                    x = (sb >> -k) & sa
                    if k == diff:
                        x &= ~(1 << s)
                if x:
                    reducible = True
                    break
            if not reducible:
                out.append(MinimalSolution(tuple(alpha), tuple(beta), u, v, s - u))

    def visit(sa: int, sb: int, s: int, t: int, la: int, lb: int, amin: int, bmin: int) -> bool:
        common = sa & sb & ~1
        extend = True
        if common:
            if s == t and common == 1 << s:
                extend = False
            else:
                return False
        if t > 0:
            candidates(sa, sb, s, t, amin, bmin)
        if extend:
            grow(sa, sb, s, t, la, lb, amin, bmin)
        return True

    def grow(sa: int, sb: int, s: int, t: int, la: int, lb: int, amin: int, bmin: int) -> None:
        if s <= t:
            for i in range(la, p):
                a = A[i]
                alpha[i] += 1
                visit(sa | (sa << a), sb, s + a, t, i, lb, min(amin, a), bmin)
                alpha[i] -= 1
        else:
            for j in range(lb, q):
                b = B[j]
                beta[j] += 1
                visit(sa, sb | (sb << b), s, t + b, la, j, amin, min(bmin, b))
                beta[j] -= 1

    grow(1, 1, 0, 0, 0, 0, big, big)
    return sorted(out)


def brute_force_basis(system: DiophSystem, box: int | None = None) -> list[MinimalSolution]:
    """Minimal solutions by exhaustive search; only for tiny systems."""

    A, B = system.lhs1, system.lhs2
    lim_a = max(B) if box is None else box
    lim_b = max(A) if box is None else box
    pairs = [
        (alpha, beta)
        for alpha in itertools.product(range(lim_a + 1), repeat=len(A))
        for beta in itertools.product(range(lim_b + 1), repeat=len(B))
        if any(alpha) or any(beta)
    ]
    pairs.sort(key=lambda ab: sum(ab[0]) + sum(ab[1]))

    # a dominating solution has strictly smaller (alpha, beta), hence was seen first
    minimal: list[MinimalSolution] = []
    for alpha, beta in pairs:
        below = [
            m
            for m in minimal
            if all(x <= y for x, y in zip(m.alpha, alpha))
            and all(x <= y for x, y in zip(m.beta, beta))
        ]
        s = sum(a * x for a, x in zip(A, alpha))
        t = sum(b * x for b, x in zip(B, beta))
        for r in range(min(s, t) + 1):
            u, v = s - r, t - r
            if not any(m.u <= u and m.v <= v and m.r <= r for m in below):
                minimal.append(MinimalSolution(alpha, beta, u, v, r))
    return sorted(minimal)


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    for cuts in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for c in cuts:
            out.append(c - prev - 1)
            prev = c
        out.append(total + parts - 2 - prev)
        yield tuple(out)


def expansion_count(solutions: Iterable[MinimalSolution], system: DiophSystem) -> int:
    """Number of original-system solutions the companion solutions stand for.

    Each entry x of a merged variable of multiplicity s spreads over s original
    variables in C(x + s - 1, s - 1) ways.
    """

    total = 0
    for sol in solutions:
        c = 1
        for x, s in zip(sol.alpha, system.mult1):
            c *= math.comb(x + s - 1, s - 1)
        for x, s in zip(sol.beta, system.mult2):
            c *= math.comb(x + s - 1, s - 1)
        total += c
    return total


def expand_solution(
    sol: MinimalSolution,
    merged: DiophSystem,
    original: DiophSystem,
) -> Iterator[MinimalSolution]:
    """Solutions of `original` obtained by spreading `sol` over merged variables."""

    def groups(merged_lhs: Sequence[int], lhs: Sequence[int]) -> list[list[int]]:
        return [[j for j, a in enumerate(lhs) if a == c] for c in merged_lhs]

    g1 = groups(merged.lhs1, original.lhs1)
    g2 = groups(merged.lhs2, original.lhs2)

    def spread(values: Sequence[int], gs: list[list[int]], size: int) -> Iterator[tuple[int, ...]]:
        choices = [list(_compositions(x, len(g))) for x, g in zip(values, gs)]
        for combo in itertools.product(*choices):
            vec = [0] * size
            for g, part in zip(gs, combo):
                for idx, x in zip(g, part):
                    vec[idx] = x
            yield tuple(vec)

    for alpha in spread(sol.alpha, g1, len(original.lhs1)):
        for beta in spread(sol.beta, g2, len(original.lhs2)):
            yield MinimalSolution(alpha, beta, sol.u, sol.v, sol.r)


def expand_to_transvectants(
    sol: MinimalSolution,
    A: Sequence[CovariantProgram],
    B: Sequence[CovariantProgram],
    pool: ProgramPool | None = None,
) -> CovariantProgram:
    """The transvectant (prod A_i^alpha_i, prod B_j^beta_j)_r of a solution.

    `A` and `B` list one program per coefficient of the solved system. An empty
    side stands for the constant 1, so the result is the other product.
    """

    from .program import CovariantProgram

    if len(sol.alpha) != len(A) or len(sol.beta) != len(B):
        raise InconsistentSolutionError("solution length does not match the families")
    members = [c for c in A if c is not None] + [c for c in B if c is not None]
    target = pool or members[0].pool
    u_factors = [(target.import_program(c), e) for c, e in zip(A, sol.alpha) if e]
    v_factors = [(target.import_program(c), e) for c, e in zip(B, sol.beta) if e]
    if not u_factors and not v_factors:
        raise InconsistentSolutionError("the zero solution has no transvectant")
    if not u_factors or not v_factors:
        if sol.r:
            raise InconsistentSolutionError(f"index {sol.r} on a one-sided solution")
        return CovariantProgram(target, target.product(u_factors or v_factors))
    left = target.product(u_factors)
    right = target.product(v_factors)
    ml, mr = target.bidegree(left)[1], target.bidegree(right)[1]
    if sol.r > min(ml, mr) or ml != sol.u + sol.r or mr != sol.v + sol.r:
        raise InconsistentSolutionError(
            f"orders ({ml}, {mr}) do not match u={sol.u}, v={sol.v}, r={sol.r}"
        )
    return CovariantProgram(target, target.transvect(left, right, sol.r))
