from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from ._helpers import _warn_once
from .program import CovariantProgram, ProgramPool, evaluate, evaluate_many, format_program
from .scalar_forms import DEFAULT_PRIME, GF, HomPoly, Ring, mul, transvectant

__all__ = [
    "ConstraintSamplingError",
    "EvalMatrix",
    "FormBank",
    "InfeasibleCellError",
    "ProductSampler",
    "Reduction",
    "SpanCertificate",
    "cell_seed",
    "find_missing_from",
    "forms_needed",
    "sample_constrained_form",
    "sample_covariant",
    "verify_dimension",
]

ROWS_SLACK = 16
FORMS_SLACK = 4
BUDGET_FACTOR = 200


def forms_needed(target_dim: int, m: int, forms_slack: int = FORMS_SLACK) -> int:
    """Sample forms for a cell of order m: ceil(target / (m + 1)) + slack."""

    return math.ceil(target_dim / (m + 1)) + forms_slack


class InfeasibleCellError(ValueError):
    """No product of the generators has the requested degree and order."""


class ConstraintSamplingError(RuntimeError):
    """No form zeroifying the requested invariants was found within the budget."""


def cell_seed(seed: int, d: int, m: int) -> int:
    """Per-cell seed derived from a run seed; independent of scheduling."""

    return int(np.random.SeedSequence([seed, d, m]).generate_state(1)[0])


class EvalMatrix:
    """Rows over GF(p) with an incrementally maintained parity-check matrix.

    The parity-check matrix H has `ncols - rank` rows spanning the vectors
    orthogonal to every accepted row, so a new row v is independent iff
    H v != 0. Each accepted row costs O(ncols^2).
    """

    def __init__(self, prime: int, ncols: int) -> None:
        if ncols < 1:
            raise ValueError(f"ncols must be >= 1, got {ncols}")
        self.prime = prime
        self.ncols = ncols
        self._h = np.eye(ncols, dtype=np.int64)
        self._active = ncols
        self.rows: list[np.ndarray] = []

    @property
    def rank(self) -> int:
        return self.ncols - self._active

    @property
    def parity(self) -> np.ndarray:
        return self._h[: self._active]

    def _syndrome(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.int64).reshape(-1)
        if v.shape[0] != self.ncols:
            raise ValueError(f"row has {v.shape[0]} entries, expected {self.ncols}")
        return self.parity @ (v % self.prime) % self.prime

    def contains(self, v: np.ndarray) -> bool:
        """True when v lies in the span of the accepted rows."""

        return not np.any(self._syndrome(v))

    def add_row(self, v: np.ndarray) -> bool:
        """Accept v if it increases the rank; return whether it did."""

        p = self.prime
        s = self._syndrome(v)
        nz = np.flatnonzero(s)
        if nz.size == 0:
            return False
        i = int(nz[0])
        k = self._active
        h = self._h
        coef = s * pow(int(s[i]), -1, p) % p
        pivot = h[i].copy()
        h[:k] = (h[:k] - np.outer(coef, pivot) % p) % p
        h[i] = h[k - 1]
        self._active = k - 1
        self.rows.append(np.asarray(v, dtype=np.int64).reshape(-1) % p)
        return True


class ProductSampler:
    """Random products of generators with a prescribed (degree, order).

    `reach[d]` is a bitset of the orders reachable by products of degree d.
    """

    def __init__(self, bidegrees: Sequence[tuple[int, int]], max_degree: int) -> None:
        self.max_degree = max_degree
        classes: dict[tuple[int, int], list[int]] = {}
        for idx, (d, m) in enumerate(bidegrees):
            if 1 <= d <= max_degree:
                classes.setdefault((d, m), []).append(idx)
        self.classes = classes
        reach = [0] * (max_degree + 1)
        reach[0] = 1
        for dd in range(1, max_degree + 1):
            acc = 0
            for cd, cm in classes:
                if cd <= dd:
                    acc |= reach[dd - cd] << cm
            reach[dd] = acc
        self.reach = reach

    def feasible(self, d: int, m: int) -> bool:
        return 0 <= d <= self.max_degree and m >= 0 and bool((self.reach[d] >> m) & 1)

    def orders(self, d: int) -> list[int]:
        bits = self.reach[d] if 0 <= d <= self.max_degree else 0
        return [m for m in range(bits.bit_length()) if (bits >> m) & 1]

    def sample(self, d: int, m: int, rng: np.random.Generator) -> tuple[tuple[int, int], ...]:
        """Monomial as sorted (generator index, exponent) pairs."""

        if d == 0 and m == 0:
            return ()
        if not self.feasible(d, m):
            raise InfeasibleCellError(f"no product of degree {d} and order {m}")
        counts: dict[int, int] = {}
        reach = self.reach
        while d > 0:
            options = [
                (cls, members)
                for cls, members in self.classes.items()
                if cls[0] <= d and cls[1] <= m and (reach[d - cls[0]] >> (m - cls[1])) & 1
            ]
            weights = np.array([len(members) for _, members in options], dtype=float)
            (cd, cm), members = options[int(rng.choice(len(options), p=weights / weights.sum()))]
            idx = members[int(rng.integers(len(members)))]
            counts[idx] = counts.get(idx, 0) + 1
            d -= cd
            m -= cm
        return tuple(sorted(counts.items()))


def _members(generators: Any) -> list[tuple[str, CovariantProgram]]:
    if hasattr(generators, "entries"):
        return [(e.label, e.program) for e in generators.entries]
    out = []
    for i, item in enumerate(generators):
        if isinstance(item, CovariantProgram):
            out.append((f"g{i + 1}", item))
        else:
            label, prog = item
            out.append((str(label), prog))
    return out


def _split_options(
    noninv: ProductSampler,
    d: int,
    m: int,
) -> list[tuple[int, int, int, int]]:
    """(d1, m1, m2, r) with (U, V)_r of bidegree (d, m), U of degree d1 <= deg V."""

    out = []
    for d1 in range(1, d // 2 + 1):
        for m1 in noninv.orders(d1):
            for m2 in noninv.orders(d - d1):
                twice_r = m1 + m2 - m
                if twice_r >= 0 and twice_r % 2 == 0 and twice_r // 2 <= min(m1, m2):
                    out.append((d1, m1, m2, twice_r // 2))
    return out


def sample_covariant(
    generators: Any,
    d: int,
    m: int,
    rng: np.random.Generator,
    *,
    transvect: bool = True,
    pool: ProgramPool | None = None,
) -> CovariantProgram:
    """Random program of bidegree (d, m) built from `generators`.

    By default a transvectant (U, V)_r of two random products of
    non-invariant generators. Invariant factors are only used when no such
    split exists, e.g. for d = 1. `transvect=False` draws a plain product of
    generators instead.
    """

    members = _members(generators)
    if not members:
        raise InfeasibleCellError("empty generator set")
    target = pool or members[0][1].pool
    progs = [p for _, p in members]
    roots = [target.import_program(p) for p in progs]
    bidegrees = [(p.degree, p.order) for p in progs]
    sampler = ProductSampler(bidegrees, d)

    def build(mono: tuple[tuple[int, int], ...]) -> int:
        return target.product([(roots[i], e) for i, e in mono])

    if not transvect:
        return CovariantProgram(target, build(sampler.sample(d, m, rng)))

    noninv = ProductSampler([bd if bd[1] > 0 else (0, 0) for bd in bidegrees], d)
    options = _split_options(noninv, d, m)
    if not options:
        if sampler.feasible(d, m):
            return CovariantProgram(target, build(sampler.sample(d, m, rng)))
        raise InfeasibleCellError(f"no transvectant of degree {d} and order {m}")
    d1, m1, m2, r = options[int(rng.integers(len(options)))]
    left = build(noninv.sample(d1, m1, rng))
    right = build(noninv.sample(d - d1, m2, rng))
    return CovariantProgram(target, target.transvect(left, right, r))


# constrained forms


def _weight_monomials(indices: Sequence[int], degree: int, weight: int) -> list[tuple[int, ...]]:
    """Exponent vectors e over `indices` with sum(e) <= degree and sum(i e_i) <= weight."""

    out = []

    def rec(pos: int, deg_left: int, weight_left: int, cur: list[int]) -> None:
        if pos == len(indices):
            out.append(tuple(cur))
            return
        i = indices[pos]
        top = deg_left if i == 0 else min(deg_left, weight_left // i)
        for e in range(top + 1):
            cur.append(e)
            rec(pos + 1, deg_left - e, weight_left - i * e, cur)
            cur.pop()

    rec(0, degree, weight, [])
    return out


def _solve_mod_p(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray | None:
    """Solve the square system a x = b over GF(p); None if singular."""

    n = a.shape[0]
    m = np.concatenate([a % p, (b % p).reshape(n, 1)], axis=1).astype(np.int64)
    for col in range(n):
        nz = np.flatnonzero(m[col:, col])
        if nz.size == 0:
            return None
        piv = col + int(nz[0])
        if piv != col:
            m[[col, piv]] = m[[piv, col]]
        m[col] = m[col] * pow(int(m[col, col]), -1, p) % p
        factors = m[:, col].copy()
        factors[col] = 0
        m = (m - np.outer(factors, m[col]) % p) % p
    return m[:, n]


def _roots_mod_p(coeffs: Sequence[int], p: int) -> np.ndarray:
    """All roots in GF(p) of the polynomial with coefficients highest degree first."""

    xs = np.arange(p, dtype=np.int64)
    val = np.zeros(p, dtype=np.int64)
    for c in coeffs:
        val = (val * xs + int(c) % p) % p
    return np.flatnonzero(val == 0)


def _interpolate(
    invariant: CovariantProgram,
    base: np.ndarray,
    indices: Sequence[int],
    ring: Ring,
    rng: np.random.Generator,
) -> dict[tuple[int, ...], int] | None:
    """The invariant as a polynomial in the coefficients at `indices`, other coefficients fixed."""

    p = ring.modulus
    assert p is not None
    n = base.shape[0] - 1
    monos = _weight_monomials(indices, invariant.degree, n * invariant.degree // 2)
    npts = len(monos) + 2
    pts = rng.integers(0, p, size=(npts, len(indices)), dtype=np.int64)
    forms = np.tile(base, (npts, 1))
    forms[:, list(indices)] = pts
    values = evaluate(invariant, HomPoly(forms, ring)).coeffs[:, 0]

    vander = np.ones((npts, len(monos)), dtype=np.int64)
    for j, e in enumerate(monos):
        for k, ek in enumerate(e):
            for _ in range(ek):
                vander[:, j] = vander[:, j] * pts[:, k] % p
    sol = _solve_mod_p(vander[: len(monos)], values[: len(monos)], p)
    if sol is None:
        return None
    if np.any((vander[len(monos) :] @ sol - values[len(monos) :]) % p):
        raise ConstraintSamplingError(f"invariant of degree {invariant.degree} did not interpolate")
    return {e: int(c) for e, c in zip(monos, sol) if c}


def _solve_system(
    polys: list[dict[tuple[int, ...], int]],
    k: int,
    p: int,
    rng: np.random.Generator,
) -> list[int] | None:
    """A common zero in GF(p)^k of the polynomials, via a lex Groebner basis."""

    if k == 1:
        common: np.ndarray | None = None
        for poly in polys:
            deg = max((e[0] for e in poly), default=0)
            coeffs = [poly.get((deg - i,), 0) for i in range(deg + 1)]
            roots = np.arange(p) if not poly else _roots_mod_p(coeffs, p)
            common = roots if common is None else np.intersect1d(common, roots)
        if common is None:
            return [int(rng.integers(p))]
        if common.size == 0:
            return None
        return [int(common[rng.integers(common.size)])]

    from sympy import Poly, groebner, symbols

    gens = symbols(f"x0:{k}")
    sym_polys = [Poly.from_dict(poly, *gens, modulus=p) for poly in polys if poly]
    if not sym_polys:
        return [int(x) for x in rng.integers(0, p, size=k)]
    basis = groebner(sym_polys, *gens, modulus=p, order="lex")
    if any(g.is_ground and not g.is_zero for g in basis.polys):
        return None

    def rec(current: list[Any], i: int, assignment: dict[int, int]) -> dict[int, int] | None:
        if i < 0:
            return assignment
        x = gens[i]
        uni = []
        rest = []
        for q in current:
            if isinstance(q, Poly):
                if q.is_zero:
                    continue
                if all(q.degree(g) <= 0 for g in q.gens if g != x):
                    uni.append(q)
                else:
                    rest.append(q)
            elif int(q) % p:
                return None
        if uni:
            g = functools.reduce(lambda a, b: a.gcd(b), uni)
            roots = _roots_mod_p([int(c) for c in Poly(g.as_expr(), x, modulus=p).all_coeffs()], p)
            roots = rng.permutation(roots)
        else:
            roots = np.array([rng.integers(p)])
        for root in roots[:8]:
            nxt = [q.eval(x, int(root)) if isinstance(q, Poly) and x in q.gens else q for q in current]
            found = rec(nxt, i - 1, {**assignment, i: int(root)})
            if found is not None:
                return found
        return None

    found = rec(list(basis.polys), k - 1, {})
    if found is None:
        return None
    return [found[i] for i in range(k)]


def sample_constrained_form(
    n: int,
    p: int,
    zeroify: Sequence[CovariantProgram],
    rng: np.random.Generator,
    *,
    max_attempts: int = 32,
) -> HomPoly:
    """Random form over GF(p) at which every invariant in `zeroify` vanishes.

    The last len(zeroify) coefficients are the unknowns and the others are
    random. Each invariant restricted to the unknowns is interpolated (its
    degree there is bounded by its weight), and the joint zero is found with
    a univariate root scan or a lex Groebner basis.
    """

    ring = GF(p)
    for inv in zeroify:
        if inv.order != 0:
            raise ValueError(f"zeroified covariants must be invariants, got order {inv.order}")
        if inv.pool.n != n:
            raise ValueError(f"invariant is for n={inv.pool.n}, expected n={n}")
    if not zeroify:
        return HomPoly(rng.integers(0, p, size=n + 1, dtype=np.int64), ring)

    k = len(zeroify)
    if k > n + 1:
        raise ValueError("more invariants than coefficients")
    indices = list(range(n + 1 - k, n + 1))
    for attempt in range(max_attempts):
        base = rng.integers(0, p, size=n + 1, dtype=np.int64)
        polys = [_interpolate(inv, base, indices, ring, rng) for inv in zeroify]
        if any(poly is None for poly in polys):
            continue
        values = _solve_system([poly for poly in polys if poly is not None], k, p, rng)
        if values is None:
            continue
        form = base.copy()
        form[indices] = values
        candidate = HomPoly(form, ring)
        if all(evaluate(inv, candidate).coeffs[0] == 0 for inv in zeroify):
            return candidate
        _warn_once(
            f"rankcheck.constrained:{n}:{p}",
            "constrained form failed its post-condition; resampling",
        )
    raise ConstraintSamplingError(
        f"no form zeroifying {k} invariants found in {max_attempts} attempts"
    )


class FormBank:
    """Deterministic, growing supply of (possibly constrained) random forms.

    Form i depends only on (seed, i), so cells asking for different numbers of
    forms see consistent prefixes.
    """

    def __init__(
        self,
        n: int,
        prime: int = DEFAULT_PRIME,
        zeroify: Sequence[CovariantProgram] = (),
        seed: int = 0,
    ) -> None:
        self.n = n
        self.prime = prime
        self.ring = GF(prime)
        self.zeroify = tuple(zeroify)
        self.seed = seed
        self._forms: list[np.ndarray] = []

    def _make(self, i: int) -> np.ndarray:
        rng = np.random.default_rng([self.seed, i])
        return sample_constrained_form(self.n, self.prime, self.zeroify, rng).coeffs

    def take(self, count: int) -> HomPoly:
        while len(self._forms) < count:
            self._forms.append(self._make(len(self._forms)))
        return HomPoly(np.stack(self._forms[:count]), self.ring)

    def prefill(self, count: int, map_fn: Callable[..., Iterable[np.ndarray]] = map) -> int:
        """Generate forms up to `count`, e.g. through an executor's `map`.

        Returns the number of forms generated by this call.
        """

        start = len(self._forms)
        if count <= start:
            return 0
        self._forms.extend(map_fn(self._make, range(start, count)))
        return count - start

    def __len__(self) -> int:
        return len(self._forms)


@dataclass(frozen=True)
class Reduction:
    """Evaluate mod `prime` at forms where the `zeroify` invariants vanish."""

    prime: int = DEFAULT_PRIME
    hsop_degrees: tuple[int, ...] = ()
    zeroify: tuple[tuple[str, CovariantProgram], ...] = ()

    def to_json(self) -> dict[str, Any]:
        return {
            "prime": self.prime,
            "hsop_degrees": list(self.hsop_degrees),
            "zeroify": [label for label, _ in self.zeroify],
        }


@dataclass
class _CellState:
    matrix: EvalMatrix
    forms: HomPoly


@dataclass
class SpanCertificate:
    n: int
    d: int
    m: int
    target_dim: int
    achieved_rank: int = 0
    witnesses: list[str] = field(default_factory=list)
    reduction: Reduction = field(default_factory=Reduction)
    seed: int = 0
    draws: int = 0
    nforms: int = 0
    _state: _CellState | None = field(default=None, repr=False, compare=False)

    @property
    def status(self) -> str:
        return "complete" if self.achieved_rank >= self.target_dim else "timeout"

    @property
    def complete(self) -> bool:
        return self.status == "complete"

    def to_json(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "cell": [self.d, self.m],
            "target_dim": self.target_dim,
            "achieved_rank": self.achieved_rank,
            "status": self.status,
            "seed": self.seed,
            "draws": self.draws,
            "forms": self.nforms,
            "reduction": self.reduction.to_json(),
            "witnesses": list(self.witnesses),
        }


def _vector(value: HomPoly) -> np.ndarray:
    return np.ascontiguousarray(value.coeffs).reshape(-1)


def verify_dimension(
    n: int,
    d: int,
    m: int,
    target_dim: int,
    generators: Any,
    reductions: Reduction | None = None,
    budget: int | None = None,
    *,
    seed: int = 0,
    transvect: bool = False,
    forms: FormBank | None = None,
    rows_slack: int = ROWS_SLACK,
    forms_slack: int = FORMS_SLACK,
) -> SpanCertificate:
    """Check that the generators span a space of dimension `target_dim` in cell (d, m).

    Random elements of the cell are evaluated at ceil(target/(m+1)) + slack
    forms and fed to an `EvalMatrix` until the rank reaches the target or the
    draw budget (default 200 x target) runs out. A complete certificate is
    always correct; a timeout may be a false negative.
    """

    reduction = reductions or Reduction()
    budget = BUDGET_FACTOR * max(target_dim, 1) if budget is None else budget
    cert = SpanCertificate(n, d, m, target_dim, reduction=reduction, seed=seed)
    if target_dim <= 0:
        return cert

    nforms = forms_needed(target_dim, m, forms_slack)
    bank = forms or FormBank(n, reduction.prime, [p for _, p in reduction.zeroify], seed)
    if bank.n != n or bank.prime != reduction.prime:
        raise ValueError("form bank does not match the cell")
    batch = bank.take(nforms)
    cert.nforms = nforms
    matrix = EvalMatrix(reduction.prime, nforms * (m + 1))
    cert._state = _CellState(matrix, batch)

    members = [(label, prog) for label, prog in _members(generators) if prog.degree <= d]
    if not members:
        return cert
    values = evaluate_many([prog for _, prog in members], batch)
    # zeroified invariants evaluate to zero and only waste draws
    live = [i for i, v in enumerate(values) if np.any(v.coeffs != 0)]
    members = [members[i] for i in live]
    values = [values[i] for i in live]
    bidegrees = [(prog.degree, prog.order) for _, prog in members]
    sampler = ProductSampler(bidegrees, d)
    rng = np.random.default_rng(seed)

    def product(mono: tuple[tuple[int, int], ...]) -> HomPoly:
        out: HomPoly | None = None
        for i, e in mono:
            for _ in range(e):
                out = values[i] if out is None else mul(out, values[i])
        assert out is not None
        return out

    def text(mono: tuple[tuple[int, int], ...]) -> str:
        parts = [members[i][0] if e == 1 else f"pow({members[i][0]}, {e})" for i, e in mono]
        out = parts[0]
        for part in parts[1:]:
            out = f"mul({out}, {part})"
        return out

    if transvect:
        noninv = ProductSampler([bd if bd[1] > 0 else (0, 0) for bd in bidegrees], d)
        options = _split_options(noninv, d, m)
    else:
        noninv, options = sampler, []
    if not options and not sampler.feasible(d, m):
        return cert

    batch_rows = target_dim + rows_slack
    while cert.draws < budget and matrix.rank < target_dim:
        for _ in range(min(batch_rows, budget - cert.draws)):
            cert.draws += 1
            if options:
                d1, m1, m2, r = options[int(rng.integers(len(options)))]
                u = noninv.sample(d1, m1, rng)
                v = noninv.sample(d - d1, m2, rng)
                value = transvectant(product(u), product(v), r)
                witness = f"tr({text(u)}, {text(v)}, {r})"
            else:
                mono = sampler.sample(d, m, rng)
                value = product(mono)
                witness = text(mono)
            if matrix.add_row(_vector(value)):
                cert.witnesses.append(witness)
                if matrix.rank >= target_dim:
                    break
    cert.achieved_rank = matrix.rank
    return cert


def find_missing_from(
    candidates: Iterable[CovariantProgram],
    cert: SpanCertificate,
    labels: dict[int, str] | None = None,
) -> list[CovariantProgram]:
    """Greedily add candidates that are outside the certified span.

    Returns the accepted candidates; `cert` is updated in place.
    """

    state = cert._state
    if state is None:
        raise ValueError("certificate carries no evaluation state")
    added = []
    for c in candidates:
        if cert.achieved_rank >= cert.target_dim:
            break
        if (c.degree, c.order) != (cert.d, cert.m):
            raise ValueError(
                f"candidate has bidegree {(c.degree, c.order)}, cell is {(cert.d, cert.m)}"
            )
        if state.matrix.add_row(_vector(evaluate(c, state.forms))):
            added.append(c)
            cert.witnesses.append(format_program(c, labels))
            cert.achieved_rank = state.matrix.rank
    return added
