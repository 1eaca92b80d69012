from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Any, Iterable, Sequence, Union

import numpy as np

DEFAULT_PRIME = 65521
# int64 dot products of up to 2**23 terms of size (p - 1)**2 stay exact
MAX_MODULUS = 2**20
_FACTORIAL_BOUND = 10_000


__all__ = [
    "DEFAULT_PRIME",
    "MAX_MODULUS",
    "BinaryForm",
    "HomPoly",
    "ModulusTooSmallError",
    "OrderMismatchError",
    "QQ",
    "Ring",
    "RingMismatchError",
    "SL2",
    "Scalar",
    "GF",
    "act",
    "add",
    "mul",
    "random_form",
    "random_sl2",
    "scale",
    "stack",
    "transvectant",
]

Number = Union[int, Fraction]


class RingMismatchError(ValueError):
    """Operands live over different coefficient rings."""


class OrderMismatchError(ValueError):
    """Operands of an order-preserving operation have different orders."""


class ModulusTooSmallError(ValueError):
    """The prime does not exceed the operand orders, so factorials are not invertible."""


class _FactorialTable:
    """Factorials mod p, precomputed up to a bound and extended on demand."""

    def __init__(self, modulus: int, bound: int = _FACTORIAL_BOUND) -> None:
        self.modulus = modulus
        self._fact = [1]
        self._extend(min(bound, modulus - 1))

    def _extend(self, upto: int) -> None:
        fact = self._fact
        p = self.modulus
        for i in range(len(fact), upto + 1):
            fact.append(fact[-1] * i % p)

    def factorial(self, k: int) -> int:
        if k >= self.modulus:
            return 0
        if k >= len(self._fact):
            self._extend(max(k, 2 * len(self._fact)))
        return self._fact[k]


_TABLES: dict[int, _FactorialTable] = {}


def _table(modulus: int) -> _FactorialTable:
    t = _TABLES.get(modulus)
    if t is None:
        t = _TABLES[modulus] = _FactorialTable(modulus)
    return t


@dataclass(frozen=True)
class Ring:
    """Coefficient ring: the rationals (`modulus=None`) or the prime field GF(p)."""

    modulus: int | None = None

    def __post_init__(self) -> None:
        if self.modulus is not None and self.modulus < 2:
            raise ValueError(f"modulus must be >= 2, got {self.modulus}")
        if self.modulus is not None and self.modulus > MAX_MODULUS:
            raise ValueError(f"modulus {self.modulus} exceeds {MAX_MODULUS}; int64 arithmetic would overflow")

    def __str__(self) -> str:
        return "QQ" if self.modulus is None else f"GF({self.modulus})"

    @property
    def is_rational(self) -> bool:
        return self.modulus is None

    @property
    def dtype(self) -> Any:
        return object if self.modulus is None else np.int64

    def element(self, value: Any) -> Number:
        """Normalize `value` into the ring (lowest terms, or a residue in [0, p))."""

        p = self.modulus
        if p is None:
            return Fraction(value)
        if isinstance(value, Fraction):
            if value.denominator % p == 0:
                raise ZeroDivisionError(f"{value} has no image in {self}")
            return value.numerator * pow(value.denominator, -1, p) % p
        return int(value) % p

    def inverse(self, value: Any) -> Number:
        v = self.element(value)
        if v == 0:
            raise ZeroDivisionError(f"0 is not invertible in {self}")
        if self.modulus is None:
            return 1 / v
        return pow(int(v), -1, self.modulus)

    def factorial(self, k: int) -> Number:
        if self.modulus is None:
            return Fraction(math.factorial(k))
        return _table(self.modulus).factorial(k)

    def zeros(self, shape: tuple[int, ...]) -> np.ndarray:
        return np.zeros(shape, dtype=self.dtype)

    def array(self, values: Any) -> np.ndarray:
        """Build a coefficient array from arbitrary (nested) Python numbers."""

        raw = np.asarray(values, dtype=object)
        out = np.empty(raw.shape, dtype=object)
        for idx, v in np.ndenumerate(raw):
            out[idx] = self.element(v)
        if self.modulus is None:
            return out
        return out.astype(np.int64)

    def reduce(self, arr: np.ndarray) -> np.ndarray:
        if self.modulus is None:
            return np.asarray(arr, dtype=object)
        return np.mod(arr, self.modulus).astype(np.int64, copy=False)


QQ = Ring()


@lru_cache(maxsize=None)
def GF(p: int = DEFAULT_PRIME) -> Ring:
    """Return the prime field with `p` elements (primality is checked once)."""

    from sympy import isprime

    if not isprime(p):
        raise ValueError(f"{p} is not prime")
    return Ring(p)


@dataclass(frozen=True)
class Scalar:
    value: Number
    ring: Ring = QQ

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", self.ring.element(self.value))

    def _other(self, other: Any) -> Number:
        if isinstance(other, Scalar):
            if other.ring != self.ring:
                raise RingMismatchError(f"{self.ring} vs {other.ring}")
            return other.value
        return self.ring.element(other)

    @property
    def is_zero(self) -> bool:
        return self.value == 0

    def __add__(self, other: Any) -> Scalar:
        return Scalar(self.value + self._other(other), self.ring)

    def __sub__(self, other: Any) -> Scalar:
        return Scalar(self.value - self._other(other), self.ring)

    def __mul__(self, other: Any) -> Scalar:
        return Scalar(self.value * self._other(other), self.ring)

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self) -> Scalar:
        return Scalar(-self.value, self.ring)

    def inverse(self) -> Scalar:
        return Scalar(self.ring.inverse(self.value), self.ring)

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True, eq=False)
class HomPoly:
    """Homogeneous polynomial sum_i c_i x^(m-i) y^i, possibly a batch of them.

    `coeffs` has shape `batch + (m + 1,)`. Batches let one evaluation pass run a
    covariant at many forms at once.
    """

    coeffs: np.ndarray
    ring: Ring = QQ

    def __post_init__(self) -> None:
        arr = self.coeffs
        if not isinstance(arr, np.ndarray) or arr.ndim == 0 or arr.shape[-1] == 0:
            raise ValueError("coefficients must be a non-empty array")
        if arr.flags.writeable:
            arr.setflags(write=False)

    @classmethod
    def from_coefficients(cls, values: Iterable[Any], ring: Ring = QQ) -> HomPoly:
        return cls(ring.array(list(values)), ring)

    @classmethod
    def zero(cls, order: int, ring: Ring = QQ, batch: tuple[int, ...] = ()) -> HomPoly:
        if order < 0:
            raise ValueError(f"order must be >= 0, got {order}")
        return cls(ring.zeros(tuple(batch) + (order + 1,)), ring)

    @property
    def order(self) -> int:
        return self.coeffs.shape[-1] - 1

    @property
    def degree(self) -> int:
        return self.order

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return tuple(self.coeffs.shape[:-1])

    def __getitem__(self, index: Any) -> HomPoly:
        if not self.batch_shape:
            raise TypeError("not a batch of polynomials")
        return HomPoly(self.coeffs[index], self.ring)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HomPoly):
            return NotImplemented
        return (
            self.ring == other.ring
            and self.coeffs.shape == other.coeffs.shape
            and bool(np.all(self.coeffs == other.coeffs))
        )

    __hash__ = None  # type: ignore[assignment]

    def is_zero(self) -> bool:
        return not bool(np.any(self.coeffs != 0))

    def coefficient(self, i: int) -> Scalar:
        if self.batch_shape:
            raise TypeError("coefficient() needs a single polynomial")
        return Scalar(self.coeffs[i], self.ring)

    def to_list(self) -> list[Any]:
        if self.ring.is_rational:
            return np.vectorize(Fraction, otypes=[object])(self.coeffs).tolist()
        return self.coeffs.tolist()

    def __repr__(self) -> str:
        batch = f", batch={self.batch_shape}" if self.batch_shape else ""
        return f"HomPoly(order={self.order}, ring={self.ring}{batch})"


BinaryForm = HomPoly


def _common_ring(p: HomPoly, q: HomPoly) -> Ring:
    if p.ring != q.ring:
        raise RingMismatchError(f"{p.ring} vs {q.ring}")
    return p.ring


def _convolve(a: np.ndarray, b: np.ndarray, ring: Ring) -> np.ndarray:
    """Polynomial product along the last axis, broadcasting leading axes."""

    if a.shape[-1] > b.shape[-1]:
        a, b = b, a
    la, lb = a.shape[-1], b.shape[-1]
    batch = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
    out = ring.zeros(batch + (la + lb - 1,))

    p = ring.modulus
    # number of p^2-sized terms an int64 accumulator can take
    flush_every = la if p is None else max(1, (2**63 - 1) // ((p - 1) ** 2 or 1) - 1)
    for i in range(la):
        out[..., i : i + lb] += a[..., i : i + 1] * b
        if p is not None and (i + 1) % flush_every == 0:
            out %= p
    return ring.reduce(out)


def _derivative(p: HomPoly, s: int, t: int) -> np.ndarray:
    """Coefficients of d^(s+t) p / dx^s dy^t (order m - s - t)."""

    m = p.order
    weights = [math.perm(m - k, s) * math.perm(k, t) for k in range(t, m - s + 1)]
    w = p.ring.array(weights)
    return p.ring.reduce(p.coeffs[..., t : m - s + 1] * w)


def add(p: HomPoly, q: HomPoly) -> HomPoly:
    ring = _common_ring(p, q)
    if p.order != q.order:
        raise OrderMismatchError(f"orders {p.order} and {q.order}")
    return HomPoly(ring.reduce(p.coeffs + q.coeffs), ring)


def scale(p: HomPoly, c: Any) -> HomPoly:
    if isinstance(c, Scalar):
        if c.ring != p.ring:
            raise RingMismatchError(f"{p.ring} vs {c.ring}")
        c = c.value
    value = p.ring.element(c)
    return HomPoly(p.ring.reduce(p.coeffs * value), p.ring)


def mul(p: HomPoly, q: HomPoly) -> HomPoly:
    ring = _common_ring(p, q)
    return HomPoly(_convolve(p.coeffs, q.coeffs, ring), ring)


def transvectant(p: HomPoly, q: HomPoly, r: int) -> HomPoly:
    """Return the transvectant (p, q)_r.

    (p, q)_r = (n-r)!/n! (m-r)!/m! sum_i (-1)^i C(r,i)
               d^r p/dx^(r-i) dy^i * d^r q/dx^i dy^(r-i)

    For r > min(n, m) the result is the zero polynomial of order
    max(n + m - 2r, 0).
    """

    ring = _common_ring(p, q)
    if r < 0:
        raise ValueError(f"transvectant index must be >= 0, got {r}")
    n, m = p.order, q.order
    if r > min(n, m):
        batch = np.broadcast_shapes(p.batch_shape, q.batch_shape)
        return HomPoly.zero(max(n + m - 2 * r, 0), ring, batch)
    if ring.modulus is not None and ring.modulus <= max(n, m):
        raise ModulusTooSmallError(
            f"{ring} cannot invert {max(n, m)}!; use a prime larger than the orders"
        )

    acc: np.ndarray | None = None
    for i in range(r + 1):
        term = _convolve(_derivative(p, r - i, i), _derivative(q, i, r - i), ring)
        c = ring.element((-1) ** i * math.comb(r, i))
        term = ring.reduce(term * c)
        acc = term if acc is None else ring.reduce(acc + term)
    assert acc is not None

    norm = (
        ring.element(ring.factorial(n - r))
        * ring.inverse(ring.factorial(n))
        * ring.element(ring.factorial(m - r))
        * ring.inverse(ring.factorial(m))
    )
    return HomPoly(ring.reduce(acc * ring.element(norm)), ring)


def stack(polys: Sequence[HomPoly]) -> HomPoly:
    """Stack single polynomials of equal order and ring into one batch."""

    if not polys:
        raise ValueError("nothing to stack")
    ring = polys[0].ring
    for p in polys[1:]:
        _common_ring(polys[0], p)
        if p.order != polys[0].order:
            raise OrderMismatchError(f"orders {polys[0].order} and {p.order}")
    return HomPoly(np.stack([p.coeffs for p in polys]), ring)


@dataclass(frozen=True)
class SL2:
    """A matrix [[a, b], [c, d]] of determinant 1 over `ring`."""

    a: Number
    b: Number
    c: Number
    d: Number
    ring: Ring = QQ

    def __post_init__(self) -> None:
        for name in ("a", "b", "c", "d"):
            object.__setattr__(self, name, self.ring.element(getattr(self, name)))
        if self.ring.element(self.a * self.d - self.b * self.c) != 1:
            raise ValueError("matrix does not have determinant 1")

    def inverse(self) -> SL2:
        return SL2(self.d, -self.b, -self.c, self.a, self.ring)


@lru_cache(maxsize=256)
def _action_matrix(g: SL2, order: int) -> np.ndarray:
    """Matrix T with coeffs(g.p) = coeffs(p) @ T for polynomials of `order`.

    (g.p)(x, y) = p(d x - b y, -c x + a y), the substitution by g^-1.
    """

    ring = g.ring
    first = ring.array([g.d, -g.b])
    second = ring.array([-g.c, g.a])
    pow_first = [ring.array([1])]
    pow_second = [ring.array([1])]
    for _ in range(order):
        pow_first.append(_convolve(pow_first[-1], first, ring))
        pow_second.append(_convolve(pow_second[-1], second, ring))
    rows = [_convolve(pow_first[order - k], pow_second[k], ring) for k in range(order + 1)]
    t = np.stack(rows)
    t.setflags(write=False)
    return t


def act(g: SL2, p: HomPoly) -> HomPoly:
    """Left action (g.p)(v) = p(g^-1 v)."""

    if g.ring != p.ring:
        raise RingMismatchError(f"{g.ring} vs {p.ring}")
    t = _action_matrix(g, p.order)
    return HomPoly(p.ring.reduce(p.coeffs @ t), p.ring)


def random_sl2(ring: Ring, rng: np.random.Generator) -> SL2:
    if ring.modulus is None:
        a = int(rng.choice([-3, -2, -1, 1, 2, 3]))
        b, c = (int(x) for x in rng.integers(-4, 5, size=2))
        return SL2(a, b, c, Fraction(1 + b * c, a), ring)
    p = ring.modulus
    a = int(rng.integers(1, p))
    b, c = (int(x) for x in rng.integers(0, p, size=2))
    return SL2(a, b, c, (1 + b * c) * pow(a, -1, p) % p, ring)


def random_form(
    n: int,
    ring: Ring,
    rng: np.random.Generator,
    count: int | None = None,
) -> HomPoly:
    """Random binary form of degree `n`; a batch of `count` forms when given."""

    shape = (n + 1,) if count is None else (count, n + 1)
    if ring.modulus is None:
        return HomPoly(ring.array(rng.integers(-9, 10, size=shape).tolist()), ring)
    return HomPoly(rng.integers(0, ring.modulus, size=shape, dtype=np.int64), ring)
