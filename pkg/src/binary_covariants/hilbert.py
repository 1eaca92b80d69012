from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Sequence

from ._helpers import _warn_once

__all__ = [
    "BoundTable",
    "NonRegularSequenceError",
    "PowerSeriesRational",
    "TruncationError",
    "bound_table",
    "cohen_macaulay_limit",
    "gaussian_binomial",
    "hilbert_series",
    "lambda_bound",
    "module_hilbert_numerator",
    "quotient_dim",
    "sigma_threshold",
    "springer_dim",
    "top_degree",
]

# trailing coefficients that must vanish before a numerator counts as stable
_STABLE_WINDOW = 24
_MAX_TRUNCATION = 4096


class TruncationError(RuntimeError):
    """The truncated product did not stabilize to a polynomial."""


class NonRegularSequenceError(ValueError):
    """A negative numerator coefficient: the degrees are not a regular sequence."""


@lru_cache(maxsize=4096)
def gaussian_binomial(n: int, d: int) -> tuple[int, ...]:
    """Coefficients of the Gaussian binomial [n + d choose n]_q (degree n*d)."""

    top = n * d
    c = [0] * (top + 1)
    c[0] = 1
    for i in range(1, n + 1):
        for k in range(top, d + i - 1, -1):
            c[k] -= c[k - d - i]
        for k in range(i, top + 1):
            c[k] += c[k - i]
    return tuple(c)


def springer_dim(n: int, d: int, m: int) -> int:
    """Dimension of the space of covariants of degree d and order m of the n-ic.

    With k = (n d - m) / 2 this is g_k - g_(k-1), where g are the coefficients of
    [n + d choose n]_q; it is zero when n d - m is negative or odd.
    """

    if d < 0 or m < 0:
        return 0
    if d == 0:
        return 1 if m == 0 else 0
    t = n * d - m
    if t < 0 or t % 2:
        return 0
    k = t // 2
    g = gaussian_binomial(n, d)
    return g[k] - (g[k - 1] if k > 0 else 0)


def lambda_bound(n: int) -> int:
    """Maximum order of a minimal generator: (l - 1) 2^l + v (l + 1) + 2 for n = 2^l + v."""

    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    lam = n.bit_length() - 1
    nu = n - (1 << lam)
    return (lam - 1) * (1 << lam) + nu * (lam + 1) + 2


def sigma_threshold(n: int) -> int:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n % 2:
        return (n + 1) ** 2 // 4
    return n * (n + 2) // 4


def cohen_macaulay_limit(n: int, *, theorem: bool = False) -> int:
    """Orders m below the returned value have Cohen-Macaulay covariant modules.

    The default is the published corollary range (m < sigma_n, i.e. 25 for the
    nonic, 30 for the decimic). `theorem=True` gives the more conservative
    m < sigma_n - 2 form of the general statement.
    """

    sigma = sigma_threshold(n)
    return sigma - 2 if theorem else sigma


def hilbert_series(n: int, m: int, truncation: int) -> list[int]:
    """Coefficients 0..truncation of the Hilbert series of Cov_m(S_n) in the degree."""

    return [springer_dim(n, d, m) for d in range(truncation + 1)]


def _times_denominators(series: list[int], degrees: Sequence[int]) -> list[int]:
    out = list(series)
    top = len(out) - 1
    for dj in degrees:
        for k in range(top, dj - 1, -1):
            out[k] -= out[k - dj]
    return out


def top_degree(poly: Sequence[int]) -> int | None:
    for k in range(len(poly) - 1, -1, -1):
        if poly[k]:
            return k
    return None


@dataclass(frozen=True)
class PowerSeriesRational:
    """numerator / prod_j (1 - q^d_j), expanded up to `truncation` on demand."""

    numerator: tuple[int, ...]
    denominator: tuple[int, ...] = ()
    truncation: int = 0

    def coefficients(self) -> list[int]:
        out = list(self.numerator[: self.truncation + 1])
        out += [0] * (self.truncation + 1 - len(out))
        for dj in self.denominator:
            for k in range(dj, self.truncation + 1):
                out[k] += out[k - dj]
        return out

    def coefficient(self, k: int) -> int:
        if not 0 <= k <= self.truncation:
            raise TruncationError(f"coefficient {k} is beyond truncation {self.truncation}")
        return self.coefficients()[k]


def module_hilbert_numerator(
    n: int,
    m: int,
    hsop_degrees: Sequence[int],
    truncation: int | None = None,
    *,
    auto_extend: bool = True,
) -> list[int]:
    """Numerator a(z) = H_{Cov_m}(z) * prod_j (1 - z^d_j), trailing zeros stripped.

    With no degrees the truncated series itself is returned. Raises
    `TruncationError` when the product has not stabilized (after doubling the
    truncation when `auto_extend`), and `NonRegularSequenceError` on a negative
    coefficient.
    """

    degrees = tuple(int(d) for d in hsop_degrees)
    if any(d < 1 for d in degrees):
        raise ValueError(f"h.s.o.p. degrees must be positive, got {degrees}")
    t = sum(degrees) + 80 if truncation is None else truncation
    if not degrees:
        return hilbert_series(n, m, t)

    while True:
        a = _times_denominators(hilbert_series(n, m, t), degrees)
        window = a[max(0, t + 1 - _STABLE_WINDOW) :]
        if t >= _STABLE_WINDOW and not any(window):
            break
        if not auto_extend or 2 * t > _MAX_TRUNCATION:
            raise TruncationError(
                f"numerator for n={n}, m={m}, degrees={list(degrees)} not stable at truncation {t}"
            )
        _warn_once(
            f"hilbert.truncation:{n}:{m}:{degrees}",
            f"numerator not stable at truncation {t}; doubling",
        )
        t *= 2

    negative = [k for k, c in enumerate(a) if c < 0]
    if negative:
        raise NonRegularSequenceError(
            f"negative coefficient at z^{negative[0]} for n={n}, m={m}, degrees={list(degrees)}"
        )
    top = top_degree(a)
    return a[: (top or 0) + 1]


def quotient_dim(n: int, d: int, m: int, reduction_degrees: Sequence[int] = ()) -> int:
    """dim of Cov_{d,m} modulo a regular sequence of invariants of the given degrees."""

    poly = {0: 1}
    for dj in reduction_degrees:
        nxt = dict(poly)
        for k, c in poly.items():
            nxt[k + dj] = nxt.get(k + dj, 0) - c
        poly = {k: c for k, c in nxt.items() if c}
    return sum(c * springer_dim(n, d - k, m) for k, c in poly.items() if k <= d)


@dataclass
class BoundTable:
    """Per-order upper bounds on the degree of minimal generators.

    `entries[m]` is the effective bound (None when Cov_m is zero), `computed[m]`
    the top numerator degree for the selected h.s.o.p. `hsop[m]`, and
    `published[m]` the reference value when one exists.
    """

    n: int
    entries: dict[int, int | None] = field(default_factory=dict)
    computed: dict[int, int | None] = field(default_factory=dict)
    published: dict[int, int | None] = field(default_factory=dict)
    hsop: dict[int, tuple[int, ...] | None] = field(default_factory=dict)

    def __getitem__(self, m: int) -> int | None:
        return self.entries[m]

    @property
    def max_order(self) -> int:
        return max(self.entries)

    def allows(self, d: int, m: int) -> bool:
        bound = self.entries.get(m)
        return bound is not None and d <= bound

    def to_json(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "rows": [
                {
                    "m": m,
                    "bound": self.entries[m],
                    "computed": self.computed.get(m),
                    "published": self.published.get(m),
                    "hsop": list(self.hsop[m]) if self.hsop.get(m) else None,
                }
                for m in sorted(self.entries)
            ],
        }


def _best_numerator_top(
    n: int,
    m: int,
    candidates: Sequence[Sequence[int]],
    truncation: int | None = None,
) -> tuple[int | None, tuple[int, ...] | None]:
    best: tuple[int | None, tuple[int, ...] | None] = (None, None)
    for degrees in candidates:
        try:
            top = top_degree(module_hilbert_numerator(n, m, degrees, truncation))
        except NonRegularSequenceError:
            continue
        if top is None:
            return None, None
        if best[0] is None or top < best[0]:
            best = (top, tuple(degrees))
    return best


def bound_table(n: int, *, use_published: bool = True, truncation: int | None = None) -> BoundTable:
    """Degree bounds d_m for every order m <= lambda_n.

    For each order the h.s.o.p. among the shipped candidates giving the
    smallest numerator degree is selected. When a published value is looser
    than the computed one it is used instead (with a warning) unless
    `use_published=False`.
    """

    from .catalog import load_bound_data

    data = load_bound_data(n)
    table = BoundTable(n)
    published = list(data.get("published") or [])
    for m in range(lambda_bound(n) + 1):
        top, degrees = _best_numerator_top(n, m, data["hsop"], truncation)
        pub = published[m] if m < len(published) else None
        table.computed[m] = top
        table.hsop[m] = degrees
        table.published[m] = pub
        entry = top
        if use_published and pub is not None and (top is None or pub > top):
            _warn_once(
                f"hilbert.published:{n}:{m}",
                f"published bound {pub} for n={n}, m={m} is looser than computed {top}; using it",
            )
            entry = pub
        table.entries[m] = entry
    return table
