from __future__ import annotations

from typing import Any

import pytest

NONIC_PUBLISHED = [
    66, 61, 64, 63, 62, 63, 64, 63, 62, 65, 64, 63,
    62, 63, 64, 63, 62, 63, 64, 63, 62, 63, 62,
]


@pytest.mark.parametrize(
    "n, d, m, expected",
    [
        (9, 64, 18, 1576149),
        (9, 60, 14, 872368),
        (9, 4, 0, 2),
        (9, 1, 9, 1),
        (9, 501, 0, 0),
        (9, 3, 2, 0),
        (4, 0, 0, 1),
        (4, 0, 2, 0),
    ],
)
def test_springer_dim(n: int, d: int, m: int, expected: int) -> None:
    from binary_covariants.hilbert import springer_dim

    assert springer_dim(n, d, m) == expected


def test_springer_dim_small_sextic_cells() -> None:
    from binary_covariants.catalog import load_catalog
    from binary_covariants.hilbert import springer_dim

    # every degree-2 covariant of the sextic is a generator
    degree_two = [e for e in load_catalog("sextic") if e.degree == 2]
    assert all(springer_dim(6, 2, e.order) == 1 for e in degree_two)
    assert sum(springer_dim(6, 2, m) for m in range(13)) == len(degree_two) + 1


def test_quotient_dim() -> None:
    from binary_covariants.hilbert import quotient_dim, springer_dim

    assert quotient_dim(9, 60, 14, [4, 4, 8]) == 33360
    assert quotient_dim(9, 4, 0, [4, 4, 8]) == 0
    assert quotient_dim(9, 60, 14) == springer_dim(9, 60, 14)


def test_order_thresholds() -> None:
    from binary_covariants.hilbert import cohen_macaulay_limit, lambda_bound, sigma_threshold

    assert lambda_bound(9) == 22
    assert lambda_bound(10) == 26
    assert sigma_threshold(9) == 25
    assert sigma_threshold(10) == 30
    assert cohen_macaulay_limit(9) == 25
    assert cohen_macaulay_limit(9, theorem=True) == 23
    with pytest.raises(ValueError):
        lambda_bound(0)


def test_linear_covariant_numerator() -> None:
    from binary_covariants.hilbert import module_hilbert_numerator, top_degree

    a = module_hilbert_numerator(9, 1, [4, 8, 10, 12, 12, 14, 16])
    assert a[:12] == [0, 0, 0, 0, 0, 1, 0, 4, 0, 10, 0, 21]
    assert top_degree(a) == 61
    assert min(a) >= 0


def test_numerator_truncation_errors() -> None:
    from binary_covariants.hilbert import TruncationError, module_hilbert_numerator

    with pytest.raises(TruncationError):
        module_hilbert_numerator(9, 1, [4, 8, 10, 12, 12, 14, 16], truncation=30, auto_extend=False)
    with pytest.raises(ValueError):
        module_hilbert_numerator(9, 0, [0, 4])


def test_power_series_rational() -> None:
    from binary_covariants.hilbert import PowerSeriesRational, TruncationError

    series = PowerSeriesRational((1,), (1, 2), truncation=6)
    assert series.coefficients() == [1, 1, 2, 2, 3, 3, 4]
    with pytest.raises(TruncationError):
        series.coefficient(7)


def test_nonic_bounds_match_published_table() -> None:
    from binary_covariants.hilbert import bound_table

    table = bound_table(9, use_published=False)
    assert [table[m] for m in range(23)] == NONIC_PUBLISHED
    assert table.hsop[0] == (4, 8, 10, 12, 12, 14, 16)
    assert table.allows(66, 0) and not table.allows(67, 0)


def test_decimic_invariant_bound_prefers_published(monkeypatch: Any) -> None:
    from binary_covariants import _helpers
    from binary_covariants.hilbert import bound_table

    computed = bound_table(10, use_published=False)
    assert computed[0] == 48
    assert computed[1] is None
    assert computed[2] == 45

    monkeypatch.setattr(_helpers, "_WARNED_ONCE", set())
    with pytest.warns(RuntimeWarning, match="published bound 59"):
        table = bound_table(10)
    assert table[0] == 59
    assert table.computed[0] == 48
    assert table.to_json()["rows"][0]["published"] == 59
