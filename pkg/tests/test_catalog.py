from __future__ import annotations

from pathlib import Path
from typing import Any

import numpy as np
import pytest

NONIC_ROWS = {
    1: 1, 2: 4, 3: 10, 4: 18, 5: 25, 6: 28, 7: 34, 8: 39, 9: 41, 10: 39, 11: 41,
    12: 42, 13: 36, 14: 31, 15: 27, 16: 24, 17: 7, 18: 25, 19: 1, 20: 2, 22: 1,
}

# degree -> {order: generators}
DECIMIC_CELLS = {
    1: {10: 1},
    2: {0: 1, 4: 1, 8: 1, 12: 1, 16: 1},
    3: {2: 1, 6: 2, 8: 1, 10: 1, 12: 2, 14: 1, 16: 1, 18: 1, 20: 1, 24: 1},
    4: {0: 1, 4: 3, 6: 1, 8: 3, 10: 3, 12: 2, 14: 3, 16: 1, 18: 2, 20: 1, 22: 1, 26: 1},
    5: {2: 3, 4: 3, 6: 4, 8: 5, 10: 4, 12: 5, 14: 2, 16: 4, 20: 2},
    6: {0: 4, 2: 2, 4: 5, 6: 8, 8: 6, 10: 8, 12: 2, 14: 4, 18: 1},
    7: {2: 7, 4: 10, 6: 8, 8: 12, 10: 2, 12: 4, 16: 1},
    8: {0: 5, 2: 8, 4: 11, 6: 15, 8: 4, 10: 7, 14: 1},
    9: {0: 5, 2: 13, 4: 19, 6: 8, 8: 7, 12: 1},
    10: {0: 8, 2: 20, 4: 13, 6: 13, 10: 1},
    11: {0: 8, 2: 18, 4: 21, 8: 1},
    12: {0: 12, 2: 30, 4: 1, 6: 2},
    13: {0: 15, 2: 16, 4: 2},
    14: {0: 13, 2: 17},
    15: {0: 19, 4: 1},
    16: {0: 5, 2: 3},
    17: {0: 5},
    18: {0: 1, 2: 1},
    19: {0: 2},
    21: {0: 2},
}


def test_nonic_catalog_table() -> None:
    from binary_covariants.catalog import load_catalog, table_counts

    cat = load_catalog("nonic")
    assert cat.n == 9
    table = table_counts(cat)
    assert table.total == 476
    assert table.rows() == NONIC_ROWS
    assert table.columns()[0] == 92
    assert table.cumulative()[18] == 472

    assert (cat["c2"].degree, cat["c2"].order) == (2, 2)
    assert (cat["c121"].degree, cat["c121"].order) == (8, 0)
    assert cat["c121"].expr == "tr(pow(c2, 3), c3, 6)"


@pytest.mark.parametrize(
    "name, n, total, invariants",
    [("decimic", 10, 510, 106), ("sextic", 6, 26, 5), ("octic", 8, 69, 9)],
)
def test_shipped_catalog_sizes(name: str, n: int, total: int, invariants: int) -> None:
    from binary_covariants.catalog import load_catalog, table_counts

    cat = load_catalog(name)
    assert cat.n == n
    table = table_counts(cat)
    assert table.total == total
    assert table.columns()[0] == invariants


def test_decimic_catalog_table() -> None:
    from binary_covariants.catalog import load_basis, table_counts

    table = table_counts(load_basis(10))
    cells = {(d, m): c for d, row in DECIMIC_CELLS.items() for m, c in row.items()}
    assert table.counts == cells
    rows = table.rows()
    assert max(rows) == 21
    assert 20 not in rows
    assert table.cumulative()[19] == 508
    assert table.cumulative()[21] == 510
    assert table.columns() == {
        0: 106, 2: 139, 4: 90, 6: 61, 8: 40, 10: 27, 12: 17,
        14: 11, 16: 8, 18: 4, 20: 4, 22: 1, 24: 1, 26: 1,
    }


def test_parse_checks_declared_bidegrees() -> None:
    from binary_covariants.catalog import CatalogError, parse_catalog

    text = "n = 4\ndegree = 2\norder = 4\nH = tr(f, f, 2)\norder = 0\ni = tr(f, f, 4)\n"
    cat = parse_catalog(text)
    assert cat.labels == ["H", "i"]
    assert cat["i"].order == 0

    with pytest.raises(CatalogError) as info:
        parse_catalog("n = 4\ndegree = 2\norder = 2\nH = tr(f, f, 2)\n", name="bad.cat")
    assert "bad.cat:4" in str(info.value)


@pytest.mark.parametrize(
    "text",
    [
        "c1 = f\n",
        "n = 4\nc1 = f\nc1 = tr(f, f, 2)\n",
        "n = 4\ntr = f\n",
        "n = 4\nc1 = tr(f, f, 5)\n",
        "n = 4\nc1 = tr(f, g, 2)\n",
        "n = 4\nc1 = mul(f, f\n",
        "n = 4\nc1 f\n",
    ],
)
def test_parse_rejects_malformed_text(text: str) -> None:
    from binary_covariants.catalog import CatalogError, parse_catalog

    with pytest.raises(CatalogError):
        parse_catalog(text)


def test_text_form_reparses_to_same_table() -> None:
    from binary_covariants.catalog import load_catalog, parse_catalog, table_counts

    cat = load_catalog("sextic")
    again = parse_catalog(cat.to_text("sextic copy"))
    assert again.labels == cat.labels
    assert table_counts(again).counts == table_counts(cat).counts


def test_catalog_dir_override(tmp_path: Path, monkeypatch: Any) -> None:
    from binary_covariants.catalog import CATALOG_DIR_ENV, load_catalog

    (tmp_path / "sextic.cat").write_text("n = 6\nc1 = f\n", encoding="utf-8")
    monkeypatch.setenv(CATALOG_DIR_ENV, str(tmp_path))
    assert len(load_catalog("sextic")) == 1
    assert len(load_catalog("octic")) == 69


@pytest.mark.parametrize(
    "n, degrees",
    [(9, [4, 4, 8, 12, 14, 16, 30]), (10, [2, 4, 6, 6, 8, 9, 10, 14])],
)
def test_hsop_parameters_are_invariants(n: int, degrees: list[int]) -> None:
    from binary_covariants.catalog import hsop_parameters

    params = hsop_parameters(n)
    assert [d for _, _, d in params] == degrees
    assert all(prog.order == 0 and prog.degree == d for _, prog, d in params)


@pytest.mark.parametrize("n", [9, 10])
def test_hsop_identifications(n: int) -> None:
    from binary_covariants.catalog import HSOP_IDENTIFICATIONS, hsop_programs, load_basis
    from binary_covariants.program import evaluate, scale_free_compare
    from binary_covariants.scalar_forms import GF, random_form

    progs = {label: prog for label, prog, _ in hsop_programs(n)}
    basis = load_basis(n)
    forms = random_form(n, GF(65521), np.random.default_rng(n), count=20)
    for param, label in HSOP_IDENTIFICATIONS[n].items():
        ours, theirs = evaluate(progs[param], forms), evaluate(basis.program(label), forms)
        assert ours.batch_shape == (20,)
        assert not ours.is_zero()
        assert scale_free_compare(ours, theirs)


def test_bound_data() -> None:
    from binary_covariants.catalog import CatalogError, load_bound_data

    data = load_bound_data(9)
    assert data["reduction"] == [4, 4, 8]
    assert len(data["published"]) == 23
    with pytest.raises(CatalogError):
        load_bound_data(7)
