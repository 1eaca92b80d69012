from __future__ import annotations

from pathlib import Path
from typing import Any

import pytest


def test_new_ledger_has_expected_top_level_keys() -> None:
    from binary_covariants import ledger

    c = ledger._new_ledger()
    assert c["version"] == 1
    assert isinstance(c["config"], dict)
    assert isinstance(c["cells"], dict)


def test_coerce_ledger_rejects_bad_data() -> None:
    from binary_covariants import ledger

    assert ledger._coerce_ledger(None) == ledger._new_ledger()
    assert ledger._coerce_ledger([1, 2]) == ledger._new_ledger()
    assert ledger._coerce_ledger({"version": 999, "config": {}, "cells": {}}) == ledger._new_ledger()

    c = ledger._coerce_ledger({"version": 1, "config": {}, "cells": {"1,9": {}, "2,2": 5}})
    assert list(c["cells"]) == ["1,9"]


def test_cell_keys() -> None:
    from binary_covariants import ledger

    assert ledger._cell_key(60, 14) == "60,14"
    assert ledger._parse_cell_key("60,14") == (60, 14)
    assert ledger._parse_cell_key("garbage") is None

    c: dict[str, Any] = ledger._new_ledger()
    ledger._set_cell(c, 4, 0, {"status": "complete"})
    assert ledger._get_cell(c, 4, 0) == {"status": "complete"}
    assert ledger._get_cell(c, 0, 4) is None


def test_upsert_cell_writes_file(tmp_path: Path) -> None:
    from binary_covariants import ledger

    p = tmp_path / "verify-n9.json"
    wrote = ledger._upsert_cell(
        path=p,
        d=4,
        m=0,
        record={"status": "complete", "target_dim": 2, "achieved_rank": 2, "witnesses": ["c16", "c17"]},
    )
    assert wrote is True
    assert p.exists()

    c = ledger._load_ledger(p)
    e = ledger._get_cell(c, 4, 0)
    assert e is not None
    assert e["witnesses"] == ["c16", "c17"]
    assert "updated_at" in e


def test_upsert_cell_skips_when_unchanged(tmp_path: Path) -> None:
    from binary_covariants import ledger

    p = tmp_path / "verify-n9.json"
    record = {"status": "complete", "target_dim": 1, "achieved_rank": 1, "seed": 3}
    assert ledger._upsert_cell(path=p, d=1, m=9, record=record) is True
    assert ledger._upsert_cell(path=p, d=1, m=9, record=record) is False
    assert ledger._upsert_cell(path=p, d=1, m=9, record={**record, "seed": 4}) is True


def test_upsert_cell_recovers_from_corrupt_file(tmp_path: Path) -> None:
    from binary_covariants import ledger

    p = tmp_path / "verify-n9.json"
    p.write_text("{not json", encoding="utf-8")

    with pytest.warns(RuntimeWarning, match="ignoring unreadable ledger"):
        wrote = ledger._upsert_cell(path=p, d=2, m=2, record={"status": "timeout"})
    assert wrote is True
    assert ledger._get_cell(ledger._load_ledger(p), 2, 2) is not None


def test_ledger_tracks_completed_cells(tmp_path: Path) -> None:
    from binary_covariants.ledger import open_ledger

    led = open_ledger("verify-n9", tmp_path)
    assert led.path == tmp_path / "verify-n9.json"
    assert led.completed() == set()

    led.record(4, 0, {"status": "complete", "target_dim": 2, "achieved_rank": 2})
    led.record(60, 14, {"status": "timeout", "target_dim": 10, "achieved_rank": 7})
    assert led.completed() == {(4, 0)}
    assert led.get(60, 14)["achieved_rank"] == 7

    assert led.set_config({"prime": 65521, "seed": (1, 2)}) is True
    assert led.set_config({"prime": 65521, "seed": [1, 2]}) is False
    assert led.config() == {"prime": 65521, "seed": [1, 2]}


def test_resolve_ledger_dir_explicit(monkeypatch: Any, tmp_path: Path) -> None:
    from binary_covariants import ledger

    monkeypatch.delenv(ledger.LEDGER_DIR_ENV, raising=False)
    assert ledger._resolve_ledger_dir(tmp_path) == tmp_path


def test_resolve_ledger_dir_env(monkeypatch: Any, tmp_path: Path) -> None:
    from binary_covariants import ledger

    monkeypatch.setenv(ledger.LEDGER_DIR_ENV, str(tmp_path))
    assert ledger._resolve_ledger_dir(None) == tmp_path


def test_resolve_ledger_dir_defaults_to_cwd(monkeypatch: Any, tmp_path: Path) -> None:
    from binary_covariants import ledger

    monkeypatch.delenv(ledger.LEDGER_DIR_ENV, raising=False)
    monkeypatch.chdir(tmp_path)
    assert ledger._resolve_ledger_dir(None) == tmp_path / ".binary-covariants"
