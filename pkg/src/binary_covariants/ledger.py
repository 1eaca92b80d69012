from __future__ import annotations

import os
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from ._helpers import _jsonable, _resolve_dir, _warn_once

_LEDGER_VERSION = 1

LEDGER_DIR_ENV = "BINARY_COVARIANTS_LEDGER_DIR"
_LEDGER_SUBDIR = ".binary-covariants"


__all__ = [
    "LEDGER_DIR_ENV",
    "Ledger",
    "open_ledger",
]


def _utc_now_iso() -> str:
    """Return current UTC timestamp in ISO 8601 format."""

    return datetime.now(timezone.utc).isoformat()


def _new_ledger() -> dict[str, Any]:
    """Return an empty, valid v1 ledger object."""

    return {
        "version": _LEDGER_VERSION,
        "config": {},
        "cells": {},
    }


def _coerce_ledger(data: Any) -> dict[str, Any]:
    """Best-effort: coerce arbitrary data into the expected ledger schema.

    This function never raises.
    - If the input is not a valid v1 ledger mapping, it returns an empty ledger.
    - Unknown versions are treated as empty (no migration).
    """

    if not isinstance(data, dict):
        return _new_ledger()

    if data.get("version") != _LEDGER_VERSION:
        return _new_ledger()

    config = data.get("config")
    cells = data.get("cells")
    if not isinstance(config, dict) or not isinstance(cells, dict):
        return _new_ledger()

    return {
        "version": _LEDGER_VERSION,
        "config": config,
        "cells": {k: v for k, v in cells.items() if isinstance(v, dict)},
    }


def _cell_key(d: int, m: int) -> str:
    return f"{int(d)},{int(m)}"


def _parse_cell_key(key: str) -> tuple[int, int] | None:
    try:
        d, m = key.split(",")
        return int(d), int(m)
    except Exception:
        return None


def _get_cell(ledger: dict[str, Any], d: int, m: int) -> dict[str, Any] | None:
    """Return ledger['cells']['d,m'] if present and well-formed."""

    try:
        cells = ledger.get("cells")
        if not isinstance(cells, dict):
            return None
        v = cells.get(_cell_key(d, m))
        return v if isinstance(v, dict) else None
    except Exception:
        return None


def _set_cell(ledger: dict[str, Any], d: int, m: int, record: dict[str, Any]) -> None:
    try:
        cells = ledger.setdefault("cells", {})
        if isinstance(cells, dict):
            cells[_cell_key(d, m)] = record
    except Exception:
        return


def _resolve_ledger_dir(ledger_dir: str | os.PathLike[str] | None) -> Path:
    """Resolve the directory holding ledgers.

    Resolution order:
    1) explicit `ledger_dir`
    2) environment variable `BINARY_COVARIANTS_LEDGER_DIR`
    3) `.binary-covariants` in the current working directory
    """

    resolved = _resolve_dir(ledger_dir, LEDGER_DIR_ENV, None)
    if resolved is not None:
        return resolved
    return Path.cwd() / _LEDGER_SUBDIR


def _ledger_file_path(name: str, ledger_dir: str | os.PathLike[str] | None) -> Path:
    return _resolve_ledger_dir(ledger_dir) / f"{name}.json"


def _ensure_parent_dir(path: Path) -> None:
    """Create the parent directory for `path` (best-effort)."""

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except Exception:
        return


def _read_json(path: Path) -> dict[str, Any] | None:
    """Read a JSON mapping from disk.

    Returns None on any failure (missing file, parse error, permission error).
    """

    try:
        import json

        return json.loads(path.read_text(encoding="utf-8"))
    except Exception:
        return None


def _load_ledger(path: Path) -> dict[str, Any]:
    """Load and validate a ledger file.

    Never raises; returns an empty ledger on any failure. A file that exists
    but cannot be used is reported once.
    """

    data = _read_json(path)
    ledger = _coerce_ledger(data)
    usable = isinstance(data, dict) and data.get("version") == _LEDGER_VERSION
    if not usable and path.exists():
        _warn_once(f"ledger.discarded:{path}", f"ignoring unreadable ledger {path}")
    return ledger


def _record_fingerprint(record: dict[str, Any]) -> tuple[Any, ...]:
    """Fields whose change should trigger a disk write."""

    witnesses = record.get("witnesses")
    return (
        record.get("status"),
        record.get("target_dim"),
        record.get("achieved_rank"),
        record.get("seed"),
        tuple(witnesses) if isinstance(witnesses, list) else witnesses,
    )


def _atomic_write_text(path: Path, text: str) -> bool:
    """Atomically write text to path (best-effort); return whether it worked.

    Writes a temporary file in the same directory and swaps it in with
    `os.replace`.
    """

    _ensure_parent_dir(path)

    tmp: Path | None = None
    try:
        import tempfile

        with tempfile.NamedTemporaryFile(
            mode="w",
            encoding="utf-8",
            dir=str(path.parent),
            delete=False,
        ) as f:
            tmp = Path(f.name)
            f.write(text)
            if not text.endswith("\n"):
                f.write("\n")

        os.replace(tmp, path)
        return True
    except Exception:
        try:
            if tmp is not None and tmp.exists():
                tmp.unlink(missing_ok=True)
        except Exception:
            pass
        return False


def _write_ledger(path: Path, ledger: dict[str, Any]) -> bool:
    """Write a ledger file (atomic, best-effort)."""

    try:
        import json

        text = json.dumps(_jsonable(ledger), sort_keys=True, indent=2)
    except Exception:
        return False

    return _atomic_write_text(path, text)


def _upsert_cell(
    *,
    path: Path,
    d: int,
    m: int,
    record: dict[str, Any],
    skip_if_unchanged: bool = True,
) -> bool:
    """Upsert the record of cell (d, m) on disk.

    Skips the write when `skip_if_unchanged` and the stored fingerprint
    matches. Returns True if a disk write occurred. Never raises.
    """

    if not isinstance(record, dict):
        return False

    try:
        ledger = _load_ledger(path)
        old = _get_cell(ledger, d, m)
        if skip_if_unchanged and old is not None:
            if _record_fingerprint(old) == _record_fingerprint(record):
                return False

        record = dict(record)
        record["updated_at"] = _utc_now_iso()
        _set_cell(ledger, d, m, record)
        return _write_ledger(path, ledger)
    except Exception:
        return False


@dataclass(frozen=True)
class Ledger:
    """Resumable record of per-cell certificates of one run."""

    path: Path

    def load(self) -> dict[str, Any]:
        return _load_ledger(self.path)

    def config(self) -> dict[str, Any]:
        return dict(self.load().get("config", {}))

    def set_config(self, config: dict[str, Any]) -> bool:
        ledger = self.load()
        if ledger.get("config") == _jsonable(config):
            return False
        ledger["config"] = config
        return _write_ledger(self.path, ledger)

    def record(self, d: int, m: int, record: dict[str, Any]) -> bool:
        return _upsert_cell(path=self.path, d=d, m=m, record=record)

    def get(self, d: int, m: int) -> dict[str, Any] | None:
        return _get_cell(self.load(), d, m)

    def completed(self) -> set[tuple[int, int]]:
        """Cells whose stored certificate reached its target."""

        out = set()
        for key, rec in self.load()["cells"].items():
            cell = _parse_cell_key(key)
            if cell is not None and rec.get("status") == "complete":
                out.add(cell)
        return out


def open_ledger(name: str, ledger_dir: str | os.PathLike[str] | None = None) -> Ledger:
    return Ledger(_ledger_file_path(name, ledger_dir))
