from __future__ import annotations

import os
import sys
import warnings
from pathlib import Path
from typing import Any, Iterable, TypeVar

__all__ = [
    "_IN_IPYTHON",
    "_WARNED_ONCE",
    "is_interactive",
    "_in_ipython",
    "_jsonable",
    "_progress",
    "_resolve_dir",
    "_warn_once",
]

_WARNED_ONCE: set[str] = set()
# Cached IPython detection state.
# - None: not checked yet
# - True/False: cached result
_IN_IPYTHON: bool | None = None

T = TypeVar("T")


def _warn_once(
    key: str,
    message: str,
    exc: BaseException | None = None,
    *,
    category: type[Warning] = RuntimeWarning,
) -> None:
    """Warn once per process for a given key.

    Long runs hit the same recoverable anomaly many times (a resampled form, a
    discarded ledger). This helper keeps the signal (a warning) without
    spamming loops.
    """

    if key in _WARNED_ONCE:
        return
    _WARNED_ONCE.add(key)

    detail = f" ({exc.__class__.__name__}: {exc})" if exc is not None else ""
    warnings.warn(f"{message}{detail}", category, stacklevel=3)


def _in_ipython() -> bool:
    """Return True when running under IPython."""

    global _IN_IPYTHON
    if _IN_IPYTHON is not None:
        return _IN_IPYTHON

    try:
        _IN_IPYTHON = bool(__IPYTHON__)  # pyright: ignore[reportUndefinedVariable]
    except NameError:
        _IN_IPYTHON = False
    return _IN_IPYTHON


def is_interactive() -> bool:
    """Return True in IPython/Jupyter, REPL sessions or when stderr is a terminal.

    Used to pick the default for progress bars: batch jobs writing to log files
    should not get carriage-return noise.
    """

    if _in_ipython():
        return True

    if getattr(sys, "ps1", None) is not None:
        return True

    if getattr(sys.flags, "interactive", 0):
        return True

    try:
        return bool(sys.stderr.isatty())
    except Exception:
        return False


def _progress(
    iterable: Iterable[T],
    *,
    desc: str,
    total: int | None = None,
    enabled: bool | None = None,
) -> Iterable[T]:
    """Wrap `iterable` in a tqdm bar when progress reporting is enabled.

    `enabled=None` means "decide from the session" (see `is_interactive`).
    """

    if enabled is None:
        enabled = is_interactive()
    if not enabled:
        return iterable

    from tqdm import tqdm

    return tqdm(iterable, desc=desc, total=total, dynamic_ncols=True, leave=False)


def _resolve_dir(
    explicit: str | os.PathLike[str] | None,
    env_var: str,
    default: Path | None,
) -> Path | None:
    """Resolve a directory: explicit argument, then environment variable, then default."""

    if explicit is not None:
        return Path(explicit).expanduser()

    env = os.environ.get(env_var)
    if env:
        return Path(env).expanduser()

    return default


def _jsonable(value: Any) -> Any:
    """Convert tuples, numpy scalars and big ints into JSON-friendly values."""

    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "item") and callable(value.item):
        return value.item()
    return value
