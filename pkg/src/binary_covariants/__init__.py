from __future__ import annotations

from importlib.metadata import PackageNotFoundError, version

try:
    import numpy  # noqa: F401
except ModuleNotFoundError as e:  # pragma: no cover
    raise ModuleNotFoundError(
        "binary-covariants requires numpy. Install it first (e.g. `pip install numpy`)."
    ) from e

from ._helpers import is_interactive
from .catalog import Catalog, load_basis, load_catalog, parse_catalog, table_counts
from .diophantine import DiophSystem, companion, expansion_count, hilbert_basis
from .gordan import (
    Family,
    olver_candidate_basis,
    plan_cells,
    run_gordan,
    seed_families,
    verify_cells,
)
from .hilbert import bound_table, quotient_dim, springer_dim
from .program import CovariantProgram, ProgramPool, evaluate, format_program, substitute
from .rankcheck import verify_dimension
from .relations import discover_relations, load_relations
from .scalar_forms import GF, QQ, HomPoly, transvectant

try:
    __version__ = version("binary-covariants")
except PackageNotFoundError:  # pragma: no cover
    __version__ = "0.0.0"

__all__ = [
    "__version__",
    "Catalog",
    "CovariantProgram",
    "DiophSystem",
    "Family",
    "GF",
    "HomPoly",
    "ProgramPool",
    "QQ",
    "bound_table",
    "companion",
    "discover_relations",
    "evaluate",
    "expansion_count",
    "format_program",
    "hilbert_basis",
    "is_interactive",
    "load_basis",
    "load_catalog",
    "load_relations",
    "olver_candidate_basis",
    "parse_catalog",
    "plan_cells",
    "quotient_dim",
    "run_gordan",
    "seed_families",
    "springer_dim",
    "substitute",
    "table_counts",
    "transvectant",
    "verify_cells",
    "verify_dimension",
]
