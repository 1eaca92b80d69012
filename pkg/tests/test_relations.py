from __future__ import annotations

import json
from pathlib import Path

import pytest


def test_shipped_sextic_relations() -> None:
    from binary_covariants.relations import load_relations

    rels = load_relations("sextic")
    assert rels.basis == "sextic"
    assert rels.prime == 65521
    assert len(rels.power) == 18
    assert len(rels.pairs) == 48
    assert rels.power["c8"] == 8
    assert rels.power["c7"] == 8
    assert rels.power["c6"] == 9
    assert rels.power["c26"] == 2
    assert not {"c1", "c2", "c3", "c5"} & set(rels.power)


def test_shipped_relations_name_non_invariants_but_one() -> None:
    from binary_covariants.catalog import load_catalog
    from binary_covariants.relations import load_relations

    cat = load_catalog("sextic")
    invariant_heads = []
    for rel in load_relations("sextic"):
        for label in rel.labels:
            if cat[label].order == 0:
                invariant_heads.append((rel.kind, label))
    assert invariant_heads == [("power", "c26")]


def test_degree_15_sextic_invariant_squares_into_lower_invariants() -> None:
    from binary_covariants.catalog import load_catalog
    from binary_covariants.relations import MonomialRelation, find_power_relation, order_basis

    ordered = order_basis(load_catalog("sextic"))
    assert [label for label, _ in ordered[-5:]] == ["c26", "c24", "c18", "c12", "c4"]
    assert find_power_relation("c26", ordered, 3, seed=2) == MonomialRelation("power", ("c26",), (2,))
    assert find_power_relation("c12", ordered, 3, seed=2) is None


def test_relation_divides_and_filter() -> None:
    from binary_covariants.relations import MonomialRelation, RelationSet, filter_solutions

    power = MonomialRelation("power", ("c8",), (8,))
    pair = MonomialRelation("pair", ("c5", "c7"), (1, 2))
    assert str(pair) == "c5^1 * c7^2"
    assert power.divides({"c8": 9, "c2": 1})
    assert not power.divides({"c8": 7})

    rels = RelationSet("sextic", relations=[power, pair])
    assert rels.forbids({"c5": 1, "c7": 3})
    assert not rels.forbids({"c5": 1, "c7": 1})

    monos = [{"c8": 8}, {"c8": 7}, {"c5": 2, "c7": 2}, {"c7": 5}]
    assert filter_solutions(monos, rels) == [{"c8": 7}, {"c7": 5}]
    assert filter_solutions(monos, None) == monos


def test_filter_solutions_reads_beta_against_labels() -> None:
    from binary_covariants.diophantine import MinimalSolution
    from binary_covariants.relations import filter_solutions, load_relations

    rels = load_relations("sextic")
    sols = [MinimalSolution((1,), (8, 0), 0, 0, 2), MinimalSolution((1,), (7, 1), 0, 0, 2)]
    assert filter_solutions(sols, rels, labels=["c8", "c1"]) == [sols[1]]
    assert filter_solutions(sols, rels, key=lambda s: {"c1": s.beta[0]}) == sols

    with pytest.raises(ValueError, match="labels"):
        filter_solutions(sols, rels)
    with pytest.raises(ValueError):
        filter_solutions(sols, rels, labels=["c8"])
    with pytest.raises(TypeError):
        filter_solutions([3], rels)


def test_filter_solutions_agrees_with_plan_counts() -> None:
    from binary_covariants.diophantine import expand_solution
    from binary_covariants.gordan import b_family, plan_cells, seed_family, solve_step
    from binary_covariants.program import ProgramPool
    from binary_covariants.relations import MonomialRelation, RelationSet, filter_solutions

    pool = ProgramPool(6)
    step = solve_step(seed_family(6, 1, pool), b_family(6, 2, pool))
    expanded = [e for sol in step.solutions for e in expand_solution(sol, step.merged, step.system)]
    label = step.B.labels[0]
    forbid = RelationSet("toy", relations=[MonomialRelation("power", (label,), (1,))])

    kept = filter_solutions(expanded, forbid, labels=step.B.labels)
    assert 0 < len(kept) < len(expanded)
    assert len(kept) == plan_cells(step, relations=forbid).total_transvectants


def test_malformed_relations_are_rejected() -> None:
    from binary_covariants.relations import MonomialRelation, RelationSet

    with pytest.raises(ValueError):
        MonomialRelation("triple", ("a",), (1,))
    with pytest.raises(ValueError):
        MonomialRelation("pair", ("a",), (1,))
    with pytest.raises(ValueError):
        RelationSet.from_json({"version": 2})


def test_dump_relations_writes_loadable_json(tmp_path: Path) -> None:
    from binary_covariants.relations import (
        MonomialRelation,
        RelationSet,
        dump_relations,
    )

    rels = RelationSet(
        "toy",
        prime=101,
        relations=[MonomialRelation("power", ("T",), (2,)), MonomialRelation("pair", ("T", "H"), (1, 3))],
        seed=4,
    )
    path = tmp_path / "out" / "toy_relations.json"
    assert dump_relations(rels, path)
    data = json.loads(path.read_text(encoding="utf-8"))
    assert data["power"] == [{"label": "T", "exponent": 2}]
    assert data["seed"] == 4
    again = RelationSet.from_json(data)
    assert again.relations == rels.relations
    assert again.prime == 101


def test_order_basis_puts_invariants_last() -> None:
    from binary_covariants.catalog import load_catalog
    from binary_covariants.relations import order_basis

    ordered = order_basis(load_catalog("sextic"))
    progs = [prog for _, prog in ordered]
    first_invariant = next(i for i, p in enumerate(progs) if p.order == 0)
    assert all(p.order == 0 for p in progs[first_invariant:])
    noninv = progs[:first_invariant]
    assert [p.degree for p in noninv] == sorted((p.degree for p in noninv), reverse=True)
    assert ordered[first_invariant - 1][0] == "c1"


def test_cubic_relations_are_discovered() -> None:
    from binary_covariants.catalog import load_basis
    from binary_covariants.relations import check_relation, discover_relations

    basis = load_basis(3)
    by_bidegree = {(e.degree, e.order): e.label for e in basis}
    t = by_bidegree[(3, 3)]

    rels = discover_relations(basis, 4, basis="cubic", progress=False)
    assert rels.power == {t: 2}
    assert rels.pairs == []
    assert check_relation(rels.relations[0], basis) is True
