from __future__ import annotations

import numpy as np
import pytest


def test_pool_shares_identical_nodes() -> None:
    from binary_covariants.program import ProgramPool

    pool = ProgramPool(4)
    h = pool.transvect(0, 0, 2)
    assert pool.transvect(0, 0, 2) == h
    assert pool.bidegree(h) == (2, 4)
    t = pool.transvect(0, h, 1)
    assert pool.bidegree(t) == (3, 6)
    before = len(pool)
    assert pool.mul(h, 0) == pool.mul(0, h)
    assert len(pool) == before + 1


def test_products_flatten_and_collect_exponents() -> None:
    from binary_covariants.program import Product, ProgramPool

    pool = ProgramPool(3)
    h = pool.transvect(0, 0, 2)
    fh = pool.mul(0, h)
    node = pool.node(pool.mul(fh, h))
    assert isinstance(node, Product)
    assert node.factors == ((0, 1), (h, 2))
    assert pool.power(0, 1) == 0


def test_malformed_nodes_are_rejected() -> None:
    from binary_covariants.program import ProgramError, ProgramPool

    pool = ProgramPool(4)
    h = pool.transvect(0, 0, 2)
    with pytest.raises(ProgramError):
        pool.transvect(0, 0, 5)
    with pytest.raises(ProgramError):
        pool.transvect(0, 99, 1)
    with pytest.raises(ProgramError):
        pool.add(0, h)
    with pytest.raises(ProgramError):
        pool.power(h, 0)


@pytest.mark.parametrize("n", [3, 4, 5, 6, 7, 8, 9, 10])
def test_evaluation_is_equivariant(n: int) -> None:
    from binary_covariants.program import ProgramPool, evaluate_many
    from binary_covariants.scalar_forms import GF, act, random_form, random_sl2

    ring = GF(65521)
    rng = np.random.default_rng(n)
    pool = ProgramPool(n)
    h = pool.transvect(0, 0, 2)
    t = pool.transvect(0, h, 1)
    roots = [h, t, pool.mul(0, h), pool.transvect(h, h, 2)]
    if n % 2 == 0:
        roots.append(pool.transvect(0, 0, n))
    progs = [pool.program(r) for r in roots]

    f = random_form(n, ring, rng)
    g = random_sl2(ring, rng)
    before = evaluate_many(progs, f)
    after = evaluate_many(progs, act(g, f))
    for value, moved in zip(before, after):
        assert moved == act(g, value)


def _random_nodes(pool, rng, count, max_degree=4):  # type: ignore[no-untyped-def]
    nodes = [0]
    for _ in range(2000):
        if len(nodes) > count:
            break
        a, b = (nodes[int(i)] for i in rng.integers(0, len(nodes), size=2))
        (da, ma), (db, mb) = pool.bidegree(a), pool.bidegree(b)
        if da + db > max_degree:
            continue
        if rng.random() < 0.25:
            idx = pool.mul(a, b)
        else:
            idx = pool.transvect(a, b, int(rng.integers(0, min(ma, mb) + 1)))
        if idx not in nodes:
            nodes.append(idx)
    return nodes


@pytest.mark.parametrize("n", [3, 4, 5, 6, 7, 8, 9, 10])
def test_random_programs_are_equivariant(n: int) -> None:
    from binary_covariants.program import ProgramPool, evaluate
    from binary_covariants.scalar_forms import GF, act, random_form, random_sl2

    ring = GF(65521)
    rng = np.random.default_rng(100 + n)
    pool = ProgramPool(n)
    nodes = _random_nodes(pool, rng, 16)
    assert len(nodes) > 8

    for _ in range(100):
        prog = pool.program(nodes[int(rng.integers(1, len(nodes)))])
        f = random_form(n, ring, rng)
        g = random_sl2(ring, rng)
        assert evaluate(prog, act(g, f)) == act(g, evaluate(prog, f))


def test_sum_node_evaluates_to_sum() -> None:
    from binary_covariants.program import ProgramPool, evaluate
    from binary_covariants.scalar_forms import GF, add, random_form

    pool = ProgramPool(4)
    h = pool.transvect(0, 0, 2)
    f2 = pool.power(0, 2)
    s = pool.program(pool.add(h, f2))
    form = random_form(4, GF(65521), np.random.default_rng(1))
    expected = add(evaluate(pool.program(h), form), evaluate(pool.program(f2), form))
    assert evaluate(s, form) == expected


def test_evaluation_checks_form_degree() -> None:
    from binary_covariants.program import ProgramError, ProgramPool, evaluate
    from binary_covariants.scalar_forms import HomPoly

    pool = ProgramPool(4)
    with pytest.raises(ProgramError):
        evaluate(pool.f, HomPoly.from_coefficients([1, 2, 3]))


def test_scale_factor() -> None:
    from binary_covariants.program import scale_factor, scale_free_compare
    from binary_covariants.scalar_forms import GF, HomPoly, scale

    ring = GF(101)
    p = HomPoly.from_coefficients([0, 3, 5], ring)
    lam = scale_factor(scale(p, 7), p)
    assert lam is not None and lam.value == 7
    assert not scale_free_compare(p, HomPoly.from_coefficients([0, 3, 6], ring))
    zero = HomPoly.zero(2, ring)
    assert scale_factor(zero, zero) is not None
    assert scale_factor(p, zero) is None


def test_substitute_multiplies_degrees() -> None:
    from binary_covariants.program import ProgramPool, evaluate, substitute
    from binary_covariants.scalar_forms import GF, random_form, transvectant

    big = ProgramPool(5)
    ground = big.program(big.transvect(0, 0, 4))
    assert (ground.degree, ground.order) == (2, 2)

    small = ProgramPool(2)
    disc = small.program(small.transvect(0, 0, 2))
    composed = substitute(disc, ground)
    assert (composed.degree, composed.order) == (4, 0)
    assert composed.pool is big

    form = random_form(5, GF(65521), np.random.default_rng(4))
    g = evaluate(ground, form)
    assert evaluate(composed, form) == transvectant(g, g, 2)


def test_substitute_requires_matching_order() -> None:
    from binary_covariants.program import ProgramError, ProgramPool, substitute

    big = ProgramPool(5)
    small = ProgramPool(2)
    with pytest.raises(ProgramError):
        substitute(small.f, big.f)


def test_format_program_uses_labels() -> None:
    from binary_covariants.program import ProgramPool, format_program

    pool = ProgramPool(9)
    c2 = pool.transvect(0, 0, 8)
    cube = pool.program(pool.power(c2, 3))
    assert format_program(pool.program(c2)) == "tr(f, f, 8)"
    assert format_program(cube) == "pow(tr(f, f, 8), 3)"
    assert format_program(cube, {c2: "c2"}) == "pow(c2, 3)"
    mixed = pool.program(pool.mul(0, c2))
    assert str(mixed) == "mul(f, tr(f, f, 8))"
