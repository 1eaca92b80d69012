from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest


def test_hessian_of_sum_of_squares() -> None:
    from binary_covariants.scalar_forms import HomPoly, transvectant

    f = HomPoly.from_coefficients([1, 0, 1])
    assert transvectant(f, f, 2).to_list() == [Fraction(2)]


def test_transvectant_zero_is_product() -> None:
    from binary_covariants.scalar_forms import HomPoly, mul, transvectant

    p = HomPoly.from_coefficients([1, 2, 3])
    q = HomPoly.from_coefficients([4, 0, -1, 5])
    assert transvectant(p, q, 0) == mul(p, q)


def test_transvectant_symmetry_sign() -> None:
    from binary_covariants.scalar_forms import GF, random_form, scale, transvectant

    ring = GF(65521)
    rng = np.random.default_rng(7)
    p = random_form(5, ring, rng)
    q = random_form(4, ring, rng)
    for r in range(5):
        assert transvectant(p, q, r) == scale(transvectant(q, p, r), (-1) ** r)


def test_odd_transvectant_of_a_form_with_itself_vanishes() -> None:
    from binary_covariants.scalar_forms import GF, random_form, transvectant

    ring = GF(65521)
    f = random_form(6, ring, np.random.default_rng(3))
    for r in (1, 3, 5):
        assert transvectant(f, f, r).is_zero()
    assert not transvectant(f, f, 2).is_zero()


@pytest.mark.parametrize("modulus", [None, 65521])
def test_transvectant_is_bilinear(modulus: int | None) -> None:
    from binary_covariants.scalar_forms import GF, QQ, add, random_form, scale, transvectant

    ring = QQ if modulus is None else GF(modulus)
    rng = np.random.default_rng(13)
    for _ in range(20):
        n, m = (int(k) for k in rng.integers(1, 9, size=2))
        r = int(rng.integers(0, min(n, m) + 1))
        p1, p2 = random_form(n, ring, rng), random_form(n, ring, rng)
        q1, q2 = random_form(m, ring, rng), random_form(m, ring, rng)
        a, b = (int(k) for k in rng.integers(-5, 6, size=2))

        left = transvectant(add(scale(p1, a), scale(p2, b)), q1, r)
        assert left == add(scale(transvectant(p1, q1, r), a), scale(transvectant(p2, q1, r), b))
        right = transvectant(p1, add(scale(q1, a), scale(q2, b)), r)
        assert right == add(scale(transvectant(p1, q1, r), a), scale(transvectant(p1, q2, r), b))


def test_transvectant_index_beyond_orders_gives_zero() -> None:
    from binary_covariants.scalar_forms import HomPoly, transvectant

    p = HomPoly.from_coefficients([1, 2, 3])
    q = HomPoly.from_coefficients([1, 1, 1, 1, 1])
    out = transvectant(p, q, 3)
    assert out.order == 0
    assert out.is_zero()


def test_transvectant_is_equivariant() -> None:
    from binary_covariants.scalar_forms import GF, act, random_form, random_sl2, transvectant

    ring = GF(65521)
    rng = np.random.default_rng(11)
    p = random_form(9, ring, rng)
    q = random_form(6, ring, rng)
    for _ in range(3):
        g = random_sl2(ring, rng)
        for r in (1, 4, 6):
            assert transvectant(act(g, p), act(g, q), r) == act(g, transvectant(p, q, r))


def test_action_over_rationals_composes_with_inverse() -> None:
    from binary_covariants.scalar_forms import QQ, act, random_form, random_sl2

    rng = np.random.default_rng(2)
    f = random_form(5, QQ, rng)
    g = random_sl2(QQ, rng)
    assert act(g.inverse(), act(g, f)) == f


def test_batches_match_single_evaluations() -> None:
    from binary_covariants.scalar_forms import GF, random_form, transvectant

    ring = GF(65521)
    batch = random_form(4, ring, np.random.default_rng(5), count=3)
    out = transvectant(batch, batch, 2)
    assert out.batch_shape == (3,)
    for i in range(3):
        assert out[i] == transvectant(batch[i], batch[i], 2)


def test_small_modulus_is_rejected() -> None:
    from binary_covariants.scalar_forms import GF, HomPoly, ModulusTooSmallError, transvectant

    ring = GF(7)
    f = HomPoly.from_coefficients(range(10), ring)
    with pytest.raises(ModulusTooSmallError):
        transvectant(f, f, 2)


def test_ring_checks() -> None:
    from binary_covariants.scalar_forms import GF, QQ, SL2, HomPoly, RingMismatchError, mul

    with pytest.raises(ValueError):
        GF(65520)
    with pytest.raises(ValueError):
        SL2(1, 1, 1, 1, QQ)
    with pytest.raises(RingMismatchError):
        mul(HomPoly.from_coefficients([1, 1]), HomPoly.from_coefficients([1, 1], GF(101)))


def test_modulus_is_capped_for_int64_arithmetic() -> None:
    from binary_covariants.scalar_forms import GF, MAX_MODULUS, Ring, act, mul, random_form, random_sl2

    with pytest.raises(ValueError, match="exceeds"):
        GF(2**31 - 1)
    with pytest.raises(ValueError):
        Ring(MAX_MODULUS + 1)

    prime = 1048573
    ring = GF(prime)
    rng = np.random.default_rng(5)
    p, q = random_form(40, ring, rng), random_form(40, ring, rng)
    a, b = p.coeffs.tolist(), q.coeffs.tolist()
    expected = [sum(a[i] * b[k - i] for i in range(max(0, k - 40), min(k, 40) + 1)) % prime for k in range(81)]
    assert mul(p, q).coeffs.tolist() == expected

    g = random_sl2(ring, rng)
    assert act(g.inverse(), act(g, p)) == p


def test_scalar_arithmetic_in_prime_field() -> None:
    from binary_covariants.scalar_forms import GF, Scalar

    ring = GF(101)
    x = Scalar(Fraction(1, 3), ring)
    assert (x * 3).value == 1
    assert x.inverse().value == 3
    assert (-Scalar(1, ring)).value == 100
