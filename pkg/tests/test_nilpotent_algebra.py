"""Algebra of nilpotent simplex displacements W(k, n)."""

import math
import random

import pytest

from sdgeom.nil import (NilElement, all_monomials, canonicalize,
                        generic_offsets, lift_smooth, monomial_count)


def xi(k, n, i, a):
    return NilElement.generator(k, n, i, a)


# -- canonicalization ---------------------------------------------------

def test_canonicalize_repeated_row_is_zero():
    sign, mono = canonicalize([(1, 1), (1, 2)])
    assert sign == 0 and mono is None


def test_canonicalize_repeated_column_is_zero():
    sign, mono = canonicalize([(1, 2), (3, 2)])
    assert sign == 0 and mono is None


def test_canonicalize_exchange_sign():
    # xi_{1,2} xi_{2,1} = -(sorted pairing (1,1)(2,2))
    sign, mono = canonicalize([(1, 2), (2, 1)])
    assert sign == -1
    assert mono == (0b11, 0b11)


def test_canonicalize_identity_on_sorted():
    sign, mono = canonicalize([(1, 1), (2, 2)])
    assert sign == 1 and mono == (0b11, 0b11)


# -- products -----------------------------------------------------------

def test_product_sum_rows_cancels():
    # (xi11 + xi12)(xi21 + xi22) has the cross terms cancel pairwise only
    # for the off-diagonal part; diagonal column collisions vanish:
    a = xi(2, 2, 1, 1) + xi(2, 2, 1, 2)
    b = xi(2, 2, 2, 1) + xi(2, 2, 2, 2)
    assert (a * b).is_zero()


def test_square_of_generator_is_zero():
    g = xi(1, 1, 1, 1)
    assert (g * g).is_zero()


def test_antisymmetric_exchange_in_products():
    p = xi(2, 2, 1, 1) * xi(2, 2, 2, 2)
    q = xi(2, 2, 2, 1) * xi(2, 2, 1, 2)
    assert (p + q).is_zero()


# -- ring laws on random elements ----------------------------------------

def random_element(rng, k, n, integer=True):
    terms = {}
    for r in range(0, min(k, n) + 1):
        for rows, cols in all_monomials(k, n, r):
            if rng.random() < 0.4:
                c = rng.randint(-5, 5) if integer else rng.uniform(-5, 5)
                if c:
                    terms[(sum(1 << (i - 1) for i in rows),
                           sum(1 << (j - 1) for j in cols))] = float(c)
    return NilElement(k, n, terms)


@pytest.mark.parametrize("seed", range(5))
def test_ring_laws_random(seed):
    rng = random.Random(seed)
    checked = 0
    while checked < 220:
        k = rng.randint(1, 3)
        n = rng.randint(1, 3)
        a = random_element(rng, k, n)
        b = random_element(rng, k, n)
        c = random_element(rng, k, n)
        assert (a + b) - (b + a) == NilElement.zero(k, n)
        assert a * b == b * a                      # commutative
        assert (a * b) * c == a * (b * c)          # associative
        assert a * (b + c) == a * b + a * c        # distributive
        assert a * NilElement.constant(k, n, 1.0) == a
        assert (a * NilElement.zero(k, n)).is_zero()
        checked += 1
    assert checked >= 220  # 5 seeds x 220 > 1000 total cases


def test_nilpotency_order():
    # a product of min(k, n) distinct-row, distinct-column generators is
    # nonzero, and every product of min(k, n) + 1 generators vanishes.
    for k in range(1, 4):
        for n in range(1, 4):
            nu = min(k, n)
            diag = NilElement.constant(k, n, 1.0)
            for i in range(1, nu + 1):
                diag = diag * xi(k, n, i, i)
            assert not diag.is_zero()
            for i in range(1, k + 1):
                for a in range(1, n + 1):
                    assert (diag * xi(k, n, i, a)).is_zero()


# -- graded dimensions ----------------------------------------------------

def test_graded_dimensions():
    for k in range(1, 5):
        for n in range(1, 5):
            for r in range(0, min(k, n) + 1):
                monos = all_monomials(k, n, r)
                assert len(monos) == math.comb(k, r) * math.comb(n, r)
                assert len(monos) == monomial_count(k, n, r)
                # they really are independent nonzero canonical monomials
                for rows, cols in monos:
                    e = NilElement.monomial(k, n, rows, cols)
                    assert e.coeff(rows, cols) == 1.0


# -- morphisms -------------------------------------------------------------

def test_identify_rows_kills_products_of_those_rows():
    e = xi(3, 3, 1, 1) * xi(3, 3, 2, 2)
    assert e.identify_rows(1, 2).is_zero()


def test_identify_rows_is_algebra_map():
    rng = random.Random(7)
    for _ in range(50):
        a = random_element(rng, 3, 3)
        b = random_element(rng, 3, 3)
        lhs = (a * b).identify_rows(1, 3)
        rhs = a.identify_rows(1, 3) * b.identify_rows(1, 3)
        assert lhs == rhs


def test_permute_rows_is_algebra_map():
    rng = random.Random(8)
    perm = [2, 3, 1]
    for _ in range(50):
        a = random_element(rng, 3, 2)
        b = random_element(rng, 3, 2)
        assert (a * b).permute_rows(perm) == a.permute_rows(perm) * b.permute_rows(perm)


def test_zero_row_is_algebra_map():
    rng = random.Random(9)
    for _ in range(50):
        a = random_element(rng, 3, 2)
        b = random_element(rng, 3, 2)
        assert (a * b).zero_row(2) == a.zero_row(2) * b.zero_row(2)


def test_substitute_rows_is_algebra_map():
    # a shared substitution matrix (chart Jacobian) induces an algebra map
    rng = random.Random(10)
    mat = [[1.0, 2.0], [0.5, -1.0]]
    for _ in range(40):
        a = random_element(rng, 2, 2, integer=False)
        b = random_element(rng, 2, 2, integer=False)
        lhs = (a * b).substitute_rows(mat, 2)
        rhs = a.substitute_rows(mat, 2) * b.substitute_rows(mat, 2)
        assert (lhs - rhs).max_abs_coeff() <= 1e-12


# -- smooth lifting ---------------------------------------------------------

def nilpotent_with_rational_constant(rng, k, n, const):
    e = random_element(rng, k, n, integer=True).nilpotent_part()
    return e + NilElement.constant(k, n, const)


def test_lift_cos_truncates():
    g = xi(2, 2, 1, 1) + xi(2, 2, 2, 2)
    got = lift_smooth("cos", g)
    want = NilElement.constant(2, 2, 1.0) - NilElement.monomial(2, 2, (1, 2), (1, 2))
    assert (got - want).max_abs_coeff() <= 1e-15


def test_lift_reciprocal():
    g = NilElement.constant(1, 1, 1.0) + xi(1, 1, 1, 1)
    inv = lift_smooth("reciprocal", g)
    assert (g * inv - 1.0).max_abs_coeff() <= 1e-15


def test_lift_exp_is_homomorphism():
    rng = random.Random(11)
    for _ in range(30):
        a = nilpotent_with_rational_constant(rng, 2, 3, 0.5)
        b = nilpotent_with_rational_constant(rng, 2, 3, -0.25)
        lhs = lift_smooth("exp", a + b)
        rhs = lift_smooth("exp", a) * lift_smooth("exp", b)
        assert (lhs - rhs).max_abs_coeff() <= 1e-12


def test_lift_trig_identity():
    rng = random.Random(12)
    for _ in range(30):
        a = nilpotent_with_rational_constant(rng, 3, 3, 0.75)
        s = lift_smooth("sin", a)
        c = lift_smooth("cos", a)
        assert (s * s + c * c - 1.0).max_abs_coeff() <= 1e-12


def test_lift_sqrt_squares_back():
    rng = random.Random(13)
    for _ in range(30):
        a = nilpotent_with_rational_constant(rng, 2, 2, 4.0)
        r = lift_smooth("sqrt", a)
        assert (r * r - a).max_abs_coeff() <= 1e-12


def test_lift_ln_inverts_exp():
    rng = random.Random(14)
    for _ in range(30):
        a = nilpotent_with_rational_constant(rng, 2, 2, 0.5)
        assert (lift_smooth("ln", lift_smooth("exp", a)) - a).max_abs_coeff() <= 1e-12


def test_negative_power_is_reciprocal_lift():
    g = NilElement.constant(1, 2, 2.0) + xi(1, 2, 1, 1)
    assert (g ** -1 * g - 1.0).max_abs_coeff() <= 1e-15


def test_generic_offsets_shape():
    offs = generic_offsets(2, 3)
    assert len(offs) == 2 and len(offs[0]) == 3
    assert offs[1][2] == xi(2, 3, 2, 3)
