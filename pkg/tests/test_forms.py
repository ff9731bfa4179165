"""Combinatorial differential forms: degeneracy, alternation, the simplicial
derivative and cup-product wedge, and their comparison with the classical
operations."""

import math
import random
from itertools import permutations

import numpy as np
import pytest

from sdgeom import expr as ex
from sdgeom.chart import Point
from sdgeom.errors import SdgError
from sdgeom.forms import (ClassicalForm, classical_from_coeffs, d_classical,
                          d_comb, d_comparison_ratios, eval_generic,
                          eval_semi, extract_classical, random_form,
                          to_combinatorial, wedge_classical, wedge_comb,
                          wedge_comparison_ratios)
from sdgeom.nil import NilElement, generic_offsets

RNG = np.random.default_rng(42)


def random_base(rng, n):
    return Point([round(float(rng.uniform(-1, 1)), 3) for _ in range(n)])


def corpus(count, degrees=(1, 2), ns=(2, 3, 4), trig=True, seed=42):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.choice(ns))
        degree = int(rng.choice([d for d in degrees if d <= n]))
        out.append((random_form(rng, degree, n, trig=trig), random_base(rng, n)))
    return out


# -- degeneracy and alternation (exact, via row morphisms) -------------------

def sign_of(perm):
    s = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                s = -s
    return s


@pytest.mark.parametrize("form,base", corpus(25, seed=1))
def test_vanishes_on_degenerate_simplices(form, base):
    theta = to_combinatorial(form)
    p = theta.degree
    if p < 2:
        pytest.skip("degeneracy needs at least two vertices")
    value = eval_generic(theta, base)
    # identifying two vertices (rows) must send the value to zero, exactly
    assert value.identify_rows(1, 2).is_zero()
    # collapsing a vertex onto the base point also degenerates the simplex
    assert value.zero_row(1).degree_part(p).is_zero()


@pytest.mark.parametrize("form,base", corpus(20, degrees=(2,), seed=2))
def test_alternation_sign(form, base):
    theta = to_combinatorial(form)
    value = eval_generic(theta, base)
    for perm in permutations(range(1, theta.degree + 1)):
        permuted = value.permute_rows(list(perm))
        want = value * float(sign_of(perm))
        assert (permuted - want).max_abs_coeff() <= 1e-9


# -- round trip ----------------------------------------------------------------

@pytest.mark.parametrize("form,base", corpus(40, seed=3))
def test_extract_inverts_to_combinatorial(form, base):
    theta = to_combinatorial(form)
    got = extract_classical(theta, base, tol=1e-9)
    env = dict(zip(form.vars, base.coords))
    for T, e in form.coeffs.items():
        want = ex.evaluate(e, env)
        assert abs(got.get(T, 0.0) - want) <= 1e-12 * max(1.0, abs(want))


def test_extract_rejects_non_form():
    from sdgeom.forms import CombinatorialForm
    # an evaluator with a non-vanishing degenerate part is not a form
    bogus = CombinatorialForm(1, 2, lambda b, offs: 1.0 + offs[0][0])
    with pytest.raises(SdgError):
        extract_classical(bogus, Point((0.0, 0.0)))


# -- simplicial exterior derivative ---------------------------------------------

def test_d_of_coordinate_square():
    # theta for x1^2 (a 0-form); its derivative at base 3 is 6 dx1 -> the
    # generic value has first-order coefficient 6
    f = ClassicalForm(0, 1, {(): ex.Pow(ex.Var("x1"), 2)}, ("x1",))
    dtheta = d_comb(to_combinatorial(f))
    value = eval_generic(dtheta, Point((3.0,)))
    assert abs(value.coeff((1,), (1,)) - 6.0) <= 1e-12
    assert abs(value.const_term) <= 1e-12


@pytest.mark.parametrize("form,base", corpus(30, seed=4))
def test_d_squared_is_zero(form, base):
    theta = to_combinatorial(form)
    value = eval_generic(d_comb(d_comb(theta)), base)
    assert value.max_abs_coeff() <= 1e-9


@pytest.mark.parametrize("form,base", corpus(30, seed=5))
def test_d_comparison_ratio_is_half_factorial(form, base):
    # extracted simplicial derivative = classical derivative / (p+1)
    ratios = d_comparison_ratios(form, base)
    for r in ratios:
        assert abs(r - 1.0 / (form.degree + 1)) <= 1e-9


def test_d_zero_equivalence():
    # closed classical forms have vanishing simplicial derivative and
    # vice versa, across the corpus
    for form, base in corpus(40, seed=6):
        env = dict(zip(form.vars, base.coords))
        classical = d_classical(form)
        classical_zero = all(abs(ex.evaluate(e, env)) <= 1e-9
                             for e in classical.coeffs.values())
        value = eval_generic(d_comb(to_combinatorial(form)), base)
        comb_zero = value.max_abs_coeff() <= 1e-9
        assert classical_zero == comb_zero


def test_exact_form_is_simplicially_closed():
    # d(df) = 0 for a scalar f, evaluated combinatorially
    f = ClassicalForm(0, 3, {(): ex.Mul(ex.Var("x1"),
                                        ex.Call("sin", ex.Var("x2")))})
    ddf = d_comb(d_comb(to_combinatorial(f)))
    value = eval_generic(ddf, Point((0.3, 0.7, -0.2)))
    assert value.max_abs_coeff() <= 1e-12


# -- cup-product wedge ------------------------------------------------------------

def test_wedge_constant_one_forms():
    dx1 = ClassicalForm.dx(1, 2)
    dx2 = ClassicalForm.dx(2, 2)
    theta = wedge_comb(to_combinatorial(dx1), to_combinatorial(dx2))
    got = extract_classical(theta, Point((0.0, 0.0)))
    # cup product of 1-forms halves the classical wedge
    assert abs(got[(1, 2)] - 0.5) <= 1e-12


@pytest.mark.parametrize("ka,kb", [(1, 1), (1, 2), (2, 1), (2, 2)])
def test_wedge_comparison_constant(ka, kb):
    rng = np.random.default_rng(100 + 10 * ka + kb)
    want = math.factorial(ka) * math.factorial(kb) / math.factorial(ka + kb)
    for _ in range(12):
        n = 4
        a = random_form(rng, ka, n, trig=True)
        b = random_form(rng, kb, n, trig=True)
        base = random_base(rng, n)
        for r in wedge_comparison_ratios(a, b, base):
            assert abs(r - want) <= 1e-9


def test_wedge_zero_equivalence():
    rng = np.random.default_rng(7)
    for _ in range(25):
        n = 3
        a = random_form(rng, 1, n)
        b = random_form(rng, rng.choice([1, 2]), n)
        base = random_base(rng, n)
        env = dict(zip(a.vars, base.coords))
        cw = wedge_classical(a, b)
        classical_zero = all(abs(ex.evaluate(e, env)) <= 1e-9
                             for e in cw.coeffs.values())
        value = eval_generic(wedge_comb(to_combinatorial(a),
                                        to_combinatorial(b)), base)
        comb_zero = value.degree_part(a.degree + b.degree).max_abs_coeff() <= 1e-9
        assert classical_zero == comb_zero


def test_graded_commutativity_after_normalization():
    # extract(a cup b) = (-1)^{kl} extract(b cup a): the cup product itself
    # is not symmetric, but its alternating content is
    rng = np.random.default_rng(8)
    for ka, kb in ((1, 1), (1, 2), (2, 1)):
        a = random_form(rng, ka, 4)
        b = random_form(rng, kb, 4)
        base = random_base(rng, 4)
        ab = extract_classical(wedge_comb(to_combinatorial(a),
                                          to_combinatorial(b)), base)
        ba = extract_classical(wedge_comb(to_combinatorial(b),
                                          to_combinatorial(a)), base)
        sign = (-1.0) ** (ka * kb)
        for T in ab:
            assert abs(ab[T] - sign * ba.get(T, 0.0)) <= 1e-9


def test_leibniz_rule_for_extracted_derivative():
    # d(a ^ b) = da ^ b + (-1)^k a ^ db, checked through the classical
    # extraction (the simplicial operations satisfy it up to the constant
    # comparison factors, which the extraction normalizes away)
    rng = np.random.default_rng(17)
    for _ in range(10):
        a = random_form(rng, 1, 3)
        b = random_form(rng, 1, 3)
        base = random_base(rng, 3)
        env = dict(zip(a.vars, base.coords))
        lhs = d_classical(wedge_classical(a, b))
        rhs1 = wedge_classical(d_classical(a), b)
        rhs2 = wedge_classical(a, d_classical(b))
        for T in lhs.coeffs:
            want = (ex.evaluate(rhs1.coeffs.get(T, ex.Const(0.0)), env)
                    - ex.evaluate(rhs2.coeffs.get(T, ex.Const(0.0)), env))
            assert abs(ex.evaluate(lhs.coeffs[T], env) - want) <= 1e-9


# -- multilinear reconstruction and semi-simplices -----------------------------

def test_form_determined_by_coefficients():
    # a combinatorial p-form is determined by its action on the generic
    # simplex: rebuilding from extracted coefficients reproduces values on
    # arbitrary (substituted) simplices
    rng = np.random.default_rng(21)
    form = random_form(rng, 2, 3)
    base = random_base(rng, 3)
    theta = to_combinatorial(form)
    coeffs = extract_classical(theta, base)
    rebuilt = to_combinatorial(classical_from_coeffs(2, 3, coeffs))
    B = rng.normal(size=(3, 3))
    zeta = generic_offsets(2, 3)
    offsets = [[sum((zeta[j][b] * float(B[a, b]) for b in range(3)),
                    NilElement.zero(2, 3)) for a in range(3)]
               for j in range(2)]
    v1 = theta(base.coords, offsets)
    v2 = rebuilt(base.coords, offsets)
    assert (v1 - v2).max_abs_coeff() <= 1e-9


def test_eval_semi_is_alternating_bilinear():
    rng = np.random.default_rng(22)
    form = random_form(rng, 2, 3)
    theta = to_combinatorial(form)
    base = random_base(rng, 3)
    u = rng.normal(size=3)
    v = rng.normal(size=3)
    w = rng.normal(size=3)
    f = lambda a, b: eval_semi(theta, base, a, b)
    assert abs(f(u, v) + f(v, u)) <= 1e-12
    assert abs(f(u, u)) <= 1e-12
    assert abs(f(u + 2.0 * w, v) - f(u, v) - 2.0 * f(w, v)) <= 1e-9
