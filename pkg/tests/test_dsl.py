"""Expression language: parser, symbolic differentiation, pretty printing."""

import math
import random

import pytest

from sdgeom import expr as ex
from sdgeom.errors import ParseError
from sdgeom.nil import NilElement
from sdgeom.program import parse, pretty_print

CONTACT = """\
# contact structure
dim 3
var x y z
form w = dz - y*dx
dist D = ker(w)
patch P(s, t) = (s, t, 0)
"""

MIXED = """\
dim 2
var x y
form a = sin(x)*dx + pow(y, 3)*dy
form b = (x*y)*dx
form c = a ^ b
vector u = (1, 0)
vector v = (-y, x)
dist S = span(u, v)
conn A = [0*dx, (0.5*y)*dx - (0.5*x)*dy; (-0.5*y)*dx + (0.5*x)*dy, 0*dx]
"""


def test_parse_contact_program():
    prog = parse(CONTACT)
    assert prog.dim == 3
    assert prog.vars == ("x", "y", "z")
    assert prog.forms["w"].degree == 1
    assert prog.dists["D"].rank == 2
    assert prog.patches["P"].q == 2


def test_parse_wedge_and_connection():
    prog = parse(MIXED)
    assert prog.forms["c"].degree == 2
    assert prog.dists["S"].rank == 2
    assert prog.conns["A"].group.m == 2


def test_degree_mismatch_reports_position():
    bad = "dim 2\nvar x y\nform f = dx + x*dx^dy\n"
    with pytest.raises(ParseError) as err:
        parse(bad)
    assert err.value.line == 3
    assert err.value.col > 0
    assert "degree" in str(err.value)


def test_unknown_variable_rejected():
    with pytest.raises(ParseError):
        parse("dim 2\nvar x y\nform f = q*dx\n")


def test_missing_juxtaposition_star_rejected():
    with pytest.raises(ParseError):
        parse("dim 2\nvar x y\nform f = x dx\n")


def test_comments_and_blank_lines():
    prog = parse("# leading comment\n\ndim 1\nvar t\n# trailing\n")
    assert prog.dim == 1


def test_pretty_print_round_trip_fixed_point():
    for text in (CONTACT, MIXED):
        s1 = pretty_print(parse(text))
        s2 = pretty_print(parse(s1))
        assert s1 == s2


# -- symbolic differentiation -------------------------------------------------

def _num(e, env):
    return ex.evaluate(e, env)


def test_diff_product_rule():
    e = ex.Mul(ex.Var("x"), ex.Call("sin", ex.Var("x")))
    de = ex.diff(e, "x")
    env = {"x": 0.7}
    want = math.sin(0.7) + 0.7 * math.cos(0.7)
    assert abs(_num(de, env) - want) <= 1e-12


def test_diff_chain_rule_pow():
    e = ex.Pow(ex.Add(ex.Var("x"), ex.Const(1.0)), 3)
    de = ex.diff(e, "x")
    assert abs(_num(de, {"x": 2.0}) - 27.0) <= 1e-12


def test_diff_quotient():
    e = ex.Div(ex.Const(1.0), ex.Var("x"))
    de = ex.diff(e, "x")
    assert abs(_num(de, {"x": 2.0}) + 0.25) <= 1e-12


@pytest.mark.parametrize("seed", range(12))
def test_diff_matches_finite_differences(seed):
    from sdgeom.forms import random_scalar_expr
    rng = __import__("numpy").random.default_rng(seed)
    vars = ("x", "y")
    e = random_scalar_expr(rng, vars, trig=True)
    pr = random.Random(seed)
    at = {"x": pr.uniform(0.2, 1.2), "y": pr.uniform(0.2, 1.2)}
    h = 1e-6
    for v in vars:
        de = _num(ex.diff(e, v), at)
        up = dict(at); up[v] += h
        dn = dict(at); dn[v] -= h
        fd = (_num(e, up) - _num(e, dn)) / (2 * h)
        scale = max(1.0, abs(de))
        assert abs(de - fd) / scale <= 1e-5


def test_evaluate_on_nilpotent_argument_matches_derivative():
    # f(c + xi) = f(c) + f'(c) xi exactly, for the square-zero generator
    e = ex.Mul(ex.Var("x"), ex.Call("cos", ex.Var("x")))
    c = 0.4
    xi = NilElement.generator(1, 1, 1, 1)
    val = ex.evaluate(e, {"x": NilElement.constant(1, 1, c) + xi})
    f = c * math.cos(c)
    fp = math.cos(c) - c * math.sin(c)
    assert abs(val.const_term - f) <= 1e-12
    assert abs(val.coeff((1,), (1,)) - fp) <= 1e-12


def test_ad_consistency_via_nilpotent_evaluation():
    # first-order coefficient of evaluation at c + xi equals symbolic diff
    from sdgeom.forms import random_scalar_expr
    import numpy as np
    rng = np.random.default_rng(5)
    for _ in range(20):
        e = random_scalar_expr(rng, ("x",), trig=True)
        c = float(rng.uniform(0.3, 1.0))
        xi = NilElement.generator(1, 1, 1, 1)
        val = ex.evaluate(e, {"x": NilElement.constant(1, 1, c) + xi})
        sym = ex.evaluate(ex.diff(e, "x"), {"x": c})
        got = val.coeff((1,), (1,)) if isinstance(val, NilElement) else 0.0
        assert abs(got - sym) <= 1e-12 * max(1.0, abs(sym))


def test_to_str_parses_back():
    from sdgeom.forms import random_scalar_expr
    import numpy as np
    rng = np.random.default_rng(9)
    for _ in range(25):
        e = random_scalar_expr(rng, ("x", "y"), trig=True)
        s = ex.to_str(e)
        prog = parse(f"dim 2\nvar x y\nform f = ({s})*dx\n")
        e2 = prog.forms["f"].coeffs[(1,)]
        env = {"x": 0.37, "y": -0.81}
        assert abs(ex.evaluate(e, env) - ex.evaluate(e2, env)) <= 1e-12
