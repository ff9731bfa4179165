"""Classical and combinatorial differential forms on a chart.

A classical p-form stores one scalar coefficient expression per strictly
increasing index tuple.  A combinatorial p-form is a callable on
(p+1)-tuples of neighbouring points, represented here by a base point plus
p nilpotent displacement vectors; the simplicial exterior derivative and
the cup-product wedge act on the callable directly.
"""

import math
from itertools import combinations, permutations

from . import expr as ex
from .errors import DegreeError, SdgError
from .nil import NilElement, generic_offsets


def default_vars(n):
    return tuple(f"x{i + 1}" for i in range(n))


class ClassicalForm:
    """Multilinear alternating form field with closed-form coefficients."""

    __slots__ = ("degree", "n", "vars", "coeffs")

    def __init__(self, degree, n, coeffs, vars=None):
        self.degree = degree
        self.n = n
        self.vars = tuple(vars) if vars is not None else default_vars(n)
        if len(self.vars) != n:
            raise ValueError("need one variable name per dimension")
        clean = {}
        for T, e in coeffs.items():
            T = tuple(T)
            if len(T) != degree or list(T) != sorted(set(T)):
                raise DegreeError(f"index tuple {T} invalid for degree {degree}")
            if T and not (1 <= T[0] and T[-1] <= n):
                raise DegreeError(f"index tuple {T} out of range for dim {n}")
            e = ex.as_expr(e)
            if not (isinstance(e, ex.Const) and e.value == 0.0):
                clean[T] = e
        self.coeffs = clean

    @staticmethod
    def zero(degree, n, vars=None):
        return ClassicalForm(degree, n, {}, vars)

    @staticmethod
    def dx(i, n, vars=None):
        """The constant 1-form dx^i."""
        return ClassicalForm(1, n, {(i,): ex.Const(1.0)}, vars)

    def coeff_env(self, coords):
        return dict(zip(self.vars, coords))

    def coeffs_at(self, coords):
        """Numeric (or W-valued) coefficients at the given coordinates."""
        env = self.coeff_env(coords)
        return {T: ex.evaluate(e, env) for T, e in self.coeffs.items()}

    def apply(self, coords, vectors):
        """Multilinear alternating evaluation on `degree` vectors."""
        if len(vectors) != self.degree:
            raise DegreeError("wrong number of argument vectors")
        total = 0.0
        for T, a in self.coeffs_at(coords).items():
            total = total + a * _det([[v[t - 1] for t in T] for v in vectors])
        return total

    def __add__(self, other):
        if self.degree != other.degree or self.n != other.n:
            raise DegreeError("cannot add forms of different degree/dimension")
        coeffs = dict(self.coeffs)
        for T, e in other.coeffs.items():
            coeffs[T] = ex._fold_add(coeffs[T], e) if T in coeffs else e
        return ClassicalForm(self.degree, self.n, coeffs, self.vars)

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def scale(self, s):
        s = ex.as_expr(s)
        return ClassicalForm(self.degree, self.n,
                             {T: ex._fold_mul(s, e) for T, e in self.coeffs.items()},
                             self.vars)

    def __repr__(self):
        if not self.coeffs:
            return f"ClassicalForm<0 (deg {self.degree})>"
        terms = " + ".join(
            f"({ex.to_str(e)})*" + "^".join(f"d{self.vars[t - 1]}" for t in T)
            if T else ex.to_str(e)
            for T, e in sorted(self.coeffs.items()))
        return f"ClassicalForm<{terms}>"


def _det(rows):
    """Leibniz determinant; entries may be floats or NilElements."""
    p = len(rows)
    if p == 0:
        return 1.0
    total = 0.0
    for perm in permutations(range(p)):
        inv = sum(1 for i in range(p) for j in range(i + 1, p)
                  if perm[i] > perm[j])
        term = -1.0 if inv & 1 else 1.0
        for i in range(p):
            term = term * rows[i][perm[i]]
        total = total + term
    return total


def _merge_sign(S, T):
    """Sign of merging two disjoint sorted tuples into sorted order."""
    inv = sum(1 for s in S for t in T if s > t)
    return -1.0 if inv & 1 else 1.0


def d_classical(form):
    """Textbook coordinate exterior derivative via symbolic differentiation."""
    coeffs = {}
    for T, a in form.coeffs.items():
        for i, var in enumerate(form.vars, start=1):
            if i in T:
                continue
            da = ex.diff(a, var)
            if isinstance(da, ex.Const) and da.value == 0.0:
                continue
            sign = _merge_sign((i,), T)
            U = tuple(sorted(T + (i,)))
            term = ex._fold_mul(ex.Const(sign), da)
            coeffs[U] = ex._fold_add(coeffs[U], term) if U in coeffs else term
    return ClassicalForm(form.degree + 1, form.n, coeffs, form.vars)


def wedge_classical(a, b):
    """Shuffle-sum wedge without factorial prefactor."""
    if a.n != b.n:
        raise DegreeError("wedge of forms on different charts")
    coeffs = {}
    for S, ea in a.coeffs.items():
        for T, eb in b.coeffs.items():
            if set(S) & set(T):
                continue
            sign = _merge_sign(S, T)
            U = tuple(sorted(S + T))
            term = ex._fold_mul(ex.Const(sign), ex._fold_mul(ea, eb))
            coeffs[U] = ex._fold_add(coeffs[U], term) if U in coeffs else term
    return ClassicalForm(a.degree + b.degree, a.n, coeffs, a.vars)


class CombinatorialForm:
    """Function of infinitesimal p-simplices, given as base point plus p
    nilpotent displacement vectors; vanishes on degenerate simplices."""

    __slots__ = ("degree", "n", "vars", "evaluator")

    def __init__(self, degree, n, evaluator, vars=None):
        self.degree = degree
        self.n = n
        self.vars = tuple(vars) if vars is not None else default_vars(n)
        self.evaluator = evaluator

    def __call__(self, base_coords, offsets):
        if len(offsets) != self.degree:
            raise DegreeError("wrong simplex arity")
        return self.evaluator(tuple(base_coords), [tuple(o) for o in offsets])


def to_combinatorial(form):
    """Combinatorial form of a classical one: evaluate the classical form on
    the displacement vectors log(x0, xi), with coefficients Taylor-lifted at
    the (possibly W-valued) base vertex."""
    coeffs = form.coeffs
    p = form.degree

    def evaluator(base, offsets):
        env = dict(zip(form.vars, base))
        total = 0.0
        for T, a in coeffs.items():
            aval = ex.evaluate(a, env)
            total = total + aval * _det([[off[t - 1] for t in T]
                                         for off in offsets])
        return total

    return CombinatorialForm(p, form.n, evaluator, form.vars)


def eval_generic(theta, base):
    """Value of a combinatorial form on the generic infinitesimal simplex
    rooted at `base`: an element of W(degree, n)."""
    p, n = theta.degree, theta.n
    offsets = generic_offsets(p, n)
    value = theta(base.coords, offsets)
    if not isinstance(value, NilElement):
        value = NilElement.constant(p, n, value)
    return value


def extract_classical(theta, base, tol=1e-9):
    """Coefficients of the classical form corresponding to `theta` at `base`,
    read off the generic value and normalized by degree!."""
    p = theta.degree
    value = eval_generic(theta, base)
    full_rows = (1 << p) - 1
    norm = math.factorial(p)
    coeffs = {T: 0.0 for T in combinations(range(1, theta.n + 1), p)}
    for (rmask, cmask), v in value.terms.items():
        if rmask == full_rows:
            T = tuple(i + 1 for i in range(theta.n) if cmask & (1 << i))
            coeffs[T] = v / norm
        elif abs(v) > tol:
            raise SdgError(
                f"non-form input: lower-degree term of size {abs(v):g} "
                "in the generic value")
    return coeffs


def classical_from_coeffs(degree, n, coeffs, vars=None):
    """Constant-coefficient classical form from extracted numbers."""
    return ClassicalForm(degree, n,
                         {T: ex.Const(c) for T, c in coeffs.items() if c != 0.0},
                         vars)


def d_comb(theta):
    """Simplicial exterior derivative: alternating sum of face evaluations."""
    p, n = theta.degree, theta.n

    def evaluator(base, offsets):
        # face omitting vertex 0: rebase at x1
        u0 = offsets[0]
        new_base = tuple(b + o for b, o in zip(base, u0))
        faces = theta(new_base, [_vsub(o, u0) for o in offsets[1:]])
        total = faces
        for i in range(1, p + 2):
            rest = offsets[:i - 1] + offsets[i:]
            v = theta(base, rest)
            total = total + v if i % 2 == 0 else total - v
        return total

    return CombinatorialForm(p + 1, n, evaluator, theta.vars)


def wedge_comb(om, th):
    """Cup-product wedge: front face in `om` times rebased back face in `th`."""
    if om.n != th.n:
        raise DegreeError("wedge of forms on different charts")
    k, l = om.degree, th.degree

    def evaluator(base, offsets):
        front = om(base, offsets[:k])
        if k == 0:
            back = th(base, offsets)
        else:
            pivot = offsets[k - 1]
            new_base = tuple(b + o for b, o in zip(base, pivot))
            back = th(new_base, [_vsub(offsets[k + j], pivot)
                                 for j in range(l)])
        return front * back

    return CombinatorialForm(k + l, om.n, evaluator, om.vars)


def eval_semi(theta, base, u, v, tol=1e-9):
    """Extension of a combinatorial 2-form to semi-infinitesimal simplices:
    multilinear evaluation of its extraction on a pair of real vectors."""
    if theta.degree != 2:
        raise DegreeError("eval_semi is defined for 2-forms")
    coeffs = extract_classical(theta, base, tol=tol)
    total = 0.0
    for (s, t), a in coeffs.items():
        total += a * (u[s - 1] * v[t - 1] - u[t - 1] * v[s - 1])
    return total


def _vsub(u, v):
    return tuple(a - b for a, b in zip(u, v))


# -- random form corpus (shared by tests and convention measurement) --------

def random_scalar_expr(rng, vars, trig=False):
    """Random low-degree polynomial (optionally with sin/cos factors)."""
    terms = []
    nterms = rng.integers(1, 4)
    for _ in range(nterms):
        c = ex.Const(round(float(rng.uniform(-3, 3)), 3))
        factors = c
        for v in vars:
            deg = int(rng.integers(0, 3))
            if deg:
                factors = ex.Mul(factors, ex.Pow(ex.Var(v), deg)
                                 if deg > 1 else ex.Var(v))
        if trig and rng.random() < 0.4:
            fn = "sin" if rng.random() < 0.5 else "cos"
            factors = ex.Mul(factors, ex.Call(fn, ex.Var(vars[int(rng.integers(0, len(vars)))])))
        terms.append(factors)
    out = terms[0]
    for t in terms[1:]:
        out = ex.Add(out, t)
    return out


def random_form(rng, degree, n, vars=None, trig=False):
    if vars is None:
        vars = default_vars(n)
    coeffs = {}
    for T in combinations(range(1, n + 1), degree):
        if rng.random() < 0.8:
            coeffs[T] = random_scalar_expr(rng, vars, trig=trig)
    if not coeffs:
        T = tuple(range(1, degree + 1))
        coeffs[T] = random_scalar_expr(rng, vars, trig=trig)
    return ClassicalForm(degree, n, coeffs, vars)


def d_comparison_ratios(form, base, tol=1e-9):
    """Componentwise ratio of the extracted simplicial derivative to the
    classical derivative at `base` (only where the classical side is
    clearly nonzero).  Constancy of these ratios per degree is the
    comparison-theorem check."""
    comb = extract_classical(d_comb(to_combinatorial(form)), base, tol=tol)
    env = dict(zip(form.vars, base.coords))
    classical = {T: ex.evaluate(e, env)
                 for T, e in d_classical(form).coeffs.items()}
    ratios = []
    for T, c in classical.items():
        if abs(c) > 1e-6:
            ratios.append(comb.get(T, 0.0) / c)
    return ratios


def wedge_comparison_ratios(a, b, base, tol=1e-9):
    """Same as d_comparison_ratios, for the wedge."""
    comb = extract_classical(
        wedge_comb(to_combinatorial(a), to_combinatorial(b)), base, tol=tol)
    env = dict(zip(a.vars, base.coords))
    classical = {T: ex.evaluate(e, env)
                 for T, e in wedge_classical(a, b).coeffs.items()}
    ratios = []
    for T, c in classical.items():
        if abs(c) > 1e-6:
            ratios.append(comb.get(T, 0.0) / c)
    return ratios
