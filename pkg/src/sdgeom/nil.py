"""Arithmetic in the truncated algebra W(k, n) of a generic infinitesimal
k-simplex in R^n.

Generators xi[i, a] (vertex index i in 1..k, coordinate index a in 1..n)
satisfy xi[i,a]*xi[j,b] = -xi[j,a]*xi[i,b] in a commutative algebra, which
kills repeated rows and repeated columns and makes (sorted rows, sorted
columns) a normal form.  Elements are sparse maps from such monomials to
float coefficients; all operations are pure.
"""

import math
from itertools import combinations

from . import backend
from .errors import ContextMismatchError, DomainError

MAX_INDEX = 64  # masks are machine words in the compiled kernel


def canonicalize(factors):
    """Normal form of a product of generators.

    `factors` is a sequence of (row, col) pairs (1-based).  Returns
    (sign, (rows_mask, cols_mask)); sign 0 means the product is zero
    (repeated row or column), in which case the monomial is None.
    """
    factors = sorted(factors)  # sort by row; commutative reordering, no sign
    rows_mask = 0
    cols_mask = 0
    cols = []
    for row, col in factors:
        rbit = 1 << (row - 1)
        cbit = 1 << (col - 1)
        if rows_mask & rbit or cols_mask & cbit:
            return 0, None
        rows_mask |= rbit
        cols_mask |= cbit
        cols.append(col)
    # sign of the permutation sorting the column sequence
    inv = sum(1 for i in range(len(cols)) for j in range(i + 1, len(cols))
              if cols[i] > cols[j])
    return (-1 if inv & 1 else 1), (rows_mask, cols_mask)


def _bits(mask):
    out = []
    pos = 1
    while mask:
        if mask & 1:
            out.append(pos)
        mask >>= 1
        pos += 1
    return out


class NilElement:
    """Immutable element of W(k, n), a sparse map monomial -> coefficient."""

    __slots__ = ("k", "n", "terms")

    def __init__(self, k, n, terms=None):
        if not (0 <= k <= MAX_INDEX and 1 <= n <= MAX_INDEX):
            raise ValueError(f"context ({k},{n}) out of supported range")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "terms", dict(terms) if terms else {})

    def __setattr__(self, name, value):
        raise AttributeError("NilElement is immutable")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def constant(k, n, c):
        return NilElement(k, n, {(0, 0): float(c)} if c else None)

    @staticmethod
    def zero(k, n):
        return NilElement(k, n)

    @staticmethod
    def generator(k, n, row, col):
        if not (1 <= row <= k and 1 <= col <= n):
            raise ValueError(f"generator ({row},{col}) outside context ({k},{n})")
        return NilElement(k, n, {(1 << (row - 1), 1 << (col - 1)): 1.0})

    @staticmethod
    def monomial(k, n, rows, cols, coeff=1.0):
        """Element coeff * m(rows, cols) with both index sets sorted."""
        sign, mono = canonicalize(list(zip(sorted(rows), sorted(cols))))
        if sign == 0 or coeff == 0:
            return NilElement.zero(k, n)
        return NilElement(k, n, {mono: sign * float(coeff)})

    # -- inspection --------------------------------------------------------

    @property
    def const_term(self):
        return self.terms.get((0, 0), 0.0)

    def coeff(self, rows, cols):
        """Coefficient of the canonical monomial m(rows, cols)."""
        rmask = 0
        for r in rows:
            rmask |= 1 << (r - 1)
        cmask = 0
        for c in cols:
            cmask |= 1 << (c - 1)
        return self.terms.get((rmask, cmask), 0.0)

    def nilpotent_part(self):
        t = dict(self.terms)
        t.pop((0, 0), None)
        return NilElement(self.k, self.n, t)

    def max_abs_coeff(self, skip_constant=False):
        best = 0.0
        for key, v in self.terms.items():
            if skip_constant and key == (0, 0):
                continue
            best = max(best, abs(v))
        return best

    def is_zero(self, tol=0.0):
        return self.max_abs_coeff() <= tol

    def degree_part(self, r):
        """Component spanned by monomials of generator-degree r."""
        t = {key: v for key, v in self.terms.items()
             if bin(key[0]).count("1") == r}
        return NilElement(self.k, self.n, t)

    def __eq__(self, other):
        if isinstance(other, (int, float)):
            other = NilElement.constant(self.k, self.n, other)
        if not isinstance(other, NilElement):
            return NotImplemented
        return (self.k, self.n) == (other.k, other.n) and self.terms == other.terms

    def __hash__(self):
        return hash((self.k, self.n, frozenset(self.terms.items())))

    def __repr__(self):
        if not self.terms:
            return f"W({self.k},{self.n})<0>"
        parts = []
        for (rmask, cmask), v in sorted(self.terms.items()):
            if rmask == 0:
                parts.append(f"{v:g}")
            else:
                gens = "".join(f"xi[{r},{c}]"
                               for r, c in zip(_bits(rmask), _bits(cmask)))
                parts.append(f"{v:g}*{gens}")
        return f"W({self.k},{self.n})<" + " + ".join(parts) + ">"

    # -- arithmetic --------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, (int, float)):
            return NilElement.constant(self.k, self.n, other)
        if isinstance(other, NilElement):
            if (self.k, self.n) != (other.k, other.n):
                raise ContextMismatchError(
                    f"W({self.k},{self.n}) vs W({other.k},{other.n})")
            return other
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return NilElement(self.k, self.n, backend.elem_add(self.terms, other.terms))

    __radd__ = __add__

    def __neg__(self):
        return NilElement(self.k, self.n, backend.elem_scale(-1.0, self.terms))

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return NilElement(self.k, self.n,
                              backend.elem_scale(float(other), self.terms))
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return NilElement(self.k, self.n, backend.elem_mul(self.terms, other.terms))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            return self * (1.0 / other)
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self * lift_smooth("reciprocal", other)

    def __rtruediv__(self, other):
        return lift_smooth("reciprocal", self) * other

    def __pow__(self, m):
        if not isinstance(m, int):
            return NotImplemented
        if m < 0:
            return lift_smooth("reciprocal", self) ** (-m)
        out = NilElement.constant(self.k, self.n, 1.0)
        for _ in range(m):
            out = out * self
        return out

    # -- simplex morphisms -------------------------------------------------

    def _map_factors(self, fn):
        """Apply fn: (row, col) -> (row', col') to every generator factor
        and recanonicalize.  fn must land inside the same context."""
        out = {}
        for (rmask, cmask), v in self.terms.items():
            factors = [fn(r, c) for r, c in zip(_bits(rmask), _bits(cmask))]
            sign, mono = canonicalize(factors)
            if sign == 0:
                continue
            c = out.get(mono, 0.0) + sign * v
            if c == 0.0:
                out.pop(mono, None)
            else:
                out[mono] = c
        return NilElement(self.k, self.n, out)

    def identify_rows(self, i, j):
        """Algebra morphism induced by the degeneracy x_j = x_i."""
        if not (1 <= i <= self.k and 1 <= j <= self.k):
            raise ValueError(f"row index out of range for arity {self.k}")
        return self._map_factors(lambda r, c: (i if r == j else r, c))

    def permute_rows(self, perm):
        """Algebra morphism induced by a vertex permutation.

        `perm` maps row index r (1-based) to perm[r-1].
        """
        if sorted(perm) != list(range(1, self.k + 1)):
            raise ValueError("not a permutation of 1..k")
        return self._map_factors(lambda r, c: (perm[r - 1], c))

    def zero_row(self, j):
        """Algebra morphism xi[j,*] -> 0 (identify vertex j with the base)."""
        t = {key: v for key, v in self.terms.items()
             if not key[0] & (1 << (j - 1))}
        return NilElement(self.k, self.n, t)

    def substitute_rows(self, mats, n_target):
        """The algebra morphism W(k, n) -> W(k, n_target) sending
        xi[j, a] to sum_b mats[j-1][b, a] * xi'[j, b].

        `mats` is a single matrix (shared by all rows) or one per row; each
        has n_target rows and self.n columns (indexable as m[b][a], 0-based).
        """
        per_row = not _is_matrix(mats)
        images = {}

        def image(r, c):
            key = (r, c)
            if key not in images:
                m = mats[r - 1] if per_row else mats
                terms = {}
                for b in range(n_target):
                    coef = float(m[b][c - 1])
                    if coef:
                        terms[(1 << (r - 1), 1 << b)] = coef
                images[key] = terms
            return images[key]

        out = {}
        for (rmask, cmask), v in self.terms.items():
            prod = {(0, 0): v}
            for r, c in zip(_bits(rmask), _bits(cmask)):
                prod = backend.elem_mul(prod, image(r, c))
                if not prod:
                    break
            for mono, coef in prod.items():
                c = out.get(mono, 0.0) + coef
                if c == 0.0:
                    out.pop(mono, None)
                else:
                    out[mono] = c
        return NilElement(self.k, n_target, out)


def _is_matrix(mats):
    """True if `mats` is a single matrix rather than a per-row list."""
    import numbers
    try:
        return isinstance(mats[0][0], numbers.Real)
    except (TypeError, IndexError):
        return False


def generic_offsets(k, n):
    """Displacement vectors of the generic infinitesimal k-simplex:
    offsets[j][a] = xi[j+1, a+1] as elements of W(k, n)."""
    return [[NilElement.generator(k, n, j + 1, a + 1) for a in range(n)]
            for j in range(k)]


def monomial_count(k, n, r):
    return math.comb(k, r) * math.comb(n, r)


def all_monomials(k, n, r):
    """Canonical degree-r monomials of W(k, n) as (rows, cols) tuples."""
    return [(rows, cols)
            for rows in combinations(range(1, k + 1), r)
            for cols in combinations(range(1, n + 1), r)]


# -- Taylor lifting of smooth primitives ------------------------------------

def _derivs_sin(c, order):
    cyc = [math.sin(c), math.cos(c), -math.sin(c), -math.cos(c)]
    return [cyc[r % 4] for r in range(order + 1)]


def _derivs_cos(c, order):
    cyc = [math.cos(c), -math.sin(c), -math.cos(c), math.sin(c)]
    return [cyc[r % 4] for r in range(order + 1)]


def _derivs_exp(c, order):
    e = math.exp(c)
    return [e] * (order + 1)


def _derivs_ln(c, order):
    if c <= 0:
        raise DomainError(f"ln of constant term {c} <= 0")
    out = [math.log(c)]
    for r in range(1, order + 1):
        out.append((-1.0) ** (r - 1) * math.factorial(r - 1) / c ** r)
    return out


def _derivs_sqrt(c, order):
    if c <= 0:
        raise DomainError(f"sqrt of constant term {c} <= 0")
    out = []
    fall = 1.0
    for r in range(order + 1):
        out.append(fall * c ** (0.5 - r))
        fall *= 0.5 - r
    return out


def _derivs_reciprocal(c, order):
    if c == 0:
        raise DomainError("reciprocal of element with zero constant term")
    return [(-1.0) ** r * math.factorial(r) / c ** (r + 1)
            for r in range(order + 1)]


_DERIVS = {
    "sin": _derivs_sin,
    "cos": _derivs_cos,
    "exp": _derivs_exp,
    "ln": _derivs_ln,
    "sqrt": _derivs_sqrt,
    "reciprocal": _derivs_reciprocal,
}


def _derivs_power(c, order, exponent):
    """Falling-factorial derivatives of x**exponent (real exponent)."""
    out = []
    fall = 1.0
    for r in range(order + 1):
        if fall == 0.0:
            out.append(0.0)
            continue
        p = exponent - r
        if c == 0.0:
            if p < 0:
                raise DomainError("negative power of zero constant term")
            out.append(fall * (1.0 if p == 0 else 0.0))
        else:
            out.append(fall * c ** p)
        fall *= exponent - r
    return out


def lift_smooth(f, a, exponent=None):
    """Extend a univariate smooth primitive to a W-valued argument.

    f is one of sin, cos, exp, ln, sqrt, reciprocal, power (the latter
    takes `exponent`).  Exact: the Taylor sum at the constant term
    truncates at order min(k, n) by nilpotency.
    """
    if not isinstance(a, NilElement):
        raise TypeError("lift_smooth expects a NilElement")
    order = min(a.k, a.n)
    c = a.const_term
    if f == "power":
        if isinstance(exponent, int) and exponent >= 0:
            return a ** exponent
        derivs = _derivs_power(c, order, float(exponent))
    else:
        try:
            fn = _DERIVS[f]
        except KeyError:
            raise ValueError(f"unknown smooth primitive {f!r}") from None
        derivs = fn(c, order)
    nil = a.nilpotent_part()
    out = NilElement.constant(a.k, a.n, derivs[0])
    power = NilElement.constant(a.k, a.n, 1.0)
    fact = 1.0
    for r in range(1, order + 1):
        power = power * nil
        if power.is_zero():
            break
        fact *= r
        if derivs[r]:
            out = out + power * (derivs[r] / fact)
    return out
