"""Principal connections on a trivialized bundle chart x group.

Transport over a neighbour pair is first-order exact in W arithmetic:
T(a,b) = I + sum_i A_i(a) (b-a)_i, with the sign of the gauge coupling and
of the curvature bracket pinned once against the classical oracle
F = dA + s[A, A] (the pinning run fixes TRANSPORT_SIGN = +1, BRACKET_SIGN
= +1 for this convention) and frozen here.  Curvature is the group-valued
coboundary  omega(x,y) * omega(y,z) * omega(z,x)  on the generic
infinitesimal 2-simplex.
"""

import numpy as np
import scipy.linalg

from . import expr as ex
from .errors import (ContextMismatchError, DegreeError, LogBranchError,
                     RankDeficiencyError)
from .nil import NilElement
from .chart import NilPoint, Point

# Convention constants fixed by pin_conventions() against the classical
# oracle; see that function.
TRANSPORT_SIGN = +1.0
BRACKET_SIGN = +1.0
COBOUNDARY_SCALE = 0.5  # extraction normalization 2! in degree 2

DEFAULT_TOL = 1e-9


class MatrixGroupSpec:
    """Structure group: GL(m), SO(m), or a subgroup fixed by a Lie-algebra
    basis (independent, bracket-closed)."""

    GENERAL = "general"
    SPECIAL_ORTHOGONAL = "special_orthogonal"
    SUBGROUP = "subgroup"

    def __init__(self, m, kind=GENERAL, algebra_basis=None, tol=1e-9):
        self.m = m
        self.kind = kind
        if kind == self.SUBGROUP:
            if not algebra_basis:
                raise ValueError("subgroup kind needs a Lie-algebra basis")
            basis = [np.asarray(b, dtype=float) for b in algebra_basis]
            flat = np.array([b.ravel() for b in basis])
            if np.linalg.matrix_rank(flat, tol=1e-10) != len(basis):
                raise RankDeficiencyError("algebra basis is linearly dependent")
            for i, a in enumerate(basis):
                for b in basis[i + 1:]:
                    br = a @ b - b @ a
                    if _span_residual(flat, br.ravel()) > tol:
                        raise RankDeficiencyError(
                            "algebra basis not closed under bracket")
            self.algebra_basis = basis
        elif kind == self.SPECIAL_ORTHOGONAL:
            self.algebra_basis = [
                _e(m, i, j) - _e(m, j, i)
                for i in range(m) for j in range(i + 1, m)]
        elif kind == self.GENERAL:
            self.algebra_basis = [_e(m, i, j) for i in range(m) for j in range(m)]
        else:
            raise ValueError(f"unknown group kind {kind!r}")

    def in_algebra(self, X, tol=1e-9):
        flat = np.array([b.ravel() for b in self.algebra_basis])
        return _span_residual(flat, np.asarray(X).ravel()) <= tol


def _e(m, i, j):
    out = np.zeros((m, m))
    out[i, j] = 1.0
    return out


def _span_residual(flat_basis, vec):
    coef, *_ = np.linalg.lstsq(flat_basis.T, vec, rcond=None)
    return float(np.linalg.norm(flat_basis.T @ coef - vec))


class ConnectionData:
    """Lie-algebra-valued local connection 1-form A on a chart."""

    def __init__(self, n, group, A, vars=None):
        self.n = n
        self.group = group
        self.vars = tuple(vars) if vars is not None else tuple(
            f"x{i + 1}" for i in range(n))
        if len(A) != n:
            raise DegreeError("need one matrix of coefficients per dimension")
        m = group.m
        self.A = [[[ex.as_expr(A[i][r][c]) for c in range(m)]
                   for r in range(m)] for i in range(n)]

    def a_matrices(self, coords):
        """Numeric (or W-valued) matrices A_i at the given coordinates."""
        env = dict(zip(self.vars, coords))
        return [np.array([[ex.evaluate(e, env) for e in row]
                          for row in Ai], dtype=object) for Ai in self.A]

    def a_numeric(self, coords):
        env = dict(zip(self.vars, coords))
        return [np.array([[float(ex.evaluate(e, env)) for e in row]
                          for row in Ai]) for Ai in self.A]

    def validate_at(self, points, tol=1e-9):
        """Check A_i(x) lies in the group's Lie algebra at sample points."""
        for p in points:
            for Ai in self.a_numeric(p.coords):
                if not self.group.in_algebra(Ai, tol):
                    return False
        return True


class GroupElementW:
    """m x m matrix with NilElement (or float) entries, constant part in G."""

    __slots__ = ("mat",)

    def __init__(self, mat):
        self.mat = np.asarray(mat, dtype=object)

    @staticmethod
    def identity(m):
        return GroupElementW(np.eye(m).astype(object))

    @property
    def m(self):
        return self.mat.shape[0]

    def const_part(self):
        return np.array([[e.const_term if isinstance(e, NilElement) else float(e)
                          for e in row] for row in self.mat])

    def __matmul__(self, other):
        if isinstance(other, GroupElementW):
            other = other.mat
        return GroupElementW(_omat_mul(self.mat, np.asarray(other, dtype=object)))

    def __rmatmul__(self, other):
        return GroupElementW(_omat_mul(np.asarray(other, dtype=object), self.mat))

    def __sub__(self, other):
        if isinstance(other, GroupElementW):
            other = other.mat
        return GroupElementW(self.mat - np.asarray(other, dtype=object))

    def inverse(self):
        """Exact inverse: invert the constant part, then a finite Neumann
        series in the nilpotent remainder."""
        C = self.const_part()
        Cinv = np.linalg.inv(C).astype(object)
        N = _omat_mul(Cinv, self.mat) - np.eye(self.m).astype(object)
        order = self._nil_order()
        out = np.eye(self.m).astype(object)
        power = np.eye(self.m).astype(object)
        for r in range(1, order + 1):
            power = _omat_mul(power, N)
            if _omat_is_zero(power):
                break
            out = out + (-1.0) ** r * power
        return GroupElementW(_omat_mul(out, Cinv))

    def _nil_order(self):
        for row in self.mat:
            for e in row:
                if isinstance(e, NilElement):
                    return min(e.k, e.n)
        return 0

    def coefficient_matrices(self):
        """Map monomial -> m x m float matrix of that monomial's coefficients
        across entries (the (0,0) key is the constant part)."""
        out = {}
        m = self.m
        for r in range(m):
            for c in range(m):
                e = self.mat[r, c]
                if isinstance(e, NilElement):
                    for key, v in e.terms.items():
                        out.setdefault(key, np.zeros((m, m)))[r, c] = v
                elif e:
                    out.setdefault((0, 0), np.zeros((m, m)))[r, c] = float(e)
        return out

    def log_truncated(self):
        """Truncated matrix log: series in (g - I), exact by nilpotency when
        the constant part is I."""
        N = self.mat - np.eye(self.m).astype(object)
        order = max(self._nil_order(), 1)
        out = np.zeros((self.m, self.m), dtype=object)
        power = np.eye(self.m).astype(object)
        for r in range(1, order + 1):
            power = _omat_mul(power, N)
            if _omat_is_zero(power):
                break
            out = out + ((-1.0) ** (r + 1) / r) * power
        return GroupElementW(out)

    def max_abs_coeff(self):
        best = 0.0
        for row in self.mat:
            for e in row:
                if isinstance(e, NilElement):
                    best = max(best, e.max_abs_coeff())
                else:
                    best = max(best, abs(float(e)))
        return best


def _omat_mul(a, b):
    m, k = a.shape
    k2, n = b.shape
    out = np.empty((m, n), dtype=object)
    for i in range(m):
        for j in range(n):
            acc = 0.0
            for l in range(k):
                acc = acc + a[i, l] * b[l, j]
            out[i, j] = acc
    return out


def _omat_is_zero(a, tol=0.0):
    for row in a:
        for e in row:
            if isinstance(e, NilElement):
                if e.max_abs_coeff() > tol:
                    return False
            elif abs(float(e)) > tol:
                return False
    return True


def _coords_of(point):
    if isinstance(point, NilPoint):
        return point.coords_w()
    if isinstance(point, Point):
        return point.coords
    return tuple(point)


def transport_neighbor(conn, a, b):
    """First-order transport T(a, b) = I + sign * sum_i A_i(a) (b - a)_i.

    Exact for neighbour pairs: quadratic terms in the displacement vanish.
    Either argument may be W-valued; A is evaluated at the first.
    """
    ca = _coords_of(a)
    cb = _coords_of(b)
    if not (len(ca) == len(cb) == conn.n):
        raise ContextMismatchError("points not in the connection's chart")
    mats = conn.a_matrices(ca)
    m = conn.group.m
    out = np.eye(m).astype(object)
    for i in range(conn.n):
        delta = cb[i] - ca[i]
        if isinstance(delta, NilElement) or delta != 0.0:
            out = out + TRANSPORT_SIGN * mats[i] * delta
    return GroupElementW(out)


def connection_form(conn, x, y):
    """Group-valued connection 1-form: omega(x, y) = g^-1 T(a, b) h for
    bundle points x = (a, g), y = (b, h)."""
    a, g = x
    b, h = y
    T = transport_neighbor(conn, a, b)
    g = np.asarray(g, dtype=float)
    ginv = np.linalg.inv(g).astype(object)
    if isinstance(h, GroupElementW):
        hmat = h.mat
    else:
        hmat = np.asarray(h, dtype=object)
    return GroupElementW(_omat_mul(_omat_mul(ginv, T.mat), hmat))


def horizontal_lift(conn, x, b):
    """The fiber value over b making ((a,g),(b,h)) horizontal: h = T(b,a) g."""
    a, g = x
    Tba = transport_neighbor(conn, b, a)
    return GroupElementW(_omat_mul(Tba.mat, np.asarray(g, dtype=object)))


def curvature_coboundary(conn, p, tol=DEFAULT_TOL):
    """Curvature via the coboundary on the generic infinitesimal 2-simplex
    at (p, I): returns {(i, j): m x m matrix} for i < j (1-based), after the
    degree-2 extraction normalization."""
    n = conn.n
    u = [NilElement.generator(2, n, 1, a + 1) for a in range(n)]
    v = [NilElement.generator(2, n, 2, a + 1) for a in range(n)]
    x = Point(p.coords)
    y = NilPoint(x, u)
    z = NilPoint(x, v)
    w_xy = transport_neighbor(conn, x, y)
    w_yz = transport_neighbor(conn, y, z)
    w_zx = transport_neighbor(conn, z, x)
    total = w_xy @ w_yz @ w_zx
    coeffs = total.coefficient_matrices()
    m = conn.group.m
    out = {}
    for key, mat in coeffs.items():
        rmask, cmask = key
        if key == (0, 0):
            if np.max(np.abs(mat - np.eye(m))) > tol:
                raise RankDeficiencyError("coboundary constant part is not I")
        elif rmask == 0b11:
            i, j = [b + 1 for b in range(n) if cmask & (1 << b)]
            out[(i, j)] = mat * COBOUNDARY_SCALE
        elif np.max(np.abs(mat)) > tol:
            raise RankDeficiencyError("coboundary has unexpected degree-1 part")
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            out.setdefault((i, j), np.zeros((m, m)))
    return out


def curvature_classical_oracle(conn, p):
    """Classical gauge curvature F_ij = d_i A_j - d_j A_i + s [A_i, A_j]
    with the pinned bracket sign."""
    env = dict(zip(conn.vars, p.coords))
    m = conn.group.m
    out = {}
    for i in range(1, conn.n + 1):
        for j in range(i + 1, conn.n + 1):
            F = np.zeros((m, m))
            Ai = np.array([[float(ex.evaluate(e, env)) for e in row]
                           for row in conn.A[i - 1]])
            Aj = np.array([[float(ex.evaluate(e, env)) for e in row]
                           for row in conn.A[j - 1]])
            dAj = np.array([[float(ex.evaluate(ex.diff(e, conn.vars[i - 1]), env))
                             for e in row] for row in conn.A[j - 1]])
            dAi = np.array([[float(ex.evaluate(ex.diff(e, conn.vars[j - 1]), env))
                             for e in row] for row in conn.A[i - 1]])
            F = dAj - dAi + BRACKET_SIGN * (Ai @ Aj - Aj @ Ai)
            out[(i, j)] = F
    return out


def pin_conventions(conn, points, tol=1e-9):
    """One-time pinning run: measure the scalar ratio and bracket sign
    relating the coboundary curvature to the classical oracle.  Returns
    (scale, bracket_sign); the module freezes (0.5, +1.0)."""
    for s in (+1.0, -1.0):
        ratios = []
        ok = True
        for p in points:
            cob = curvature_coboundary(conn, p)
            env = dict(zip(conn.vars, p.coords))
            for (i, j), Fc in cob.items():
                Ai = np.array([[float(ex.evaluate(e, env)) for e in row]
                               for row in conn.A[i - 1]])
                Aj = np.array([[float(ex.evaluate(e, env)) for e in row]
                               for row in conn.A[j - 1]])
                dAj = np.array([[float(ex.evaluate(ex.diff(e, conn.vars[i - 1]), env))
                                 for e in row] for row in conn.A[j - 1]])
                dAi = np.array([[float(ex.evaluate(ex.diff(e, conn.vars[j - 1]), env))
                                 for e in row] for row in conn.A[i - 1]])
                F = dAj - dAi + s * (Ai @ Aj - Aj @ Ai)
                nF = np.max(np.abs(F))
                if nF < 1e-8:
                    continue
                ratio = float(np.sum(Fc * F) / np.sum(F * F))
                if np.max(np.abs(Fc - ratio * F)) > tol * max(1.0, nF):
                    ok = False
                    break
                ratios.append(ratio)
            if not ok:
                break
        if ok and ratios and np.std(ratios) <= tol:
            return float(np.mean(ratios)), s
    raise RankDeficiencyError("could not pin curvature conventions")


def parallel_transport(conn, curve_exprs, t0, t1, steps, tvar="t",
                       project=None):
    """RK4 integration of g' = -sum_i A_i(c(t)) c_i'(t) g from the identity.

    `project` re-projects onto the group each step ('orthogonal' uses the
    polar factor); defaults to orthogonal projection for SO groups.
    """
    if steps <= 0:
        raise ValueError("steps must be positive")
    if project is None:
        project = ("orthogonal"
                   if conn.group.kind == MatrixGroupSpec.SPECIAL_ORTHOGONAL
                   else "none")
    c_fns = [ex.compile_numeric(c, (tvar,)) for c in curve_exprs]
    cdot_fns = [ex.compile_numeric(ex.diff(c, tvar), (tvar,)) for c in curve_exprs]
    a_fns = [[[ex.compile_numeric(e, conn.vars) for e in row] for row in Ai]
             for Ai in conn.A]
    m = conn.group.m
    n = conn.n

    def rhs(t, g):
        x = [f(t) for f in c_fns]
        acc = np.zeros((m, m))
        for i in range(n):
            ci = cdot_fns[i](t)
            if ci:
                Ai = np.array([[e(*x) for e in row] for row in a_fns[i]])
                acc += Ai * ci
        return -acc @ g

    g = np.eye(m)
    h = (t1 - t0) / steps
    t = t0
    for _ in range(steps):
        k1 = rhs(t, g)
        k2 = rhs(t + 0.5 * h, g + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, g + 0.5 * h * k2)
        k4 = rhs(t + h, g + h * k3)
        g = g + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
        if project == "orthogonal":
            uu, _, vv = np.linalg.svd(g)
            g = uu @ vv
    return g


def holonomy_log(g):
    """Principal matrix logarithm of a holonomy element.

    Rotations in SO(2) and SO(3) get closed-form skew logs (stable at the
    angle-pi branch point); everything else goes through scipy's logm and
    must have a real principal branch.
    """
    g = np.asarray(g, dtype=float)
    m = g.shape[0]
    orthogonal = (np.max(np.abs(g.T @ g - np.eye(m))) < 1e-9
                  and np.linalg.det(g) > 0)
    if orthogonal and m == 2:
        angle = float(np.arctan2(g[1, 0], g[0, 0]))
        return np.array([[0.0, -angle], [angle, 0.0]])
    if orthogonal and m == 3:
        cos_angle = np.clip((np.trace(g) - 1.0) / 2.0, -1.0, 1.0)
        angle = float(np.arccos(cos_angle))
        if angle < 1e-12:
            return np.zeros((3, 3))
        if abs(np.pi - angle) < 1e-8:
            # axis from the +1 eigenvector
            w, vecs = np.linalg.eigh((g + np.eye(3)) / 2.0)
            axis = vecs[:, np.argmax(w)]
        else:
            axis = np.array([g[2, 1] - g[1, 2], g[0, 2] - g[2, 0],
                             g[1, 0] - g[0, 1]]) / (2.0 * np.sin(angle))
        K = np.array([[0.0, -axis[2], axis[1]],
                      [axis[2], 0.0, -axis[0]],
                      [-axis[1], axis[0], 0.0]])
        return angle * K
    try:
        L = scipy.linalg.logm(g)
    except Exception as err:  # scipy raises LinAlgError or warns
        raise LogBranchError(str(err)) from err
    if np.max(np.abs(np.asarray(L).imag)) > 1e-8:
        raise LogBranchError("holonomy has no real principal logarithm")
    return np.asarray(L).real


def lie_closure(mats, tol=1e-9):
    """Basis of the Lie algebra generated by the given matrices: iterate
    brackets until the rank stabilizes (capped at m^2)."""
    mats = [np.asarray(x, dtype=float) for x in mats]
    m = mats[0].shape[0] if mats else 0
    basis = []
    flat = np.zeros((0, m * m))

    def try_add(X):
        nonlocal flat
        if np.max(np.abs(X), initial=0.0) < 1e-13:
            return
        if flat.shape[0] and _span_residual(flat, X.ravel()) <= tol * max(
                1.0, np.max(np.abs(X))):
            return
        basis.append(X)
        flat = np.array([b.ravel() for b in basis])

    for X in mats:
        try_add(X)
    changed = True
    while changed and len(basis) < m * m:
        changed = False
        cur = list(basis)
        for i, a in enumerate(cur):
            for b in cur[i + 1:]:
                before = len(basis)
                try_add(a @ b - b @ a)
                if len(basis) > before:
                    changed = True
    return basis


def ambrose_singer_check(conn, loops, samples, basepoint, steps=2000,
                         tol=1e-6):
    """Log of every loop holonomy lies in the Lie algebra generated by the
    (transport-conjugated) curvature values.

    `loops` are (curve_exprs, t0, t1) triples of closed curves through the
    basepoint.  Returns (inclusion_verdict, dim_h, max_residual).
    """
    conjugated = []
    x0 = np.array(basepoint.coords)
    for p in samples:
        seg = [ex.Add(ex.Const(x0[i]),
                      ex.Mul(ex.Var("t"), ex.Const(p.coords[i] - x0[i])))
               for i in range(conn.n)]
        g = parallel_transport(conn, seg, 0.0, 1.0, steps)
        ginv = np.linalg.inv(g)
        for F in curvature_coboundary(conn, p).values():
            conjugated.append(g @ F @ ginv)
    h_basis = lie_closure(conjugated, tol=tol)
    if not h_basis:
        h_basis = []
    flat = np.array([b.ravel() for b in h_basis]) if h_basis else None
    max_resid = 0.0
    for curve_exprs, t0, t1 in loops:
        g = parallel_transport(conn, curve_exprs, t0, t1, steps)
        L = holonomy_log(g)
        if np.max(np.abs(L)) < tol:
            continue
        if flat is None:
            max_resid = max(max_resid, float(np.max(np.abs(L))))
            continue
        max_resid = max(max_resid, _span_residual(flat, L.ravel()))
    return max_resid <= tol, len(h_basis), max_resid


def in_subalgebra_cone(gW, h_basis, tol=1e-9):
    """Whether a W-valued group element is an 'H-element': its truncated
    log has every monomial coefficient matrix in span(h_basis)."""
    flat = np.array([np.asarray(b, dtype=float).ravel() for b in h_basis])
    L = gW.log_truncated()
    for key, mat in L.coefficient_matrices().items():
        if np.max(np.abs(mat)) <= tol:
            continue
        if not flat.shape[0]:
            return False
        if _span_residual(flat, mat.ravel()) > tol * max(1.0, np.max(np.abs(mat))):
            return False
    return True


def holonomy_distribution_flatness(conn, h_basis, x, y, tol=1e-9):
    """Flatness of the bundle pair (x, y) for the holonomy distribution of
    the subgroup with Lie algebra span(h_basis): omega(x, y) in the H-cone."""
    omega = connection_form(conn, x, y)
    return in_subalgebra_cone(omega, h_basis, tol=tol)
