"""Exact polynomial algebra and Gauss-Legendre quadrature on [-1, 1]^n.

Polynomials and differential forms carry exact rational coefficients;
floating point enters only when a polynomial is tabulated at quadrature
or sample points.  The reference cell is [-1, 1]^n throughout.
"""

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

try:  # gmpy2 rationals are drop-in and much faster for large eliminations
    from gmpy2 import mpq as Q
except ImportError:  # pragma: no cover
    Q = Fraction

QZERO = Q(0)
QONE = Q(1)


def _is_rational(x):
    return isinstance(x, (int, Fraction)) or type(x) is type(QONE)


# ---------------------------------------------------------------------------
# component ordering for k-forms
# ---------------------------------------------------------------------------

#: Fixed component ordering of the k-form basis dx_sigma, per dimension.
#: 2-forms in 3D are ordered (dy^dz, dx^dz, dx^dy); everything else is
#: lexicographic on the index tuples.
FORM_COMPONENTS = {
    (2, 0): ((),),
    (2, 1): ((0,), (1,)),
    (2, 2): ((0, 1),),
    (3, 0): ((),),
    (3, 1): ((0,), (1,), (2,)),
    (3, 2): ((1, 2), (0, 2), (0, 1)),
    (3, 3): ((0, 1, 2),),
    (1, 0): ((),),
    (1, 1): ((0,),),
}


def form_components(n, k):
    """Ordered dx_sigma index tuples for k-forms in n dimensions."""
    try:
        return FORM_COMPONENTS[(n, k)]
    except KeyError:
        raise ValueError(f"no k-form components for n={n}, k={k}")


def n_components(n, k):
    return len(form_components(n, k))


# ---------------------------------------------------------------------------
# multivariate polynomials with exact coefficients
# ---------------------------------------------------------------------------

class PolyN:
    """Polynomial in n variables, monomial basis, exact rational coefficients.

    Stored as a mapping from exponent tuples to nonzero rationals.
    Immutable; all arithmetic returns new instances.
    """

    __slots__ = ("n", "coeffs")

    def __init__(self, n, coeffs=None):
        self.n = n
        clean = {}
        for exp, c in (coeffs or {}).items():
            c = Q(c)
            if c != 0:
                clean[tuple(exp)] = c
        self.coeffs = clean

    @staticmethod
    def zero(n):
        return PolyN(n)

    @staticmethod
    def constant(n, c):
        return PolyN(n, {(0,) * n: c})

    @staticmethod
    def monomial(n, exponents, c=1):
        return PolyN(n, {tuple(exponents): c})

    @staticmethod
    def variable(n, axis):
        exp = [0] * n
        exp[axis] = 1
        return PolyN(n, {tuple(exp): 1})

    def is_zero(self):
        return not self.coeffs

    def degree(self):
        """Total degree; -1 for the zero polynomial."""
        if not self.coeffs:
            return -1
        return max(sum(e) for e in self.coeffs)

    def degree_in(self, axis):
        if not self.coeffs:
            return -1
        return max(e[axis] for e in self.coeffs)

    def __add__(self, other):
        if isinstance(other, PolyN):
            out = dict(self.coeffs)
            for exp, c in other.coeffs.items():
                s = out.get(exp, QZERO) + c
                if s == 0:
                    out.pop(exp, None)
                else:
                    out[exp] = s
            return PolyN(self.n, out)
        return self + PolyN.constant(self.n, other)

    __radd__ = __add__

    def __neg__(self):
        return PolyN(self.n, {e: -c for e, c in self.coeffs.items()})

    def __sub__(self, other):
        if isinstance(other, PolyN):
            return self + (-other)
        return self + PolyN.constant(self.n, -Q(other))

    def __mul__(self, other):
        if isinstance(other, PolyN):
            out = {}
            for e1, c1 in self.coeffs.items():
                for e2, c2 in other.coeffs.items():
                    exp = tuple(a + b for a, b in zip(e1, e2))
                    s = out.get(exp, QZERO) + c1 * c2
                    if s == 0:
                        out.pop(exp, None)
                    else:
                        out[exp] = s
            return PolyN(self.n, out)
        c = Q(other)
        return PolyN(self.n, {e: v * c for e, v in self.coeffs.items()})

    __rmul__ = __mul__

    def diff(self, axis):
        out = {}
        for exp, c in self.coeffs.items():
            p = exp[axis]
            if p == 0:
                continue
            new = list(exp)
            new[axis] = p - 1
            out[tuple(new)] = c * p
        return PolyN(self.n, out)

    def substitute(self, axis, value):
        """Substitute an exact rational value for one variable.

        The result keeps the same number of variables (the substituted
        axis simply no longer appears).
        """
        value = Q(value)
        acc = {}
        for exp, c in self.coeffs.items():
            new = list(exp)
            p = new[axis]
            new[axis] = 0
            key = tuple(new)
            acc[key] = acc.get(key, QZERO) + c * value**p
        return PolyN(self.n, acc)

    def restrict(self, axes):
        """Drop to the variables in `axes` (all others must not appear)."""
        for exp in self.coeffs:
            for i, p in enumerate(exp):
                if p and i not in axes:
                    raise ValueError("polynomial depends on a dropped axis")
        out = {}
        for exp, c in self.coeffs.items():
            out[tuple(exp[i] for i in axes)] = c
        return PolyN(len(axes), out)

    def eval_exact(self, point):
        """Evaluate at a point with rational coordinates."""
        total = QZERO
        for exp, c in self.coeffs.items():
            term = c
            for x, p in zip(point, exp):
                if p:
                    term = term * Q(x) ** p
            total += term
        return total

    def integral_cube(self):
        """Exact integral over [-1, 1]^n."""
        total = QZERO
        for exp, c in self.coeffs.items():
            term = c
            for p in exp:
                if p % 2 == 1:
                    term = QZERO
                    break
                term = term * Q(2, p + 1)
            total += term
        return total

    def to_dense(self):
        """Dense float coefficient array, shape (d0+1, ..., dn-1+1)."""
        if not self.coeffs:
            return np.zeros((1,) * self.n)
        shape = tuple(self.degree_in(a) + 1 for a in range(self.n))
        dense = np.zeros(shape)
        for exp, c in self.coeffs.items():
            dense[exp] = float(c)
        return dense

    def __call__(self, points):
        """Evaluate at float points, shape (npts, n) -> (npts,)."""
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            points = points[None, :]
        return eval_dense(self.to_dense(), points)

    def __eq__(self, other):
        return isinstance(other, PolyN) and self.n == other.n and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.n, frozenset(self.coeffs.items())))

    def __repr__(self):
        if not self.coeffs:
            return "0"
        names = "xyzw"
        terms = []
        for exp in sorted(self.coeffs, key=lambda e: (sum(e), e)):
            c = self.coeffs[exp]
            mono = "".join(
                f"{names[i]}" + (f"^{p}" if p > 1 else "")
                for i, p in enumerate(exp) if p
            )
            terms.append(f"{c}{'*' if mono else ''}{mono}")
        return " + ".join(terms)


def eval_dense(dense, points):
    """Evaluate a dense coefficient array at points of shape (npts, n)."""
    polyval = np.polynomial.polynomial.polyval
    vals = polyval(points[:, 0], dense, tensor=True)
    for axis in range(1, dense.ndim):
        vals = polyval(points[:, axis], vals, tensor=False)
    return np.asarray(vals)


# ---------------------------------------------------------------------------
# 1D polynomials and Legendre
# ---------------------------------------------------------------------------

class Polynomial1D:
    """Univariate polynomial on [-1, 1] with exact rational coefficients."""

    __slots__ = ("coefficients",)

    def __init__(self, coefficients):
        coeffs = [Q(c) for c in coefficients]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        self.coefficients = tuple(coeffs)

    @property
    def degree(self):
        return len(self.coefficients) - 1

    def __add__(self, other):
        a, b = self.coefficients, other.coefficients
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] += c
        return Polynomial1D(out)

    def __mul__(self, other):
        if isinstance(other, Polynomial1D):
            out = [QZERO] * (len(self.coefficients) + len(other.coefficients) - 1 or 1)
            for i, a in enumerate(self.coefficients):
                for j, b in enumerate(other.coefficients):
                    out[i + j] += a * b
            return Polynomial1D(out)
        return Polynomial1D([Q(other) * c for c in self.coefficients])

    __rmul__ = __mul__

    def __sub__(self, other):
        return self + (other * -1)

    def derivative(self):
        return Polynomial1D([i * c for i, c in enumerate(self.coefficients)][1:] or [0])

    def __call__(self, x):
        acc = 0.0
        for c in reversed(self.coefficients):
            acc = acc * x + float(c)
        return acc

    def eval_exact(self, x):
        acc = QZERO
        for c in reversed(self.coefficients):
            acc = acc * Q(x) + c
        return acc

    def as_polyn(self, n, axis):
        """Embed as an n-variate polynomial in the given variable."""
        out = {}
        for p, c in enumerate(self.coefficients):
            if c != 0:
                exp = [0] * n
                exp[axis] = p
                out[tuple(exp)] = c
        return PolyN(n, out)

    def __repr__(self):
        return f"Polynomial1D({list(self.coefficients)})"


@lru_cache(maxsize=None)
def legendre_poly(j):
    """Degree-j Legendre polynomial as an exact :class:`Polynomial1D`.

    Built from the three-term recurrence
    (j+1) P_{j+1} = (2j+1) x P_j - j P_{j-1}.
    """
    if j < 0:
        raise ValueError("Legendre degree must be nonnegative")
    if j == 0:
        return Polynomial1D([1])
    if j == 1:
        return Polynomial1D([0, 1])
    pm1, p = legendre_poly(j - 2), legendre_poly(j - 1)
    x = Polynomial1D([0, 1])
    return (x * p * Q(2 * j - 1, j)) - (pm1 * Q(j - 1, j))


def legendre(j, x):
    """Value of the degree-j Legendre polynomial at x via the recurrence."""
    if j < 0:
        raise ValueError("Legendre degree must be nonnegative")
    x = np.asarray(x, dtype=float)
    pm1 = np.ones_like(x)
    if j == 0:
        return pm1 if pm1.ndim else float(pm1)
    p = x.copy()
    for i in range(1, j):
        pm1, p = p, ((2 * i + 1) * x * p - i * pm1) / (i + 1)
    return p if p.ndim else float(p)


# ---------------------------------------------------------------------------
# differential forms
# ---------------------------------------------------------------------------

class PolyForm:
    """Differential k-form with polynomial coefficients on [-1, 1]^n.

    `components[i]` is the coefficient of dx_sigma for the i-th index
    tuple in the fixed component ordering (:data:`FORM_COMPONENTS`).
    """

    __slots__ = ("n", "k", "components")

    def __init__(self, n, k, components=None):
        self.n = n
        self.k = k
        sigmas = form_components(n, k)
        if components is None:
            components = [PolyN.zero(n) for _ in sigmas]
        components = list(components)
        if len(components) != len(sigmas):
            raise ValueError(
                f"{k}-form in {n}D needs {len(sigmas)} components, got {len(components)}"
            )
        self.components = tuple(components)

    @staticmethod
    def from_monomial(n, k, sigma, poly):
        """Form poly * dx_sigma with sigma an increasing index tuple."""
        sigmas = form_components(n, k)
        comps = [PolyN.zero(n) for _ in sigmas]
        comps[sigmas.index(tuple(sigma))] = poly
        return PolyForm(n, k, comps)

    def is_zero(self):
        return all(c.is_zero() for c in self.components)

    def __add__(self, other):
        return PolyForm(self.n, self.k,
                        [a + b for a, b in zip(self.components, other.components)])

    def __sub__(self, other):
        return PolyForm(self.n, self.k,
                        [a - b for a, b in zip(self.components, other.components)])

    def __mul__(self, scalar):
        return PolyForm(self.n, self.k, [c * scalar for c in self.components])

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def scale_by(self, poly):
        """Multiply every component by a scalar polynomial."""
        return PolyForm(self.n, self.k, [c * poly for c in self.components])

    def __eq__(self, other):
        return (isinstance(other, PolyForm) and self.n == other.n
                and self.k == other.k and self.components == other.components)

    def __repr__(self):
        names = "xyz"[: self.n]
        parts = []
        for comp, sigma in zip(self.components, form_components(self.n, self.k)):
            if comp.is_zero():
                continue
            d = "^".join(f"d{names[i]}" for i in sigma) or ""
            parts.append(f"({comp}){d}" if d else f"({comp})")
        return " + ".join(parts) or "0"


def exterior_derivative(f: PolyForm) -> PolyForm:
    """Exterior derivative df of a polynomial k-form, computed exactly."""
    if f.k >= f.n:
        raise ValueError("top-degree form has no exterior derivative")
    out_sigmas = form_components(f.n, f.k + 1)
    out = [PolyN.zero(f.n) for _ in out_sigmas]
    for comp, sigma in zip(f.components, form_components(f.n, f.k)):
        if comp.is_zero():
            continue
        for axis in range(f.n):
            if axis in sigma:
                continue
            dcomp = comp.diff(axis)
            if dcomp.is_zero():
                continue
            merged = tuple(sorted(sigma + (axis,)))
            # sign of dx_axis ^ dx_sigma -> dx_merged
            sign = (-1) ** merged.index(axis)
            idx = out_sigmas.index(merged)
            out[idx] = out[idx] + dcomp * sign
    return PolyForm(f.n, f.k + 1, out)


def koszul(f: PolyForm) -> PolyForm:
    """Koszul operator: contraction of a k-form with the position field."""
    if f.k == 0:
        raise ValueError("0-forms have no Koszul contraction")
    out_sigmas = form_components(f.n, f.k - 1)
    out = [PolyN.zero(f.n) for _ in out_sigmas]
    for comp, sigma in zip(f.components, form_components(f.n, f.k)):
        if comp.is_zero():
            continue
        for pos, axis in enumerate(sigma):
            rest = tuple(a for a in sigma if a != axis)
            idx = out_sigmas.index(rest)
            term = comp * PolyN.variable(f.n, axis)
            out[idx] = out[idx] + term * ((-1) ** pos)
    return PolyForm(f.n, f.k - 1, out)


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

class QuadratureRule:
    """Tensor-product Gauss-Legendre rule on [-1, 1]^n."""

    __slots__ = ("n", "points", "weights")

    def __init__(self, n, points, weights):
        self.n = n
        self.points = points
        self.weights = weights

    def __len__(self):
        return len(self.weights)


@lru_cache(maxsize=None)
def gauss_rule(n: int, m: int) -> QuadratureRule:
    """m-point-per-axis Gauss-Legendre rule on [-1, 1]^n.

    Exact for polynomials of per-variable degree <= 2m - 1.
    """
    if m < 1:
        raise ValueError("need at least one point per axis")
    x, w = np.polynomial.legendre.leggauss(m)
    pts_1d = [x] * n
    grids = np.meshgrid(*pts_1d, indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.ones(m**n)
    for axis in range(n):
        wg = np.meshgrid(*([w] * n), indexing="ij")[axis].ravel()
        weights *= wg
    return QuadratureRule(n, points, weights)


def binomial(n, k):
    return math.comb(n, k)


def monomial_exponents(n, degree):
    """All exponent tuples in n variables with total degree exactly `degree`."""
    if n == 1:
        return [(degree,)]
    out = []
    for first in range(degree + 1):
        for rest in monomial_exponents(n - 1, degree - first):
            out.append((first,) + rest)
    return out


def monomials_up_to(n, degree):
    """Exponent tuples with total degree <= degree, graded lexicographic."""
    out = []
    for d in range(degree + 1):
        out.extend(sorted(monomial_exponents(n, d)))
    return out
