"""Exact rational linear algebra over sparse coefficient vectors.

Vectors are dicts mapping hashable keys (here: (component, exponent-tuple)
pairs of monomial forms) to nonzero rationals.  Used by the reference
element construction, where unisolvence and trace tests must hold at
machine precision and so the basis is assembled without floating point.
"""

from .poly import Q, QZERO


def vec_add(a, b, scale=1):
    """a + scale * b for sparse dict vectors."""
    out = dict(a)
    for k, v in b.items():
        s = out.get(k, QZERO) + Q(scale) * v
        if s == 0:
            out.pop(k, None)
        else:
            out[k] = s
    return out


def vec_scale(a, scale):
    scale = Q(scale)
    if scale == 0:
        return {}
    return {k: v * scale for k, v in a.items()}


def vec_content_normalize(a):
    """Scale so coefficients are integers with gcd 1; fixes an overall sign."""
    if not a:
        return a
    from math import gcd

    nums = [v.numerator for v in a.values()]
    dens = [v.denominator for v in a.values()]
    g = 0
    for x in nums:
        g = gcd(g, int(x))
    l = 1
    for x in dens:
        l = l * int(x) // gcd(l, int(x))
    scale = Q(l, g) if g else Q(1)
    out = {k: v * scale for k, v in a.items()}
    first = min(out)
    if out[first] < 0:
        out = {k: -v for k, v in out.items()}
    return out


class SpanBasis:
    """Row-echelon span of sparse vectors with deterministic pivoting."""

    def __init__(self, key_order=None):
        self.rows = {}  # pivot key -> reduced row (pivot coefficient 1)
        self.key_order = key_order or (lambda k: k)

    def reduce(self, vec):
        """Residual of vec after elimination against the current span."""
        vec = dict(vec)
        while vec:
            pivot = min(vec, key=self.key_order)
            row = self.rows.get(pivot)
            if row is None:
                return vec, pivot
            vec = vec_add(vec, row, -vec[pivot])
        return vec, None

    def add(self, vec):
        """Insert a vector; returns True if it enlarged the span."""
        residual, pivot = self.reduce(vec)
        if pivot is None:
            return False
        residual = vec_scale(residual, 1 / residual[pivot])
        # back-substitute into existing rows to keep reduced form
        for p, row in list(self.rows.items()):
            c = row.get(pivot)
            if c:
                self.rows[p] = vec_add(row, residual, -c)
        self.rows[pivot] = residual
        return True

    def contains(self, vec):
        residual, _ = self.reduce(vec)
        return not residual

    @property
    def dim(self):
        return len(self.rows)

    def echelon_rows(self):
        """Rows ordered by pivot key (canonical reduced echelon basis)."""
        return [self.rows[p] for p in sorted(self.rows, key=self.key_order)]


def rational_kernel(rows, ncols):
    """Kernel basis of a dense rational matrix given as lists of length ncols.

    Returns kernel vectors as lists of rationals (free variables set to 1
    in ascending column order), computed by fraction-free-ish Gaussian
    elimination with exact arithmetic.
    """
    mat = [list(map(Q, r)) for r in rows]
    pivots = []
    row_i = 0
    for col in range(ncols):
        sel = None
        for i in range(row_i, len(mat)):
            if mat[i][col] != 0:
                sel = i
                break
        if sel is None:
            continue
        mat[row_i], mat[sel] = mat[sel], mat[row_i]
        piv = mat[row_i][col]
        mat[row_i] = [v / piv for v in mat[row_i]]
        for i in range(len(mat)):
            if i != row_i and mat[i][col] != 0:
                c = mat[i][col]
                mat[i] = [a - c * b for a, b in zip(mat[i], mat[row_i])]
        pivots.append(col)
        row_i += 1
        if row_i == len(mat):
            break
    free = [c for c in range(ncols) if c not in pivots]
    kernel = []
    for f in free:
        v = [QZERO] * ncols
        v[f] = Q(1)
        for r, pc in enumerate(pivots):
            v[pc] = -mat[r][f]
        kernel.append(v)
    return kernel


def rational_solve(rows, rhs):
    """One particular solution of a consistent rational system, or None.

    `rows` is a list of dense rational rows, `rhs` the right-hand sides.
    Free variables are set to zero; deterministic pivoting by column order.
    """
    ncols = len(rows[0]) if rows else 0
    mat = [list(map(Q, r)) + [Q(b)] for r, b in zip(rows, rhs)]
    pivots = []
    row_i = 0
    for col in range(ncols):
        sel = None
        for i in range(row_i, len(mat)):
            if mat[i][col] != 0:
                sel = i
                break
        if sel is None:
            continue
        mat[row_i], mat[sel] = mat[sel], mat[row_i]
        piv = mat[row_i][col]
        mat[row_i] = [v / piv for v in mat[row_i]]
        for i in range(len(mat)):
            if i != row_i and mat[i][col] != 0:
                c = mat[i][col]
                mat[i] = [a - c * b for a, b in zip(mat[i], mat[row_i])]
        pivots.append(col)
        row_i += 1
        if row_i == len(mat):
            break
    for i in range(row_i, len(mat)):
        if mat[i][ncols] != 0:
            return None  # inconsistent
    x = [QZERO] * ncols
    for r, pc in enumerate(pivots):
        x[pc] = mat[r][ncols]
    return x


def gram_solve(gram, rhs):
    """Solve a symmetric positive-definite rational system exactly."""
    x = rational_solve(gram, rhs)
    if x is None:
        raise ValueError("singular Gram matrix")
    return x
