"""Reference elements on [-1, 1]^n for two cubical element families.

The tensor-product family (Lagrange, RTCE/RTCF, NCE/NCF, DQ) is built from
explicit 1D tensor constructions.  The trimmed serendipity family is built
by spanning the space with exact generators (polynomial forms, Koszul
images of linear-degree monomial form spaces, and exterior derivatives
thereof) and splitting it into entity-associated basis functions: a basis
function belongs to the unique lowest-dimensional sub-entity on which its
trace does not vanish.  Edge functions of 1-forms and face functions of
2-forms use the explicit Legendre-coefficient formulas; the remaining sets
are extracted from the span with exact rational arithmetic, so unisolvence
and trace association hold to machine precision by construction.
"""

from functools import lru_cache
from itertools import combinations, product

import numpy as np

from ._exact import (
    SpanBasis,
    gram_solve,
    rational_kernel,
    rational_solve,
    vec_add,
    vec_content_normalize,
)
from .poly import (
    Q,
    QZERO,
    PolyForm,
    PolyN,
    eval_dense,
    exterior_derivative,
    form_components,
    gauss_rule,
    koszul,
    legendre_poly,
    monomials_up_to,
)

TRIMMED_SERENDIPITY = "TrimmedSerendipity"
TENSOR_PRODUCT = "TensorProduct"

_FAMILIES = (TRIMMED_SERENDIPITY, TENSOR_PRODUCT)


# ---------------------------------------------------------------------------
# reference cube topology
# ---------------------------------------------------------------------------

class Entity:
    """A sub-entity of the reference cube.

    `axes` are the tangential axes (ascending); `fixed` is a tuple of
    (axis, value) pairs with value in {-1, +1}, e.g. the edge
    {y=1} & {z=1} is Entity(axes=(0,), fixed=((1, 1), (2, 1))).
    """

    __slots__ = ("axes", "fixed")

    def __init__(self, axes, fixed):
        self.axes = tuple(axes)
        self.fixed = tuple(sorted(fixed))

    @property
    def dim(self):
        return len(self.axes)

    def vertices(self):
        """Vertex coordinate tuples of this entity."""
        n = len(self.axes) + len(self.fixed)
        out = []
        for corner in product((-1, 1), repeat=len(self.axes)):
            v = [0] * n
            for a, val in self.fixed:
                v[a] = val
            for a, val in zip(self.axes, corner):
                v[a] = val
            out.append(tuple(v))
        return out

    def __eq__(self, other):
        return (isinstance(other, Entity) and self.axes == other.axes
                and self.fixed == other.fixed)

    def __hash__(self):
        return hash((self.axes, self.fixed))

    def __repr__(self):
        names = "xyz"
        planes = ", ".join(f"{names[a]}={v:+d}" for a, v in self.fixed)
        return f"<{self.dim}-entity {{{planes}}}>" if planes else "<cell>"


class CellTopology:
    """Entity enumeration of the n-cube, ordered dimension-major.

    Edges are grouped by tangent axis, faces by normal axis, with the
    fixed coordinates enumerated -1 before +1 (first fixed axis slowest).
    """

    def __init__(self, n):
        if n not in (1, 2, 3):
            raise ValueError("only 1-, 2- and 3-cubes are supported")
        self.n = n
        ents = {d: [] for d in range(n + 1)}
        for d in range(n + 1):
            for axes in combinations(range(n), d):
                rest = [a for a in range(n) if a not in axes]
                if d == n - 1 and n == 3:
                    continue  # faces are ordered by normal axis below
                for vals in product((-1, 1), repeat=len(rest)):
                    ents[d].append(Entity(axes, tuple(zip(rest, vals))))
        if n == 3:
            for normal in range(3):
                axes = tuple(a for a in range(3) if a != normal)
                for side in (-1, 1):
                    ents[2].append(Entity(axes, ((normal, side),)))
        self.entities = ents

    def all_entities(self):
        for d in range(self.n + 1):
            yield from self.entities[d]

    def counts(self):
        return {d: len(self.entities[d]) for d in range(self.n + 1)}


@lru_cache(maxsize=None)
def cell_topology(n):
    return CellTopology(n)


# ---------------------------------------------------------------------------
# monomial-form vectors and traces
# ---------------------------------------------------------------------------
# A k-form is stored sparsely as {(component_index, exponent_tuple): rational}.

def _key_order(key):
    ci, exp = key
    return (sum(exp), ci, exp)


def form_to_vec(f: PolyForm):
    vec = {}
    for ci, comp in enumerate(f.components):
        for exp, c in comp.coeffs.items():
            vec[(ci, exp)] = c
    return vec


def vec_to_form(vec, n, k):
    comps = [dict() for _ in form_components(n, k)]
    for (ci, exp), c in vec.items():
        comps[ci][exp] = c
    return PolyForm(n, k, [PolyN(n, c) for c in comps])


def vec_l2(a, b):
    """Exact L2 inner product of two form vectors over [-1, 1]^n."""
    total = QZERO
    if len(a) > len(b):
        a, b = b, a
    by_comp = {}
    for (ci, exp), c in b.items():
        by_comp.setdefault(ci, []).append((exp, c))
    for (ci, e1), c1 in a.items():
        for e2, c2 in by_comp.get(ci, ()):
            term = c1 * c2
            for p1, p2 in zip(e1, e2):
                s = p1 + p2
                if s % 2:
                    term = QZERO
                    break
                term = term * Q(2, s + 1)
            total += term
    return total


def trace_vec(vec, n, k, entity: Entity):
    """Pullback of a k-form vector onto a sub-entity, in intrinsic keys.

    Components dx_sigma with sigma not contained in the entity's tangential
    axes vanish; fixed coordinates are substituted exactly.  Returns a
    sparse vector over (intrinsic component, intrinsic exponent) keys.
    """
    d = entity.dim
    if k > d:
        return {}
    axes = entity.axes
    pos = {a: i for i, a in enumerate(axes)}
    sigmas = form_components(n, k)
    if d == 0:
        # 0-form on a vertex: a single value
        out_sigmas = None
    else:
        out_sigmas = form_components(d, k)
    out = {}
    for (ci, exp), c in vec.items():
        sigma = sigmas[ci]
        if any(a not in pos for a in sigma):
            continue
        val = c
        new_exp = [0] * d
        for a, p in enumerate(exp):
            if not p:
                continue
            if a in pos:
                new_exp[pos[a]] = p
            else:
                fixed_val = dict(entity.fixed)[a]
                if fixed_val == -1 and p % 2:
                    val = -val
        if d == 0:
            key = (0, ())
        else:
            key = (out_sigmas.index(tuple(pos[a] for a in sigma)), tuple(new_exp))
        s = out.get(key, QZERO) + val
        if s == 0:
            out.pop(key, None)
        else:
            out[key] = s
    return out


def transform_vec(vec, n, k, axis_map, signs):
    """Push a k-form vector through a signed axis permutation.

    `axis_map[a]` is the image axis of a, `signs[a]` in {-1, +1} the
    reflection sign, i.e. the map sends x_a to signs[a] * x_{axis_map[a]}.
    """
    sigmas = form_components(n, k)
    out = {}
    for (ci, exp), c in vec.items():
        sigma = sigmas[ci]
        new_sigma_raw = [axis_map[a] for a in sigma]
        parity = 1
        arr = list(new_sigma_raw)
        for i in range(len(arr)):  # bubble parity of the sorting permutation
            for j in range(len(arr) - 1 - i):
                if arr[j] > arr[j + 1]:
                    arr[j], arr[j + 1] = arr[j + 1], arr[j]
                    parity = -parity
        coeff = c * parity
        for a in sigma:
            coeff *= signs[a]
        new_exp = [0] * n
        for a, p in enumerate(exp):
            new_exp[axis_map[a]] = p
            if signs[a] == -1 and p % 2:
                coeff = -coeff
        key = (sigmas.index(tuple(arr)), tuple(new_exp))
        s = out.get(key, QZERO) + coeff
        if s == 0:
            out.pop(key, None)
        else:
            out[key] = s
    return out


def entity_transform(src: Entity, dst: Entity):
    """Signed axis permutation carrying one entity onto another of its type.

    Tangential axes are matched in ascending order (no reflection), fixed
    axes in ascending order with the reflection sign needed to match the
    fixed values.
    """
    if src.dim != dst.dim:
        raise ValueError("entities of different dimension")
    n = len(src.axes) + len(src.fixed)
    axis_map = [None] * n
    signs = [1] * n
    for a_src, a_dst in zip(src.axes, dst.axes):
        axis_map[a_src] = a_dst
    for (a_src, v_src), (a_dst, v_dst) in zip(src.fixed, dst.fixed):
        axis_map[a_src] = a_dst
        signs[a_src] = v_src * v_dst
    return axis_map, signs


# ---------------------------------------------------------------------------
# generator spaces: P_r, H_{d,l}, J_r and the serendipity sums
# ---------------------------------------------------------------------------

def _monomial_form_vecs(n, k, max_degree):
    out = []
    ncomp = len(form_components(n, k))
    for exp in monomials_up_to(n, max_degree):
        for ci in range(ncomp):
            out.append({(ci, exp): Q(1)})
    return out


def _linear_degree(exp, sigma):
    """Number of variables appearing linearly and not among the form axes."""
    return sum(1 for a, p in enumerate(exp) if p == 1 and a not in sigma)


def _h_space(n, k, degree, min_ldeg):
    """Monomial k-forms of exact polynomial degree with linear degree >= l."""
    sigmas = form_components(n, k)
    out = []
    if degree < 0:
        return out
    from .poly import monomial_exponents

    for exp in monomial_exponents(n, degree):
        for ci, sigma in enumerate(sigmas):
            if _linear_degree(exp, sigma) >= min_ldeg:
                out.append({(ci, exp): Q(1)})
    return out


def _kappa_vec(vec, n, k):
    return form_to_vec(koszul(vec_to_form(vec, n, k)))


def _d_vec(vec, n, k):
    return form_to_vec(exterior_derivative(vec_to_form(vec, n, k)))


def _j_space(n, k, r):
    """J_r Lambda^k: Koszul images of high-linear-degree (k+1)-form spaces."""
    if k + 1 > n or r < 1:
        return []
    out = []
    max_l = n - (k + 1)
    for l in range(1, max_l + 1):
        for vec in _h_space(n, k + 1, r + l - 1, l):
            out.append(_kappa_vec(vec, n, k + 1))
    return out


def serendipity_gens(n, k, r):
    """Generators of the (non-trimmed) cubical serendipity k-form space."""
    if r < 0:
        return []
    gens = list(_monomial_form_vecs(n, k, r))
    gens += _j_space(n, k, r)
    if k >= 1:
        gens += [_d_vec(v, n, k - 1) for v in _j_space(n, k - 1, r + 1)]
    return gens


def trimmed_serendipity_gens(n, k, r):
    """Generators of the trimmed serendipity k-form space of order r."""
    if r < 1:
        raise ValueError("order must be >= 1")
    gens = serendipity_gens(n, k, r - 1)
    if k + 1 <= n:
        gens += [_kappa_vec(v, n, k + 1) for v in _h_space(n, k + 1, r - 1, 0)]
    gens += _j_space(n, k, r)
    if k >= 1:
        gens += [_d_vec(v, n, k - 1) for v in _j_space(n, k - 1, r)]
    return gens


@lru_cache(maxsize=None)
def trimmed_space(n, k, r):
    """Reduced echelon basis of the trimmed serendipity space."""
    span = SpanBasis(key_order=_key_order)
    for g in trimmed_serendipity_gens(n, k, r):
        span.add(g)
    return span


def superlinear_degree(exp):
    """Degree ignoring variables that enter linearly."""
    return sum(p for p in exp if p >= 2)


def superlinear_monomials(n, r):
    """Exponent tuples of superlinear degree <= r (scalar serendipity)."""
    # each exponent is either 1 (linear) or contributes itself, so no
    # exponent can exceed max(r, 1)
    cap = max(r, 1)
    out = []
    for exp in product(range(cap + 1), repeat=n):
        if superlinear_degree(exp) <= r:
            out.append(exp)
    return sorted(out, key=lambda e: (sum(e), e))


# ---------------------------------------------------------------------------
# explicit 1D building blocks
# ---------------------------------------------------------------------------

def _leg(n, axis, j):
    """Legendre P_j in variable `axis`, as an exact n-variate polynomial."""
    return legendre_poly(j).as_polyn(n, axis)


def _lam(n, axis, sign):
    """Linear hat (1 + sign*x_axis) / 2."""
    return PolyN(n, {(0,) * n: Q(1, 2)}) + PolyN.variable(n, axis) * Q(sign, 2)


def _bubble(n, axis, j):
    """(1 - x_axis^2) P_j(x_axis)."""
    one = PolyN.constant(n, 1)
    x = PolyN.variable(n, axis)
    return (one - x * x) * _leg(n, axis, j)


def _graded_pairs(total):
    """(i, j) with i + j <= total, graded lexicographic."""
    return [(i, d - i) for d in range(total + 1) for i in range(d + 1)]


def _graded_triples(total):
    return [
        (i, j, d - i - j)
        for d in range(total + 1)
        for i in range(d + 1)
        for j in range(d - i + 1)
    ]


# ---------------------------------------------------------------------------
# explicit entity recipes
# ---------------------------------------------------------------------------

def _scalar_serendipity_entity(n, r, entity: Entity):
    """Entity basis of the scalar serendipity element (superlinear space)."""
    d = entity.dim
    out = []
    if d == 0:
        f = PolyN.constant(n, 1)
        for a, v in entity.fixed:
            f = f * _lam(n, a, v)
        out.append(f)
    elif d == 1:
        (t,) = entity.axes
        for i in range(r - 1):
            f = _bubble(n, t, i)
            for a, v in entity.fixed:
                f = f * _lam(n, a, v)
            out.append(f)
    elif d == 2:
        u, v = entity.axes
        for i, j in _graded_pairs(r - 4):
            f = _bubble(n, u, i) * _bubble(n, v, j)
            for a, val in entity.fixed:
                f = f * _lam(n, a, val)
            out.append(f)
    else:
        for i, j, m in _graded_triples(r - 6):
            out.append(_bubble(n, 0, i) * _bubble(n, 1, j) * _bubble(n, 2, m))
    return [PolyForm(n, 0, [f]) for f in out]


def _top_form_entity(n, r):
    """Interior basis of the L2 element: total-degree Legendre products."""
    out = []
    if n == 2:
        for i, j in _graded_pairs(r - 1):
            out.append(_leg(n, 0, i) * _leg(n, 1, j))
    else:
        for i, j, m in _graded_triples(r - 1):
            out.append(_leg(n, 0, i) * _leg(n, 1, j) * _leg(n, 2, m))
    return [PolyForm(n, n, [f]) for f in out]


def _edge_one_form_recipe(n, r, entity: Entity):
    """Edge functions of 1-form elements: P_i(t) * prod(1 + s_u x_u) dt."""
    (t,) = entity.axes
    out = []
    for i in range(r):
        f = _leg(n, t, i)
        for a, v in entity.fixed:
            one = PolyN.constant(n, 1)
            f = f * (one + PolyN.variable(n, a) * v)
        out.append(PolyForm.from_monomial(n, 1, (t,), f))
    return out


def _face_two_form_recipe(n, r, entity: Entity):
    """Face functions of 2-form elements: P_j(u) P_m(v) (1 + s w) du^dv."""
    u, v = entity.axes
    ((w, s),) = entity.fixed
    one = PolyN.constant(n, 1)
    out = []
    for j, m in _graded_pairs(r - 1):
        f = _leg(n, u, j) * _leg(n, v, m) * (one + PolyN.variable(n, w) * s)
        out.append(PolyForm.from_monomial(n, 2, (u, v), f))
    return out


# ---------------------------------------------------------------------------
# tensor-product family recipes
# ---------------------------------------------------------------------------

def _tensor_entity(n, k, r, entity: Entity):
    d = entity.dim
    out = []

    def hats(f):
        for a, v in entity.fixed:
            f = f * _lam(n, a, v)
        return f

    if k == 0:
        if d == 0:
            out.append(PolyForm(n, 0, [hats(PolyN.constant(n, 1))]))
        else:
            ranges = [range(r - 1)] * d
            for idx in product(*ranges):
                f = PolyN.constant(n, 1)
                for a, i in zip(entity.axes, idx):
                    f = f * _bubble(n, a, i)
                out.append(PolyForm(n, 0, [hats(f)]))
    elif k == n:
        for idx in product(*([range(r)] * n)):
            f = PolyN.constant(n, 1)
            for a, i in enumerate(idx):
                f = f * _leg(n, a, i)
            out.append(PolyForm(n, n, [f]))
    elif k == 1:
        if d == 1:
            (t,) = entity.axes
            for i in range(r):
                out.append(PolyForm.from_monomial(n, 1, (t,), hats(_leg(n, t, i))))
        elif d == 2:
            u, v = entity.axes
            for i in range(r):
                for j in range(r - 1):
                    out.append(PolyForm.from_monomial(
                        n, 1, (u,), hats(_leg(n, u, i) * _bubble(n, v, j))))
            for i in range(r - 1):
                for j in range(r):
                    out.append(PolyForm.from_monomial(
                        n, 1, (v,), hats(_bubble(n, u, i) * _leg(n, v, j))))
        else:
            for t in range(n):
                rest = [a for a in range(n) if a != t]
                for i in range(r):
                    for jm in product(*([range(r - 1)] * len(rest))):
                        f = _leg(n, t, i)
                        for a, j in zip(rest, jm):
                            f = f * _bubble(n, a, j)
                        out.append(PolyForm.from_monomial(n, 1, (t,), f))
    elif k == 2 and n == 3:
        if d == 2:
            u, v = entity.axes
            for i in range(r):
                for j in range(r):
                    out.append(PolyForm.from_monomial(
                        n, 2, (u, v), hats(_leg(n, u, i) * _leg(n, v, j))))
        else:
            for w in range(3):
                u, v = (a for a in range(3) if a != w)
                for i in range(r):
                    for j in range(r):
                        for m in range(r - 1):
                            f = _leg(n, u, i) * _leg(n, v, j) * _bubble(n, w, m)
                            out.append(PolyForm.from_monomial(n, 2, (u, v), f))
    return out


# ---------------------------------------------------------------------------
# generic entity split for the trimmed family
# ---------------------------------------------------------------------------

def _entity_split_generic(n, k, r, entity: Entity, space: SpanBasis, topo):
    """Basis functions associated to one entity, from the exact span.

    Finds the subspace of the element space whose k-form trace vanishes on
    every other entity of dimension <= dim(entity), computes a canonical
    orthogonal basis of its trace space on the entity, and lifts each trace
    back, orthogonally to the fully-vanishing subspace.
    """
    d = entity.dim
    basis_vecs = space.echelon_rows()
    m = len(basis_vecs)

    others = [e for dd in range(k, d + 1) for e in topo.entities[dd] if e != entity]
    constraint_rows = []
    key_index = {}
    cols = [dict() for _ in range(m)]
    for e in others:
        for i, bv in enumerate(basis_vecs):
            tr = trace_vec(bv, n, k, e)
            for key, c in tr.items():
                gk = (e, key)
                if gk not in key_index:
                    key_index[gk] = len(key_index)
                cols[i][key_index[gk]] = c
    nrows = len(key_index)
    rows = [[QZERO] * m for _ in range(nrows)]
    for i, coldict in enumerate(cols):
        for rix, c in coldict.items():
            rows[rix][i] = c
    coeff_kernel = rational_kernel(rows, m) if nrows else [
        [Q(1) if j == i else QZERO for j in range(m)] for i in range(m)
    ]

    s_vecs = []
    for coeffs in coeff_kernel:
        v = {}
        for c, bv in zip(coeffs, basis_vecs):
            if c != 0:
                v = vec_add(v, bv, c)
        if v:
            s_vecs.append(v)
    if not s_vecs:
        return []

    # traces on the entity itself
    traces = [trace_vec(v, n, k, entity) for v in s_vecs]
    tspan = SpanBasis(key_order=_key_order)
    for t in traces:
        tspan.add(t)
    if tspan.dim == 0:
        return []
    # canonical orthogonal trace basis: echelon rows, then Gram-Schmidt
    # under the exact L2 inner product of the entity cube
    echelon = tspan.echelon_rows()
    ortho = []
    for t in echelon:
        v = dict(t)
        for o in ortho:
            num = vec_l2(v, o)
            if num != 0:
                v = vec_add(v, o, -num / vec_l2(o, o))
        ortho.append(v)
    ortho = [vec_content_normalize(o) for o in ortho]

    # lift each canonical trace: solve for the trace, then remove the
    # component in the fully-vanishing subspace (L2-orthogonal lift)
    tkeys = sorted({key for t in traces for key in t}, key=_key_order)
    tindex = {key: i for i, key in enumerate(tkeys)}
    mat = [[QZERO] * len(s_vecs) for _ in tkeys]
    for j, t in enumerate(traces):
        for key, c in t.items():
            mat[tindex[key]][j] = c
    z_coeffs = rational_kernel(mat, len(s_vecs))
    z_vecs = []
    for coeffs in z_coeffs:
        v = {}
        for c, sv in zip(coeffs, s_vecs):
            if c != 0:
                v = vec_add(v, sv, c)
        if v:
            z_vecs.append(v)
    zgram = [[vec_l2(a, b) for b in z_vecs] for a in z_vecs]

    out = []
    for tau in ortho:
        rhs = [tau.get(key, QZERO) for key in tkeys]
        alpha = rational_solve(mat, rhs)
        if alpha is None:
            raise RuntimeError("entity trace not reachable; split failed")
        v0 = {}
        for c, sv in zip(alpha, s_vecs):
            if c != 0:
                v0 = vec_add(v0, sv, c)
        if z_vecs:
            beta = gram_solve(zgram, [vec_l2(v0, z) for z in z_vecs])
            for b, z in zip(beta, z_vecs):
                if b != 0:
                    v0 = vec_add(v0, z, -b)
        out.append(vec_content_normalize(v0))
    return [vec_to_form(v, n, k) for v in out]


def _check_entity_traces(forms, n, k, entity, topo):
    """Assert the defining trace property of entity-associated functions."""
    d = entity.dim
    for f in forms:
        vec = form_to_vec(f)
        for dd in range(k, d + 1):
            for e in topo.entities[dd]:
                if e == entity:
                    continue
                if trace_vec(vec, n, k, e):
                    raise RuntimeError(
                        f"basis function for {entity} has a nonzero trace on {e}"
                    )


def _trimmed_entity_sets(n, k, r):
    """Entity -> basis functions for the trimmed serendipity element."""
    topo = cell_topology(n)
    sets = {}
    if k == 0:
        for e in topo.all_entities():
            sets[e] = _scalar_serendipity_entity(n, r, e)
        return sets
    if k == n:
        cell = topo.entities[n][0]
        sets[cell] = _top_form_entity(n, r)
        return sets

    space = trimmed_space(n, k, r)
    for d in range(k, n + 1):
        ents = topo.entities[d]
        if not ents:
            continue
        if k == 1 and d == 1:
            for e in ents:
                forms = _edge_one_form_recipe(n, r, e)
                for f in forms:
                    if not space.contains(form_to_vec(f)):
                        raise RuntimeError(f"edge recipe not in span for {e}")
                _check_entity_traces(forms, n, k, e, topo)
                sets[e] = forms
        elif k == 2 and d == 2 and n == 3:
            for e in ents:
                forms = _face_two_form_recipe(n, r, e)
                for f in forms:
                    if not space.contains(form_to_vec(f)):
                        raise RuntimeError(f"face recipe not in span for {e}")
                _check_entity_traces(forms, n, k, e, topo)
                sets[e] = forms
        else:
            # split one representative exactly, transport to the others
            rep = ents[0]
            rep_forms = _entity_split_generic(n, k, r, rep, space, topo)
            sets[rep] = rep_forms
            rep_vecs = [form_to_vec(f) for f in rep_forms]
            for e in ents[1:]:
                axis_map, signs = entity_transform(rep, e)
                moved = [transform_vec(v, n, k, axis_map, signs) for v in rep_vecs]
                sets[e] = [vec_to_form(v, n, k) for v in moved]
    return sets


# ---------------------------------------------------------------------------
# element container
# ---------------------------------------------------------------------------

_MAPPINGS = ("h1", "covariant", "contravariant", "l2")


class Element:
    """A reference finite element with an entity-associated basis.

    The basis is ordered entity-major (vertices, edges, faces, interior;
    entities in :class:`CellTopology` order).  `mapping` selects the
    push-forward rule used at assembly time; it does not affect the
    reference basis itself.
    """

    def __init__(self, family, n, k, r, basis, layout, mapping, name=None):
        self.family = family
        self.n = n
        self.k = k
        self.r = r
        self.basis = tuple(basis)
        self.layout = tuple(layout)  # (Entity, start, stop) triples
        self.mapping = mapping
        self.name = name
        self._tables = {}

    @property
    def dim(self):
        return len(self.basis)

    @property
    def ncomp(self):
        return len(form_components(self.n, self.k))

    def entity_range(self, entity):
        for e, start, stop in self.layout:
            if e == entity:
                return start, stop
        raise KeyError(entity)

    def __repr__(self):
        fam = "S^-" if self.family == TRIMMED_SERENDIPITY else "Q^-"
        return f"<Element {fam}_{self.r} Lambda^{self.k}(cube_{self.n}), dim {self.dim}>"

    # -- tabulation -------------------------------------------------------

    def _dense(self, multi_index):
        """Dense float coefficient arrays for a derivative multi-index."""
        key = tuple(multi_index)
        if key not in self._tables:
            arrays = []
            for f in self.basis:
                comps = []
                for comp in f.components:
                    g = comp
                    for axis, count in enumerate(key):
                        for _ in range(count):
                            g = g.diff(axis)
                    comps.append(g.to_dense())
                arrays.append(comps)
            self._tables[key] = arrays
        return self._tables[key]


class Tabulation:
    """Basis values (and first derivatives) at a set of reference points.

    `values[mi][p, b, c]` is the c-th component of basis function b at
    point p, differentiated per the multi-index mi.
    """

    def __init__(self, values):
        self.values = values

    def __getitem__(self, mi):
        return self.values[tuple(mi)]


def tabulate(element: Element, points, deriv_order=0) -> Tabulation:
    """Evaluate all basis functions (+derivatives) at reference points."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[None, :]
    if points.shape[1] != element.n:
        raise ValueError("points have the wrong spatial dimension")
    if np.any(np.abs(points) > 1 + 1e-12):
        raise ValueError("points must lie in the reference cube [-1, 1]^n")
    n = element.n
    mis = [(0,) * n]
    if deriv_order >= 1:
        mis += [tuple(1 if a == ax else 0 for a in range(n)) for ax in range(n)]
    values = {}
    for mi in mis:
        dense = element._dense(mi)
        table = np.zeros((len(points), element.dim, element.ncomp))
        for b, comps in enumerate(dense):
            for c, arr in enumerate(comps):
                table[:, b, c] = eval_dense(arr, points)
        values[mi] = table
    return Tabulation(values)


# ---------------------------------------------------------------------------
# element construction
# ---------------------------------------------------------------------------

def _default_mapping(n, k):
    if k == 0:
        return "h1"
    if k == n:
        return "l2"
    if k == n - 1:
        return "contravariant"
    return "covariant"


@lru_cache(maxsize=None)
def _build_entity_sets(family, n, k, r):
    if family == TRIMMED_SERENDIPITY:
        return _trimmed_entity_sets(n, k, r)
    topo = cell_topology(n)
    sets = {}
    for e in topo.all_entities():
        if e.dim < k:
            continue
        forms = _tensor_entity(n, k, r, e)
        if forms:
            sets[e] = forms
    return sets


@lru_cache(maxsize=None)
def _build_element_cached(family, n, k, r, mapping):
    sets = _build_entity_sets(family, n, k, r)
    topo = cell_topology(n)
    basis = []
    layout = []
    for e in topo.all_entities():
        forms = sets.get(e, [])
        layout.append((e, len(basis), len(basis) + len(forms)))
        basis.extend(forms)
    # per-dimension counts must agree across entities of equal dimension
    for d in range(n + 1):
        counts = {len(sets.get(e, [])) for e in topo.entities[d]}
        if len(counts) > 1:
            raise RuntimeError(f"inconsistent dof counts on dimension-{d} entities")
    # global independence of the assembled basis
    span = SpanBasis(key_order=_key_order)
    for f in basis:
        if not span.add(form_to_vec(f)):
            raise RuntimeError("assembled basis is linearly dependent")
    if family == TRIMMED_SERENDIPITY and 0 < k < n:
        expected = trimmed_space(n, k, r).dim
        if len(basis) != expected:
            raise RuntimeError(
                f"entity split produced {len(basis)} functions, "
                f"space has dimension {expected}"
            )
    return Element(family, n, k, r, basis, layout, mapping)


def build_element(family, n, k, r, mapping=None) -> Element:
    """Build a reference element.

    Parameters mirror the family notation: `family` is one of
    TrimmedSerendipity / TensorProduct, `n` the spatial dimension (2 or 3),
    `k` the form degree (0..n) and `r >= 1` the order.
    """
    if family not in _FAMILIES:
        raise ValueError(f"unknown family {family!r}; use one of {_FAMILIES}")
    if n not in (2, 3):
        raise ValueError(f"unsupported dimension n={n}; only 2 and 3")
    if not (0 <= k <= n):
        raise ValueError(f"form degree k={k} out of range for n={n}")
    if not isinstance(r, int) or r < 1:
        raise ValueError(f"order r={r} must be an integer >= 1")
    if mapping is None:
        mapping = _default_mapping(n, k)
    if mapping not in _MAPPINGS:
        raise ValueError(f"unknown mapping {mapping!r}")
    return _build_element_cached(family, n, k, r, mapping)


def entity_dof_counts(element: Element):
    """Per-entity DOF count for each sub-entity dimension."""
    out = {}
    for e, start, stop in element.layout:
        d = e.dim
        count = stop - start
        if d in out and out[d] != count:
            raise RuntimeError("inconsistent per-entity counts")
        out.setdefault(d, count)
    return out


# ---------------------------------------------------------------------------
# discrete exterior derivative fit
# ---------------------------------------------------------------------------

def coboundary_fit(e_k: Element, e_k1: Element):
    """Fit d(basis of e_k) in span(basis of e_k1) by least squares.

    Returns the coefficient matrix D (rows: dim e_k, columns: dim e_k1)
    and the largest L2 residual over the fitted derivatives; a residual
    at rounding level certifies that the pair forms a discrete complex.
    """
    if e_k.k + 1 != e_k1.k:
        raise ValueError("form degrees are not consecutive")
    if (e_k.family, e_k.n, e_k.r) != (e_k1.family, e_k1.n, e_k1.r):
        raise ValueError("elements must share family, dimension and order")
    n = e_k.n
    rule = gauss_rule(n, e_k.r + 2)
    tab1 = tabulate(e_k1, rule.points)[(0,) * n]
    w = rule.weights
    gram = np.einsum("q,qic,qjc->ij", w, tab1, tab1)
    dforms = [exterior_derivative(f) for f in e_k.basis]
    dvals = np.zeros((len(rule.points), len(dforms), e_k1.ncomp))
    for b, f in enumerate(dforms):
        for c, comp in enumerate(f.components):
            dvals[:, b, c] = eval_dense(comp.to_dense(), rule.points)
    rhs = np.einsum("q,qic,qjc->ij", w, dvals, tab1)
    try:
        cond = np.linalg.cond(gram)
        if not np.isfinite(cond) or cond > 1e15:
            raise np.linalg.LinAlgError
        D = np.linalg.solve(gram, rhs.T).T
    except np.linalg.LinAlgError:
        raise ValueError("basis not linearly independent")
    # pointwise residual d(phi_i) - sum_j D_ij phi_j (forward stable)
    resid = dvals - np.einsum("ij,qjc->qic", D, tab1)
    res_sq = np.einsum("q,qic,qic->i", w, resid, resid)
    residual = float(np.sqrt(np.clip(res_sq, 0.0, None).max()))
    return D, residual


# ---------------------------------------------------------------------------
# element names (CLI identifiers)
# ---------------------------------------------------------------------------

#: name -> (family, k as function of n, mapping, order shift)
_NAME_TABLE = {
    "Lagrange": (TENSOR_PRODUCT, lambda n: 0, "h1", 0),
    "S": (TRIMMED_SERENDIPITY, lambda n: 0, "h1", 0),
    "RTCE": (TENSOR_PRODUCT, lambda n: 1 if n == 2 else None, "covariant", 0),
    "RTCF": (TENSOR_PRODUCT, lambda n: 1 if n == 2 else None, "contravariant", 0),
    "NCE": (TENSOR_PRODUCT, lambda n: 1 if n == 3 else None, "covariant", 0),
    "NCF": (TENSOR_PRODUCT, lambda n: 2 if n == 3 else None, "contravariant", 0),
    "DQ": (TENSOR_PRODUCT, lambda n: n, "l2", 1),
    "SminusCurl": (TRIMMED_SERENDIPITY, lambda n: 1, "covariant", 0),
    "SminusDiv": (TRIMMED_SERENDIPITY, lambda n: n - 1, "contravariant", 0),
    "DPC": (TRIMMED_SERENDIPITY, lambda n: n, "l2", 1),
}


def element_names():
    return tuple(_NAME_TABLE)


def element_by_name(name, n, order) -> Element:
    """Build an element from its usage name (Lagrange, NCE, SminusDiv, ...).

    For the L2 elements DQ and DPC the usage order counts polynomial
    degree, one below the order of the family member they belong to.
    """
    if name not in _NAME_TABLE:
        raise ValueError(
            f"unknown element {name!r}; valid names: {', '.join(_NAME_TABLE)}"
        )
    family, kfun, mapping, shift = _NAME_TABLE[name]
    k = kfun(n)
    if k is None:
        raise ValueError(f"element {name!r} does not exist in {n}D")
    r = order + shift
    if r < 1:
        raise ValueError(f"order {order} too low for element {name!r}")
    e = build_element(family, n, k, r, mapping=mapping)
    e2 = Element(e.family, e.n, e.k, e.r, e.basis, e.layout, mapping, name=name)
    e2._tables = e._tables
    return e2


def element_dump(element: Element) -> str:
    """Text report: every basis function, its entity and exact coefficients."""
    fam = "S^-" if element.family == TRIMMED_SERENDIPITY else "Q^-"
    lines = [
        f"{fam}_{element.r} Lambda^{element.k} on the {element.n}-cube, "
        f"dimension {element.dim}, mapping {element.mapping}",
    ]
    for e, start, stop in element.layout:
        if stop == start:
            continue
        lines.append(f"  {e!r}: {stop - start} function(s)")
        for i in range(start, stop):
            lines.append(f"    [{i}] {element.basis[i]!r}")
    return "\n".join(lines)
