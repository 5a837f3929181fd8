"""P1/P2 Lagrange spaces with eliminated Dirichlet boundary, quadrature, fields.

The reference triangle has vertices (0,0), (1,0), (0,1) with barycentric
coordinates (1-xi-eta, xi, eta).  On the structured grid only two element
geometries occur (below/above the cell diagonal), so basis tables are
precomputed per geometry and reused for every element.
"""

from dataclasses import dataclass

import numpy as np

from .mesh import MeshGrid  # noqa: F401  (re-exported type for callers)

# ---------------------------------------------------------------------------
# quadrature on the reference triangle


@dataclass(frozen=True)
class QuadratureRule:
    """Symmetric quadrature rule in barycentric coordinates.

    Weights sum to one; integrals are ``area * sum(w_q * f(x_q))``.
    """

    name: str
    degree: int
    points: np.ndarray   # (n_q, 3) barycentric
    weights: np.ndarray  # (n_q,)

    @property
    def n_points(self):
        return self.points.shape[0]


def _orbit1():
    return [(1 / 3, 1 / 3, 1 / 3)]


def _orbit3(a):
    b = 1.0 - 2.0 * a
    return [(b, a, a), (a, b, a), (a, a, b)]


def _orbit6(a, b):
    c = 1.0 - a - b
    return [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]


def _make_rule(name, degree, orbits):
    pts, wts = [], []
    for w, orbit in orbits:
        pts.extend(orbit)
        wts.extend([w] * len(orbit))
    points = np.array(pts, dtype=float)
    weights = np.array(wts, dtype=float)
    weights = weights / weights.sum()  # remove last-digit drift of the tables
    points.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(name, degree, points, weights)


# Standard symmetric rules with positive weights (Dunavant tables).
_RULES = {
    1: _make_rule("centroid", 1, [(1.0, _orbit1())]),
    2: _make_rule("edge-midpoint", 2, [(1 / 3, _orbit3(0.5))]),
    4: _make_rule("dunavant-4", 4, [
        (0.223381589678011, _orbit3(0.445948490915965)),
        (0.109951743655322, _orbit3(0.091576213509771)),
    ]),
    6: _make_rule("dunavant-6", 6, [
        (0.116786275726379, _orbit3(0.249286745170910)),
        (0.050844906370207, _orbit3(0.063089014491502)),
        (0.082851075618374, _orbit6(0.053145049844817, 0.310352451033784)),
    ]),
    8: _make_rule("dunavant-8", 8, [
        (0.144315607677787, _orbit1()),
        (0.095091634267285, _orbit3(0.459292588292723)),
        (0.103217370534718, _orbit3(0.170569307751760)),
        (0.032458497623198, _orbit3(0.050547228317031)),
        (0.027230314174435, _orbit6(0.008394777409958, 0.263112829634638)),
    ]),
}


def triangle_rule(degree):
    """Smallest tabulated rule exact for polynomials up to `degree`."""
    for d in sorted(_RULES):
        if d >= degree:
            return _RULES[d]
    raise ValueError("no tabulated rule of degree >= %d" % degree)


def duffy_rule(n):
    """Tensor Gauss rule collapsed onto the triangle; exact to degree 2n-2.

    Used as an independent integration oracle (n=8 gives the 64-point rule).
    """
    t, w = np.polynomial.legendre.leggauss(n)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    u, v = np.meshgrid(t, t, indexing="ij")
    wu, wv = np.meshgrid(w, w, indexing="ij")
    xi = u.ravel()
    eta = (v * (1.0 - u)).ravel()
    wts = (wu * wv * (1.0 - u)).ravel()  # Jacobian of the collapsing map
    points = np.column_stack([1.0 - xi - eta, xi, eta])
    return QuadratureRule("duffy-%d" % n, 2 * n - 2, points, wts / wts.sum())


# ---------------------------------------------------------------------------
# reference basis functions


def p1_basis(points):
    """P1 values and reference gradients at barycentric `points`.

    Returns (vals, grads) with shapes (3, n_q) and (3, n_q, 2).
    """
    lam = np.asarray(points, dtype=float).T  # (3, n_q)
    vals = lam.copy()
    g = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    grads = np.repeat(g[:, None, :], lam.shape[1], axis=1)
    return vals, grads


def p2_basis(points):
    """P2 values and reference gradients; dofs are vertices then edge midpoints
    (01, 12, 20)."""
    lam = np.asarray(points, dtype=float).T
    l0, l1, l2 = lam
    vals = np.stack([
        l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
        4 * l0 * l1, 4 * l1 * l2, 4 * l2 * l0,
    ])
    # dlam/d(xi,eta) rows for (l0, l1, l2)
    dl = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    n_q = lam.shape[1]
    grads = np.empty((6, n_q, 2))
    for d in range(2):
        grads[0, :, d] = (4 * l0 - 1) * dl[0, d]
        grads[1, :, d] = (4 * l1 - 1) * dl[1, d]
        grads[2, :, d] = (4 * l2 - 1) * dl[2, d]
        grads[3, :, d] = 4 * (l0 * dl[1, d] + l1 * dl[0, d])
        grads[4, :, d] = 4 * (l1 * dl[2, d] + l2 * dl[1, d])
        grads[5, :, d] = 4 * (l2 * dl[0, d] + l0 * dl[2, d])
    return vals, grads


# ---------------------------------------------------------------------------
# finite element space


class FeSpace:
    """Pk Lagrange space (k in {1, 2}) with homogeneous Dirichlet conditions.

    Boundary dofs are eliminated: fields carry coefficients for the
    (k*N_h - 1)^2 interior Lagrange nodes only.  The space is immutable after
    construction and caches basis tables per quadrature rule.
    """

    def __init__(self, mesh, order):
        if order not in (1, 2):
            raise ValueError("polynomial order must be 1 or 2, got %r" % order)
        self.mesh = mesh
        self.order = k = order

        n = mesh.subdivisions
        R = mesh.half_width
        m = k * n  # dof grid resolution per side
        side = np.linspace(-R, R, m + 1)
        xg, yg = np.meshgrid(side, side, indexing="xy")
        self.dof_coords = np.column_stack([xg.ravel(), yg.ravel()])

        jx, jy = np.meshgrid(np.arange(m + 1), np.arange(m + 1), indexing="xy")
        interior = ((jx > 0) & (jx < m) & (jy > 0) & (jy < m)).ravel()
        self.interior_mask = interior
        self.interior_index = np.full(interior.size, -1, dtype=np.int64)
        self.interior_index[interior] = np.arange(interior.sum())
        self.interior_dofs = np.flatnonzero(interior)
        self.n_interior = int(interior.sum())
        self.n_dofs = interior.size

        self.element_dof_table = self._build_dof_table()
        n_el = self.element_dof_table.shape[0]
        self.elem_type = np.tile(np.array([0, 1], dtype=np.int64), n_el // 2)

        # lower-left corner of the cell containing each element
        cx, cy = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
        corners = np.column_stack([side[::k][:-1][cx.ravel()],
                                   side[::k][:-1][cy.ravel()]]) \
            if k > 1 else np.column_stack([side[cx.ravel()], side[cy.ravel()]])
        self.cell_corner = np.repeat(corners, 2, axis=0)

        h = mesh.mesh_size
        # affine maps of the two element geometries: columns of J
        self._jac = np.array([[[h, h], [0.0, h]],    # below diagonal
                              [[h, 0.0], [h, h]]])   # above diagonal
        self._jac_inv_t = np.array([np.linalg.inv(j).T for j in self._jac])
        self.elem_area = 0.5 * h * h
        self._tables = {}

    # -- construction helpers ------------------------------------------------

    def _build_dof_table(self):
        n = self.mesh.subdivisions
        k = self.order
        m = k * n + 1

        def dof(gx, gy):
            return gy * m + gx

        cx, cy = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
        cx = cx.ravel()
        cy = cy.ravel()
        ax, ay = k * cx, k * cy
        if k == 1:
            lower = np.stack([dof(ax, ay), dof(ax + 1, ay),
                              dof(ax + 1, ay + 1)], axis=1)
            upper = np.stack([dof(ax, ay), dof(ax + 1, ay + 1),
                              dof(ax, ay + 1)], axis=1)
        else:
            # vertices a, b, c, d of the cell on the refined dof grid
            lower = np.stack([
                dof(ax, ay), dof(ax + 2, ay), dof(ax + 2, ay + 2),
                dof(ax + 1, ay),          # midpoint ab
                dof(ax + 2, ay + 1),      # midpoint bc
                dof(ax + 1, ay + 1),      # midpoint ca (diagonal)
            ], axis=1)
            upper = np.stack([
                dof(ax, ay), dof(ax + 2, ay + 2), dof(ax, ay + 2),
                dof(ax + 1, ay + 1),      # midpoint ac (diagonal)
                dof(ax + 1, ay + 2),      # midpoint cd
                dof(ax, ay + 1),          # midpoint da
            ], axis=1)
        table = np.empty((2 * n * n, lower.shape[1]), dtype=np.int64)
        table[0::2] = lower
        table[1::2] = upper
        table.setflags(write=False)
        return table

    @property
    def n_local_dofs(self):
        return 3 if self.order == 1 else 6

    def reference_basis(self, points):
        return p1_basis(points) if self.order == 1 else p2_basis(points)

    @property
    def quadrature(self):
        """Default assembly rule: degree 6 for P1, degree 8 for P2."""
        return triangle_rule(6 if self.order == 1 else 8)

    def tables(self, rule=None):
        """Basis values, physical gradients and quad coordinates for `rule`.

        Returns a dict with
          phi   : (n_loc, n_q) reference values (same for both geometries),
          grad  : (2, n_loc, n_q, 2) physical gradients per geometry,
          xq    : (n_el, n_q, 2) quadrature points in physical coordinates,
          w     : (n_q,) weights, area : scalar element area.
        """
        rule = rule or self.quadrature
        key = (rule.name, rule.n_points)
        if key in self._tables:
            return self._tables[key]
        vals, ref_grads = self.reference_basis(rule.points)
        grads = np.einsum("tab,lqb->tlqa", self._jac_inv_t, ref_grads)
        xi_eta = rule.points[:, 1:]  # reference coordinates of the points
        offsets = np.einsum("tab,qb->tqa", self._jac, xi_eta)
        xq = self.cell_corner[:, None, :] + offsets[self.elem_type]
        tab = {"phi": vals, "grad": grads, "xq": xq,
               "w": rule.weights, "area": self.elem_area, "rule": rule}
        self._tables[key] = tab
        return tab

    # -- coefficient handling -------------------------------------------------

    def full_vector(self, interior_coeffs):
        """Expand interior coefficients to all dofs, zero on the boundary."""
        full = np.zeros(self.n_dofs, dtype=complex)
        full[self.interior_dofs] = interior_coeffs
        return full

    def element_values(self, full_coeffs, rule=None):
        """Field values at the quadrature points of every element.

        Returns an (n_el, n_q) complex array.
        """
        tab = self.tables(rule)
        local = full_coeffs[self.element_dof_table]  # (n_el, n_loc)
        return local @ tab["phi"]


@dataclass
class FeField:
    """Discrete wavefunction: complex coefficients on the interior dofs."""

    space: FeSpace
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != (self.space.n_interior,):
            raise ValueError("expected %d coefficients, got shape %r"
                             % (self.space.n_interior, self.coeffs.shape))
        if not np.all(np.isfinite(self.coeffs)):
            raise ValueError("field coefficients contain non-finite entries")

    def full(self):
        return self.space.full_vector(self.coeffs)

    def copy(self):
        return FeField(self.space, self.coeffs.copy())


def interpolate(space, f):
    """Nodal interpolation of a pointwise function onto the interior dofs.

    `f` must accept numpy arrays (x1, x2) and return complex values.
    Boundary dofs are dropped (implicitly zero).
    """
    pts = space.dof_coords[space.interior_dofs]
    vals = np.asarray(f(pts[:, 0], pts[:, 1]), dtype=complex)
    vals = np.broadcast_to(vals, (pts.shape[0],)).copy()
    bad = ~np.isfinite(vals)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise ValueError("non-finite value at dof (%g, %g)"
                         % (pts[i, 0], pts[i, 1]))
    return FeField(space, vals)


def evaluate(field, element, barycentric):
    """Value and physical gradient of the field inside one element.

    `barycentric` are three coordinates summing to one.
    """
    lam = np.asarray(barycentric, dtype=float)
    if abs(lam.sum() - 1.0) > 1e-12:
        raise ValueError("barycentric coordinates must sum to 1")
    space = field.space
    vals, ref_grads = space.reference_basis(lam[None, :])
    full = field.full()
    local = full[space.element_dof_table[element]]
    t = space.elem_type[element]
    value = complex(local @ vals[:, 0])
    grad = np.einsum("ab,lb->la", space._jac_inv_t[t],
                     ref_grads[:, 0, :]).T @ local
    return value, grad


def prolongate(field, fine_space):
    """Exact transfer of a field to a nested finer space.

    Evaluates the coarse piecewise polynomial at the fine interior dof
    coordinates; exact because fine elements subdivide coarse ones.
    """
    coarse = field.space
    ratio_ok = (fine_space.mesh.half_width == coarse.mesh.half_width
                and fine_space.mesh.subdivisions % coarse.mesh.subdivisions == 0)
    if not ratio_ok:
        raise ValueError("target space is not a nested refinement")
    pts = fine_space.dof_coords[fine_space.interior_dofs]
    vals = evaluate_at_points(field, pts)
    return FeField(fine_space, vals)


def evaluate_at_points(field, pts):
    """Field values at arbitrary points of the closed square (vectorized)."""
    space = field.space
    mesh = space.mesh
    n = mesh.subdivisions
    h = mesh.mesh_size
    R = mesh.half_width

    s = (pts[:, 0] + R) / h
    t = (pts[:, 1] + R) / h
    cx = np.clip(np.floor(s).astype(np.int64), 0, n - 1)
    cy = np.clip(np.floor(t).astype(np.int64), 0, n - 1)
    ls = s - cx
    lt = t - cy
    upper = lt > ls  # above the cell diagonal
    elem = 2 * (cy * n + cx) + upper

    # reference coordinates per geometry (continuity makes ties harmless)
    xi = np.where(upper, ls, ls - lt)
    eta = np.where(upper, lt - ls, lt)
    lam = np.column_stack([1.0 - xi - eta, xi, eta])
    vals, _ = space.reference_basis(lam)          # (n_loc, n_pts)
    local = field.full()[space.element_dof_table[elem]]  # (n_pts, n_loc)
    return np.einsum("pl,lp->p", local, vals)


# ---------------------------------------------------------------------------
# plain-text field dumps


def write_field(field, path, summary=None):
    """Dump a field: header `k N_h R`, one line `x1 x2 re im` per global dof,
    optionally followed by a one-line summary."""
    space = field.space
    full = field.full()
    with open(path, "w") as fh:
        fh.write("%d %d %.17g\n" % (space.order, space.mesh.subdivisions,
                                    space.mesh.half_width))
        for (x, y), v in zip(space.dof_coords, full):
            fh.write("%.17g %.17g %.17g %.17g\n" % (x, y, v.real, v.imag))
        if summary is not None:
            fh.write(" ".join("%.17g" % s for s in summary) + "\n")


def read_field_dump(path):
    """Parse a field dump.

    Returns (order, subdivisions, half_width, full_values, summary) where
    summary is a tuple of floats or None.
    """
    with open(path) as fh:
        lines = [ln for ln in (l.strip() for l in fh) if ln]
    head = lines[0].split()
    if len(head) != 3:
        raise ValueError("malformed dump header: %r" % lines[0])
    order, subdiv, half_width = int(head[0]), int(head[1]), float(head[2])
    n_dofs = (order * subdiv + 1) ** 2
    body = lines[1:1 + n_dofs]
    if len(body) < n_dofs:
        raise ValueError("dump too short: expected %d dof lines, found %d"
                         % (n_dofs, len(body)))
    data = np.array([[float(tok) for tok in ln.split()] for ln in body])
    if data.shape[1] != 4:
        raise ValueError("malformed dof line in dump")
    full = data[:, 2] + 1j * data[:, 3]
    rest = lines[1 + n_dofs:]
    summary = tuple(float(tok) for tok in rest[0].split()) if rest else None
    return order, subdiv, half_width, full, summary


def field_from_full(space, full):
    """Restrict a full dof vector to the interior coefficients of `space`."""
    full = np.asarray(full, dtype=complex)
    if full.shape != (space.n_dofs,):
        raise ValueError("expected %d dof values, got %d"
                         % (space.n_dofs, full.size))
    return FeField(space, full[space.interior_dofs])
