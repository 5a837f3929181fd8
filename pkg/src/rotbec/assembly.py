"""Assembly of the mass, rotation-aware energy forms and weighted masses.

All forms are integrated with the space's default rule (degree 6 for P1,
degree 8 for P2) so that the covariant-gradient form and the direct
angular-momentum form agree entrywise up to rounding: their integrands are
identical pointwise, hence at every shared quadrature node.  Element
contributions are merged through canonical CSR summation, which makes the
assembled value arrays bit-reproducible.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .sparse_linalg import SparseOperator


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the rotating condensate model.

    beta >= 0 is the repulsion strength, omega the angular velocity and
    (gamma_x, gamma_y) the trapping frequencies of the harmonic potential
    V(x) = (gamma_x^2 x1^2 + gamma_y^2 x2^2) / 2.
    """

    beta: float
    omega: float
    gamma_x: float
    gamma_y: float
    half_width: float

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be nonnegative, got %r" % self.beta)
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")

    def potential(self, x, y):
        return 0.5 * (self.gamma_x ** 2 * x ** 2 + self.gamma_y ** 2 * y ** 2)

    def modified_potential(self, x, y):
        """V - Omega^2 |x|^2 / 4, the rotation-reduced trapping potential."""
        return self.potential(x, y) - 0.25 * self.omega ** 2 * (x ** 2 + y ** 2)

    def centrifugal_feasible(self, space):
        """True if V - Omega^2 |x|^2 / 4 >= 0 at every quadrature point.

        This is the computable sign condition under which the rotation form
        stays positive definite (trapping beats the centrifugal pull).
        """
        xq = space.tables()["xq"]
        vr = self.modified_potential(xq[..., 0], xq[..., 1])
        return bool(vr.min() >= 0.0)


def _scatter_indices(space, interior_only):
    """Cached COO index arrays for element-matrix accumulation."""
    key = "_scatter_interior" if interior_only else "_scatter_full"
    cached = getattr(space, key, None)
    if cached is not None:
        return cached
    edt = space.element_dof_table
    n_loc = edt.shape[1]
    rows = np.repeat(edt[:, :, None], n_loc, axis=2).ravel()
    cols = np.repeat(edt[:, None, :], n_loc, axis=1).ravel()
    if interior_only:
        keep = space.interior_mask[rows] & space.interior_mask[cols]
        cached = (space.interior_index[rows[keep]],
                  space.interior_index[cols[keep]], keep, space.n_interior)
    else:
        cached = (rows, cols, None, space.n_dofs)
    setattr(space, key, cached)
    return cached


def _scatter(space, local, interior_only=True, kind="hermitian"):
    """Accumulate (n_el, n_loc, n_loc) element matrices into a global CSR."""
    rows, cols, keep, n = _scatter_indices(space, interior_only)
    data = local.ravel()
    if keep is not None:
        data = data[keep]
    mat = sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()
    if np.iscomplexobj(mat.data) and kind.startswith("real"):
        mat = mat.real
    return SparseOperator(mat, kind)


def _coef_local(space, coef, rule=None):
    """Element matrices of the weighted mass  int c(x) phi_i phi_j dx."""
    tab = space.tables(rule)
    phi = tab["phi"]
    wq = tab["w"] * tab["area"]
    return np.einsum("eq,q,iq,jq->eij", coef, wq, phi, phi, optimize=True)


def assemble_coefficient_mass(space, coef_at_quad, rule=None,
                              interior_only=True, kind="real_symmetric"):
    """Weighted mass matrix for per-element quadrature-point weights."""
    local = _coef_local(space, coef_at_quad, rule)
    return _scatter(space, local, interior_only, kind)


def assemble_mass(space, rule=None, interior_only=True):
    """L2 mass matrix (real SPD)."""
    tab = space.tables(rule)
    ones = np.ones(tab["xq"].shape[:2])
    return assemble_coefficient_mass(space, ones, rule, interior_only,
                                     kind="real_spd")


def assemble_stiffness(space, rule=None, interior_only=True):
    """Dirichlet stiffness matrix  int grad(phi_i) . grad(phi_j) dx."""
    tab = space.tables(rule)
    wq = tab["w"] * tab["area"]
    per_type = np.einsum("q,tiqa,tjqa->tij", wq, tab["grad"], tab["grad"])
    local = per_type[space.elem_type]
    return _scatter(space, local, interior_only, kind="real_spd")


def _rotation_coupling(space, rule=None):
    """T[e, i, j] = int phi_j * (R . grad phi_i) dx with R(x) = (x2, -x1)."""
    tab = space.tables(rule)
    xq = tab["xq"]
    wq = tab["w"] * tab["area"]
    grad = tab["grad"][space.elem_type]  # (n_el, n_loc, n_q, 2)
    r_dot_grad = (xq[:, None, :, 1] * grad[..., 0]
                  - xq[:, None, :, 0] * grad[..., 1])
    return np.einsum("q,eiq,jq->eij", wq, r_dot_grad, tab["phi"],
                     optimize=True)


def assemble_r_form(space, params, rule=None, interior_only=True):
    """Covariant-gradient inner product matrix (complex Hermitian PD).

    Entries are  int grad_R(phi_j) . conj(grad_R(phi_i)) + V_R phi_j phi_i dx
    with grad_R(w) = grad(w) + i (Omega/2) R(x) w and
    V_R = V - Omega^2 |x|^2 / 4.  Warns (and proceeds) when the centrifugal
    feasibility check fails, in which case definiteness may be lost.
    """
    if not params.centrifugal_feasible(space):
        warnings.warn("trapping potential does not dominate the centrifugal "
                      "term; the rotation form may be indefinite",
                      stacklevel=2)
    tab = space.tables(rule)
    xq = tab["xq"]
    x, y = xq[..., 0], xq[..., 1]
    # expanding |grad_R w|^2 gives the plain gradient part, the squared
    # rotation field (Omega^2/4)|x|^2, and the antisymmetric coupling
    coef = (params.modified_potential(x, y)
            + 0.25 * params.omega ** 2 * (x ** 2 + y ** 2))
    stiff = assemble_stiffness(space, rule, interior_only)
    vmass = assemble_coefficient_mass(space, coef, rule, interior_only)
    T = _rotation_coupling(space, rule)
    cross = _scatter(space,
                     (0.5j * params.omega) * (T - T.transpose(0, 2, 1)),
                     interior_only, kind="hermitian")
    mat = (stiff.mat + vmass.mat).astype(complex) + cross.mat
    return SparseOperator(mat, "hermitian")


def assemble_direct_form(space, params, rule=None, interior_only=True):
    """Energy form assembled directly from the angular-momentum operator.

    Entries are  int grad(phi_j) . grad(phi_i) + V phi_j phi_i
    - Omega conj(phi_i) L3 phi_j dx with L3 = -i (x1 d2 - x2 d1).  The
    rotation block is symmetrized at the element level, (L + L^H)/2, to make
    the assembled matrix exactly Hermitian.
    """
    tab = space.tables(rule)
    xq = tab["xq"]
    coef = params.potential(xq[..., 0], xq[..., 1])
    stiff = assemble_stiffness(space, rule, interior_only)
    vmass = assemble_coefficient_mass(space, coef, rule, interior_only)
    T = _rotation_coupling(space, rule)
    one_sided = (-1j * params.omega) * T.transpose(0, 2, 1)
    sym = 0.5 * (one_sided + np.conj(one_sided.transpose(0, 2, 1)))
    rot = _scatter(space, sym, interior_only, kind="hermitian")
    mat = (stiff.mat + vmass.mat).astype(complex) + rot.mat
    return SparseOperator(mat, "hermitian")


def assemble_weighted_mass(space, density, rule=None, interior_only=True):
    """Density-weighted mass  int |u|^2 phi_j phi_i dx for an FeField u."""
    vals = space.element_values(density.full(), rule or space.quadrature)
    weight = np.abs(vals) ** 2
    return assemble_coefficient_mass(space, weight, rule, interior_only,
                                     kind="real_symmetric")
