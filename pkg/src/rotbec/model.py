"""Energy, Frechet derivatives and error quantities on discrete fields.

Inner products follow the real-part convention throughout (the energy lives
on a real-linear space); genuinely complex inner products appear only in
phase alignment and in the error decomposition, where the phase matters.
"""

from dataclasses import dataclass, field

import numpy as np

from .assembly import (assemble_mass, assemble_stiffness, assemble_r_form,
                       assemble_weighted_mass, ModelParams)
from .fespace import FeField, FeSpace, prolongate
from .sparse_linalg import SparseOperator


@dataclass
class GpeOperators:
    """Assembled operators of one model on one space.

    Caches the density-weighted mass of the most recent iterate; the cache is
    keyed by the identity of the coefficient array that produced it.
    """

    space: FeSpace
    params: ModelParams
    mass: SparseOperator
    r_form: SparseOperator
    _cache_key: object = field(default=None, repr=False)
    _cache_w: SparseOperator = field(default=None, repr=False)

    def weighted_mass(self, u):
        if self._cache_key is not u.coeffs:
            self._cache_w = assemble_weighted_mass(self.space, u)
            self._cache_key = u.coeffs
        return self._cache_w

    def gpe_matrix(self, u):
        """CSR matrix of the u-linearized operator A_R + beta W(u)."""
        if self.params.beta == 0.0:
            return self.r_form.mat
        return self.r_form.mat + self.params.beta * self.weighted_mass(u).mat


def build_operators(space, params):
    """Assemble mass and rotation form for a model on a space."""
    return GpeOperators(space=space, params=params,
                        mass=assemble_mass(space),
                        r_form=assemble_r_form(space, params))


# ---------------------------------------------------------------------------
# basic quantities


def m_inner(M, a, b):
    """Complex L2 inner product  int a conj(b) dx  of coefficient vectors."""
    return np.vdot(b, M.mat @ a)


def m_norm(M, a):
    return np.sqrt(max(np.vdot(a, M.mat @ a).real, 0.0))


def quartic_integral(space, w):
    """int |w|^4 dx by quadrature of the evaluated field."""
    tab = space.tables()
    vals = space.element_values(w.full())
    dens = (vals.real ** 2 + vals.imag ** 2) ** 2
    return float(tab["area"] * (dens @ tab["w"]).sum())


def energy(ops, w):
    """Gross-Pitaevskii energy  E(w) = ||w||_R^2 / 2 + (beta/4) int |w|^4."""
    z = np.vdot(w.coeffs, ops.r_form.mat @ w.coeffs)
    quart = quartic_integral(ops.space, w)
    value = 0.5 * z.real + 0.25 * ops.params.beta * quart
    if abs(z.imag) > 1e-12 * max(abs(value), 1e-300):
        raise ArithmeticError("rotation form returned a non-real energy "
                              "(imaginary residue %.3e)" % z.imag)
    return value


def apply_gpe_operator(ops, u, v):
    """(A_R + beta W(u)) v as a coefficient vector."""
    return ops.gpe_matrix(u) @ v.coeffs


def rayleigh_lambda(ops, u):
    """Rayleigh quotient  Re(u^H A_u u) / (u^H M u).

    For a unit-norm field this equals 2 E(u) + (beta/2) int |u|^4; the
    identity is asserted to relative 1e-12.
    """
    denom = np.vdot(u.coeffs, ops.mass.mat @ u.coeffs).real
    if denom <= 0.0:
        raise ValueError("cannot form a Rayleigh quotient of a zero field")
    lam = np.vdot(u.coeffs, apply_gpe_operator(ops, u, u)).real / denom
    if abs(denom - 1.0) <= 1e-10:
        quart = quartic_integral(ops.space, u)
        alt = 2.0 * energy(ops, u) + 0.5 * ops.params.beta * quart
        if abs(lam - alt) > 1e-12 * max(abs(lam), 1.0):
            raise ArithmeticError(
                "eigenvalue identity violated: %.16g vs %.16g" % (lam, alt))
    return lam


def apply_second_derivative(ops, u, v):
    """Second derivative action  E''(u) v = A_u v + 2 beta (Re(u conj(v)) u, .).

    The extra term makes the map real-linear but not complex-linear.
    """
    out = apply_gpe_operator(ops, u, v)
    beta = ops.params.beta
    if beta == 0.0:
        return out
    space = ops.space
    tab = space.tables()
    uq = space.element_values(u.full())
    vq = space.element_values(v.full())
    factor = (2.0 * beta * tab["area"]) * tab["w"] \
        * (uq.real * vq.real + uq.imag * vq.imag) * uq
    t_local = np.einsum("eq,iq->ei", factor, tab["phi"], optimize=True)
    t_full = np.zeros(space.n_dofs, dtype=complex)
    np.add.at(t_full, space.element_dof_table.ravel(), t_local.ravel())
    return out + t_full[space.interior_dofs]


# ---------------------------------------------------------------------------
# phase alignment and error measurement


def phase_align(u_h, u_ref, M):
    """Rotate u_ref so that  int u_h conj(u_ref) dx  is real nonnegative.

    Returns (aligned copy of u_ref, theta).
    """
    a = m_inner(M, u_h.coeffs, u_ref.coeffs)
    if abs(a) < 1e-12:
        raise ValueError("orthogonal states, alignment undefined")
    theta = float(np.angle(a))
    aligned = FeField(u_ref.space, np.exp(1j * theta) * u_ref.coeffs)
    return aligned, theta


def error_norms(u_h, u_ref, fine_mass=None, fine_stiffness=None):
    """L2 and full H1 errors of a coarse field against a finer reference.

    The coarse field is prolongated exactly (nested nodal evaluation); the
    phases must be aligned beforehand.
    """
    fine = u_ref.space
    if fine_mass is None:
        fine_mass = assemble_mass(fine)
    if fine_stiffness is None:
        fine_stiffness = assemble_stiffness(fine)
    e = (prolongate(u_h, fine).coeffs if u_h.space is not fine
         else u_h.coeffs.copy())
    e -= u_ref.coeffs
    l2sq = np.vdot(e, fine_mass.mat @ e).real
    h1sq = l2sq + np.vdot(e, fine_stiffness.mat @ e).real
    return np.sqrt(max(l2sq, 0.0)), np.sqrt(max(h1sq, 0.0))


def error_decomposition(u_h, u, M):
    """Split u_h - u into  c * u + v  with v complex-orthogonal to u.

    Both fields must be unit-norm and in the same phase.  Returns
    (c, ||v||_{L2}) and asserts the structure of the decomposition including
    the bound |c| <= ||u_h - u||^2.
    """
    a = m_inner(M, u_h.coeffs, u.coeffs)
    if abs(a.imag) > 1e-10:
        raise ArithmeticError("fields are not in the same phase: "
                              "Im <u_h, u> = %.3e" % a.imag)
    v = u_h.coeffs - a * u.coeffs
    v_norm = m_norm(M, v)
    c = a.real - 1.0
    expected = np.sqrt(max(1.0 - v_norm ** 2, 0.0))
    if abs(a.real - expected) > 1e-10:
        raise ArithmeticError("decomposition inconsistent: Re(a) = %.12g but "
                              "sqrt(1 - ||v||^2) = %.12g" % (a.real, expected))
    diff = u_h.coeffs - u.coeffs
    err_sq = np.vdot(diff, M.mat @ diff).real
    if abs(c) > err_sq + 1e-12:
        raise ArithmeticError("coefficient bound violated: |c| = %.3e > "
                              "||u_h - u||^2 = %.3e" % (abs(c), err_sq))
    return c, v_norm


def eigenvalue_identity_check(lambda_h, u_h, lam, u, ops):
    """Residual of the eigenvalue error identity.

    With e = u_h - u (both fields on the reference space, aligned, unit
    norm), the identity states

        lambda_h - lambda = <(A_u - lambda I) e, e>
                            + beta Re int (|u_h|^2 - |u|^2) |u_h|^2 dx.

    Returns |LHS - RHS|; vanishes up to the solver residuals of the pairs.
    """
    e = u_h.coeffs - u.coeffs
    a_e = apply_gpe_operator(ops, u, FeField(ops.space, e))
    quad1 = np.vdot(e, a_e).real - lam * np.vdot(e, ops.mass.mat @ e).real

    space = ops.space
    tab = space.tables()
    dh = np.abs(space.element_values(u_h.full())) ** 2
    d0 = np.abs(space.element_values(u.full())) ** 2
    quad2 = ops.params.beta * float(
        tab["area"] * (((dh - d0) * dh) @ tab["w"]).sum())

    return abs((lambda_h - lam) - (quad1 + quad2))
