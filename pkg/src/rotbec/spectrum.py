"""Real-linear second derivative of the energy and its lowest spectrum.

The second derivative carries a  2 beta Re(u conj(v)) u  term that is only
real-linear, so the operator is represented on real coordinates (real and
imaginary parts stacked).  A complex-Hermitian part H embeds as the blocks
[[Re H, -Im H], [Im H, Re H]]; the coupling term is assembled directly in
real coordinates from densities built out of Re(u) and Im(u).
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .assembly import assemble_coefficient_mass
from .model import m_inner
from .sparse_linalg import (SparseOperator, lowest_eigenpairs, _loose_cg)


@dataclass
class RealLinearOperator:
    """2n x 2n real-symmetric matrix acting on stacked (Re, Im) coefficients."""

    op: SparseOperator
    mass: SparseOperator  # block-diagonal real embedding of the L2 mass
    n: int                # number of complex dofs

    def matvec(self, x):
        return self.op.mat @ x


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # real 2n columns, mass-orthonormal
    overlap_iu: float
    gap: float
    quasi_isolated: bool


def embed(v):
    """Stack a complex coefficient vector as (Re, Im)."""
    return np.concatenate([v.real, v.imag])


def unembed(x):
    n = x.size // 2
    return x[:n] + 1j * x[n:]


def complex_block_embedding(H):
    """Real representation [[Re H, -Im H], [Im H, Re H]] of a Hermitian H."""
    mat = H.mat if isinstance(H, SparseOperator) else H
    re = mat.real.tocsr()
    im = mat.imag.tocsr()
    return sp.bmat([[re, -im], [im, re]], format="csr")


def build_second_derivative_matrix(ops, u):
    """Assemble E''(u) on real coordinates (symmetric, positive definite).

    The quadratic form of the result equals Re <E''(u) v, v>; the coupling
    term uses the space's high-order quadrature rule.
    """
    space = ops.space
    H = ops.gpe_matrix(u)
    base = complex_block_embedding(SparseOperator(H, "hermitian"))

    beta = ops.params.beta
    if beta != 0.0:
        vals = space.element_values(u.full())
        ur, ui = vals.real, vals.imag
        k_rr = assemble_coefficient_mass(space, 2.0 * beta * ur * ur).mat
        k_ri = assemble_coefficient_mass(space, 2.0 * beta * ur * ui).mat
        k_ii = assemble_coefficient_mass(space, 2.0 * beta * ui * ui).mat
        base = base + sp.bmat([[k_rr, k_ri], [k_ri, k_ii]], format="csr")

    mass2n = sp.block_diag([ops.mass.mat, ops.mass.mat], format="csr")
    return RealLinearOperator(op=SparseOperator(base, "real_symmetric"),
                              mass=SparseOperator(mass2n, "real_symmetric"),
                              n=space.n_interior)


def lowest_spectrum(ops, u, count=15, tol=1e-8, tol_rel=1e-6, max_iter=400,
                    seed=0):
    """The `count` smallest eigenvalues of  E''(u) v = mu M v.

    `u` should be a converged discrete ground state with eigenvalue lambda;
    then the bottom eigenvalue equals lambda with eigenvector i u.  The
    block is seeded with i u (a known near-eigenvector) plus fixed-seed
    random columns, so results are reproducible.
    """
    rep = build_second_derivative_matrix(ops, u)
    lam = np.vdot(u.coeffs, ops.gpe_matrix(u) @ u.coeffs).real \
        / np.vdot(u.coeffs, ops.mass.mat @ u.coeffs).real

    x0 = embed(1j * u.coeffs)[:, None]
    vals, vecs = lowest_eigenpairs(rep.op, rep.mass, count, tol=tol,
                                   max_iter=max_iter, x0=x0, seed=seed)

    v1 = unembed(vecs[:, 0])
    overlap = abs(m_inner(ops.mass, v1, 1j * u.coeffs))
    gap = float(vals[1] - vals[0]) if count >= 2 else np.inf
    quasi = (abs(vals[0] - lam) <= tol_rel * abs(lam)
             and overlap >= 0.999
             and gap > 10.0 * tol * max(abs(vals[0]), 1.0))
    return SpectrumResult(eigenvalues=vals, eigenvectors=vecs,
                          overlap_iu=float(overlap), gap=gap,
                          quasi_isolated=bool(quasi))


def deflation_projector(rep, u):
    """Mass-orthogonal projector removing span{u, iu} in real coordinates.

    Returns (project, Q, BQ) where project(x) = x - Q (BQ)^T x; the two
    directions are mass-orthogonal by construction and get normalized here.
    """
    q1 = embed(u.coeffs)
    q2 = embed(1j * u.coeffs)
    BQ = np.column_stack([rep.mass.mat @ q1, rep.mass.mat @ q2])
    Q = np.column_stack([q1, q2])
    nrm = np.sqrt(np.einsum("ij,ij->j", Q, BQ))
    Q /= nrm
    BQ /= nrm

    def project(x):
        return x - Q @ (BQ.T @ x)

    return project, Q, BQ


def check_tangent_inf_sup(ops, u, lam, tol=1e-8, max_iter=400, seed=0,
                          x0=None):
    """Smallest eigenvalue of E''(u) - lambda M on the complement of {u, iu}.

    The two directions are removed by the mass-orthogonal projection P (and
    its transpose on the other side, keeping the operator symmetric) and
    pushed to the top of the spectrum by a shift; a positive return value
    certifies that the restricted operator is positive definite.  `x0`
    columns (for instance eigenvectors of the undeflated problem) seed the
    iteration.
    """
    rep = build_second_derivative_matrix(ops, u)
    A = rep.op.mat
    B = rep.mass.mat
    project, Q, BQ = deflation_projector(rep, u)
    sigma = 10.0 * max(abs(lam), 1.0)

    def apply_deflated(X):
        PX = project(X)
        Y = A @ PX - lam * (B @ PX)
        Y = Y - BQ @ (Q.T @ Y)  # transpose of the projector
        return Y + sigma * (BQ @ (BQ.T @ X))

    # precondition with the (undeflated) HPD second-derivative matrix
    precond = _loose_cg(A, tol=1e-2, max_iter=60)
    if x0 is not None:
        x0 = project(np.asarray(x0, dtype=float))
    vals, vecs = lowest_eigenpairs(apply_deflated, B, 2, tol=tol,
                                   max_iter=max_iter, precond=precond,
                                   seed=seed, x0=x0)
    return float(vals[0])


def write_spectrum_report(result, lam, path):
    """Plain-text report: `index eigenvalue` rows, then the summary line
    `lambda mu1 gap overlap_iu quasi_isolated`."""
    with open(path, "w") as fh:
        for i, mu in enumerate(result.eigenvalues, start=1):
            fh.write("%d %.12g\n" % (i, mu))
        fh.write("%.12g %.12g %.12g %.12g %d\n"
                 % (lam, result.eigenvalues[0], result.gap,
                    result.overlap_iu, int(result.quasi_isolated)))
