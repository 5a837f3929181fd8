"""Sparse operators, preconditioned CG and a block eigensolver.

Matrix storage is delegated to scipy CSR; the solvers are written here so
that their failure modes (breakdown on indefinite input, non-convergence
with attained residuals) are explicit parts of the contract.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


class CgError(RuntimeError):
    """CG failed; carries the last relative residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NotHpdError(CgError):
    """Nonpositive curvature detected: the operator is not HPD."""


class EigenConvergenceError(RuntimeError):
    """Eigensolver failed; carries the attained relative residuals."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


@dataclass
class SparseOperator:
    """CSR matrix with a symmetry-kind tag.

    kind is one of 'real_spd', 'real_symmetric', 'hermitian'.  The matrix is
    kept in canonical CSR form (sorted, deduplicated column indices) so that
    matvec summation order is deterministic.
    """

    mat: sp.csr_matrix
    kind: str

    def __post_init__(self):
        if not sp.issparse(self.mat):
            self.mat = sp.csr_matrix(self.mat)
        self.mat = self.mat.tocsr()
        self.mat.sum_duplicates()
        self.mat.sort_indices()

    @property
    def n(self):
        return self.mat.shape[0]

    @property
    def shape(self):
        return self.mat.shape

    def hermiticity_defect(self):
        """max |A - A^H| relative to max |A|."""
        d = abs(self.mat - self.mat.getH()).max()
        scale = abs(self.mat).max()
        return d / scale if scale > 0 else 0.0

    def check_hermitian(self, tol=1e-12):
        defect = self.hermiticity_defect()
        if defect > tol:
            raise ValueError("operator violates Hermitian symmetry: "
                             "relative defect %.3e" % defect)
        return defect


def matvec(A, x):
    """y = A x with deterministic per-row summation order."""
    x = np.asarray(x)
    mat = A.mat if isinstance(A, SparseOperator) else A
    if mat.shape[1] != x.shape[0]:
        raise ValueError("dimension mismatch: %r vs %r" % (mat.shape, x.shape))
    return mat @ x


def solve_hpd(A, b, tol=1e-10, max_iter=10000, x0=None, callback=None):
    """Jacobi-preconditioned CG for Hermitian positive definite systems.

    Stops when ||Ax - b|| <= tol * ||b||.  Raises NotHpdError when a search
    direction has nonpositive curvature and CgError when max_iter is reached.
    """
    mat = A.mat if isinstance(A, SparseOperator) else A
    b = np.asarray(b)
    if mat.shape[1] != b.shape[0]:
        raise ValueError("dimension mismatch: %r vs %r" % (mat.shape, b.shape))

    norm_b = np.linalg.norm(b)
    if norm_b == 0.0:
        return np.zeros_like(b)

    diag = mat.diagonal().real
    if np.any(diag <= 0):
        raise NotHpdError("matrix has a nonpositive diagonal entry")
    inv_diag = 1.0 / diag

    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=b.dtype)
    r = b - mat @ x
    z = inv_diag * r
    p = z.copy()
    rz = np.vdot(r, z).real
    for it in range(max_iter):
        res = np.linalg.norm(r)
        if callback is not None:
            callback(it, x, res)
        if res <= tol * norm_b:
            return x
        Ap = mat @ p
        curv = np.vdot(p, Ap).real
        if curv <= 0.0:
            raise NotHpdError(
                "nonpositive curvature (p^H A p = %.3e): matrix is not "
                "positive definite" % curv, residual=res / norm_b)
        alpha = rz / curv
        x = x + alpha * p
        r = r - alpha * Ap
        z = inv_diag * r
        rz_new = np.vdot(r, z).real
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise CgError("CG did not converge in %d iterations "
                  "(relative residual %.3e)" % (max_iter, res / norm_b),
                  residual=res / norm_b)


# ---------------------------------------------------------------------------
# block eigensolver (LOBPCG-style: inverse-iteration preconditioning plus
# Rayleigh-Ritz over [X, W, P])


def _b_orthonormalize(S, apply_B):
    """Return (S, BS) with S^T B S = I; drops near-dependent columns."""
    BS = apply_B(S)
    G = S.T @ BS
    G = 0.5 * (G + G.T)
    w, V = np.linalg.eigh(G)
    keep = w > max(w[-1], 0.0) * 1e-12
    T = V[:, keep] / np.sqrt(w[keep])
    return S @ T, BS @ T


def _loose_cg(mat, tol, max_iter):
    """Column-wise loosely converged Jacobi-CG used as a preconditioner."""
    diag = mat.diagonal().real
    inv_diag = np.where(diag > 0, 1.0 / np.where(diag > 0, diag, 1.0), 1.0)

    def apply(R):
        out = np.empty_like(R)
        for j in range(R.shape[1]):
            b = R[:, j]
            nb = np.linalg.norm(b)
            if nb == 0:
                out[:, j] = 0.0
                continue
            x = np.zeros_like(b)
            r = b.copy()
            z = inv_diag * r
            p = z.copy()
            rz = r @ z
            for _ in range(max_iter):
                Ap = mat @ p
                curv = p @ Ap
                if curv <= 0:
                    break
                alpha = rz / curv
                x += alpha * p
                r -= alpha * Ap
                if np.linalg.norm(r) <= tol * nb:
                    break
                z = inv_diag * r
                rz_new = r @ z
                p = z + (rz_new / rz) * p
                rz = rz_new
            out[:, j] = x
        return out

    return apply


def lowest_eigenpairs(A, B, m, tol=1e-8, max_iter=300, block_extra=5,
                      precond=None, x0=None, seed=0):
    """m smallest eigenpairs of the generalized problem A v = mu B v.

    A real symmetric (SparseOperator, CSR matrix or callable on blocks),
    B real SPD.  Returns (values, vectors) with ascending eigenvalues and
    B-orthonormal columns.  Each returned pair satisfies
    ||A v - mu B v|| <= tol * (||A v|| + |mu| ||B v||).

    The iteration is block inverse iteration accelerated by Rayleigh-Ritz
    over the subspace [X, preconditioned residuals, previous step], with
    B-orthonormalization of the whole basis each sweep.  The initial block
    is pseudo-random from a fixed seed; columns of `x0` seed the block.
    """
    if isinstance(A, SparseOperator):
        A = A.mat
    if isinstance(B, SparseOperator):
        B = B.mat
    apply_A = A if callable(A) and not sp.issparse(A) else (lambda X: A @ X)
    apply_B = lambda X: B @ X  # noqa: E731
    n = B.shape[0]
    p = min(m + block_extra, n)

    if precond is None:
        if sp.issparse(A):
            precond = _loose_cg(A, tol=1e-2, max_iter=60)
        else:
            precond = lambda R: R  # noqa: E731

    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    if x0 is not None:
        x0 = np.atleast_2d(np.asarray(x0, dtype=float).T).T
        ncols = min(x0.shape[1], p)
        X[:, :ncols] = x0[:, :ncols]

    X, BX = _b_orthonormalize(X, apply_B)
    AX = apply_A(X)
    G = X.T @ AX
    theta, C = np.linalg.eigh(0.5 * (G + G.T))
    X, AX, BX = X @ C, AX @ C, BX @ C
    P = None

    def residual_ratios(AX, BX, theta):
        Rv = AX - BX * theta
        num = np.linalg.norm(Rv, axis=0)
        den = (np.linalg.norm(AX, axis=0)
               + np.abs(theta) * np.linalg.norm(BX, axis=0))
        den = np.where(den > 0, den, 1.0)
        return Rv, num / den

    def column_normalized(M):
        nrm = np.linalg.norm(M, axis=0)
        good = nrm > 0
        return M[:, good] / nrm[good]

    ratios = None
    for _ in range(max_iter):
        Rv, ratios = residual_ratios(AX, BX, theta)
        if np.all(ratios[:m] <= tol):
            break
        # normalize the correction blocks so the Gram cutoff never drops a
        # small-but-essential direction once residuals get tiny
        W = column_normalized(precond(Rv))
        parts = [X, W] if P is None else [X, W, column_normalized(P)]
        S = np.hstack(parts)
        S, BS = _b_orthonormalize(S, apply_B)
        AS = apply_A(S)
        G = S.T @ AS
        theta_all, C = np.linalg.eigh(0.5 * (G + G.T))
        C = C[:, :p]
        theta = theta_all[:p]
        X_new = S @ C
        AX = AS @ C
        BX = BS @ C
        # keep the component of the update outside the previous block
        P = X_new - X @ (BX.T @ X).T
        X = X_new
    else:
        _, ratios = residual_ratios(AX, BX, theta)
        if not np.all(ratios[:m] <= tol):
            raise EigenConvergenceError(
                "eigensolver stalled after %d sweeps; residuals %s"
                % (max_iter, np.array2string(ratios[:m], precision=2)),
                residuals=ratios[:m])

    order = np.argsort(theta[:m])
    vals = theta[:m][order]
    vecs = X[:, :m][:, order]
    return vals, vecs
