"""Energy-decreasing Riemannian gradient method on the discrete L2-sphere.

Each step preconditions the eigenvalue residual with the current linearized
operator A_R + beta W(u) (an adaptive Sobolev metric), projects onto the
tangent space of the sphere and backtracks until the energy decreases.  The
backtracking-with-regrowth step control is this package's choice; the
stopping rule (consecutive energy difference below `energy_tol`) is part of
the problem protocol.
"""

from dataclasses import dataclass, field

import numpy as np

from .fespace import FeField, interpolate
from .model import energy, rayleigh_lambda
from .sparse_linalg import solve_hpd


class IterationLimitError(RuntimeError):
    """Gradient iteration hit max_iter; carries the energy history."""

    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


class StepUnderflowError(RuntimeError):
    """Backtracking reduced the step below any useful size."""


@dataclass
class SolverConfig:
    energy_tol: float = 1e-10
    max_iter: int = 20000
    initial_step: float = 1.0
    backtrack_factor: float = 0.5
    growth_factor: float = 1.1
    cg_tol: float = 1e-10
    cg_max_iter: int = 50000
    seed: int = 0

    def __post_init__(self):
        if self.energy_tol <= 0:
            raise ValueError("energy_tol must be positive")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if not 1.0 < self.growth_factor < 2.0:
            raise ValueError("growth_factor must lie in (1, 2)")


@dataclass
class GroundStateResult:
    u: FeField
    lam: float
    energy: float
    iterations: int
    energy_history: list
    final_step: float
    residual_norm: float
    a4_feasible: bool = True
    flagged: bool = field(default=False)  # set by studies on anomalous levels


def normalize(u, M):
    """Scale a field to unit L2 norm (phases are never touched)."""
    nrm = np.sqrt(np.vdot(u.coeffs, M.mat @ u.coeffs).real)
    if nrm <= 0.0:
        raise ValueError("cannot normalize a zero field")
    return FeField(u.space, u.coeffs / nrm)


def initial_guess(space, params, M):
    """Normalized vortex ansatz  (Omega/sqrt(pi)) (x1 + i x2) exp(-|x|^2/2).

    For Omega = 0 the ansatz degenerates to zero, so the rotation-free
    Gaussian  exp(-|x|^2/2)  is interpolated instead (documented fallback).
    """
    om = params.omega
    if om != 0.0:
        def f(x, y):
            return (om / np.sqrt(np.pi)) * (x + 1j * y) \
                * np.exp(-0.5 * (x ** 2 + y ** 2))
    else:
        def f(x, y):
            return np.exp(-0.5 * (x ** 2 + y ** 2)) + 0j
    return normalize(interpolate(space, f), M)


def solve_ground_state(ops, config, start):
    """Minimize the energy over the discrete sphere from `start`.

    `start` must have unit mass norm.  Returns a GroundStateResult whose
    energy history is nonincreasing; raises IterationLimitError or
    StepUnderflowError on failure.
    """
    M = ops.mass.mat
    u = FeField(ops.space, start.coeffs.copy())
    e_curr = energy(ops, u)
    history = [e_curr]
    tau = config.initial_step
    warm_g = None
    prev_rnorm = None

    def renormalized(coeffs):
        nrm = np.sqrt(np.vdot(coeffs, M @ coeffs).real)
        return FeField(ops.space, coeffs / nrm)

    for it in range(1, config.max_iter + 1):
        A_u = ops.gpe_matrix(u)
        Au = A_u @ u.coeffs
        lam = np.vdot(u.coeffs, Au).real
        r = Au - lam * (M @ u.coeffs)

        # warm start from the previous gradient, rescaled to the shrinking
        # residual (the residual direction stabilizes near convergence)
        rnorm = np.linalg.norm(r)
        x0 = None
        if warm_g is not None and prev_rnorm and prev_rnorm > 0:
            x0 = warm_g * (rnorm / prev_rnorm)
        g = solve_hpd(A_u, r, tol=config.cg_tol,
                      max_iter=config.cg_max_iter, x0=x0)
        warm_g = g
        prev_rnorm = rnorm
        d = g - np.vdot(u.coeffs, M @ g).real * u.coeffs

        while True:
            cand = renormalized(u.coeffs - tau * d)
            e_new = energy(ops, cand)
            if e_new <= e_curr:
                break
            tau *= config.backtrack_factor
            if tau < 1e-12:
                raise StepUnderflowError(
                    "backtracking underflow at iteration %d: stationary or "
                    "nonsmooth point" % it)
        u = cand
        tau = min(tau * config.growth_factor, 1.0)
        history.append(e_new)
        done = abs(e_new - e_curr) < config.energy_tol
        e_curr = e_new
        if done:
            lam = rayleigh_lambda(ops, u)
            res = ops.gpe_matrix(u) @ u.coeffs - lam * (M @ u.coeffs)
            return GroundStateResult(
                u=u, lam=lam, energy=e_curr, iterations=it,
                energy_history=history, final_step=tau,
                residual_norm=float(np.linalg.norm(res)),
                a4_feasible=ops.params.centrifugal_feasible(ops.space))

    raise IterationLimitError(
        "no convergence within %d iterations (last energy %.12g)"
        % (config.max_iter, e_curr), history)


def write_result(result, path):
    """Field dump plus the one-line summary `lambda energy iterations residual`."""
    from .fespace import write_field
    write_field(result.u, path,
                summary=(result.lam, result.energy,
                         float(result.iterations), result.residual_norm))
