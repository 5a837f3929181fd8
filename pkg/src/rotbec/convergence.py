"""Mesh-convergence studies: nested level chains, aligned errors, EOC tables.

Levels are solved coarse-to-fine; every level after the coarsest warm-starts
from the prolongated solution of the previous one, which keeps all levels in
the same minimizer basin (vortex configurations are near-degenerate).  The
self-computed reference lives one nested level above the finest study level.
"""

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .assembly import ModelParams, assemble_stiffness
from .fespace import FeSpace, prolongate
from .mesh import build_uniform_mesh
from .model import build_operators, energy, error_norms, phase_align
from .solver import (SolverConfig, initial_guess, normalize,
                     solve_ground_state)


@dataclass
class StudyConfig:
    params: ModelParams
    order: int = 1
    coarse_levels: tuple = (16, 32, 64, 128)
    reference_level: int = 256
    solver: SolverConfig = field(default_factory=SolverConfig)
    out_path: str = None

    def __post_init__(self):
        levels = tuple(int(n) for n in self.coarse_levels)
        if not levels:
            raise ValueError("coarse_levels must not be empty")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError("coarse_levels must be strictly increasing")
        base = levels[0]
        for n in levels + (self.reference_level,):
            if n % base or (n // base) & (n // base - 1):
                raise ValueError("levels must be the coarsest level times a "
                                 "power of two (got %r)" % (levels,))
        if self.reference_level < levels[-1]:
            raise ValueError("reference level must not be coarser than the "
                             "finest study level")
        self.coarse_levels = levels


@dataclass
class TableRow:
    h: float
    errL2: float
    errH1: float
    errEnergy: float
    errLambda: float
    flagged: bool = False


@dataclass
class ConvergenceTable:
    rows: list
    eoc: dict  # column name -> list of EOC values between consecutive rows

    def column(self, name):
        return [getattr(r, name) for r in self.rows]


def compute_eoc(h_list, err_list):
    """Experimental orders log(e_i / e_{i+1}) / log(h_i / h_{i+1}).

    Zero errors make the order undefined; those entries are returned as NaN.
    """
    h = list(h_list)
    e = list(err_list)
    if any(x <= 0 for x in h) or any(hi >= hj for hi, hj in zip(h[1:], h)):
        raise ValueError("mesh sizes must be positive and strictly decreasing")
    if any(x < 0 for x in e):
        raise ValueError("errors must be nonnegative")
    out = []
    for i in range(len(h) - 1):
        if e[i] == 0.0 or e[i + 1] == 0.0:
            out.append(math.nan)
        else:
            out.append(math.log(e[i] / e[i + 1]) / math.log(h[i] / h[i + 1]))
    return out


def fit_rate(h_list, err_list):
    """Least-squares slope of log(err) against log(h).

    This is the slope one reads off a log-log error plot; unlike pairwise
    EOCs it is not inflated at the finest level by the finite reference.
    """
    h = np.log(np.asarray(h_list, dtype=float))
    e = np.log(np.asarray(err_list, dtype=float))
    if h.size < 2:
        raise ValueError("need at least two levels to fit a rate")
    return float(np.polyfit(h, e, 1)[0])


def solve_chain(params, order, levels, solver_cfg):
    """Solve a nested sequence of levels, warm-starting each from the last.

    Returns a list of (space, ops, GroundStateResult), coarsest first.
    """
    out = []
    prev = None
    for n in levels:
        space = FeSpace(build_uniform_mesh(params.half_width, n), order)
        ops = build_operators(space, params)
        if prev is None:
            start = initial_guess(space, params, ops.mass)
        else:
            start = normalize(prolongate(prev, space), ops.mass)
        result = solve_ground_state(ops, solver_cfg, start)
        out.append((space, ops, result))
        prev = result.u
    return out


def run_study(config, keep_fields=False):
    """Solve all levels plus the reference and tabulate aligned errors.

    Writes the CSV table and a JSON metadata sidecar when `out_path` is set.
    With keep_fields=True returns (table, chain) so callers can reuse the
    solved levels; the chain is coarsest-first with the reference last.
    """
    levels = tuple(config.coarse_levels)
    all_levels = levels + ((config.reference_level,)
                           if config.reference_level != levels[-1] else ())
    chain = solve_chain(config.params, config.order, all_levels, config.solver)

    ref_space, ref_ops, ref_result = chain[-1]
    ref_stiff = assemble_stiffness(ref_space)
    u_ref = ref_result.u

    rows = []
    seminorms = []
    signed_energy = []
    density_errors = []
    density_corrs = []
    M = ref_ops.mass.mat
    ref_density = np.abs(u_ref.coeffs) ** 2
    ref_density_norm = math.sqrt(ref_density @ (M @ ref_density))
    for (space, ops, result), n in zip(chain, all_levels):
        if n == config.reference_level and config.reference_level not in levels:
            break
        u_fine = (prolongate(result.u, ref_space)
                  if space is not ref_space else result.u)
        aligned_ref, _ = phase_align(u_fine, u_ref, ref_ops.mass)
        l2, h1 = error_norms(u_fine, aligned_ref,
                             fine_mass=ref_ops.mass, fine_stiffness=ref_stiff)
        de = result.energy - ref_result.energy
        d_h = np.abs(u_fine.coeffs) ** 2
        d_norm = math.sqrt(max(d_h @ (M @ d_h), 0.0))
        corr = (d_h @ (M @ ref_density)) / (d_norm * ref_density_norm)
        diff = d_h - ref_density
        dens_err = math.sqrt(max(diff @ (M @ diff), 0.0)) / ref_density_norm
        # a weak density correlation means the level converged to a distinct
        # near-degenerate vortex minimizer (anomalous density error that no
        # refinement can shrink); flag it, never average it away
        rows.append(TableRow(h=space.mesh.mesh_size, errL2=l2, errH1=h1,
                             errEnergy=abs(de),
                             errLambda=abs(result.lam - ref_result.lam),
                             flagged=bool(corr < 0.99)))
        seminorms.append(math.sqrt(max(h1 * h1 - l2 * l2, 0.0)))
        signed_energy.append(de)
        density_errors.append(dens_err)
        density_corrs.append(corr)

    h_list = [r.h for r in rows]
    eoc = {}
    for name in ("errL2", "errH1", "errEnergy", "errLambda"):
        try:
            eoc[name] = compute_eoc(h_list, [getattr(r, name) for r in rows])
        except ValueError:
            eoc[name] = [math.nan] * (len(rows) - 1)
    table = ConvergenceTable(rows=rows, eoc=eoc)

    if config.out_path:
        write_table(table, config.out_path)
        meta = {
            "params": asdict(config.params),
            "order": config.order,
            "coarse_levels": list(levels),
            "reference_level": config.reference_level,
            "solver": asdict(config.solver),
            "warm_start": "each level starts from the prolongated "
                          "next-coarser solution; coarsest from the vortex "
                          "ansatz; reference solved the same way",
            "reference": {"energy": ref_result.energy,
                          "lambda": ref_result.lam,
                          "iterations": ref_result.iterations,
                          "residual": ref_result.residual_norm},
            "signed_energy_error": signed_energy,
            "h1_seminorm_error": seminorms,
            "relative_density_error": density_errors,
            "density_correlation": density_corrs,
            "flagged_levels": [r.h for r in rows if r.flagged],
        }
        with open(config.out_path + ".meta.json", "w") as fh:
            json.dump(meta, fh, indent=2)

    if keep_fields:
        return table, chain
    return table


def write_table(table, path):
    """CSV dump: data rows first, then EOC rows prefixed with `eoc`."""
    with open(path, "w") as fh:
        fh.write("h,errL2,errH1,errEnergy,errLambda\n")
        for r in table.rows:
            fh.write("%.12g,%.12g,%.12g,%.12g,%.12g\n"
                     % (r.h, r.errL2, r.errH1, r.errEnergy, r.errLambda))
        n_eoc = len(table.rows) - 1
        for i in range(n_eoc):
            fh.write("eoc,%.6g,%.6g,%.6g,%.6g\n"
                     % (table.eoc["errL2"][i], table.eoc["errH1"][i],
                        table.eoc["errEnergy"][i], table.eoc["errLambda"][i]))
