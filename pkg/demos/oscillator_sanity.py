"""Sanity run on an exactly solvable case.

With no interaction and no rotation, the problem reduces to the linear
harmonic oscillator -Laplace + |x|^2 / 2 whose ground eigenvalue is known
in closed form: sqrt(2) in two dimensions.  The script solves a short mesh
sequence and shows second-order convergence of the computed eigenvalue.
"""

import time

import numpy as np

from rotbec import (ModelParams, SolverConfig, build_operators,
                    build_uniform_mesh, initial_guess, solve_ground_state,
                    FeSpace, normalize, prolongate)

params = ModelParams(beta=0.0, omega=0.0, gamma_x=1.0, gamma_y=1.0,
                     half_width=8.0)
exact = np.sqrt(2.0)
print("2D oscillator, exact ground eigenvalue sqrt(2) = %.6f" % exact)
print("%6s %10s %12s %12s %8s" % ("N_h", "h", "lambda_h", "error", "eoc"))

prev_field = None
prev_err = None
for n in (16, 32, 64, 128):
    space = FeSpace(build_uniform_mesh(params.half_width, n), 1)
    ops = build_operators(space, params)
    if prev_field is None:
        start = initial_guess(space, params, ops.mass)
    else:
        start = normalize(prolongate(prev_field, space), ops.mass)
    t0 = time.time()
    result = solve_ground_state(ops, SolverConfig(), start)
    err = abs(result.lam - exact)
    eoc = "" if prev_err is None else "%.2f" % np.log2(prev_err / err)
    print("%6d %10.4f %12.8f %12.3e %8s   (%d iters, %.1fs)"
          % (n, space.mesh.mesh_size, result.lam, err, eoc,
             result.iterations, time.time() - t0))
    prev_field = result.u
    prev_err = err
