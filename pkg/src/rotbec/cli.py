"""Command line entry point: `rotbec solve|spectrum|convergence`.

Configuration is a flat text file of `key = value` lines (# starts a
comment).  Unknown keys are rejected and all validation errors are reported
at once, because a silently ignored typo in omega or gamma would change the
physics.  Exit codes: 0 success, 2 config error, 3 data mismatch, 4 solver
failure.
"""

import argparse
import json
import sys
from dataclasses import dataclass, field

from .assembly import ModelParams
from .convergence import StudyConfig, run_study
from .fespace import FeSpace, field_from_full, read_field_dump
from .mesh import build_uniform_mesh
from .model import build_operators, rayleigh_lambda
from .solver import (SolverConfig, IterationLimitError, StepUnderflowError,
                     initial_guess, solve_ground_state, write_result)
from .spectrum import lowest_spectrum, write_spectrum_report
from .sparse_linalg import CgError, EigenConvergenceError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_SOLVER = 4

# key -> (type, default); None means the key is required
KEYS = {
    "R": (float, None),
    "N_h": (int, None),
    "k": (int, 1),
    "beta": (float, None),
    "omega": (float, None),
    "gamma_x": (float, None),
    "gamma_y": (float, None),
    "energy_tol": (float, 1e-10),
    "max_iter": (int, 20000),
    "cg_tol": (float, 1e-10),
    "seed": (int, 0),
    "spectrum_count": (int, 15),
    "spectrum_tol": (float, 1e-8),
    "study_levels": (str, ""),
    "study_reference": (int, 0),
}


class ConfigError(ValueError):
    def __init__(self, problems):
        super().__init__("; ".join(problems))
        self.problems = list(problems)


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name)

    def model_params(self):
        return ModelParams(beta=self.values["beta"],
                           omega=self.values["omega"],
                           gamma_x=self.values["gamma_x"],
                           gamma_y=self.values["gamma_y"],
                           half_width=self.values["R"])

    def solver_config(self):
        return SolverConfig(energy_tol=self.values["energy_tol"],
                            max_iter=self.values["max_iter"],
                            cg_tol=self.values["cg_tol"],
                            seed=self.values["seed"])


def parse_config(path, required):
    """Parse and validate a flat config file; collects every violation."""
    problems = []
    raw = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(["cannot read config: %s" % exc])
    for lineno, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            problems.append("line %d: expected `key = value`" % lineno)
            continue
        key, value = (part.strip() for part in text.split("=", 1))
        if key not in KEYS:
            problems.append("line %d: unknown key %r" % (lineno, key))
            continue
        if key in raw:
            problems.append("line %d: duplicate key %r" % (lineno, key))
            continue
        raw[key] = value

    values = {}
    for key, (typ, default) in KEYS.items():
        if key in raw:
            try:
                values[key] = typ(raw[key])
            except ValueError:
                problems.append("key %r: cannot parse %r as %s"
                                % (key, raw[key], typ.__name__))
        elif default is not None or key not in required:
            values[key] = default
        else:
            problems.append("missing required key %r" % key)

    cfg = RunConfig(values)
    problems.extend(validate(cfg, required))
    if problems:
        raise ConfigError(problems)
    return cfg


def validate(cfg, required):
    problems = []
    v = cfg.values
    if "R" in required and v.get("R") is not None and v["R"] <= 0:
        problems.append("R must be positive")
    if "N_h" in required and v.get("N_h") is not None and v["N_h"] < 2:
        problems.append("N_h must be at least 2")
    if v.get("k") not in (1, 2):
        problems.append("k must be 1 or 2")
    if v.get("beta") is not None and v["beta"] < 0:
        problems.append("beta must be nonnegative")
    if v.get("energy_tol") is not None and v["energy_tol"] <= 0:
        problems.append("energy_tol must be positive")
    if v.get("max_iter") is not None and v["max_iter"] < 1:
        problems.append("max_iter must be at least 1")
    if v.get("spectrum_count") is not None and v["spectrum_count"] < 1:
        problems.append("spectrum_count must be at least 1")
    if "study_levels" in required:
        try:
            levels = parse_levels(v.get("study_levels", ""))
            if not levels:
                problems.append("study_levels must list at least one level")
        except ValueError as exc:
            problems.append(str(exc))
        else:
            if levels and v.get("study_reference", 0) < max(levels):
                problems.append("study_reference must not be coarser than "
                                "the finest study level")
    return problems


def parse_levels(text):
    items = [tok for tok in text.replace(",", " ").split() if tok]
    try:
        return [int(tok) for tok in items]
    except ValueError:
        raise ValueError("study_levels must be a comma-separated list of "
                         "integers, got %r" % text)


def _write_sidecar(out_path, cfg, extra=None):
    """Echo the full configuration next to an output for reproducibility."""
    payload = {"config": cfg.values}
    if extra:
        payload.update(extra)
    with open(out_path + ".meta.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)


def _a4_banner(params, space, verbose):
    ok = params.centrifugal_feasible(space)
    if not ok:
        print("warning: centrifugal term dominates the trap "
              "(feasibility check failed); proceeding", file=sys.stderr)
    elif verbose:
        print("centrifugal feasibility check passed", file=sys.stderr)
    return ok


def cmd_solve(config_path, out_path, verbose=False):
    try:
        cfg = parse_config(config_path, required={
            "R", "N_h", "beta", "omega", "gamma_x", "gamma_y"})
    except ConfigError as exc:
        for p in exc.problems:
            print("config error: %s" % p, file=sys.stderr)
        return EXIT_CONFIG

    params = cfg.model_params()
    space = FeSpace(build_uniform_mesh(cfg.R, cfg.N_h), cfg.k)
    ops = build_operators(space, params)
    a4_ok = _a4_banner(params, space, verbose)
    try:
        result = solve_ground_state(ops, cfg.solver_config(),
                                    initial_guess(space, params, ops.mass))
    except (IterationLimitError, StepUnderflowError, CgError) as exc:
        print("solver failure: %s" % exc, file=sys.stderr)
        return EXIT_SOLVER
    write_result(result, out_path)
    _write_sidecar(out_path, cfg, {"a4_feasible": a4_ok,
                                   "lambda": result.lam,
                                   "energy": result.energy,
                                   "iterations": result.iterations,
                                   "residual": result.residual_norm})
    print("lambda=%.10g energy=%.10g iterations=%d residual=%.3e a4_ok=%d"
          % (result.lam, result.energy, result.iterations,
             result.residual_norm, int(a4_ok)))
    return EXIT_OK


def cmd_spectrum(config_path, state_path, out_path, verbose=False):
    try:
        cfg = parse_config(config_path, required={
            "R", "N_h", "beta", "omega", "gamma_x", "gamma_y"})
    except ConfigError as exc:
        for p in exc.problems:
            print("config error: %s" % p, file=sys.stderr)
        return EXIT_CONFIG

    try:
        order, subdiv, half_width, full, _ = read_field_dump(state_path)
    except (OSError, ValueError) as exc:
        print("cannot read state dump: %s" % exc, file=sys.stderr)
        return EXIT_DATA
    if (order, subdiv) != (cfg.k, cfg.N_h) or half_width != cfg.R:
        print("state dump header (k=%d N_h=%d R=%g) does not match config "
              "(k=%d N_h=%d R=%g)" % (order, subdiv, half_width,
                                      cfg.k, cfg.N_h, cfg.R),
              file=sys.stderr)
        return EXIT_DATA

    params = cfg.model_params()
    space = FeSpace(build_uniform_mesh(cfg.R, cfg.N_h), cfg.k)
    expected = space.n_dofs
    if full.size != expected:
        print("state dump has %d dof values, expected %d"
              % (full.size, expected), file=sys.stderr)
        return EXIT_DATA
    ops = build_operators(space, params)
    _a4_banner(params, space, verbose)
    u = field_from_full(space, full)
    try:
        result = lowest_spectrum(ops, u, count=cfg.spectrum_count,
                                 tol=cfg.spectrum_tol, seed=cfg.seed)
    except EigenConvergenceError as exc:
        print("eigensolver failure: %s" % exc, file=sys.stderr)
        return EXIT_SOLVER
    lam = rayleigh_lambda(ops, u)
    write_spectrum_report(result, lam, out_path)
    _write_sidecar(out_path, cfg, {"lambda": lam,
                                   "quasi_isolated": result.quasi_isolated})
    print("lambda=%.10g mu1=%.10g gap=%.4e overlap_iu=%.6f quasi_isolated=%d"
          % (lam, result.eigenvalues[0], result.gap, result.overlap_iu,
             int(result.quasi_isolated)))
    return EXIT_OK


def cmd_convergence(config_path, out_path, verbose=False):
    try:
        cfg = parse_config(config_path, required={
            "R", "beta", "omega", "gamma_x", "gamma_y",
            "study_levels", "study_reference"})
    except ConfigError as exc:
        for p in exc.problems:
            print("config error: %s" % p, file=sys.stderr)
        return EXIT_CONFIG

    params = cfg.model_params()
    try:
        study = StudyConfig(params=params, order=cfg.k,
                            coarse_levels=tuple(parse_levels(cfg.study_levels)),
                            reference_level=cfg.study_reference,
                            solver=cfg.solver_config(),
                            out_path=out_path)
    except ValueError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    try:
        table = run_study(study)
    except (IterationLimitError, StepUnderflowError, CgError) as exc:
        print("solver failure: %s" % exc, file=sys.stderr)
        return EXIT_SOLVER
    if verbose:
        for r in table.rows:
            print("h=%.6g errL2=%.4e errH1=%.4e errE=%.4e errLam=%.4e%s"
                  % (r.h, r.errL2, r.errH1, r.errEnergy, r.errLambda,
                     " [flagged]" if r.flagged else ""))
    print("wrote %s (levels: %d)" % (out_path, len(table.rows)))
    return EXIT_OK


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="rotbec",
        description="Ground states of rotating Bose-Einstein condensates")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="compute a discrete ground state")
    p_spec = sub.add_parser("spectrum",
                            help="lowest spectrum of the second derivative")
    p_conv = sub.add_parser("convergence", help="run a mesh-convergence study")
    for p in (p_solve, p_spec, p_conv):
        p.add_argument("--config", required=True, help="flat config file")
        p.add_argument("--out", required=True, help="output path")
        p.add_argument("--verbose", action="store_true")
    p_spec.add_argument("--state", required=True,
                        help="ground-state field dump from `solve`")

    args = parser.parse_args(argv)
    if args.command == "solve":
        return cmd_solve(args.config, args.out, args.verbose)
    if args.command == "spectrum":
        return cmd_spectrum(args.config, args.state, args.out, args.verbose)
    return cmd_convergence(args.config, args.out, args.verbose)


if __name__ == "__main__":
    sys.exit(main())
