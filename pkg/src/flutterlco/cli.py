"""Command line front end of the limit-cycle solver suite.

One invocation runs one analysis mode on one case file:

    flutterlco --case case.json --mode refined --out results/

Modes
-----
flutter-curve
    Aerodynamic damping ratio per nodal diameter at the sticking and the
    slipping frequency; negative values mark flutter-prone waves.
conventional
    Energy method with the sticking mode imposed over the amplitude grid.
refined
    Energy method along the nonlinear-mode backbone, limit cycles
    polished by exact periodic solves.
coupled
    Alternating fluid/structure harmonic-balance solve, initialized from
    the refined method's first limit cycle.
verify
    The built-in verification suite (optionally a subset via
    ``--criteria 1,3,9``); no case file needed.

Exit status: 0 on success, 2 for invalid arguments or case files, 3 when
a solver fails to converge, 4 when a result violates an invariant (the
recomputed energy balance at any reported limit cycle, or a failed
verification check).  The energy balance is enforced on every run, not
only under ``verify``.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from .acceptance import DEFAULT_SEED, format_results, run_acceptance
from .aero import SurrogateFluidSolver
from .benchmark import flutter_curve
from .contact import ContactMarchError
from .coupled import (
    LINEARIZATION_VARIANTS,
    CoupledConfig,
    CoupledDivergenceError,
    coupled_solve,
    initialize_from_backbone,
)
from .energy import (
    conventional_energy_lco,
    energy_balance_residual,
    mac,
    refined_energy_lco,
)
from .epmc import ContinuationConfig, ContinuationError, continue_backbone
from .hb import AnchorError, NewtonDivergenceError
from .io import (
    CaseValidationError,
    dump_json,
    emit_curve,
    emit_results,
    emit_timing,
    load_case,
)
from .model import linear_eigen, recover_sensor_amplitude
from .timedomain import BracketError, NonStationaryError

__all__ = ["main", "run_case", "EXIT_OK", "EXIT_VALIDATION", "EXIT_SOLVER",
           "EXIT_INVARIANT"]

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3
EXIT_INVARIANT = 4

# every reported limit cycle must balance supplied and dissipated work
# to this relative tolerance, recomputed outside the reporting solver
BALANCE_LIMIT = 1e-6

_SOLVER_ERRORS = (ContinuationError, CoupledDivergenceError,
                  NewtonDivergenceError, AnchorError, ContactMarchError,
                  NonStationaryError, BracketError, np.linalg.LinAlgError)

_MODES = ("flutter-curve", "conventional", "refined", "coupled", "verify")


class InvariantViolation(RuntimeError):
    """A reported result failed an always-on consistency check."""


class SolverFailure(RuntimeError):
    """A solve could not be completed for the requested case."""


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="flutterlco",
        description="Frequency-domain limit-cycle analysis of friction-"
                    "damped blade models under flutter.")
    p.add_argument("--case", help="JSON case file; omit only with "
                                  "--mode verify")
    p.add_argument("--mode", required=True, choices=_MODES,
                   help="analysis to run")
    p.add_argument("--nd", type=int, default=None,
                   help="nodal diameter whose influence matrix to use "
                        "(default: the case's target)")
    p.add_argument("--harmonics", type=int, default=None,
                   help="structural harmonic order (default 3, coupled "
                        "and refined modes)")
    p.add_argument("--linearization", choices=LINEARIZATION_VARIANTS,
                   default=None,
                   help="aero Jacobian variant for the coupled solver")
    p.add_argument("--relax", type=float, default=None,
                   help="under-relaxation factor in (0, 1] for the "
                        "coupled solver (default 1.0)")
    p.add_argument("--out", default=None,
                   help="directory for emitted JSON/CSV results")
    p.add_argument("--seed", type=int, default=None,
                   help="seed for randomized verification checks")
    p.add_argument("--criteria", default=None,
                   help="verify mode: comma-separated check subset, "
                        "e.g. 1,3,9")
    return p


def _pick(flag, params: dict, key: str, default):
    if flag is not None:
        return flag
    return params.get(key, default)


def _parse_criteria(text: str | None):
    if text is None:
        return None
    try:
        indices = sorted({int(tok) for tok in text.split(",") if tok.strip()})
    except ValueError:
        raise CaseValidationError(
            f"--criteria: expected comma-separated integers, got {text!r}")
    bad = [i for i in indices if not 1 <= i <= 10]
    if bad or not indices:
        raise CaseValidationError(
            f"--criteria: check indices must lie in 1..10, got {text!r}")
    return indices


def _stick_mode(case):
    modes = [m for m in linear_eigen(case.model, "stick") if not m.rigid]
    return modes[case.mode_index], modes


def _energy_records(case, aero, result):
    """Summary records for an energy-method result, balance recomputed."""
    _, stick_modes = _stick_mode(case)
    records = []
    for lco in result.lcos:
        residual = energy_balance_residual(case.model, case.contacts, aero,
                                           lco.uset, lco.omega)
        mac_stick = mac(lco.shape,
                        stick_modes[case.mode_index].shape.astype(complex))
        records.append(dict(
            method=lco.method, outcome=result.outcome,
            stability=lco.stability, omega=lco.omega,
            sensor_amplitude=recover_sensor_amplitude(case.model, lco.uset),
            modal_amplitude=lco.amplitude, d_a=lco.d_a, d_s=lco.d_s,
            w_a=lco.w_a, w_s=lco.w_s, e_p_max=lco.e_p_max,
            balance_residual=residual, mac_stick=mac_stick,
        ))
    return records


def _print_records(records) -> None:
    for k, rec in enumerate(records, 1):
        sys.stdout.write(
            f"  LCO {k}: omega {rec['omega']:.6g}, modal amplitude "
            f"{rec['modal_amplitude']:.6g}, sensor "
            f"{rec['sensor_amplitude']:.6g}"
            f" ({rec.get('stability') or 'unclassified'}),"
            f" balance {rec['balance_residual']:.1e}\n")


def _enforce_balance(records) -> None:
    worst = max((r.get("balance_residual") or 0.0 for r in records),
                default=0.0)
    if worst > BALANCE_LIMIT:
        raise InvariantViolation(
            f"energy balance residual {worst:.2e} exceeds {BALANCE_LIMIT:g} "
            "at a reported limit cycle")


def _run_flutter_curve(case, args, params, outdir):
    rows = flutter_curve(case)
    least = min(rows, key=lambda r: min(r["d_a_stick"], r["d_a_slip"]))
    for r in rows:
        mark = "  <- least stable" if r is least else ""
        sys.stdout.write(f"nd {r['nd']:+d}: D_a stick {r['d_a_stick']:+.4e},"
                         f" slip {r['d_a_slip']:+.4e}{mark}\n")
    if outdir:
        emit_curve(outdir, "flutter_curve.csv",
                   ["nd [-]", "d_a_stick [-]", "d_a_slip [-]"],
                   [[r["nd"], r["d_a_stick"], r["d_a_slip"]] for r in rows])
    return []


def _run_conventional(case, args, params, outdir, aero, nd):
    mode, _ = _stick_mode(case)
    grid = np.geomspace(case.amp_range[0], case.amp_range[1],
                        int(params.get("grid_points", 60)))
    result = conventional_energy_lco(case.model, case.contacts, mode,
                                     aero, grid)
    sys.stdout.write(f"conventional energy method (nd {nd:+d}): "
                     f"{result.outcome}\n")
    records = _energy_records(case, aero, result)
    _print_records(records)
    if outdir:
        c = result.curve
        emit_curve(outdir, "conventional_curve.csv",
                   ["modal_amplitude [sqrt(kg) m]", "omega [rad/s]",
                    "d_s [-]", "d_a [-]", "w_s [J]", "w_a [J]",
                    "e_p_max [J]"],
                   np.column_stack([c.amplitudes, c.omega, c.d_s, c.d_a,
                                    c.w_s, c.w_a, c.e_p_max]))
    return records


def _refined_solve(case, aero, order: int):
    cfg = ContinuationConfig(order=order)
    backbone = continue_backbone(case.model, case.contacts, case.mode_index,
                                 case.amp_range[0], case.amp_range[1], cfg)
    result = refined_energy_lco(backbone, aero, model=case.model,
                                contacts=case.contacts, epmc_cfg=cfg)
    return backbone, result


def _run_refined(case, args, params, outdir, aero, nd, order):
    backbone, result = _refined_solve(case, aero, order)
    sys.stdout.write(f"refined energy method (nd {nd:+d}, order {order}): "
                     f"{result.outcome}\n")
    records = _energy_records(case, aero, result)
    _print_records(records)
    if outdir:
        c = result.curve
        emit_curve(outdir, "refined_curve.csv",
                   ["modal_amplitude [sqrt(kg) m]", "omega [rad/s]",
                    "d_s [-]", "d_a [-]", "mac_vs_stick [-]"],
                   np.column_stack([c.amplitudes, c.omega, c.d_s, c.d_a,
                                    c.mac_vs_stick]))
    return records


def _run_coupled(case, args, params, outdir, aero, nd, order):
    relax = float(_pick(args.relax, params, "relax", 1.0))
    linearization = _pick(args.linearization, params, "linearization",
                          "freq-dependent-G")
    if not 0.0 < relax <= 1.0:
        raise CaseValidationError(f"--relax: must lie in (0, 1], got {relax}")

    backbone, result = _refined_solve(case, aero, order)
    if not result.lcos:
        raise SolverFailure(
            f"energy method outcome '{result.outcome}': no limit cycle "
            "to initialize the coupled solver from")
    uset0, omega0, anchor = initialize_from_backbone(
        backbone, result.lcos[0],
        dominant_coord=case.model.dominant_coord, order=order)
    provider = SurrogateFluidSolver(
        aero, order=max(2, order),
        kappa=float(params.get("kappa", 0.0)),
        rho_f=float(params.get("rho_f", 0.5)))
    cfg = CoupledConfig(anchor=anchor, order=order, relax=relax,
                        linearization=linearization)
    sol, trace = coupled_solve(case.model, case.contacts, provider,
                               (uset0, omega0), cfg)
    residual = energy_balance_residual(case.model, case.contacts, aero,
                                       sol.uset, sol.omega)
    sys.stdout.write(
        f"coupled solve (nd {nd:+d}, order {order}, {linearization}, "
        f"relax {relax:g}): converged in {trace.outer_iterations} outer "
        f"iterations, payload {trace.payload_size} reals\n")
    records = [dict(
        method="coupled", outcome="converged", stability=None,
        omega=sol.omega, sensor_amplitude=sol.sensor_amplitude,
        modal_amplitude=sol.amplitude, d_a=sol.d_a, d_s=sol.d_s,
        w_a=sol.w_a, w_s=sol.w_s, e_p_max=sol.e_p_max,
        balance_residual=residual, mac_stick=sol.mac_stick,
        mac_nl=sol.mac_nl, outer_iterations=trace.outer_iterations,
    )]
    _print_records(records)
    if outdir:
        emit_curve(outdir, "coupled_trace.csv",
                   ["outer [-]", "omega [rad/s]", "modal_amplitude "
                    "[sqrt(kg) m]", "delta_omega [-]", "delta_u [-]"],
                   [[k, trace.omega[k], trace.amplitude[k],
                     trace.delta_omega[k], trace.delta_u[k]]
                    for k in range(trace.outer_iterations)])
    return records


def _run_verify(args, outdir):
    seed = args.seed if args.seed is not None else DEFAULT_SEED
    results = run_acceptance(_parse_criteria(args.criteria), seed=seed)
    sys.stdout.write(format_results(results) + "\n")
    n_pass = sum(r.passed for r in results)
    sys.stdout.write(f"{n_pass}/{len(results)} checks passed\n")
    if outdir:
        dump_json({"schema": "flutterlco/verify-v1", "seed": seed,
                   "checks": [dict(index=r.index, label=r.label,
                                   passed=r.passed, detail=r.detail)
                              for r in results]},
                  f"{outdir}/verify.json")
        emit_timing(outdir, {f"check_{r.index}": r.elapsed for r in results})
    return EXIT_OK if n_pass == len(results) else EXIT_INVARIANT


def run_case(args) -> int:
    """Execute one parsed invocation; returns the process exit status."""
    if args.mode == "verify":
        return _run_verify(args, args.out)
    if not args.case:
        raise CaseValidationError("--case: required for this mode")

    case, params = load_case(args.case)
    nd = _pick(args.nd, params, "nd", case.target_nd)
    try:
        aero = case.aero_for(int(nd))
    except KeyError as err:
        raise CaseValidationError(f"--nd: {err.args[0]}") from err
    order = int(_pick(args.harmonics, params, "harmonics", 3))
    if order < 1:
        raise CaseValidationError(
            f"--harmonics: order must be at least 1, got {order}")

    start = time.perf_counter()
    if args.mode == "flutter-curve":
        records = _run_flutter_curve(case, args, params, args.out)
    elif args.mode == "conventional":
        records = _run_conventional(case, args, params, args.out, aero, nd)
    elif args.mode == "refined":
        records = _run_refined(case, args, params, args.out, aero, nd, order)
    else:
        records = _run_coupled(case, args, params, args.out, aero, nd, order)
    elapsed = time.perf_counter() - start

    if args.out:
        emit_results(records, args.out)
        emit_timing(args.out, {args.mode: elapsed})
    _enforce_balance(records)
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return run_case(args)
    except CaseValidationError as err:
        sys.stderr.write(f"error: {err}\n")
        return EXIT_VALIDATION
    except InvariantViolation as err:
        sys.stderr.write(f"invariant violation: {err}\n")
        return EXIT_INVARIANT
    except (SolverFailure, *_SOLVER_ERRORS) as err:
        sys.stderr.write(f"solver failure: {type(err).__name__}: {err}\n")
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
