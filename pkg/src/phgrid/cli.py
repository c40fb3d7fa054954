"""Command-line front end: simulate, analyze, sweep, verify, scenario.

Exit codes: 0 success, 2 input/validation problem, 3 numerical failure
(diverging state or adaptive-step failure).  Outputs are deterministic:
identical invocations write byte-identical files.  PHGRID_THREADS sets the
sweep worker count; PHGRID_BACKEND=numpy selects the pure-numpy kernels.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import csvio, netfile
from .analysis import classify_steady_state
from .backend import backend_name
from .errors import GridError, NonFiniteError, PhgridError, StepFailure, StructuralError
from .integrator import IntegratorConfig, integrate
from .netmodel import (
    assemble_network_matrix,
    contraction_certificate,
    validate_network,
)
from .scenarios import (
    Scenario,
    builtin_scenarios,
    initial_state,
    run_sweep,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3


def _fail(msg: str, code: int) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


def cmd_simulate(args) -> int:
    try:
        if args.scenario:
            scn = netfile.resolve_scenario(args.scenario)
        else:
            net = netfile.read_network(args.net)
            if args.t_end is None:
                return _fail("--t-end is required with --net", EXIT_INPUT)
            cfg = IntegratorConfig(
                method="rk45" if args.rk45 else "rk4",
                dt=args.dt,
                abs_tol=args.abs_tol,
                rel_tol=args.rel_tol,
                dt_min=args.dt_min,
                dt_max=args.dt_max,
                sample_every=args.sample_every,
            )
            scn = Scenario(
                name="cli",
                network=net,
                horizon=args.t_end,
                cfg=cfg,
                ic_policy=args.ic,
                seed=args.seed,
                scale=args.scale,
            )
        if args.t_end is not None:
            scn = replace(scn, horizon=args.t_end)
        if args.seed is not None and scn.ic_policy == "random":
            scn = replace(scn, seed=args.seed)

        violations = validate_network(scn.network)
        if violations:
            for v in violations:
                print(f"violation: {v}", file=sys.stderr)
            return EXIT_INPUT

        traj = integrate(scn.network, initial_state(scn), (0.0, scn.horizon), scn.cfg)
        csvio.write_trajectory_csv(traj, args.out)
        print(f"wrote {args.out}: {len(traj)} samples, backend={backend_name()}")
        return EXIT_OK
    except (StructuralError, ValueError) as exc:
        return _fail(str(exc), EXIT_INPUT)
    except (NonFiniteError, StepFailure) as exc:
        return _fail(str(exc), EXIT_NUMERIC)


def cmd_verify(args) -> int:
    try:
        net = netfile.read_network(args.net)
    except StructuralError as exc:
        return _fail(str(exc), EXIT_INPUT)
    violations = validate_network(net)
    if violations:
        for v in violations:
            print(f"violation: {v}", file=sys.stderr)
        return EXIT_INPUT
    nm = assemble_network_matrix(net)
    skew = bool((nm.W == -nm.W.T).all())
    cert = contraction_certificate(net)
    print(f"network: {net.name or args.net}")
    print(f"ports: {len(nm.labels)} ({', '.join(nm.labels)})")
    print(f"skew_symmetric: {skew}")
    print(f"lambda_min_R: {netfile.fmt(cert.lambda_min_R)}")
    print(f"hessian_floor_a: {netfile.fmt(cert.hessian_floor_a)}")
    print(f"rate_c: {netfile.fmt(cert.rate_c)}")
    print(f"remark_estimate: {netfile.fmt(cert.remark_estimate)}")
    print(f"omega_ref: {netfile.fmt(cert.omega_ref)}")
    if cert.undamped_cap_slots:
        print("note: RL-branch loads leave capacitor slots undamped; "
              "lambda_min_R is the floor over dissipative channels")
    return EXIT_OK if skew else EXIT_INPUT


def cmd_analyze(args) -> int:
    try:
        traj = csvio.read_trajectory_csv(args.traj)
    except (GridError, OSError) as exc:
        return _fail(str(exc), EXIT_INPUT)
    net = None
    if args.net:
        try:
            net = netfile.read_network(args.net)
        except StructuralError as exc:
            return _fail(str(exc), EXIT_INPUT)
    try:
        report = classify_steady_state(traj, net)
    except (GridError, PhgridError) as exc:
        return _fail(str(exc), EXIT_INPUT)
    text = netfile.report_to_text(report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    print(text, end="")
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        spec = netfile.read_sweep_spec(args.spec)
    except StructuralError as exc:
        return _fail(str(exc), EXIT_INPUT)
    try:
        rows = run_sweep(spec, workers=args.workers)
    except (NonFiniteError, StepFailure) as exc:
        return _fail(str(exc), EXIT_NUMERIC)
    csv = netfile.sweep_rows_to_csv(rows)
    with open(args.out, "w") as fh:
        fh.write(csv)
    print(csv, end="")
    return EXIT_OK


def cmd_scenario(args) -> int:
    scns = builtin_scenarios()
    if args.action == "list":
        for name, s in scns.items():
            print(f"{name}: horizon={s.horizon:g}s dt={s.cfg.dt:g} "
                  f"seed={s.seed} expected={s.expected}")
        return EXIT_OK
    if args.name not in scns:
        return _fail(f"unknown scenario {args.name!r} (see `phgrid scenario list`)", EXIT_INPUT)
    netfile.write_scenario(scns[args.name], args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="phgrid",
        description="Electromagnetic power-system simulation on port-Hamiltonian networks",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate a scenario or network file to CSV")
    src = sim.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", help="built-in scenario name or scenario file")
    src.add_argument("--net", help="network file")
    sim.add_argument("--t-end", type=float, default=None, help="horizon override (s)")
    sim.add_argument("--dt", type=float, default=5e-5, help="RK4 step (s)")
    sim.add_argument("--rk45", action="store_true", help="use the adaptive integrator")
    sim.add_argument("--abs-tol", type=float, default=1e-8)
    sim.add_argument("--rel-tol", type=float, default=1e-8)
    sim.add_argument("--dt-min", type=float, default=1e-9)
    sim.add_argument("--dt-max", type=float, default=1e-2)
    sim.add_argument("--sample-every", type=float, default=1e-2)
    sim.add_argument("--ic", choices=("random", "steady"), default="random")
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--scale", type=float, default=100.0)
    sim.add_argument("--out", required=True, help="output trajectory CSV")
    sim.set_defaults(func=cmd_simulate)

    ver = sub.add_parser("verify", help="structural checks and contraction certificate")
    ver.add_argument("--net", required=True)
    ver.set_defaults(func=cmd_verify)

    ana = sub.add_parser("analyze", help="classify a trajectory CSV")
    ana.add_argument("--traj", required=True)
    ana.add_argument("--net", default=None, help="network file (for probe selection)")
    ana.add_argument("--out", default=None, help="report file")
    ana.set_defaults(func=cmd_analyze)

    sw = sub.add_parser("sweep", help="run a parameter sweep spec")
    sw.add_argument("--spec", required=True)
    sw.add_argument("--out", required=True)
    sw.add_argument("--workers", type=int, default=None,
                    help="thread count (default: PHGRID_THREADS or min(4, cpus))")
    sw.set_defaults(func=cmd_sweep)

    sc = sub.add_parser("scenario", help="list or export built-in scenarios")
    sc.add_argument("action", choices=("list", "export"))
    sc.add_argument("name", nargs="?", default=None)
    sc.add_argument("--out", default=None)
    sc.set_defaults(func=cmd_scenario)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "scenario" and args.action == "export":
        if not args.name or not args.out:
            print("error: scenario export needs NAME and --out", file=sys.stderr)
            return EXIT_INPUT
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
