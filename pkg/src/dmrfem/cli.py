"""Command line entry point: ``dmrfem {mesh,solve,diag,study}``.

Exit codes: 0 success, 1 runtime error, 2 failed check or refused run,
64 usage error.
"""

import argparse
import logging
import math
import os
import shlex
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .assembly import assemble
from .errors import MeshFormatError, MeshValidationError, StabilityError
from .mesh import check_acuteness, compute_mesh_stats, generate_structured_mesh, load_mesh, save_mesh

log = logging.getLogger("dmrfem")

EXIT_OK, EXIT_RUNTIME, EXIT_CHECK, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _floats(s):
    return [float(x) for x in s.split(",") if x]


def _ints(s):
    return [int(x) for x in s.split(",") if x]


def _header(argv, seed=None):
    lines = [f"dmrfem {__version__}", "argv: " + shlex.join(argv)]
    if seed is not None:
        lines.append(f"seed: {seed}")
    return lines


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w"), True


def _write(path, header, body_lines):
    fh, close = _open_out(path)
    try:
        for h in header:
            fh.write(f"# {h}\n")
        for line in body_lines:
            fh.write(line + "\n")
    finally:
        if close:
            fh.close()


# -- mesh --------------------------------------------------------------------


def cmd_mesh(args, argv):
    if args.mesh_cmd == "gen":
        t = generate_structured_mesh(args.n)
        save_mesh(t, args.output, header=_header(argv))
        log.info("wrote %d nodes, %d elements to %s", t.n_nodes, t.n_elements, args.output)
        return EXIT_OK
    t = load_mesh(args.path)
    if args.mesh_cmd == "check":
        rep = check_acuteness(t)
        for i, j, v in rep.violating_pairs:
            print(f"violation {i} {j} {v:.6g}")
        print(f"acuteness {'pass' if rep.passed else 'fail'} ({len(rep.violating_pairs)} violating pairs)")
        return EXIT_OK if rep.passed else EXIT_CHECK
    st = compute_mesh_stats(t)
    print(f"h {st.h:.6g}")
    print(f"kappa_h {st.kappa_h:.6g}")
    print(f"nu {st.nu:.6g}")
    print(f"gamma {st.gamma:.6g}")
    if args.dump_matrices:
        _dump_matrices(assemble(t), Path(args.dump_matrices))
    return EXIT_OK


def _dump_matrices(ops, outdir):
    outdir.mkdir(parents=True, exist_ok=True)
    for name, M in (("S", ops.S), ("Mc", ops.Mc)):
        C = M.tocoo()
        with open(outdir / f"{name}.txt", "w") as fh:
            fh.write(f"# {name} {M.shape[0]} {M.shape[1]} coordinate\n")
            for i, j, v in zip(C.row, C.col, C.data):
                fh.write(f"{i} {j} {v:.17g}\n")
    np.savetxt(outdir / "D.txt", ops.D, fmt="%.17g")


# -- solve -------------------------------------------------------------------


def cmd_solve(args, argv):
    from .experiments import appendixB_problem
    from .stepper import SchemeConfig, solve_linear

    t = load_mesh(args.mesh)
    ops = assemble(t, quad_level=args.quad_order)
    cfg = SchemeConfig(args.theta, args.tau, args.T, args.variant, epsilon=args.eps)
    if args.problem == "appendixB":
        prob = appendixB_problem(args.source)
        g, u0 = prob.g, prob.u0
    else:
        if not args.u0:
            raise UsageError("--problem custom needs --u0 <file>")
        g, u0 = None, np.loadtxt(args.u0, ndmin=1)
        if u0.shape != (ops.ndof,):
            raise MeshValidationError(f"--u0 must hold {ops.ndof} interior values, got {u0.size}")
    try:
        traj = solve_linear(ops, cfg, g, u0, force=args.force)
    except StabilityError as exc:
        print(f"refused: tau={exc.tau:.6g} tau_max={exc.tau_max:.6g}", file=sys.stderr)
        return EXIT_CHECK
    from .norms import lq_norm

    rows = ["n,t,linf,l2"]
    for n, (tn, u) in enumerate(zip(traj.times, traj.states)):
        rows.append(f"{n},{tn:.17g},{np.max(np.abs(u), initial=0.0):.17g},{lq_norm(ops, u, 2):.17g}")
    _write(args.out, _header(argv), rows)
    if args.dump_states:
        d = Path(args.dump_states)
        d.mkdir(parents=True, exist_ok=True)
        for n, u in enumerate(traj.states):
            np.savetxt(d / f"state_{n:06d}.txt", u, fmt="%.17g")
    return EXIT_OK


# -- diag --------------------------------------------------------------------


def cmd_diag(args, argv):
    from . import spectral

    t = load_mesh(args.mesh)
    ops = assemble(t)
    rng = np.random.default_rng(args.seed)
    rows = ["sample,value"]
    status = EXIT_OK
    kind = args.kind
    if kind == "range":
        res = spectral.numerical_range_sample(ops, args.q, args.samples, complex_values=args.complex, rng=rng)
        rows += [f"{i},{abs(p):.17g}" for i, p in enumerate(res.points)]
        summary = f"r_estimate={res.r_estimate:.6g} bound={res.bound:.6g} violations={res.violations}"
        status = EXIT_OK if res.violations == 0 else EXIT_CHECK
    elif kind == "positivity":
        worst_all = math.inf
        for tval in args.t or [0.01, 0.1, 1.0]:
            w = spectral.resolvent_positivity(ops, ts=(tval,), n_samples=args.samples, seed=args.seed)
            rows.append(f"{tval:.17g},{w:.17g}")
            worst_all = min(worst_all, w)
        ok = worst_all >= -1e-12
        summary = f"min_normalized={worst_all:.6g} positive={'yes' if ok else 'no'}"
        status = EXIT_OK if ok else EXIT_CHECK
    elif kind == "gn":
        vecs = spectral._probe_vectors(ops, args.samples, rng)
        vals = [(lab, spectral.gn_ratio(ops, v, args.q)) for lab, v in vecs]
        rows += [f"{lab},{r:.17g}" for lab, r in vals]
        summary = f"max_ratio={max(r for _, r in vals):.6g}"
    elif kind == "sobolev":
        dec = spectral.eigendecompose(ops)
        alpha = args.alpha
        d = t.dim
        if not d / (2 * args.q) < alpha <= 1:
            raise UsageError(f"--alpha must lie in ({d / (2 * args.q)}, 1]")
        vecs = spectral._probe_vectors(ops, args.samples, rng)
        from .norms import lumped_norm

        vals = [(lab, np.max(np.abs(v)) / lumped_norm(ops, dec.power(alpha, v), args.q)) for lab, v in vecs]
        rows += [f"{lab},{r:.17g}" for lab, r in vals]
        summary = f"max_ratio={max(r for _, r in vals):.6g} alpha={alpha:.6g}"
    elif kind == "fracpower":
        dec = spectral.eigendecompose(ops)
        worst = 0.0
        for i in range(args.samples):
            v = rng.standard_normal(ops.ndof)
            a = spectral.fractional_power_quadrature(ops, args.z, v)
            b = dec.power(args.z, v)
            rel = float(np.linalg.norm(a - b) / np.linalg.norm(b))
            worst = max(worst, rel)
            rows.append(f"{i},{rel:.17g}")
        summary = f"z={args.z:.6g} max_rel_diff={worst:.6g}"
    else:  # imagpower
        dec = spectral.eigendecompose(ops)
        vals = [(tv, spectral.imaginary_power_norm(dec, tv)) for tv in (args.t or [0.0, 1.0, 10.0])]
        rows += [f"{tv:.17g},{nv:.17g}" for tv, nv in vals]
        summary = f"max_dev_from_1={max(abs(nv - 1) for _, nv in vals):.6g}"
    rows.append(f"# {summary}")
    _write(args.out, _header(argv, args.seed), rows)
    if args.out not in (None, "-"):
        print(summary)
    return status


# -- study -------------------------------------------------------------------

NONLINEARITIES = {
    "usq": lambda u: u * u,
    "zero": lambda u: np.zeros_like(u),
}


def cmd_study(args, argv):
    from .experiments import emit_report, run_case, run_semilinear_study

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    header = _header(argv)[1:]  # emit_report writes the version line itself
    if args.study_cmd == "linear":
        for c in args.cases:
            rep = run_case(c, args.variant, args.levels, jobs=args.jobs, quad_level=args.quad_order)
            emit_report(rep, out / f"case{c}_{args.variant}.csv", header)
            inc = " ".join(f"{s:.6g}" for s in rep.incremental_slopes)
            print(f"case {c} variant {args.variant}: fitted_slope={rep.fitted_slope:.4f} incremental=[{inc}]")
        return EXIT_OK
    f = NONLINEARITIES[args.f]

    def u0(x, y):
        return args.amplitude * np.sin(np.pi * x) * np.sin(np.pi * y)

    lp, linf = run_semilinear_study(f, u0, args.levels, T=args.T, reference_n=args.reference_n, jobs=args.jobs)
    emit_report(lp, out / f"semilinear_{args.f}_lp.csv", header)
    emit_report(linf, out / f"semilinear_{args.f}_linf.csv", header)
    print(f"semilinear {args.f}: lp slope={lp.fitted_slope:.4f} linf slope={linf.fitted_slope:.4f}")
    return EXIT_OK


def build_parser():
    p = _Parser(prog="dmrfem", description="Mass-lumped P1 heat equation toolkit")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("--jobs", type=int, default=int(os.environ.get("DMRFEM_JOBS", "1")))
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    m = sub.add_parser("mesh", help="generate, check and measure meshes")
    msub = m.add_subparsers(dest="mesh_cmd", required=True, parser_class=_Parser)
    g = msub.add_parser("gen", help="structured unit-square mesh")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("-o", "--output", required=True)
    c = msub.add_parser("check", help="acuteness check (exit 2 on failure)")
    c.add_argument("path")
    s = msub.add_parser("stats", help="print h, kappa_h, nu, gamma")
    s.add_argument("path")
    s.add_argument("--dump-matrices", metavar="DIR")

    sv = sub.add_parser("solve", help="theta-scheme run")
    sv.add_argument("--mesh", required=True)
    sv.add_argument("--theta", type=float, required=True)
    sv.add_argument("--tau", type=float, required=True)
    sv.add_argument("--T", type=float, required=True)
    sv.add_argument("--variant", choices=["A", "B"], default="A")
    sv.add_argument("--problem", choices=["appendixB", "custom"], default="appendixB")
    sv.add_argument("--source", choices=["corrected", "printed"], default="corrected")
    sv.add_argument("--u0", help="interior initial values, one per line (custom problem)")
    sv.add_argument("--eps", type=float, default=None)
    sv.add_argument("--force", action="store_true")
    sv.add_argument("--quad-order", type=int, default=1)
    sv.add_argument("--out", required=True)
    sv.add_argument("--dump-states", metavar="DIR")

    dg = sub.add_parser("diag", help="operator diagnostics")
    dg.add_argument("kind", choices=["range", "positivity", "gn", "sobolev", "fracpower", "imagpower"])
    dg.add_argument("--mesh", required=True)
    dg.add_argument("--q", type=float, default=2.0)
    dg.add_argument("--alpha", type=float, default=0.75)
    dg.add_argument("--z", type=float, default=-0.5)
    dg.add_argument("--t", type=_floats, default=None)
    dg.add_argument("--seed", type=int, default=0)
    dg.add_argument("--samples", type=int, default=100)
    dg.add_argument("--complex", action="store_true")
    dg.add_argument("--out", default="-")

    st = sub.add_parser("study", help="convergence studies")
    ssub = st.add_subparsers(dest="study_cmd", required=True, parser_class=_Parser)
    lin = ssub.add_parser("linear")
    lin.add_argument("--cases", type=_ints, default=[1, 2, 3, 4, 5])
    lin.add_argument("--variant", choices=["A", "B"], default="A")
    lin.add_argument("--levels", type=_ints, default=[8, 16, 32, 64])
    lin.add_argument("--quad-order", type=int, default=1)
    lin.add_argument("--out", required=True)
    sl = ssub.add_parser("semilinear")
    sl.add_argument("--f", choices=sorted(NONLINEARITIES), default="usq")
    sl.add_argument("--levels", type=_ints, default=[8, 16, 32, 64])
    sl.add_argument("--T", type=float, default=0.25)
    sl.add_argument("--amplitude", type=float, default=0.1)
    sl.add_argument("--reference-n", type=int, default=128)
    sl.add_argument("--out", required=True)
    return p


COMMANDS = {"mesh": cmd_mesh, "solve": cmd_solve, "diag": cmd_diag, "study": cmd_study}


def dispatch(argv):
    """Run one command; returns the process exit code."""
    argv = list(argv)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.cmd](args, argv)
    except UsageError as exc:
        print(f"dmrfem: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MeshFormatError, MeshValidationError) as exc:
        print(f"dmrfem: invalid input: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except Exception as exc:  # noqa: BLE001
        log.debug("failure", exc_info=True)
        print(f"dmrfem: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main():
    sys.exit(dispatch(sys.argv[1:]))
