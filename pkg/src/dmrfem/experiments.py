"""Convergence studies for the linear and semilinear heat equation."""

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .assembly import assemble, interpolate
from .mesh import compute_mesh_stats, generate_structured_mesh
from .norms import bochner_norm, theta_average
from .stepper import SchemeConfig, appendix_tau, solve_linear, solve_semilinear

__all__ = [
    "AppendixBProblem",
    "appendixB_problem",
    "CASES",
    "ConvergenceRow",
    "ConvergenceReport",
    "fit_slope",
    "linear_error",
    "run_case",
    "run_semilinear_study",
    "emit_report",
    "DEFAULT_LEVELS",
]

DEFAULT_LEVELS = (8, 16, 32, 64)


@dataclass(frozen=True)
class AppendixBProblem:
    """Heat equation on the unit square with a known smooth-in-time solution.

    ``u(x, y, t) = x^{5/2} (1-x)^{5/2} y (1-y) e^t`` and ``g = u_t - Laplace u``.
    """

    source: str = "corrected"

    @staticmethod
    def u_exact(x, y, t=0.0):
        return (x * (1 - x)) ** 2.5 * y * (1 - y) * np.exp(t)

    def u0(self, x, y):
        return self.u_exact(x, y, 0.0)

    def g(self, x, y, t):
        s = np.sqrt(x * (1 - x))
        yy = y * (1 - y)
        x2 = (x * (1 - x)) ** 2
        # the variant "printed" carries the constant 2 where u_t - Laplace u has 2 x^2 (1-x)^2
        last = 2.0 if self.source == "printed" else 2.0 * x2
        return s * np.exp(t) * (x2 * yy - 1.25 * (3 - 4 * x) * (1 - 4 * x) * yy + last)


def appendixB_problem(source="corrected"):
    """Return the benchmark problem.

    ``source="printed"`` reproduces the literal source formula whose last
    bracket term is the constant 2; it does not solve the equation with
    the stated exact solution and exists for comparison only.
    """
    if source not in ("corrected", "printed"):
        raise ValueError(f"unknown source variant {source!r}")
    return AppendixBProblem(source)


# case id -> (theta, time-step rule, horizon)
CASES = {
    1: (0.0, "stability", 0.1),
    2: (0.5, "h", 0.5),
    3: (0.5, "h2", 0.5),
    4: (1.0, "h", 0.5),
    5: (1.0, "h2", 0.5),
}


def case_tau(case_id, stats, q=2.0):
    theta, rule, _ = CASES[case_id]
    if rule == "stability":
        return appendix_tau(stats, theta, q)
    return stats.h if rule == "h" else stats.h**2


@dataclass
class ConvergenceRow:
    n: int
    h: float
    tau: float
    error: float
    runtime: float


@dataclass
class ConvergenceReport:
    """Errors per refinement level and the least-squares order in ``h``."""

    case_id: object
    scheme_variant: str
    rows: list
    p: float = 4.0
    q: float = 2.0
    theta_averaged: bool = True
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = sorted(self.rows, key=lambda r: -r.h)

    @property
    def fitted_slope(self):
        return fit_slope([r.h for r in self.rows], [r.error for r in self.rows])

    @property
    def incremental_slopes(self):
        h = np.log([r.h for r in self.rows])
        e = np.log([r.error for r in self.rows])
        return np.diff(e) / np.diff(h)


def fit_slope(h, err):
    """Least-squares slope of ``log err`` against ``log h``."""
    h, err = np.asarray(h, float), np.asarray(err, float)
    if len(h) < 2 or np.any(err <= 0):
        raise ValueError("need at least two positive errors")
    return float(np.polyfit(np.log(h), np.log(err), 1)[0])


def linear_error(ops, traj, u_exact, p=4.0, q=2.0, theta=1.0):
    """``(sum_n ||u_h^{n+theta} - U^{n+theta}||_{L^q}^p tau)^{1/p}``.

    ``U^n`` is the nodal interpolant of ``u_exact(., ., t_n)``.
    """
    U = np.array([interpolate(ops, u_exact, t) for t in traj.times])
    e = theta_average(traj.states - U, theta)
    return bochner_norm(ops, e, p, q, traj.tau)


def _linear_level(case_id, variant, n, problem, p, q, quad_level=1):
    t0 = time.perf_counter()
    theta, _, T = CASES[case_id]
    mesh = generate_structured_mesh(n)
    ops = assemble(mesh, quad_level=quad_level)
    stats = compute_mesh_stats(mesh)
    tau = case_tau(case_id, stats)
    cfg = SchemeConfig(theta=theta, tau=tau, T=T, load_variant=variant)
    traj = solve_linear(ops, cfg, problem.g, problem.u0)
    err = linear_error(ops, traj, problem.u_exact, p, q, theta)
    return ConvergenceRow(n, stats.h, tau, err, time.perf_counter() - t0)


def _map(fn, items, jobs):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def run_case(case_id, scheme_variant="A", levels=DEFAULT_LEVELS, p=4.0, q=2.0, problem=None, jobs=1, quad_level=1):
    """Error study for one benchmark case over the given mesh levels.

    Each level runs on the diagonal ``n x n`` mesh with the case's time
    step rule and horizon; the error is :func:`linear_error` with
    theta-averaging.  Levels are independent and run on ``jobs`` threads.
    """
    if case_id not in CASES:
        raise ValueError(f"case must be one of {sorted(CASES)}, got {case_id}")
    problem = problem or appendixB_problem()
    rows = _map(lambda n: _linear_level(case_id, scheme_variant, n, problem, p, q, quad_level), list(levels), jobs)
    return ConvergenceReport(case_id, scheme_variant, rows, p, q, True)


def _structured_eval(n, nodal, pts):
    # evaluate a P1 function on the diagonal n x n mesh at points of the unit square
    x, y = pts[:, 0] * n, pts[:, 1] * n
    i = np.minimum(np.floor(x).astype(int), n - 1)
    j = np.minimum(np.floor(y).astype(int), n - 1)
    a, b = x - i, y - j
    k = j * (n + 1) + i
    v00, v10, v01, v11 = nodal[k], nodal[k + 1], nodal[k + n + 1], nodal[k + n + 2]
    lower = a >= b  # triangle (v00, v10, v11)
    return np.where(lower, v00 + a * (v10 - v00) + b * (v11 - v10), v00 + b * (v01 - v00) + a * (v11 - v01))


def _full(ops, coeffs):
    out = np.zeros(ops.mesh.n_nodes)
    out[ops.mesh.interior_nodes] = coeffs
    return out


def run_semilinear_study(
    f,
    u0,
    levels=DEFAULT_LEVELS,
    T=0.25,
    reference_n=128,
    reference_tau=None,
    p=4.0,
    q=2.0,
    jobs=1,
):
    """Self-convergence study of the semi-implicit scheme with ``tau = h^2``.

    Every level is compared against a run of the same scheme on the
    ``reference_n`` mesh.  The default reference step is the ``tau = h^2``
    of that mesh, so each coarse time level coincides with a reference
    time level.  Coarse solutions are transferred exactly to the (nested)
    reference mesh.

    Returns
    -------
    (ConvergenceReport, ConvergenceReport)
        Errors in ``l^p_tau(L^q)`` (right-endpoint sampling) and in the
        maximum over time levels of the nodal maximum.
    """
    if any(reference_n % n for n in levels):
        raise ValueError("every level must divide the reference resolution")
    ref_mesh = generate_structured_mesh(reference_n)
    ref_ops = assemble(ref_mesh)
    ref_stats = compute_mesh_stats(ref_mesh)
    if reference_tau is None:
        reference_tau = ref_stats.h**2
    # a BlowUpError here reports the step and time at which the reference failed
    ref = solve_semilinear(ref_ops, SchemeConfig(1.0, reference_tau, T), f, u0)
    ref_nodes = ref_mesh.nodes

    def level(n):
        t0 = time.perf_counter()
        mesh = generate_structured_mesh(n)
        ops = assemble(mesh)
        stats = compute_mesh_stats(mesh)
        tau = stats.h**2
        ratio = tau / reference_tau
        stride = int(round(ratio))
        if abs(ratio - stride) > 1e-9 * ratio:
            raise ValueError(f"tau={tau} is not a multiple of the reference step {reference_tau}")
        traj = solve_semilinear(ops, SchemeConfig(1.0, tau, T), f, u0)
        errs = np.empty((traj.n_steps + 1, ref_ops.ndof))
        for k, u in enumerate(traj.states):
            fine = _structured_eval(n, _full(ops, u), ref_nodes)[ref_mesh.interior_nodes]
            errs[k] = fine - ref.states[k * stride]
        lp = bochner_norm(ref_ops, errs[1:], p, q, tau)
        linf = float(np.abs(errs).max())
        dt = time.perf_counter() - t0
        return ConvergenceRow(n, stats.h, tau, lp, dt), ConvergenceRow(n, stats.h, tau, linf, dt)

    pairs = _map(level, list(levels), jobs)
    notes = {"reference_n": reference_n, "reference_tau": reference_tau, "T": T}
    rep_lp = ConvergenceReport("semilinear", "lp", [a for a, _ in pairs], p, q, False, dict(notes))
    rep_inf = ConvergenceReport("semilinear", "linf", [b for _, b in pairs], math.inf, math.inf, False, dict(notes))
    return rep_lp, rep_inf


def _fmt(x):
    return f"{x:.17g}"


def emit_report(report, path=None, header=None):
    """Write ``report`` as CSV and a companion file of log10 columns.

    Returns the CSV text.  With ``path`` set, also writes ``path`` and
    ``<stem>_log10.csv`` next to it.
    """
    if not report.rows:
        raise ValueError("empty report")
    buf = io.StringIO()
    buf.write(f"# dmrfem {__version__}\n")
    for line in header or []:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["case", "variant", "n", "h", "tau", "error", "runtime_s"])
    for r in report.rows:
        w.writerow([report.case_id, report.scheme_variant, r.n, _fmt(r.h), _fmt(r.tau), _fmt(r.error), f"{r.runtime:.6g}"])
    buf.write(f"# fitted_slope={report.fitted_slope:.4f}\n")
    text = buf.getvalue()
    if path is not None:
        path = str(path)
        with open(path, "w") as fh:
            fh.write(text)
        stem = path[:-4] if path.endswith(".csv") else path
        with open(stem + "_log10.csv", "w") as fh:
            fh.write(f"# dmrfem {__version__}\n")
            lw = csv.writer(fh, lineterminator="\n")
            lw.writerow(["case", "variant", "n", "log10_h", "log10_tau", "log10_error"])
            for r in report.rows:
                lw.writerow([report.case_id, report.scheme_variant, r.n,
                             _fmt(math.log10(r.h)), _fmt(math.log10(r.tau)), _fmt(math.log10(r.error))])
    return text
