"""Theta-scheme time stepping for the heat equation with mass lumping.

Linear problem, per step ``n -> n+1``::

    (D + tau*theta*S) u^{n+1} = (D - tau*(1-theta)*S) u^n + tau * b^{n+theta}

where ``b^{n+theta}`` is the theta-average of the load at ``t_n`` and
``t_{n+1}``.  Variant ``"A"`` uses the consistent load ``(g, phi_j)``;
variant ``"B"`` uses the lumped pairing of the L2 projection,
``D Mc^{-1} (g, phi_j)``.

Semilinear problem (backward Euler, explicit nonlinearity)::

    (D + tau*S) u^{n+1} = D u^n + tau * (f(u^n), phi_j)
"""

import math
from dataclasses import dataclass

import numpy as np

from .assembly import as_coeffs, l2_projection
from .errors import BlowUpError, StabilityError
from .mesh import compute_mesh_stats
from .norms import bochner_norm

__all__ = [
    "SchemeConfig",
    "StabilityReport",
    "TrajectorySeries",
    "theta_q",
    "check_stability",
    "appendix_tau",
    "n_steps",
    "step_discrete",
    "solve_linear",
    "solve_semilinear",
    "truncate_nonlinearity",
    "dmr_ratio",
]


def theta_q(q):
    """Sector angle ``arccos|1 - 2/q|`` of the lumped Laplacian in the q-norm."""
    if not q > 1:
        raise ValueError(f"q must exceed 1, got {q}")
    if np.isinf(q):
        return 0.0
    return math.acos(abs(1.0 - 2.0 / q))


@dataclass(frozen=True)
class SchemeConfig:
    """Time discretization parameters.

    ``epsilon`` is the margin in the step-size condition for ``theta < 1/2``;
    ``None`` selects ``sin(theta_q)``.
    """

    theta: float
    tau: float
    T: float
    load_variant: str = "A"
    q_for_stability: float = 2.0
    epsilon: float = None

    def __post_init__(self):
        if not 0 <= self.theta <= 1:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        if not self.tau > 0 or not self.T > 0:
            raise ValueError("tau and T must be positive")
        if self.load_variant not in ("A", "B"):
            raise ValueError(f"load_variant must be 'A' or 'B', got {self.load_variant!r}")
        eps = self.eps
        bound = 2 * math.sin(theta_q(self.q_for_stability))
        if not 0 < eps < bound:
            raise ValueError(f"epsilon must lie in (0, {bound:.6g}), got {eps}")

    @property
    def eps(self):
        if self.epsilon is None:
            return math.sin(theta_q(self.q_for_stability))
        return self.epsilon


@dataclass(frozen=True)
class StabilityReport:
    required: bool
    satisfied: bool
    tau_max: float


def check_stability(stats, cfg):
    """Compare ``cfg.tau`` with the largest admissible step for ``theta < 1/2``.

    ``tau_max = kappa_h**2 * (2 sin(theta_q) - eps) / ((1 - 2 theta) (d+1)**2)``;
    equality counts as satisfied.  For ``theta >= 1/2`` no bound applies and
    ``tau_max`` is ``inf``.
    """
    if cfg.theta >= 0.5:
        return StabilityReport(False, True, math.inf)
    s = math.sin(theta_q(cfg.q_for_stability))
    if cfg.eps >= 2 * s:
        raise ValueError("epsilon must be smaller than 2 sin(theta_q)")
    d = stats.dim
    tau_max = stats.kappa_h**2 * (2 * s - cfg.eps) / ((1 - 2 * cfg.theta) * (d + 1) ** 2)
    return StabilityReport(True, cfg.tau <= tau_max * (1 + 1e-12), tau_max)


def appendix_tau(stats, theta, q=2.0):
    """Explicit-regime step ``sin(theta_q) kappa_h^2 / ((1-2 theta)(d+1)^2)`` (tau at eps = sin(theta_q))."""
    return math.sin(theta_q(q)) * stats.kappa_h**2 / ((1 - 2 * theta) * (stats.dim + 1) ** 2)


def n_steps(T, tau):
    """``floor(T / tau)``, robust to round-off when ``T`` is a multiple of ``tau``."""
    return int(math.floor(T / tau * (1 + 1e-12)))


@dataclass
class TrajectorySeries:
    """States ``u^0 .. u^N`` (rows of ``states``) at times ``n * tau``."""

    states: np.ndarray
    tau: float
    mesh: object

    @property
    def times(self):
        return self.tau * np.arange(len(self.states))

    @property
    def n_steps(self):
        return len(self.states) - 1


def step_discrete(ops, theta, tau, u0, sources):
    """Advance ``(D_tau u)^n = A_h u^{n+theta} + s^n`` with given nodal sources.

    ``sources`` has one row per step, already time-averaged; its length
    fixes the number of steps.
    """
    sources = np.asarray(sources)
    N = len(sources)
    out = np.empty((N + 1, ops.ndof))
    out[0] = u0
    D, S = ops.D, ops.S
    for n in range(N):
        rhs = D * out[n] - tau * (1 - theta) * (S @ out[n]) + tau * D * sources[n]
        out[n + 1] = ops.solve_shifted(tau * theta, rhs)
    return out


def _initial(ops, u0):
    if u0 is None:
        return np.zeros(ops.ndof)
    if callable(u0):
        return l2_projection(ops, u0)
    return np.array(as_coeffs(u0), dtype=float)


def solve_linear(ops, cfg, g=None, u0=None, force=False):
    """Run the theta-scheme on ``[0, T]``.

    Parameters
    ----------
    ops : DiscreteOperatorSet
    cfg : SchemeConfig
    g : callable ``g(x, y, t)`` or None
        Source term; ``None`` is zero.
    u0 : callable ``u0(x, y)``, coefficient vector, or None
        Initial value; callables are L2-projected.
    force : bool
        Run even when the step-size bound for ``theta < 1/2`` is violated.

    Raises
    ------
    StabilityError
        ``theta < 1/2`` and ``tau`` exceeds ``tau_max`` without ``force``.
    """
    rep = check_stability(compute_mesh_stats(ops.mesh), cfg)
    if not rep.satisfied and not force:
        raise StabilityError(cfg.tau, rep.tau_max)
    theta, tau = cfg.theta, cfg.tau
    N = n_steps(cfg.T, tau)
    u = np.empty((N + 1, ops.ndof))
    u[0] = _initial(ops, u0)
    D, S = ops.D, ops.S

    if g is None:
        def load(t):
            return np.zeros(ops.ndof)
    else:
        pts, w, E = ops.quadrature
        ET = E.T.tocsr()
        x, y = pts[:, 0], pts[:, 1]

        def load(t):
            b = ET @ (w * np.asarray(g(x, y, t)))
            if cfg.load_variant == "B":
                b = D * ops.solve_Mc(b)
            return b

    cache = {}

    def load_at(k):
        if k not in cache:
            if len(cache) > 1:
                cache.clear()
            cache[k] = load(k * tau)
        return cache[k]

    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(N):
            b = 0.0
            if theta < 1:
                b = b + (1 - theta) * load_at(n)
            if theta > 0:
                b = b + theta * load_at(n + 1)
            rhs = D * u[n] - tau * (1 - theta) * (S @ u[n]) + tau * b
            u[n + 1] = ops.solve_shifted(tau * theta, rhs)
            if not np.all(np.isfinite(u[n + 1])):
                raise BlowUpError(n + 1, (n + 1) * tau)
    return TrajectorySeries(u, tau, ops.mesh)


def solve_semilinear(ops, cfg, f, u0):
    """Semi-implicit scheme for ``u' = Laplace u + f(u)``.

    ``f`` acts elementwise on arrays and is composed with the piecewise
    linear ``u^n`` at the quadrature points.  ``cfg.theta`` must be 1.

    Raises
    ------
    BlowUpError
        Non-finite state or nonlinearity values; carries the step index.
    """
    if cfg.theta != 1:
        raise ValueError("the semi-implicit scheme is defined for theta = 1 only")
    tau = cfg.tau
    N = n_steps(cfg.T, tau)
    u = np.empty((N + 1, ops.ndof))
    u[0] = _initial(ops, u0)
    _, w, E = ops.quadrature
    ET = E.T.tocsr()
    D = ops.D
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(N):
            fv = np.asarray(f(E @ u[n]), dtype=float)
            if not np.all(np.isfinite(fv)):
                raise BlowUpError(n, n * tau)
            rhs = D * u[n] + tau * (ET @ (w * fv))
            if not np.all(np.isfinite(rhs)):
                raise BlowUpError(n + 1, (n + 1) * tau)
            u[n + 1] = ops.solve_shifted(tau, rhs)
    return TrajectorySeries(u, tau, ops.mesh)


def truncate_nonlinearity(f, M):
    """Radial clamp ``z -> f(z)`` for ``|z| <= M`` and ``f(M z/|z|)`` outside."""
    if not M > 0:
        raise ValueError("truncation level must be positive")

    def f_trunc(z):
        z = np.asarray(z)
        a = np.abs(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            clamped = np.where(a > M, M * z / np.where(a > 0, a, 1), z)
        return f(clamped)

    return f_trunc


def dmr_ratio(ops, tau, sources, p=4.0, q=2.0):
    """Maximal-regularity quotient of one backward Euler solve with zero data.

    ``sources[n]`` is ``g^{n+1}`` (piecewise constant in time).  Returns
    ``(||D_tau u|| + ||A_h u^{.+1}||) / ||g||`` in ``l^p_tau`` of the
    lumped q-norm.
    """
    sources = np.asarray(sources, dtype=float)
    u = step_discrete(ops, 1.0, tau, np.zeros(ops.ndof), sources)
    du = np.diff(u, axis=0) / tau
    Au = -(ops.S @ u[1:].T).T / ops.D
    num = bochner_norm(ops, du, p, q, tau, norm="h") + bochner_norm(ops, Au, p, q, tau, norm="h")
    return num / bochner_norm(ops, sources, p, q, tau, norm="h")
