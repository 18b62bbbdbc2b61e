"""Spectral calculus of the lumped discrete Laplacian.

``-A_h`` is self-adjoint and positive in the lumped inner product, so it
diagonalizes through the pencil ``S x = lambda D x``.  Fractional and
imaginary powers follow from the eigenpairs; the Balakrishnan integral
gives an independent route for negative powers that needs only shifted
solves.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import apply_Ah, as_coeffs
from .errors import CapabilityError
from .mesh import compute_mesh_stats
from .norms import lumped_norm

__all__ = [
    "EigenDecomposition",
    "eigendecompose",
    "fractional_power_apply",
    "fractional_power_quadrature",
    "imaginary_power_norm",
    "NumericalRangeSample",
    "numerical_range_sample",
    "gn_ratio",
    "gn_ratio_sweep",
    "sobolev_ratio_sweep",
    "resolvent_positivity",
    "extreme_eigenvalues",
    "DENSE_EIG_LIMIT",
]

DENSE_EIG_LIMIT = 5000


@dataclass
class EigenDecomposition:
    """Eigenpairs of ``S v = lambda D v``; columns of ``eigenvectors`` are D-orthonormal."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    D: np.ndarray

    def coefficients(self, v):
        return self.eigenvectors.T @ (self.D * as_coeffs(v))

    def apply(self, weights, v):
        """``sum_k weights_k (v_k^T D v) v_k``."""
        return self.eigenvectors @ (weights * self.coefficients(v))

    def power(self, z, v):
        """``(-A_h)^z v``; ``z`` may be complex."""
        if z == 0:
            return np.array(as_coeffs(v), copy=True)
        return self.apply(self.eigenvalues.astype(complex if np.iscomplexobj(z) else float) ** z, v)


def eigendecompose(ops, limit=DENSE_EIG_LIMIT):
    """Full dense decomposition of the pencil ``(S, D)``.

    Raises
    ------
    CapabilityError
        More than ``limit`` dofs; use the quadrature route instead.
    """
    if ops.ndof > limit:
        raise CapabilityError(
            f"{ops.ndof} dofs exceed the dense eigen limit {limit}; use fractional_power_quadrature"
        )
    # symmetric scaling D^{-1/2} S D^{-1/2} keeps the problem standard
    s = 1.0 / np.sqrt(ops.D)
    B = (ops.S.multiply(s[:, None]).multiply(s[None, :])).toarray()
    lam, W = la.eigh(B)
    return EigenDecomposition(lam, s[:, None] * W, ops.D.copy())


def _check_z(z):
    if not -1 <= z <= 1:
        raise ValueError(f"power must lie in [-1, 1], got {z}")


def fractional_power_apply(source, z, v):
    """``(-A_h)^z v`` for real ``z`` in [-1, 1].

    ``source`` is an :class:`EigenDecomposition` (spectral route) or a
    :class:`~dmrfem.assembly.DiscreteOperatorSet` (integral route).
    """
    _check_z(z)
    if isinstance(source, EigenDecomposition):
        return source.power(z, v)
    return fractional_power_quadrature(source, z, v)


def extreme_eigenvalues(ops):
    """Smallest and largest eigenvalue of ``-A_h``."""
    if ops.ndof <= 200:
        lam = la.eigh(ops.S.toarray(), np.diag(ops.D), eigvals_only=True)
        return float(lam[0]), float(lam[-1])
    Dm = sp.diags(ops.D).tocsc()
    lo = spla.eigsh(ops.S, k=1, M=Dm, sigma=0, which="LM", return_eigenvectors=False)[0]
    hi = spla.eigsh(ops.S, k=1, M=Dm, which="LA", return_eigenvectors=False, tol=1e-10)[0]
    return float(lo), float(hi)


def _gauss_panels(a, b, panels, order):
    # composite Gauss-Legendre in s = log t on [log a, log b]
    xg, wg = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(math.log(a), math.log(b), panels + 1)
    mid, half = (edges[1:] + edges[:-1]) / 2, (edges[1:] - edges[:-1]) / 2
    s = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    w = (half[:, None] * wg[None, :]).ravel()
    return np.exp(s), w


def fractional_power_quadrature(ops, z, v, panels=50, order=4, window=100.0, tail_terms=12):
    """``(-A_h)^z v`` from the Balakrishnan integral, no eigendecomposition.

    For ``z`` in (-1, 0), with ``s = -z``::

        (-A_h)^{-s} v = sin(pi s)/pi * int_0^inf t^{-s} (t - A_h)^{-1} v dt

    integrated on ``[lambda_min/window, lambda_max*window]`` with
    ``panels`` geometric panels of ``order``-point Gauss rules.  Both tails
    are summed from their convergent series in ``t/lambda`` (lower) and
    ``lambda/t`` (upper), which only need applications of ``A_h`` and
    ``A_h^{-1}``.  For ``z`` in (0, 1), ``(-A_h)^z = (-A_h)(-A_h)^{z-1}``.
    """
    _check_z(z)
    v = np.asarray(as_coeffs(v), dtype=float)
    if z == 0:
        return v.copy()
    if z == 1:
        return -apply_Ah(ops, v)
    if z == -1:
        return ops.solve_S(ops.D * v)
    if z > 0:
        return -apply_Ah(ops, fractional_power_quadrature(ops, z - 1, v, panels, order, window, tail_terms))
    s = -z
    lmin, lmax = extreme_eigenvalues(ops)
    a, b = lmin / window, lmax * window
    t, w = _gauss_panels(a, b, panels, order)
    Dv = ops.D * v
    acc = np.zeros_like(v)
    for tk, wk in zip(t, w):
        # (t - A_h)^{-1} v = (t D + S)^{-1} D v; dt = t ds
        acc += wk * tk ** (1 - s) * ops.solve_shifted(1.0 / tk, Dv / tk, cache=False)
    # lower tail: int_0^a t^{-s} (t+lam)^{-1} = sum_k (-1)^k a^{k+1-s} / ((k+1-s) lam^{k+1})
    lower = np.zeros_like(v)
    x = v
    for k in range(tail_terms):
        x = ops.solve_S(ops.D * x)  # (-A_h)^{-(k+1)} v
        lower += (-1) ** k * a ** (k + 1 - s) / (k + 1 - s) * x
    # upper tail: int_b^inf t^{-s} (t+lam)^{-1} = sum_k (-1)^k lam^k b^{-s-k} / (s+k)
    upper = np.zeros_like(v)
    x = v
    for k in range(tail_terms):
        upper += (-1) ** k * b ** (-s - k) / (s + k) * x
        x = -apply_Ah(ops, x)
    return math.sin(math.pi * s) / math.pi * (acc + lower + upper)


def imaginary_power_norm(decomp, t):
    """Operator norm of ``(-A_h)^{it}`` on the lumped L2 space.

    The matrix ``D^{1/2} V diag(lambda^{it}) V^T D^{1/2}`` (isometric to the
    operator) is formed explicitly and its spectral norm is computed by SVD.
    """
    r = np.sqrt(decomp.D)
    U = r[:, None] * decomp.eigenvectors  # orthogonal
    phase = np.exp(1j * t * np.log(decomp.eigenvalues))
    M = (U * phase[None, :]) @ U.T
    return float(la.norm(M, 2))


@dataclass
class NumericalRangeSample:
    points: np.ndarray
    r_estimate: float
    bound: float

    @property
    def violations(self):
        return int(np.sum(np.abs(self.points) > self.bound))


def _dual(v, q):
    a = np.abs(v)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(a > 0, a ** (q - 2) * v, 0.0)


def numerical_range_sample(ops, q, n_samples, complex_values=False, rng=None, adversarial=True):
    """Sample points ``(A_h v, v*)_h`` of the numerical range in the lumped q-norm.

    ``v`` is normalized to ``||v||_{h,q} = 1`` and ``v*`` is its nodal
    duality map ``|v|^{q-2} v``, rescaled so that ``(v*, v)_h = 1``.  The
    returned ``bound`` is ``(d+1)^2 / kappa_h^2``.
    """
    if not q > 1:
        raise ValueError("q must exceed 1")
    rng = np.random.default_rng(rng)
    n = ops.ndof
    vecs = []
    if adversarial:
        # top eigenvector and single hats excite the high end of the spectrum
        vecs.append(_extreme_vector(ops, "top"))
        vecs.extend(np.eye(n)[j] for j in rng.choice(n, size=min(n, 5), replace=False))
    while len(vecs) < n_samples:
        v = rng.standard_normal(n)
        if complex_values:
            v = v + 1j * rng.standard_normal(n)
        vecs.append(v)
    vecs = vecs[:n_samples]
    pts = np.empty(len(vecs), dtype=complex)
    for i, v in enumerate(vecs):
        v = v / lumped_norm(ops, v, q)
        vs = _dual(v, q)
        vs = vs / np.real(np.sum(ops.D * np.conj(vs) * v))
        pts[i] = np.sum(ops.D * apply_Ah(ops, v) * np.conj(vs))
    stats = compute_mesh_stats(ops.mesh)
    bound = (stats.dim + 1) ** 2 / stats.kappa_h**2
    return NumericalRangeSample(pts, float(np.max(np.abs(pts))), bound)


def gn_ratio(ops, v, q):
    """``||v||_inf / (||A_h v||_{h,q}^{d/2q} ||v||_{h,q}^{1-d/2q})``."""
    d = ops.mesh.dim
    e = d / (2 * q)
    num = np.max(np.abs(v))
    return float(num / (lumped_norm(ops, apply_Ah(ops, v), q) ** e * lumped_norm(ops, v, q) ** (1 - e)))


def _center_node(ops):
    x = ops.mesh.nodes[ops.mesh.interior_nodes]
    c = x.mean(axis=0)
    return int(np.argmin(np.sum((x - c) ** 2, axis=1)))


def _extreme_vector(ops, end="ground"):
    if ops.ndof <= 200:
        _, V = la.eigh(ops.S.toarray(), np.diag(ops.D))
        return V[:, 0] if end == "ground" else V[:, -1]
    Dm = sp.diags(ops.D).tocsc()
    if end == "ground":
        _, V = spla.eigsh(ops.S, k=1, M=Dm, sigma=0, which="LM")
    else:
        _, V = spla.eigsh(ops.S, k=1, M=Dm, which="LA", tol=1e-10)
    return V[:, 0]


def _probe_vectors(ops, n_samples, rng):
    n = ops.ndof
    hat = np.zeros(n)
    hat[_center_node(ops)] = 1.0
    vecs = [("hat", hat), ("ground", _extreme_vector(ops))]
    for i in range(n_samples):
        r = rng.standard_normal(n)
        vecs.append((f"random{i}", r))
        vecs.append((f"smooth{i}", ops.solve_S(ops.D * r)))
    return vecs


def gn_ratio_sweep(ops_family, q, n_samples=20, seed=0):
    """Largest Gagliardo-Nirenberg quotient per mesh.

    Samples: the hat at the most central node, the ground state, and
    ``n_samples`` random and smoothed-random vectors.  Returns a list of
    ``(max_ratio, argmax_label)``.
    """
    out = []
    for ops in ops_family:
        rng = np.random.default_rng(seed)
        best = max(((gn_ratio(ops, v, q), lab) for lab, v in _probe_vectors(ops, n_samples, rng)))
        out.append(best)
    return out


def sobolev_ratio_sweep(ops_family, q, alpha, n_samples=20, seed=0, decomps=None):
    """Largest ``||v||_inf / ||(-A_h)^alpha v||_{h,q}`` per mesh.

    ``alpha`` must lie in ``(d/(2q), 1]``.  Powers are taken from the
    eigendecomposition (computed unless given in ``decomps``).
    """
    out = []
    for i, ops in enumerate(ops_family):
        d = ops.mesh.dim
        if not q > d / 2:
            raise ValueError(f"q must exceed d/2 = {d / 2}")
        if not d / (2 * q) < alpha <= 1:
            raise ValueError(f"alpha must lie in ({d / (2 * q)}, 1], got {alpha}")
        dec = decomps[i] if decomps is not None else eigendecompose(ops)
        rng = np.random.default_rng(seed)
        best = max(
            (np.max(np.abs(v)) / lumped_norm(ops, dec.power(alpha, v), q), lab)
            for lab, v in _probe_vectors(ops, n_samples, rng)
        )
        out.append((float(best[0]), best[1]))
    return out


def resolvent_positivity(ops, ts=(0.01, 0.1, 1.0), n_samples=100, seed=0):
    """Smallest normalized entry of ``(I - t A_h)^{-1} v`` over nonnegative ``v``.

    Returns ``min_t,v min_j w_j / max_j |w_j|``; a value below ``-1e-12``
    witnesses a positivity violation.  Samples are random nonnegative
    vectors and unit vectors.
    """
    rng = np.random.default_rng(seed)
    n = ops.ndof
    vecs = [np.eye(n)[j] for j in range(min(n, 10))]
    vecs += [rng.random(n) * (rng.random(n) < 0.5) for _ in range(n_samples)]
    worst = np.inf
    for t in ts:
        for v in vecs:
            if not v.any():
                continue
            w = ops.solve_shifted(t, ops.D * v)
            worst = min(worst, float(w.min() / np.max(np.abs(w))))
    return worst
