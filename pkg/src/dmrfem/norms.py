"""Norms of piecewise linear functions and of time series of them.

``q`` may be any value in ``(1, inf]``; pass ``np.inf`` for the maximum
norm.  Exponents in ``[1, inf)`` are accepted too since nothing below
breaks at ``q = 1``.
"""

import numpy as np

from .assembly import FemFunction, as_coeffs, quadrature_data

__all__ = [
    "lq_norm",
    "lumped_norm",
    "w1q_seminorm",
    "bochner_norm",
    "theta_average",
    "elementwise_lumped_power",
]


def _check_q(q):
    if not (q >= 1):
        raise ValueError(f"exponent must be >= 1 or inf, got {q}")


def lq_norm(ops, v, q, quad_level=None):
    """L^q norm of the piecewise linear function with coefficients ``v``.

    q=2 uses the consistent mass matrix and q=inf the nodal maximum (both
    exact); other exponents use the composite 7-point rule at level
    ``quad_level`` (defaults to the level ``ops`` was assembled with).
    """
    _check_q(q)
    v = as_coeffs(v)
    if np.isinf(q):
        return float(np.max(np.abs(v), initial=0.0))
    if q == 2:
        return float(np.sqrt(max(np.real(np.vdot(v, ops.Mc @ v)), 0.0)))
    if quad_level is None or quad_level == ops.quad_level:
        _, w, E = ops.quadrature
    else:
        _, w, E = quadrature_data(ops.mesh, quad_level)
    vals = np.abs(E @ v)
    return float(np.sum(w * vals**q) ** (1.0 / q))


def lq_norm_gauss(ops, v, q, level=1):
    """L^q norm by quadrature for every exponent, including q=2."""
    _, w, E = quadrature_data(ops.mesh, level)
    return float(np.sum(w * np.abs(E @ as_coeffs(v)) ** q) ** (1.0 / q))


def lumped_norm(ops, v, q):
    """Mesh-dependent norm ``(sum_j |v_j|^q |Lambda_j|)^(1/q)``."""
    _check_q(q)
    a = np.abs(as_coeffs(v))
    if np.isinf(q):
        return float(np.max(a, initial=0.0))
    return float(np.sum(a**q * ops.D) ** (1.0 / q))


def elementwise_lumped_power(ops, v, r):
    """Per-element ``|K|/(d+1) * sum_{vertices} |v_j|^r``; sums to ``lumped_norm**r``."""
    mesh = ops.mesh
    nodal = np.zeros(mesh.n_nodes)
    nodal[mesh.interior_nodes] = np.abs(as_coeffs(v)) ** r
    return mesh.volumes / (mesh.dim + 1) * nodal[mesh.elements].sum(axis=1)


def element_gradients(ops, v):
    """Constant gradient of ``v`` on each element, shape (M, d)."""
    mesh = ops.mesh
    v = as_coeffs(v)
    nodal = np.zeros(mesh.n_nodes, dtype=v.dtype)
    nodal[mesh.interior_nodes] = v
    return np.einsum("mak,ma->mk", mesh.gradients, nodal[mesh.elements])


def w1q_seminorm(ops, v, q):
    """``||grad v||_{L^q}`` (Euclidean length of the gradient), exact."""
    _check_q(q)
    g = np.sqrt(np.sum(np.abs(element_gradients(ops, v)) ** 2, axis=1))
    if np.isinf(q):
        return float(g.max(initial=0.0))
    return float(np.sum(ops.mesh.volumes * g**q) ** (1.0 / q))


def _series_array(series):
    if isinstance(series, np.ndarray):
        if series.ndim != 2 or len(series) == 0:
            raise ValueError("series must be a nonempty 2-D array (steps x dofs)")
        return series
    items = list(series)
    if not items:
        raise ValueError("series must be nonempty")
    meshes = {id(v.mesh) for v in items if isinstance(v, FemFunction)}
    if len(meshes) > 1:
        raise ValueError("series entries live on different meshes")
    return np.stack([as_coeffs(v) for v in items])


def bochner_norm(ops, series, p, q, tau, norm="lq"):
    """Discrete ``l^p_tau(L^q)`` norm ``(sum_n ||v^n||^p tau)^(1/p)``.

    ``norm`` selects the spatial norm: ``"lq"`` (exact L^q) or ``"h"``
    (lumped).
    """
    if not (1 <= p < np.inf):
        raise ValueError(f"temporal exponent must lie in [1, inf), got {p}")
    if tau <= 0:
        raise ValueError("tau must be positive")
    spatial = {"lq": lq_norm, "h": lumped_norm}[norm]
    arr = _series_array(series)
    vals = np.array([spatial(ops, v, q) for v in arr])
    return float(np.sum(vals**p * tau) ** (1.0 / p))


def theta_average(series, theta):
    """``v^{n+theta} = (1-theta) v^n + theta v^{n+1}``; one entry shorter than ``series``."""
    if not 0 <= theta <= 1:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    arr = _series_array(series)
    if len(arr) < 2:
        raise ValueError("need at least two entries to average")
    return (1 - theta) * arr[:-1] + theta * arr[1:]
