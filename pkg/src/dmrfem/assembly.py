"""P1 finite element matrices and the discrete operators built from them.

All matrices act on coefficient vectors over the interior nodes (the
dofs of the space of piecewise linears vanishing on the boundary).  With
stiffness ``S``, lumped mass ``D`` (a diagonal, stored as a vector) and
consistent mass ``Mc``:

=============  ===========================  ==============================
operator       coefficient form             defining relation
=============  ===========================  ==============================
``A_h``        ``-D^{-1} S``                (A u, v)_h = -(grad u, grad v)
``L_h``        ``-Mc^{-1} S``               (L u, v) = -(grad u, grad v)
``K_h``        ``Mc^{-1} D``                (K u, v) = (u, v)_h
``P_h``        ``Mc^{-1} b``                b_j = (f, phi_j)
``R_h``        ``S^{-1} b``                 b_j = (grad u, grad phi_j)
=============  ===========================  ==============================
"""

import threading
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import LinearSolveError
from .mesh import Triangulation
from .quadrature import triangle_rule

__all__ = [
    "FemFunction",
    "DiscreteOperatorSet",
    "assemble",
    "apply_Ah",
    "solve_Ah",
    "apply_Lh",
    "solve_Lh",
    "apply_Kh",
    "apply_Kh_inverse",
    "load_vector",
    "gradient_load_vector",
    "l2_projection",
    "ritz_projection",
    "interpolate",
    "DIRECT_SOLVE_LIMIT",
]

DIRECT_SOLVE_LIMIT = 20000
CG_RTOL = 1e-12


@dataclass(eq=False)
class FemFunction:
    """Coefficients of a piecewise linear function over the interior nodes of ``mesh``."""

    coeffs: np.ndarray
    mesh: Triangulation

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs)
        if self.coeffs.shape != (self.mesh.n_interior,):
            raise ValueError(f"expected {self.mesh.n_interior} coefficients, got shape {self.coeffs.shape}")

    @property
    def scalar_field(self):
        return "complex" if np.iscomplexobj(self.coeffs) else "real"

    def nodal_values(self):
        """Values at every mesh node, zero on the boundary."""
        out = np.zeros(self.mesh.n_nodes, dtype=self.coeffs.dtype)
        out[self.mesh.interior_nodes] = self.coeffs
        return out

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coeffs, dtype=dtype)


def as_coeffs(v):
    return v.coeffs if isinstance(v, FemFunction) else np.asarray(v)


class _Solver:
    """Solve ``A x = b`` for a fixed sparse SPD ``A``.

    Sparse LU up to ``DIRECT_SOLVE_LIMIT`` unknowns, Jacobi-preconditioned
    CG beyond.  Solves are serialized by a lock; results do not depend on
    the calling thread.
    """

    def __init__(self, A):
        self.A = sp.csc_matrix(A)
        self.n = self.A.shape[0]
        self._lock = threading.Lock()
        if self.n <= DIRECT_SOLVE_LIMIT:
            self._lu = spla.splu(self.A)
        else:
            self._lu = None
            self._prec = spla.LinearOperator(self.A.shape, matvec=lambda x, d=1.0 / self.A.diagonal(): d * x)

    def _real(self, b):
        if self._lu is not None:
            with self._lock:
                x = self._lu.solve(b)
        else:
            x, info = spla.cg(self.A, b, rtol=CG_RTOL, atol=0.0, M=self._prec, maxiter=10 * self.n)
            if info != 0:
                raise LinearSolveError("conjugate gradient did not converge", self._residual(x, b))
        if not np.all(np.isfinite(x)):
            raise LinearSolveError("solve produced non-finite values", self._residual(x, b))
        return x

    def _residual(self, x, b):
        nb = np.linalg.norm(b)
        with np.errstate(all="ignore"):
            return float(np.linalg.norm(self.A @ x - b) / (nb if nb > 0 else 1.0))

    def __call__(self, b):
        b = np.asarray(b)
        if np.iscomplexobj(b):
            return self._real(np.ascontiguousarray(b.real)) + 1j * self._real(np.ascontiguousarray(b.imag))
        return self._real(np.asarray(b, dtype=float))


class DiscreteOperatorSet:
    """Assembled matrices of one mesh with cached factorizations.

    Attributes
    ----------
    mesh : Triangulation
    S : scipy.sparse.csc_matrix
        Stiffness matrix ``(grad phi_i, grad phi_j)``.
    D : ndarray
        Lumped masses ``|Lambda_j|`` (diagonal of the lumped mass matrix).
    Mc : scipy.sparse.csc_matrix
        Consistent mass matrix ``(phi_i, phi_j)``.
    """

    def __init__(self, mesh, S, D, Mc, quad_level=1):
        self.mesh = mesh
        self.S = S
        self.D = D
        self.Mc = Mc
        self.quad_level = quad_level
        self._lock = threading.Lock()
        self._solvers = {}
        self._quad = None

    @property
    def ndof(self):
        return len(self.D)

    def _solver(self, key, build):
        with self._lock:
            s = self._solvers.get(key)
            if s is None:
                s = self._solvers[key] = _Solver(build())
            return s

    def solve_S(self, b):
        return self._solver("S", lambda: self.S)(b)

    def solve_Mc(self, b):
        return self._solver("Mc", lambda: self.Mc)(b)

    def solve_shifted(self, c, b, cache=True):
        """Solve ``(D + c S) x = b``; ``cache=False`` skips keeping the factorization."""
        if c == 0:
            return np.asarray(b) / self.D
        if not cache:
            return _Solver(sp.diags(self.D) + c * self.S)(b)
        return self._solver(("shift", float(c)), lambda: sp.diags(self.D) + c * self.S)(b)

    # -- quadrature ---------------------------------------------------------

    @property
    def quadrature(self):
        """Quadrature data ``(points, weights, E)`` of the composite 7-point rule.

        ``points`` has shape (P, 2); ``weights`` includes element areas;
        ``E`` maps dof coefficients to values at the points.
        """
        if self._quad is None:
            with self._lock:
                if self._quad is None:
                    self._quad = quadrature_data(self.mesh, self.quad_level)
        return self._quad

    def load_matrix(self):
        """Sparse ``Q`` with ``Q @ f(points) = [(f, phi_j)]_j``."""
        _, w, E = self.quadrature
        return E.T.multiply(w).tocsr()


def quadrature_data(mesh, level):
    if mesh.dim != 2:
        raise NotImplementedError("load quadrature is implemented for triangles only")
    bary, wq = triangle_rule(level)
    x = mesh.nodes[mesh.elements]  # (M, 3, 2)
    pts = np.einsum("qa,mad->mqd", bary, x).reshape(-1, 2)
    w = (mesh.volumes[:, None] * wq[None, :]).ravel()
    M, nq = mesh.n_elements, len(wq)
    dof = mesh.interior_index[mesh.elements]  # (M, 3)
    rows = np.repeat(np.arange(M * nq), 3)
    cols = np.repeat(dof, nq, axis=0).ravel()
    vals = np.tile(bary, (M, 1)).ravel()
    keep = cols >= 0
    E = sp.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=(M * nq, mesh.n_interior))
    return pts, w, E


def _full_matrices(mesh):
    d = mesh.dim
    G = mesh.gradients
    vol = mesh.volumes
    local_S = vol[:, None, None] * np.einsum("mak,mbk->mab", G, G)
    pattern = (np.ones((d + 1, d + 1)) + np.eye(d + 1)) / ((d + 1) * (d + 2))
    local_M = vol[:, None, None] * pattern[None]
    rows = np.repeat(mesh.elements, d + 1, axis=1).ravel()
    cols = np.tile(mesh.elements, (1, d + 1)).ravel()
    shape = (mesh.n_nodes, mesh.n_nodes)
    S = sp.coo_matrix((local_S.ravel(), (rows, cols)), shape=shape).tocsr()
    Mc = sp.coo_matrix((local_M.ravel(), (rows, cols)), shape=shape).tocsr()
    # symmetrize exactly: summation order may differ between (i, j) and (j, i)
    S = (S + S.T) * 0.5
    Mc = (Mc + Mc.T) * 0.5
    return S, Mc


def assemble(mesh, quad_level=1):
    """Assemble stiffness, lumped mass and consistent mass over the interior dofs."""
    S, Mc = _full_matrices(mesh)
    idx = mesh.interior_nodes
    S = sp.csc_matrix(S[idx][:, idx])
    Mc = sp.csc_matrix(Mc[idx][:, idx])
    D = mesh.lumped_node_measures()[idx]
    return DiscreteOperatorSet(mesh, S, D, Mc, quad_level=quad_level)


def apply_Ah(ops, v):
    """Lumped discrete Laplacian ``-D^{-1} S v``; complex input allowed."""
    return -(ops.S @ as_coeffs(v)) / ops.D


def solve_Ah(ops, f):
    """Unique ``w`` with ``A_h w = f``."""
    return -ops.solve_S(ops.D * as_coeffs(f))


def apply_Lh(ops, v):
    """Consistent-mass discrete Laplacian ``-Mc^{-1} S v``."""
    return -ops.solve_Mc(ops.S @ as_coeffs(v))


def solve_Lh(ops, f):
    return -ops.solve_S(ops.Mc @ as_coeffs(f))


def apply_Kh(ops, v):
    """``K_h v = Mc^{-1} D v``, characterized by ``(K_h u, w) = (u, w)_h``."""
    return ops.solve_Mc(ops.D * as_coeffs(v))


def apply_Kh_inverse(ops, v):
    return (ops.Mc @ as_coeffs(v)) / ops.D


def _eval(f, pts, *args):
    with np.errstate(all="ignore"):
        vals = np.asarray(f(pts[:, 0], pts[:, 1], *args))
    vals = np.broadcast_to(vals, pts.shape[:1]) if vals.ndim == 0 else vals
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("integrand produced non-finite values at quadrature points")
    return vals


def load_vector(ops, f, *args):
    """``b_j = (f, phi_j)`` by composite 7-point quadrature; ``f(x, y, *args)``."""
    pts, w, E = ops.quadrature
    return E.T @ (w * _eval(f, pts, *args))


def gradient_load_vector(ops, grad):
    """``b_j = (grad u, grad phi_j)`` with ``grad(x, y) -> (u_x, u_y)``."""
    mesh = ops.mesh
    pts, w, _ = ops.quadrature
    gx, gy = grad(pts[:, 0], pts[:, 1])
    gx = np.broadcast_to(gx, w.shape)
    gy = np.broadcast_to(gy, w.shape)
    nq = len(w) // mesh.n_elements
    # element-wise integral of grad u, shape (M, 2)
    gint = np.column_stack([(w * gx).reshape(-1, nq).sum(1), (w * gy).reshape(-1, nq).sum(1)])
    contrib = np.einsum("mak,mk->ma", mesh.gradients, gint)
    dof = mesh.interior_index[mesh.elements]
    keep = dof >= 0
    return np.bincount(dof[keep], weights=contrib[keep], minlength=ops.ndof)


def l2_projection(ops, f):
    """L2 projection onto the discrete space.

    ``f`` is either a callable ``f(x, y)`` or a discrete function, in which
    case the projection reproduces it.
    """
    if callable(f):
        b = load_vector(ops, f)
    else:
        b = ops.Mc @ as_coeffs(f)
    return ops.solve_Mc(b)


def ritz_projection(ops, u):
    """Energy projection.

    ``u`` is a gradient callable ``grad(x, y) -> (u_x, u_y)`` or a discrete
    function.
    """
    if callable(u):
        b = gradient_load_vector(ops, u)
    else:
        b = ops.S @ as_coeffs(u)
    return ops.solve_S(b)


def interpolate(ops, u, *args):
    """Nodal interpolant of ``u(x, y, *args)`` on the interior nodes."""
    x = ops.mesh.nodes[ops.mesh.interior_nodes]
    return np.broadcast_to(np.asarray(u(x[:, 0], x[:, 1], *args), dtype=float), (ops.ndof,)).copy()
