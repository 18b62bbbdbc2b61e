"""Simplicial meshes: construction, validation, geometry and text I/O.

A :class:`Triangulation` stores node coordinates, element connectivity and
a per-node boundary flag.  Nodes whose flag is 0 carry a degree of freedom
(the space of piecewise linears vanishing on the boundary); the map from
node id to dof id is ``interior_index`` (``-1`` for boundary nodes).
"""

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from math import factorial

import numpy as np

from .errors import MeshFormatError, MeshValidationError

__all__ = [
    "Triangulation",
    "MeshStats",
    "AcutenessReport",
    "generate_structured_mesh",
    "check_acuteness",
    "compute_mesh_stats",
    "load_mesh",
    "save_mesh",
]


@dataclass(frozen=True, eq=False)
class Triangulation:
    """Conforming simplicial mesh in 2 or 3 dimensions.

    Elements with negative orientation are reordered on construction, so
    ``signed_volumes`` is always positive afterwards.
    """

    nodes: np.ndarray
    elements: np.ndarray
    boundary: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        elements = np.array(self.elements, dtype=np.int64)
        boundary = np.array(self.boundary, dtype=bool)
        if nodes.ndim != 2 or nodes.shape[1] not in (2, 3):
            raise MeshValidationError(f"nodes must have shape (N, 2) or (N, 3), got {nodes.shape}")
        d = nodes.shape[1]
        if elements.ndim != 2 or elements.shape[1] != d + 1:
            raise MeshValidationError(f"elements must have shape (M, {d + 1}), got {elements.shape}")
        if boundary.shape != (len(nodes),):
            raise MeshValidationError("boundary flags must have one entry per node")
        if not np.all(np.isfinite(nodes)):
            raise MeshValidationError("non-finite node coordinates")
        if len(elements) == 0:
            raise MeshValidationError("mesh has no elements")
        bad = (elements < 0) | (elements >= len(nodes))
        if bad.any():
            k = int(np.argwhere(bad.any(axis=1))[0, 0])
            raise MeshValidationError(f"element {k} has a vertex index out of range [0, {len(nodes)})")

        vol = _signed_volumes(nodes, elements)
        scale = np.ptp(nodes, axis=0).max() ** d
        degenerate = np.abs(vol) <= 1e-14 * scale
        if degenerate.any():
            k = int(np.argmax(degenerate))
            raise MeshValidationError(f"element {k} is degenerate")
        neg = vol < 0
        if neg.any():
            elements[neg, 0], elements[neg, 1] = elements[neg, 1].copy(), elements[neg, 0].copy()

        for name, arr in (("nodes", nodes), ("elements", elements), ("boundary", boundary)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        self._check_conformity()

    # -- derived data -------------------------------------------------------

    @property
    def dim(self):
        return self.nodes.shape[1]

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_elements(self):
        return len(self.elements)

    @cached_property
    def volumes(self):
        """Element areas (d=2) or volumes (d=3)."""
        return _signed_volumes(self.nodes, self.elements)

    @cached_property
    def interior_nodes(self):
        return np.flatnonzero(~self.boundary)

    @cached_property
    def interior_index(self):
        idx = np.full(self.n_nodes, -1, dtype=np.int64)
        idx[self.interior_nodes] = np.arange(len(self.interior_nodes))
        return idx

    @property
    def n_interior(self):
        return len(self.interior_nodes)

    @cached_property
    def gradients(self):
        """Barycentric-coordinate gradients, shape (M, d+1, d).

        Row ``j`` of element ``K`` is the (constant) gradient of the hat
        function of local vertex ``j`` restricted to ``K``.
        """
        x = self.nodes[self.elements]
        B = (x[:, 1:, :] - x[:, :1, :]).transpose(0, 2, 1)
        G = np.linalg.inv(B)  # rows are gradients of lambda_1..lambda_d
        g0 = -G.sum(axis=1, keepdims=True)
        return np.concatenate([g0, G], axis=1)

    @cached_property
    def facets(self):
        """Map sorted facet vertex tuple -> list of (element, opposite local vertex)."""
        table = {}
        d = self.dim
        for k, el in enumerate(self.elements.tolist()):
            for j in range(d + 1):
                f = tuple(sorted(el[:j] + el[j + 1:]))
                table.setdefault(f, []).append((k, j))
        return table

    @cached_property
    def boundary_facet_nodes(self):
        nodes = {v for f, owners in self.facets.items() if len(owners) == 1 for v in f}
        return np.array(sorted(nodes), dtype=np.int64)

    def _check_conformity(self):
        seen = {}
        for k, el in enumerate(self.elements.tolist()):
            key = tuple(sorted(el))
            if len(set(key)) != len(key):
                raise MeshValidationError(f"element {k} repeats a vertex")
            if key in seen:
                raise MeshValidationError(f"element {k} duplicates element {seen[key]}")
            seen[key] = k
        for f, owners in self.facets.items():
            if len(owners) > 2:
                raise MeshValidationError(f"facet {f} is shared by {len(owners)} elements")
            if len(owners) == 2:
                # the two elements must lie on opposite sides of the shared facet
                sides = [self._side(f, self.elements[k][j]) for k, j in owners]
                if sides[0] * sides[1] >= 0:
                    raise MeshValidationError(
                        f"elements {owners[0][0]} and {owners[1][0]} overlap across facet {f}"
                    )
        on_bdry = np.zeros(self.n_nodes, dtype=bool)
        on_bdry[self.boundary_facet_nodes] = True
        stray = self.boundary & ~on_bdry
        if stray.any():
            raise MeshValidationError(
                f"node {int(np.argmax(stray))} is flagged as boundary but does not lie on the mesh boundary"
            )

    def _side(self, facet, apex):
        x = self.nodes
        base = x[facet[0]]
        M = np.array([x[v] - base for v in facet[1:]] + [x[apex] - base])
        return np.sign(np.linalg.det(M))

    def lumped_node_measures(self):
        """Barycentric-domain measure of every node (each element gives |K|/(d+1) to each vertex)."""
        share = np.repeat(self.volumes / (self.dim + 1), self.dim + 1)
        return np.bincount(self.elements.ravel(), weights=share, minlength=self.n_nodes)


def _signed_volumes(nodes, elements):
    x = nodes[elements]
    B = x[:, 1:, :] - x[:, :1, :]
    d = nodes.shape[1]
    return np.linalg.det(B) / factorial(d)


@dataclass(frozen=True)
class MeshStats:
    """Geometric quantities entering the error and stability constants.

    Attributes
    ----------
    h : float
        Largest element diameter.
    kappa_h : float
        Smallest altitude (perpendicular from a vertex to the opposite facet)
        over all elements.
    nu : float
        Shape-regularity ratio ``max_K h_K / rho_K``.
    gamma : float
        Quasi-uniformity ratio ``max_K h / h_K``.
    node_measures : ndarray
        Barycentric-domain measure of every node.
    interior_nodes : ndarray
        Node ids of the dofs, used to slice ``lumped_measures``.
    """

    dim: int
    h: float
    kappa_h: float
    nu: float
    gamma: float
    area: float
    node_measures: np.ndarray = field(repr=False)
    interior_nodes: np.ndarray = field(repr=False)

    @property
    def lumped_measures(self):
        return self.node_measures[self.interior_nodes]


def _facet_measures(nodes, elements):
    # measure of the facet opposite each local vertex, shape (M, d+1)
    d = nodes.shape[1]
    out = np.empty(elements.shape, dtype=float)
    for j in range(d + 1):
        f = np.delete(elements, j, axis=1)
        x = nodes[f]
        E = x[:, 1:, :] - x[:, :1, :]
        gram = np.einsum("mik,mjk->mij", E, E)
        out[:, j] = np.sqrt(np.maximum(np.linalg.det(gram), 0.0)) / factorial(d - 1)
    return out


def element_diameters(t):
    x = t.nodes[t.elements]
    diam = np.zeros(t.n_elements)
    for a, b in combinations(range(t.dim + 1), 2):
        diam = np.maximum(diam, np.linalg.norm(x[:, a] - x[:, b], axis=1))
    return diam


def compute_mesh_stats(t):
    """Compute h, kappa_h, nu, gamma and barycentric measures of ``t``."""
    d = t.dim
    vol = t.volumes
    facets = _facet_measures(t.nodes, t.elements)
    altitudes = d * vol[:, None] / facets
    hK = element_diameters(t)
    rhoK = d * vol / facets.sum(axis=1)
    h = float(hK.max())
    return MeshStats(
        dim=d,
        h=h,
        kappa_h=float(altitudes.min()),
        nu=float((hK / rhoK).max()),
        gamma=float(h / hK.min()),
        area=float(vol.sum()),
        node_measures=t.lumped_node_measures(),
        interior_nodes=t.interior_nodes,
    )


def generate_structured_mesh(n, pattern="diagonal"):
    """Uniform triangulation of the unit square.

    Each of the ``n*n`` cells is cut by its diagonal from lower-left to
    upper-right, giving ``2*n**2`` right isosceles triangles.
    """
    if pattern != "diagonal":
        raise ValueError(f"unknown mesh pattern {pattern!r}")
    if int(n) != n or n < 2:
        raise ValueError(f"n must be an integer >= 2, got {n}")
    n = int(n)
    s = np.arange(n + 1) / n
    X, Y = np.meshgrid(s, s)
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    i, j = np.meshgrid(np.arange(n), np.arange(n))
    v00 = (j * (n + 1) + i).ravel()
    v10, v01, v11 = v00 + 1, v00 + n + 1, v00 + n + 2
    elements = np.concatenate([np.column_stack([v00, v10, v11]), np.column_stack([v00, v11, v01])])
    ii, jj = np.meshgrid(np.arange(n + 1), np.arange(n + 1))
    boundary = ((ii == 0) | (ii == n) | (jj == 0) | (jj == n)).ravel()
    return Triangulation(nodes, elements, boundary)


@dataclass
class AcutenessReport:
    """Outcome of the non-positive off-diagonal stiffness test.

    ``violating_pairs`` holds ``(i, j, value)`` for interior edges whose
    stiffness entry exceeds the tolerance.  ``angle_passed`` is the same
    verdict from opposite-angle sums (2-D only, ``None`` in 3-D).
    """

    passed: bool
    violating_pairs: list
    angle_passed: object
    tolerance: float


def _edge_stiffness(t):
    # stiffness entries over edges, accumulated from element contributions
    G = t.gradients
    vol = t.volumes
    entries = {}
    for a, b in combinations(range(t.dim + 1), 2):
        vals = vol * np.einsum("mk,mk->m", G[:, a], G[:, b])
        for (i, j), v in zip(np.sort(t.elements[:, [a, b]], axis=1).tolist(), vals.tolist()):
            entries[(i, j)] = entries.get((i, j), 0.0) + v
    return entries


def _interior_edges(t):
    out = set()
    for f, owners in t.facets.items():
        if len(owners) == 2:
            out.update(combinations(f, 2))
    return out


def check_acuteness(t):
    """Check that every interior edge has a non-positive stiffness entry.

    Edges lying on the boundary are skipped: only edges between two
    elements take part in the discrete maximum principle.
    """
    entries = _edge_stiffness(t)
    scale = max(abs(v) for v in entries.values())
    diag = np.zeros(t.n_nodes)
    G, vol = t.gradients, t.volumes
    for a in range(t.dim + 1):
        np.add.at(diag, t.elements[:, a], vol * np.einsum("mk,mk->m", G[:, a], G[:, a]))
    scale = max(scale, diag.max())
    tol = 1e-12 * scale
    inner = _interior_edges(t)
    violating = sorted((i, j, v) for (i, j), v in entries.items() if (i, j) in inner and v > tol)
    angle_ok = None
    if t.dim == 2:
        angle_ok = all(s <= np.pi + 1e-10 for s in _opposite_angle_sums(t).values())
    return AcutenessReport(not violating, violating, angle_ok, tol)


def _opposite_angle_sums(t):
    sums = {}
    for f, owners in t.facets.items():
        if len(owners) != 2:
            continue
        total = 0.0
        for k, j in owners:
            apex = t.nodes[t.elements[k][j]]
            u, w = t.nodes[f[0]] - apex, t.nodes[f[1]] - apex
            c = u @ w / (np.linalg.norm(u) * np.linalg.norm(w))
            total += np.arccos(np.clip(c, -1.0, 1.0))
        sums[f] = total
    return sums


def save_mesh(t, path, header=None):
    """Write ``t`` in the plain-text mesh format.

    ``header`` lines, if given, are written first as ``#`` comments.
    """
    lines = [f"# {h}" for h in (header or [])]
    lines.append(f"dim {t.dim}")
    lines.append(f"nodes {t.n_nodes}")
    for x, b in zip(t.nodes, t.boundary):
        lines.append(" ".join(f"{c:.17g}" for c in x) + f" {int(b)}")
    lines.append(f"elements {t.n_elements}")
    lines.extend(" ".join(str(v) for v in el) for el in t.elements.tolist())
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _content_lines(fh):
    for lineno, raw in enumerate(fh, start=1):
        s = raw.strip()
        if s and not s.startswith("#"):
            yield lineno, s.split()


def load_mesh(path):
    """Read a mesh written by :func:`save_mesh`."""
    with open(path) as fh:
        it = _content_lines(fh)

        def expect(keyword):
            try:
                lineno, tok = next(it)
            except StopIteration:
                raise MeshFormatError(f"unexpected end of file, expected '{keyword}'") from None
            if len(tok) != 2 or tok[0] != keyword:
                raise MeshFormatError(f"expected '{keyword} <int>'", lineno)
            try:
                return int(tok[1])
            except ValueError:
                raise MeshFormatError(f"bad integer {tok[1]!r}", lineno) from None

        def rows(count, width, convert):
            out = []
            for _ in range(count):
                try:
                    lineno, tok = next(it)
                except StopIteration:
                    raise MeshFormatError("unexpected end of file") from None
                if len(tok) != width:
                    raise MeshFormatError(f"expected {width} fields, got {len(tok)}", lineno)
                try:
                    out.append([convert(v) for v in tok])
                except ValueError:
                    raise MeshFormatError(f"cannot parse {' '.join(tok)!r}", lineno) from None
            return out

        d = expect("dim")
        if d not in (2, 3):
            raise MeshFormatError(f"unsupported dimension {d}")
        node_rows = rows(expect("nodes"), d + 1, float)
        elem_rows = rows(expect("elements"), d + 1, int)
        extra = next(it, None)
        if extra is not None:
            raise MeshFormatError("trailing content after elements", extra[0])

    arr = np.array(node_rows, dtype=float).reshape(-1, d + 1)
    flags = arr[:, d]
    if not np.all((flags == 0) | (flags == 1)):
        raise MeshValidationError("boundary flags must be 0 or 1")
    return Triangulation(arr[:, :d], np.array(elem_rows, dtype=np.int64).reshape(-1, d + 1), flags == 1)
