"""Triangle quadrature rules in barycentric form."""

import numpy as np

__all__ = ["gauss7", "triangle_rule"]


def gauss7():
    """Seven-point Gauss rule on a triangle, exact for polynomials of degree 5.

    Returns
    -------
    bary : ndarray, shape (7, 3)
        Barycentric coordinates of the points.
    weights : ndarray, shape (7,)
        Weights summing to one; multiply by the element area.
    """
    r = np.sqrt(15.0)
    a1, a2 = (6.0 - r) / 21.0, (6.0 + r) / 21.0
    w1, w2 = (155.0 - r) / 1200.0, (155.0 + r) / 1200.0
    bary = np.array([
        [1 / 3, 1 / 3, 1 / 3],
        [a1, a1, 1 - 2 * a1],
        [a1, 1 - 2 * a1, a1],
        [1 - 2 * a1, a1, a1],
        [a2, a2, 1 - 2 * a2],
        [a2, 1 - 2 * a2, a2],
        [1 - 2 * a2, a2, a2],
    ])
    weights = np.array([9 / 40, w1, w1, w1, w2, w2, w2])
    return bary, weights


def _split(tri):
    # midpoint subdivision of a barycentric triangle into four
    a, b, c = tri
    ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
    return [np.array(t) for t in ([a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca])]


def triangle_rule(level=1):
    """Composite seven-point rule.

    ``level=1`` is the plain rule; each further level splits every
    subtriangle into four congruent pieces (4**(level-1) copies).
    """
    if level < 1:
        raise ValueError(f"quadrature level must be >= 1, got {level}")
    base_bary, base_w = gauss7()
    tris = [np.eye(3)]
    for _ in range(level - 1):
        tris = [s for t in tris for s in _split(t)]
    bary = np.concatenate([base_bary @ t for t in tris])
    weights = np.concatenate([base_w / len(tris)] * len(tris))
    return bary, weights
