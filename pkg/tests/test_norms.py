import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from dmrfem import FemFunction, assemble, bochner_norm, generate_structured_mesh, lq_norm, lumped_norm, theta_average, w1q_seminorm
from dmrfem.norms import elementwise_lumped_power, lq_norm_gauss

OPS = assemble(generate_structured_mesh(6))
N = OPS.ndof
finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
vectors = arrays(np.float64, N, elements=finite)
exponents = st.sampled_from([1.5, 2.0, 3.0, 4.0, math.inf])


def hat(ops, j=0):
    v = np.zeros(ops.ndof)
    v[j] = 1.0
    return v


def test_hat_values(ops8):
    j = 10
    v = hat(ops8, j)
    assert lq_norm(ops8, v, math.inf) == 1
    for q in (1.5, 2, 4):
        assert lumped_norm(ops8, v, q) == pytest.approx(ops8.D[j] ** (1 / q), rel=1e-14)


@pytest.mark.parametrize("q", [1.5, 2, 4, math.inf])
def test_zero(ops8, q):
    z = np.zeros(ops8.ndof)
    assert lq_norm(ops8, z, q) == 0
    assert lumped_norm(ops8, z, q) == 0
    assert w1q_seminorm(ops8, z, q) == 0


def test_q2_quadrature_matches_mass_form(ops8, rng):
    for v in rng.standard_normal((10, ops8.ndof)):
        assert lq_norm_gauss(ops8, v, 2) == pytest.approx(math.sqrt(v @ (ops8.Mc @ v)), rel=1e-12)


def test_lumped_q2_is_quadratic_form(ops8, rng):
    v = rng.standard_normal(ops8.ndof)
    assert lumped_norm(ops8, v, 2) ** 2 == pytest.approx(np.sum(ops8.D * v * v), rel=1e-14)


@pytest.mark.parametrize("r", [1.5, 2, 4])
def test_elementwise_lumped_power_sums(ops8, rng, r):
    v = rng.standard_normal(ops8.ndof)
    assert elementwise_lumped_power(ops8, v, r).sum() == pytest.approx(lumped_norm(ops8, v, r) ** r, rel=1e-12)


def test_lumped_equivalence_is_stable(ops_by_n):
    rng = np.random.default_rng(9)
    lo, hi = [], []
    for n in (8, 16, 32):
        ops = ops_by_n[n]
        r = [lumped_norm(ops, v, 4) / lq_norm(ops, v, 4) for v in rng.standard_normal((20, ops.ndof))]
        lo.append(min(r))
        hi.append(max(r))
    assert max(hi) / min(lo) < 3
    assert max(lo) / min(lo) < 1.2


def test_constant_patch_has_no_interior_gradient(ops8):
    from dmrfem.norms import element_gradients

    g = element_gradients(ops8, np.ones(ops8.ndof))
    inner = ~ops8.mesh.boundary[ops8.mesh.elements].any(axis=1)
    assert np.abs(g[inner]).max() < 1e-12


def test_hat_inverse_inequality(ops8):
    from dmrfem import compute_mesh_stats

    kappa = compute_mesh_stats(ops8.mesh).kappa_h
    v = hat(ops8, 24)
    for r in (1.5, 2, 4):
        lhs, rhs = w1q_seminorm(ops8, v, r), lumped_norm(ops8, v, r)
        assert lhs / rhs <= 3 / kappa
    # squared energy of a hat is its stiffness diagonal
    assert w1q_seminorm(ops8, v, 2) ** 2 == pytest.approx(4.0)


def test_bochner_single_entry(ops8, rng):
    v = rng.standard_normal(ops8.ndof)
    c = lq_norm(ops8, v, 2)
    assert bochner_norm(ops8, [v], 4, 2, 0.1) == pytest.approx(c * 0.1 ** 0.25)
    assert bochner_norm(ops8, np.zeros((3, ops8.ndof)), 4, 2, 0.1) == 0


def test_bochner_mixed_meshes(ops8):
    a = FemFunction(np.zeros(ops8.ndof), ops8.mesh)
    other = generate_structured_mesh(8)
    b = FemFunction(np.zeros(ops8.ndof), other)
    with pytest.raises(ValueError):
        bochner_norm(ops8, [a, b], 2, 2, 0.1)
    with pytest.raises(ValueError):
        bochner_norm(ops8, [], 2, 2, 0.1)


def test_theta_average():
    s = np.array([[1.0, 2.0], [3.0, 6.0], [5.0, 0.0]])
    np.testing.assert_array_equal(theta_average(s, 0), s[:-1])
    np.testing.assert_array_equal(theta_average(s, 1), s[1:])
    np.testing.assert_array_equal(theta_average(s[:2], 0.5), [[2.0, 4.0]])
    with pytest.raises(ValueError):
        theta_average(s[:1], 0.5)


@settings(max_examples=60, deadline=None)
@given(vectors, st.floats(-50, 50, allow_nan=False), exponents)
def test_homogeneity(v, s, q):
    for norm in (lq_norm, lumped_norm, w1q_seminorm):
        assert norm(OPS, s * v, q) == pytest.approx(abs(s) * norm(OPS, v, q), rel=1e-9, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(vectors, vectors, exponents)
def test_triangle_inequality(u, v, q):
    for norm in (lq_norm, lumped_norm, w1q_seminorm):
        lhs = norm(OPS, u + v, q)
        assert lhs <= norm(OPS, u, q) + norm(OPS, v, q) + 1e-12 * (1 + lhs)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (3, N), elements=finite), st.floats(-10, 10, allow_nan=False), st.sampled_from([1.5, 2, 4]))
def test_bochner_homogeneity(series, s, p):
    a = bochner_norm(OPS, s * series, p, 2, 0.05)
    assert a == pytest.approx(abs(s) * bochner_norm(OPS, series, p, 2, 0.05), rel=1e-9, abs=1e-9)
