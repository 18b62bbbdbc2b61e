import math

import numpy as np
import pytest

from dmrfem import (
    BlowUpError,
    SchemeConfig,
    StabilityError,
    assemble,
    check_stability,
    compute_mesh_stats,
    generate_structured_mesh,
    l2_projection,
    lumped_norm,
    solve_linear,
    solve_semilinear,
    theta_q,
    truncate_nonlinearity,
)
from dmrfem.stepper import appendix_tau, dmr_ratio, n_steps, step_discrete


def sinsin(x, y):
    return np.sin(np.pi * x) * np.sin(np.pi * y)


def test_theta_q_values():
    assert theta_q(2) == pytest.approx(math.pi / 2)
    assert theta_q(4) == pytest.approx(math.pi / 3)
    vals = [theta_q(q) for q in (4, 8, 16, 1e6)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 0.01
    with pytest.raises(ValueError):
        theta_q(1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        SchemeConfig(1.2, 0.1, 1)
    with pytest.raises(ValueError):
        SchemeConfig(1, -0.1, 1)
    with pytest.raises(ValueError):
        SchemeConfig(1, 0.1, 1, load_variant="C")
    with pytest.raises(ValueError):
        SchemeConfig(0, 0.1, 1, epsilon=2.0)


@pytest.fixture(scope="module")
def stats8():
    return compute_mesh_stats(generate_structured_mesh(8))


def test_crank_nicolson_needs_no_bound(stats8):
    rep = check_stability(stats8, SchemeConfig(0.5, 10.0, 1.0))
    assert not rep.required and rep.satisfied and math.isinf(rep.tau_max)


def test_explicit_bound_equality(stats8):
    k2 = stats8.kappa_h**2
    tau = appendix_tau(stats8, 0.0)
    assert tau == pytest.approx(k2 / 9)
    rep = check_stability(stats8, SchemeConfig(0.0, tau, 1.0))
    assert rep.required and rep.satisfied
    assert rep.tau_max == pytest.approx(k2 / 9)
    assert not check_stability(stats8, SchemeConfig(0.0, 1.01 * tau, 1.0)).satisfied


def test_theta_quarter_bound(stats8):
    rep = check_stability(stats8, SchemeConfig(0.25, 1e-6, 1.0, epsilon=0.5))
    assert rep.tau_max == pytest.approx(stats8.kappa_h**2 / 3)


def test_n_steps_is_robust():
    assert n_steps(0.5, 0.1) == 5
    assert n_steps(1.0, 1 / 64) == 64
    assert n_steps(1.0, 0.3) == 3


def test_zero_problem(ops8):
    traj = solve_linear(ops8, SchemeConfig(1.0, 0.01, 0.1))
    assert traj.n_steps == 10
    assert not traj.states.any()


def test_refusal_and_force(ops8):
    cfg = SchemeConfig(0.0, 1.0, 2.0)
    with pytest.raises(StabilityError) as exc:
        solve_linear(ops8, cfg, u0=sinsin)
    assert exc.value.tau_max < 1.0
    with pytest.raises(BlowUpError):
        solve_linear(ops8, SchemeConfig(0.0, 1.0, 400.0), u0=sinsin, force=True)


def test_initial_value_is_projection(ops8):
    traj = solve_linear(ops8, SchemeConfig(1.0, 0.01, 0.01), u0=sinsin)
    np.testing.assert_allclose(traj.states[0], l2_projection(ops8, sinsin))


def test_one_step_residual(ops8):
    tau = 0.01
    g = lambda x, y, t: 1.0 + x * y * t  # noqa: E731
    traj = solve_linear(ops8, SchemeConfig(1.0, tau, tau), g, sinsin)
    from dmrfem.assembly import load_vector

    u0, u1 = traj.states
    lhs = ops8.D * u1 + tau * (ops8.S @ u1)
    rhs = ops8.D * u0 + tau * load_vector(ops8, g, tau)
    assert np.linalg.norm(lhs - rhs) <= 1e-10 * np.linalg.norm(rhs)


def test_variants_differ_but_agree_in_limit():
    from dmrfem.experiments import appendixB_problem

    prob = appendixB_problem()
    diffs = []
    for n in (8, 16, 32):
        ops = assemble(generate_structured_mesh(n))
        tau = 1 / n**2
        a = solve_linear(ops, SchemeConfig(0.5, tau, 0.1, "A"), prob.g, prob.u0).states[-1]
        b = solve_linear(ops, SchemeConfig(0.5, tau, 0.1, "B"), prob.g, prob.u0).states[-1]
        diffs.append(np.abs(a - b).max())
    assert diffs[0] > 0
    assert diffs[0] > diffs[1] > diffs[2]


def test_energy_decay(ops8):
    traj = solve_linear(ops8, SchemeConfig(1.0, 0.005, 0.2), u0=sinsin)
    norms = [lumped_norm(ops8, u, 2) for u in traj.states]
    assert all(b <= a for a, b in zip(norms, norms[1:]))


def test_semilinear_zero_matches_linear(ops8):
    cfg = SchemeConfig(1.0, 0.01, 0.1)
    a = solve_semilinear(ops8, cfg, np.zeros_like, sinsin).states
    b = solve_linear(ops8, cfg, None, sinsin).states
    np.testing.assert_array_equal(a, b)


def test_semilinear_needs_backward_euler(ops8):
    with pytest.raises(ValueError):
        solve_semilinear(ops8, SchemeConfig(0.5, 0.01, 0.1), np.zeros_like, sinsin)


def test_linear_reaction_decay_rate(ops_by_n):
    ops = ops_by_n[32]
    traj = solve_semilinear(ops, SchemeConfig(1.0, 1e-3, 0.1), lambda u: u, sinsin)
    j = int(np.argmax(traj.states[0]))
    rate = math.log(traj.states[-1][j] / traj.states[0][j]) / 0.1
    assert rate == pytest.approx(1 - 2 * math.pi**2, rel=0.1)


def test_semilinear_blow_up_reports_step(ops_by_n):
    ops = ops_by_n[8]
    with pytest.raises(BlowUpError) as exc:
        solve_semilinear(ops, SchemeConfig(1.0, 0.01, 5.0), lambda u: u * u, lambda x, y: 200 * sinsin(x, y))
    assert 0 < exc.value.step < 500


def test_truncation():
    f = truncate_nonlinearity(lambda u: u * u, 2.0)
    z = np.linspace(-2, 2, 41)
    np.testing.assert_array_equal(f(z), z * z)
    assert f(np.array(10.0)) == 4.0
    assert f(np.array(-10.0)) == 4.0
    assert np.max(f(np.linspace(-100, 100, 1001))) == 4.0
    g = truncate_nonlinearity(lambda u: u, 1.0)
    assert g(np.array(3 + 4j)) == pytest.approx(0.6 + 0.8j)
    with pytest.raises(ValueError):
        truncate_nonlinearity(f, 0)


def test_positivity_acute(ops_by_n, rng):
    ops = ops_by_n[8]
    for _ in range(10):
        u0 = rng.random(ops.ndof)
        src = rng.random((5, ops.ndof))
        u = step_discrete(ops, 1.0, 0.01, u0, src)
        assert u.min() >= -1e-12 * max(1.0, u.max())


def test_dmr_ratio_is_finite(ops8, rng):
    src = rng.standard_normal((16, ops8.ndof))
    r = dmr_ratio(ops8, 1 / 16, src)
    assert 0 < r < 10
