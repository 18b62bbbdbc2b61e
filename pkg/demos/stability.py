"""Explicit Euler below and far above the admissible step size.

With theta = 0 the step must satisfy
tau <= kappa_h^2 (2 sin theta_q - eps) / ((1 - 2 theta)(d+1)^2).
At the bound the benchmark run stays tame; a hundred times larger it explodes.
"""

import numpy as np

from dmrfem import BlowUpError, SchemeConfig, StabilityError, assemble, check_stability, compute_mesh_stats, generate_structured_mesh, solve_linear
from dmrfem.experiments import appendixB_problem

ops = assemble(generate_structured_mesh(32))
prob = appendixB_problem()
tau_max = check_stability(compute_mesh_stats(ops.mesh), SchemeConfig(0.0, 1.0, 1.0)).tau_max
print(f"tau_max = {tau_max:.4e}")

traj = solve_linear(ops, SchemeConfig(0.0, tau_max, 0.1), prob.g, prob.u0)
print(f"at tau_max: {traj.n_steps} steps, max|u| grows from {np.abs(traj.states[0]).max():.4e} to {np.abs(traj.states).max():.4e}")

try:
    solve_linear(ops, SchemeConfig(0.0, 100 * tau_max, 0.1), prob.g, prob.u0)
except StabilityError as exc:
    print("refused without force:", exc)

try:
    traj = solve_linear(ops, SchemeConfig(0.0, 100 * tau_max, 0.1), prob.g, prob.u0, force=True)
    print(f"forced: max|u| = {np.abs(traj.states).max():.3e}")
except BlowUpError as exc:
    print("forced run overflowed:", exc)

# Crank-Nicolson and backward Euler need no bound at all
print(check_stability(compute_mesh_stats(ops.mesh), SchemeConfig(0.5, 1.0, 1.0)))
