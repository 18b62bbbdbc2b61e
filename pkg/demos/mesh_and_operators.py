"""Build the diagonal mesh, look at its geometry and at the lumped Laplacian.

Run: python3 demos/mesh_and_operators.py
"""

import numpy as np

from dmrfem import apply_Ah, assemble, check_acuteness, compute_mesh_stats, generate_structured_mesh

mesh = generate_structured_mesh(8)
stats = compute_mesh_stats(mesh)
print(f"{mesh.n_elements} triangles, {mesh.n_nodes} nodes, {mesh.n_interior} free")
print(f"h = {stats.h:.4f}   kappa_h = {stats.kappa_h:.4f}   nu = {stats.nu:.3f}   gamma = {stats.gamma:.3f}")

# the stiffness matrix has no positive off-diagonal entry: discrete maximum principle
print("acute:", check_acuteness(mesh).passed)

ops = assemble(mesh)
# interior rows reproduce the 5-point stencil; lumped masses are cell areas
j = 24
row = ops.S[j].toarray().ravel()
print("stiffness row:", np.round(row[row != 0], 12), "  |Lambda_j| =", ops.D[j])

# A_h of a hat: stencil divided by the lumped mass
hat = np.zeros(ops.ndof)
hat[j] = 1
a = apply_Ah(ops, hat)
print("A_h hat at the node and its 4 neighbours:", a[[j, j - 1, j + 1, j - 7, j + 7]])

# lumped vs consistent mass: row sums agree away from the boundary
print("row sum of Mc vs D:", ops.Mc[j].sum(), ops.D[j])
