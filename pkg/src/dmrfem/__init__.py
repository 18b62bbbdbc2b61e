"""Mass-lumped P1 finite elements for the heat equation.

Theta-scheme time stepping, discrete operator diagnostics (inverse
inequality, numerical range, fractional and imaginary powers) and
convergence studies on the unit square.
"""

__version__ = "0.1.0"

from .assembly import (
    DiscreteOperatorSet,
    FemFunction,
    apply_Ah,
    apply_Kh,
    apply_Kh_inverse,
    apply_Lh,
    assemble,
    interpolate,
    l2_projection,
    ritz_projection,
    solve_Ah,
    solve_Lh,
)
from .errors import (
    BlowUpError,
    CapabilityError,
    LinearSolveError,
    MeshFormatError,
    MeshValidationError,
    StabilityError,
)
from .mesh import (
    Triangulation,
    check_acuteness,
    compute_mesh_stats,
    generate_structured_mesh,
    load_mesh,
    save_mesh,
)
from .norms import bochner_norm, lq_norm, lumped_norm, theta_average, w1q_seminorm
from .stepper import (
    SchemeConfig,
    check_stability,
    solve_linear,
    solve_semilinear,
    theta_q,
    truncate_nonlinearity,
)
