"""Error table for the benchmark problem, both load variants.

Takes about a minute per variant on one core.  Case 4 (backward Euler
with tau = h) is where the two variants part ways; the per-level slopes
show where the time error takes over.
"""

import sys

from dmrfem.experiments import run_case

levels = (8, 16, 32, 64)
for variant in sys.argv[1:] or ["A", "B"]:
    print(f"variant {variant}")
    for case in range(1, 6):
        rep = run_case(case, variant, levels)
        errs = "  ".join(f"{r.error:.3e}" for r in rep.rows)
        inc = " ".join(f"{s:.2f}" for s in rep.incremental_slopes)
        print(f"  case {case}: {errs}   slope {rep.fitted_slope:.3f}   per level [{inc}]")
