"""Lower bounds for the Haar square function on the power-weight family.

The sign witness at a single interval certifies the weak-type norm is at
least [w]_Ap^(1/p).  The a_k construction certifies a square-root lower
bound on the norm of the dual form, but only once the depth is much larger
than 1/eps; on a 14-level grid the a_k sums are cut short.  The last table
evaluates the same construction block by block on the exact weight, where
the depth can be taken into the thousands.

Run: python3 demos/03_square_function_sharpness.py
"""

from dyadlab.experiments import (
    DEFAULT_EPS_LIST,
    ExperimentConfig,
    block_phi_lower_bound,
    loglog_fit,
    sharpness_sweep,
)

res = sharpness_sweep(ExperimentConfig(command="sharpness", depth=14, p=4.0, r=2.0))
print(f"{'eps':>10} {'[w]_A4':>9} {'eps*[w]':>8} {'phi lower':>10} {'haar weak':>10} {'truncation':>10}")
for row in res.rows:
    print(f"{row.eps:10.6f} {row.ap:9.3f} {row.ap_times_eps:8.4f} {row.phi_lower:10.4f} "
          f"{row.haar_weak_lower:10.4f} {row.truncation:10.4f}")
print(f"slope of [w]_A4 vs 1/eps: {res.ap_fit.slope:.3f} (r2 {res.ap_fit.r2:.4f})")
print(f"slope of phi lower bound vs 1/eps on the grid: {res.phi_fit.slope:.3f} (r2 {res.phi_fit.r2:.4f})")

print()
inv = [1 / e for e in DEFAULT_EPS_LIST]
for depth in (14, 24, 200, 1000, 20000):
    fit = loglog_fit(inv, [block_phi_lower_bound(e, depth, 4.0) for e in DEFAULT_EPS_LIST])
    print(f"block evaluation, {depth:6d} levels: slope {fit.slope:.3f} (r2 {fit.r2:.4f})")
