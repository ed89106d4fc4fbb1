"""Replaying the level-slicing argument behind the weak-type bound for p < r.

Run: python3 demos/04_weak_type_trace.py
"""

from dyadlab.experiments import trace_instance

p, r = 1.5, 2.0
tr = trace_instance(10, p, r, seed=3, index=0)
print(f"p={p} r={r} eps={tr.eps} t0={tr.t0:.4f} [w,sigma]_Ap={tr.ap:.3f}")
for i, sf in enumerate(tr.subfamilies):
    print(f"part {i}: {sf.size} members, theta={sf.theta:.3f}, every E_Q flag holds: {sf.flags_ok}, "
          f"smallest margin {sf.min_e_margin:.3e}")
    print(f"  level set {sf.level_set:.4e} <= I1 + I2 = {sf.i1:.4e} + {sf.i2:.4e}")
    print(f"  I2 {sf.i2:.4e} <= w(top union) {sf.i2_union:.4e} <= w(M > 1) {sf.i2_maximal:.4e}")
    for row in sf.slice_rows[:6]:
        print(f"    slice {row.level:2d}: {row.count:4d} cubes, measured {row.measured:.3e} <= chain {row.chain:.3e}")
print(f"weak norm over [w,sigma]_Ap^(1/p) ||f||: {tr.end_to_end_ratio:.4f}")
