"""Sparse operators and their testing constants on a random sparse family.

Run: python3 demos/02_sparse_testing.py
"""

import numpy as np

from dyadlab import (
    GridFunction,
    characterize,
    prop_test_bounds,
    random_sparse,
    random_weight,
    sparsify,
    theorem_bounds,
    verify_sparse,
)
from dyadlab.norms import SparseOperator, dual_mass_witnesses, indicator_witnesses, norm_lower_bound

L, p, r = 10, 3.0, 2.0
rng = np.random.default_rng(5)
S = random_sparse(L, seed=rng)
w, sigma = random_weight(L, rng), random_weight(L, rng)

cert = verify_sparse(S)
print(f"Family with {len(S)} members, density theta={cert.theta:.3f}")
parts = sparsify(S, 0.75)
print(f"Split into {len(parts)} quarter-dense parts of sizes {[len(F) for F in parts]}")

chars = characterize(w, sigma, p)
print(f"[w,sigma]_Ap={chars.ap.value:.3f}  [w]_Ainf={chars.ainfty_w.value:.3f}  "
      f"[sigma]_Ainf={chars.ainfty_sigma.value:.3f}")

t, ts = prop_test_bounds(S, w, sigma, p, r, chars)
print(f"T  = {t.measured:.4f}  against {t.bound:.4f}  (ratio {t.ratio:.3f})")
print(f"T* = {ts.measured:.4f}  against {ts.bound:.4f}  (ratio {ts.ratio:.3f})")

bounds = theorem_bounds(w, sigma, p, r, chars)
witnesses = indicator_witnesses(S.members, L).extend(dual_mass_witnesses(S.members, sigma))
op = SparseOperator(S, r)
for norm, bound in (("strong", bounds.strong), ("weak", bounds.weak)):
    cmp = norm_lower_bound(op, w, sigma, p, norm, witnesses, bound)
    print(f"{norm:6s} norm >= {cmp.measured:.4f} (witness {cmp.witness}); bound {bound:.4f}; ratio {cmp.ratio:.3f}")

f = GridFunction(np.ones(1 << L))
print(f"A_S^r(sigma) ranges over [{op(f, sigma).values.min():.3f}, {op(f, sigma).values.max():.3f}]")
