"""Muckenhoupt characteristics of random and power weights.

Run: python3 demos/01_weights.py
"""

import numpy as np

from dyadlab import ainfty_characteristic, ap_characteristic, dual_weight, power_weight, random_weight

rng = np.random.default_rng(1)

print("Random log-uniform weights on a depth-10 grid, one-weight setting:")
for B in (1.0, 2.0, 4.0, 8.0):
    w = random_weight(10, rng, log2_range=B)
    for p in (1.5, 3.0):
        ap = ap_characteristic(w, dual_weight(w, p), p)
        print(f"  B={B:<4} p={p:<4} [w]_Ap={ap.value:10.4f} at {ap.argmax}   [w]_Ainf={ainfty_characteristic(w).value:.4f}")

print()
print("The power weight x^(eps-1): [w]_Ap grows like 1/eps while [w]_Ainf stays moderate.")
for k in range(1, 9):
    eps = 2.0 ** -k
    w = power_weight(eps, 14)
    ap = ap_characteristic(w, dual_weight(w, 4.0), 4.0).value
    print(f"  eps=2^-{k}  total mass={w.total_mass:9.3f}  [w]_A4={ap:9.3f}  eps*[w]_A4={eps * ap:.4f}  "
          f"[w]_Ainf={ainfty_characteristic(w).value:.4f}")
