"""Acceptance suite: one test and one printed pass/fail line per criterion."""

import math
import time

import numpy as np

from dyadlab import GridFunction, SparseCollection, canonical_families, char_functional, sparse_apply, verify_sparse
from dyadlab.cli import main
from dyadlab.experiments import (
    ExperimentConfig,
    dyadic_sum_constant,
    instance_rng,
    lower_bound_experiment,
    prop_test_constants,
    random_instance,
    sharpness_sweep,
    theorem_constants,
    trace_instance,
)
from dyadlab.norms import carleson_gamma_ratios, single_cube_T, single_cube_Tstar
from dyadlab.norms import testing_T as t_report
from dyadlab.norms import testing_Tstar as tstar_report
from dyadlab.operators import haar_transform
from dyadlab.sparse import random_sparse
from dyadlab.weights import random_weight

SEED = 2024


def test_criterion_1_haar_weak_lower_bound(report_criterion):
    start = time.perf_counter()
    results = lower_bound_experiment(depth=10, p_values=(1.5, 2.0, 3.0), instances=100, seed=SEED)
    elapsed = time.perf_counter() - start
    slack = min(c.measured - (c.bound - 1e-9) for c in results)
    ok = len(results) == 300 and slack >= 0 and elapsed < 60
    report_criterion(1, ok, f"instances={len(results)} min(quotient - ap^(1/p) + 1e-9)={slack:.3e} "
                            f"time={elapsed:.1f}s")
    assert ok


def test_criterion_2_sharpness_scaling(report_criterion):
    start = time.perf_counter()
    res = sharpness_sweep(ExperimentConfig(command="sharpness", depth=14, p=4.0, r=2.0))
    elapsed = time.perf_counter() - start
    ap_ok = res.ap_fit.r2 >= 0.98 and 0.9 <= res.ap_fit.slope <= 1.1
    phi_ok = res.phi_fit.r2 >= 0.98 and 0.40 <= res.phi_fit.slope <= 0.60
    ok = ap_ok and phi_ok and elapsed < 300
    report_criterion(2, ok, f"ap slope={res.ap_fit.slope:.4f} (r2={res.ap_fit.r2:.4f}); "
                            f"phi lower-bound slope={res.phi_fit.slope:.4f} (r2={res.phi_fit.r2:.4f}); "
                            f"time={elapsed:.1f}s")
    assert ap_ok, "ap slope outside [0.9, 1.1] or poor fit"
    assert phi_ok, "phi lower-bound slope outside [0.40, 0.60] or poor fit"
    assert elapsed < 300


def test_criterion_3_weak_trace_flags(report_criterion):
    exponents = [(1.5, 2.0), (1.2, 3.0), (2.0, 3.0), (1.1, 1.5)]
    flags_ok, chain_ok, worst, finite = True, True, 0.0, True
    for i in range(50):
        p, r = exponents[i % len(exponents)]
        tr = trace_instance(10, p, r, SEED, i)
        flags_ok &= tr.flags_ok
        chain_ok &= tr.chain_ok
        finite &= math.isfinite(tr.end_to_end_ratio)
        worst = max(worst, tr.end_to_end_ratio)
    ok = flags_ok and finite
    report_criterion(3, ok, f"flags={flags_ok} chain={chain_ok} max end-to-end ratio={worst:.6g}")
    assert ok


def test_criterion_4_jensen_bridge(report_criterion):
    above, below, equal = True, True, 0.0
    for i in range(100):
        S, _, sigma, f = random_instance(8, instance_rng(SEED, i))
        fs = GridFunction(f.values * sigma.values)
        for r in (1.0, 1.5, 2.0, 3.0, 0.5, 0.8):
            lhs = sparse_apply(S, r, fs).values ** r
            rhs = char_functional(S, sigma, r, f).values
            if r == 1.0:
                equal = max(equal, float(np.max(np.abs(lhs - rhs) / rhs)))
            if r >= 1:
                above &= bool(np.all(lhs <= rhs * (1 + 1e-12)))
            else:
                below &= bool(np.all(lhs >= rhs * (1 - 1e-12)))
    ok = above and below and equal <= 1e-12
    report_criterion(4, ok, f"r>=1 dominated={above} r<1 reversed={below} r=1 max rel gap={equal:.2e}")
    assert ok


def test_criterion_5_dyadic_sum_depth_stability(report_criterion):
    growth = {}
    for s in (1.5, 2.0, 3.0):
        c6 = dyadic_sum_constant(6, s, 200, seed=SEED)
        c12 = dyadic_sum_constant(12, s, 200, seed=SEED)
        growth[s] = (c6, c12, c12 / c6)
    ok = all(g < 1.2 for _, _, g in growth.values())
    detail = " ".join(f"s={s}: {c6:.4f}->{c12:.4f} (x{g:.3f})" for s, (c6, c12, g) in growth.items())
    report_criterion(5, ok, detail)
    assert ok


def test_criterion_6_carleson_gamma(report_criterion):
    worst = {gamma: 0.0 for gamma in (0.0, 0.3, 0.7, 0.9)}
    families = []
    for i in range(100):
        rng = instance_rng(SEED, i)
        families.append((random_sparse(10, seed=rng), random_weight(10, rng)))
    for j, S in enumerate(canonical_families(10).values()):
        families.append((S, random_weight(10, instance_rng(SEED, 1000 + j))))
    for S, w in families:
        assert verify_sparse(S).half_sparse
        for gamma in worst:
            worst[gamma] = max(worst[gamma], float(np.max(carleson_gamma_ratios(S, w, gamma))))
    ok = worst[0.0] <= 2 + 1e-12 and all(math.isfinite(v) for v in worst.values())
    report_criterion(6, ok, " ".join(f"gamma={g}: max={v:.6g}" for g, v in worst.items()))
    assert ok


def test_criterion_7_theorem_consistency(report_criterion):
    parts = []
    ok = True
    for p, r in ((2.0, 1.0), (3.0, 2.0), (1.5, 2.0), (2.0, 2.0)):
        c8 = theorem_constants(8, p, r, 50, seed=SEED)
        c10 = theorem_constants(10, p, r, 50, seed=SEED)
        for label, a, b in (("strong", c8[0], c10[0]), ("weak", c8[1], c10[1])):
            if p == r and label == "weak":
                continue
            factor = max(a, b) / min(a, b)
            ok &= factor <= 1.5
            parts.append(f"{label}(p={p},r={r}) C={max(a, b):.4f} x{factor:.3f}")
    for p, r in ((3.0, 2.0), (2.0, 1.0)):
        t8, ts8 = prop_test_constants(8, p, r, 100, seed=SEED)
        t10, ts10 = prop_test_constants(10, p, r, 100, seed=SEED)
        for label, a, b in (("T", t8, t10), ("T*", ts8, ts10)):
            factor = max(a, b) / min(a, b)
            ok &= factor <= 1.5
            parts.append(f"{label}(p={p},r={r}) x{factor:.3f}")
    worst_rel = 0.0
    for i in range(100):
        rng = instance_rng(SEED, i)
        L = int(rng.integers(1, 11))
        w, sigma = random_weight(L, rng), random_weight(L, rng)
        r = float(rng.uniform(0.3, 3.0))
        p = max(1.05, float(r * rng.uniform(1.05, 3.0)))
        k = int(rng.integers(0, L + 1))
        S = SparseCollection(L, [(k, int(rng.integers(0, 1 << k)))])
        R = S.members[0]
        for got, closed in ((t_report(S, w, sigma, p, r).value, single_cube_T(R, w, sigma, p, r)),
                            (tstar_report(S, w, sigma, p, r).value, single_cube_Tstar(R, w, sigma, p, r))):
            worst_rel = max(worst_rel, abs(got - closed) / closed)
    ok &= worst_rel <= 1e-10
    parts.append(f"single-cube max rel err={worst_rel:.2e}")
    report_criterion(7, ok, "; ".join(parts))
    assert ok


def test_criterion_8_determinism_and_parseval(tmp_path, report_criterion):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    codes = (main(["battery", "--seed", "7", "--out", str(a)]), main(["battery", "--seed", "7", "--out", str(b)]))
    identical = a.read_bytes() == b.read_bytes()
    f = GridFunction(np.random.default_rng(SEED).standard_normal(1 << 14))
    direct = float(np.sum(f.values ** 2)) / (1 << 14)
    rel = abs(haar_transform(f).energy() - direct) / direct
    ok = identical and codes == (0, 0) and rel <= 1e-10
    report_criterion(8, ok, f"byte-identical={identical} exit codes={codes} parseval rel err={rel:.2e}")
    assert ok
