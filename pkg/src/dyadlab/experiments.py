"""Experiment drivers: sharpness sweep, witness lower bounds, trace batteries.

Every random instance is built from a generator seeded with
``(seed, instance_index)``, so results do not depend on evaluation order or
on how many worker processes are used.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .grid import (
    DEFAULT_DEPTH,
    MAX_DEPTH,
    DyadicInterval,
    ExponentParams,
    GridFunction,
    RegimeError,
    lorentz_p1_norm,
    lp_norm,
)
from .norms import (
    BoundComparison,
    SparseOperator,
    WitnessFamily,
    carleson_gamma_ratios,
    dual_mass_witnesses,
    dyadic_sum_check,
    haar_sign_witness_quotients,
    indicator_witnesses,
    norm_lower_bound,
    prop_test_bounds,
    random_witnesses,
    single_cube_T,
    single_cube_Tstar,
    strong_bound,
    testing_T,
    testing_Tstar,
    weak_bound,
    weaktype_trace,
)
from .operators import (
    CoefficientFamily,
    char_functional,
    haar_transform,
    sparse_accumulate,
)
from .sparse import (
    DensityProfile,
    SparseCollection,
    principal_cubes,
    random_sparse,
    verify_sparse,
)
from .weights import (
    Weight,
    ap_characteristic,
    ainfty_characteristic,
    characterize,
    dual_weight,
    power_weight,
    random_weight,
)

DEFAULT_EPS_LIST = tuple(2.0 ** -i for i in range(1, 9))
COMMANDS = ("characterize", "testing", "norms", "sharpness", "weak-trace", "battery")
FIT_R2_MIN = 0.98


def instance_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(index)])


@dataclass
class ExperimentConfig:
    command: str = "battery"
    depth: int = DEFAULT_DEPTH
    p: float = 2.0
    r: float = 1.0
    eps_list: tuple = DEFAULT_EPS_LIST
    seed: int = 0
    instances: int = 20
    indicators: bool = True
    dual_mass: bool = True
    random_witnesses: int = 4
    ascent_rounds: int = 0
    theta_target: float = 0.75
    log2_range: float = 4.0
    one_weight: bool = False
    out: str | None = None
    format: str = "csv"
    jobs: int = 1

    def validate(self) -> "ExperimentConfig":
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if not 0 <= self.depth <= MAX_DEPTH:
            raise ValueError(f"depth must lie in [0, {MAX_DEPTH}]")
        if self.format not in ("csv", "json"):
            raise ValueError("format must be csv or json")
        if self.instances < 0 or self.jobs < 1:
            raise ValueError("instances must be >= 0 and jobs >= 1")
        params = ExponentParams(self.p, self.r)
        if self.command == "weak-trace" and params.regime != "p<r":
            raise RegimeError("weak-trace requires 1 < p < r")
        if self.command == "sharpness":
            if self.p <= 2:
                raise RegimeError("the sharpness sweep targets p > 2")
            if len(self.eps_list) < 5:
                raise ValueError("the sharpness sweep needs at least 5 eps values")
            if any(not 0 < e <= 1 for e in self.eps_list):
                raise ValueError("eps values must lie in (0, 1]")
        if self.command == "norms" and self.p == self.r:
            raise RegimeError("no weak-type bound at p = r")
        return self


def random_instance(depth: int, rng: np.random.Generator, p: float | None = None, log2_range: float = 4.0,
                    one_weight: bool = False, profile: DensityProfile = DensityProfile()):
    """A sparse family, a weight pair and a positive test function."""
    S = random_sparse(depth, profile, rng)
    w = random_weight(depth, rng, log2_range)
    sigma = dual_weight(w, p) if one_weight else random_weight(depth, rng, log2_range)
    f = GridFunction(2.0 ** rng.uniform(-log2_range, log2_range, 1 << depth))
    return S, w, sigma, f


# --------------------------------------------------------------------------
# sharpness of the square-function weak bound
# --------------------------------------------------------------------------

def build_ak_family(eps: float, depth: int) -> list[GridFunction]:
    """``a_k = eps^{1/2} sum_{j=k+1}^{depth} 2^{-eps(j-k)} 1_{[2^-j, 2^{-j+1})}``, k = 1 .. depth-1."""
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    N = 1 << depth
    out = []
    for k in range(1, depth):
        v = np.zeros(N)
        for j in range(k + 1, depth + 1):
            v[N >> j:N >> (j - 1)] = math.sqrt(eps) * 2.0 ** (-eps * (j - k))
        out.append(GridFunction(v))
    return out


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    r2: float
    n: int

    @property
    def conclusive(self) -> bool:
        return self.r2 >= FIT_R2_MIN


def loglog_fit(x, y) -> SlopeFit:
    res = stats.linregress(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)))
    return SlopeFit(float(res.slope), float(res.intercept), float(res.rvalue ** 2), len(x))


@dataclass
class SharpnessRow:
    eps: float
    depth: int
    p: float
    ap: float
    ainfty: float
    ap_times_eps: float
    dual_lhs: float
    lorentz_rhs: float
    phi_lower: float
    haar_weak_lower: float
    haar_ratio: float
    truncation: float


def sharpness_row(eps: float, depth: int, p: float, exclude_tail: int = 0) -> SharpnessRow:
    """One point of the power-weight sweep.

    ``phi_lower`` is the dual-form left side over the Lorentz right side,
    i.e. the lower bound on ``Phi([w]_{A_p})`` forced by the a_k family.
    ``exclude_tail`` drops the last a_k (k near depth), whose geometric
    sums are most truncated.
    """
    p_dual = p / (p - 1.0)
    w = power_weight(eps, depth)
    sigma = dual_weight(w, p)
    ap = ap_characteristic(w, sigma, p).value
    ainf = ainfty_characteristic(w).value
    ak = build_ak_family(eps, depth)
    ak = ak[:len(ak) - exclude_tail] if exclude_tail else ak
    acc = np.zeros(1 << depth)
    sq = np.zeros(1 << depth)
    for k, a in enumerate(ak, start=1):
        Q = DyadicInterval(k, 0)
        avg = float(GridFunction(a.values * w.values).node_averages[Q.node])
        acc[Q.cells(depth)] += avg ** 2
        sq += a.values ** 2
    lhs = lp_norm(GridFunction(np.sqrt(acc)), sigma, p_dual)
    rhs = lorentz_p1_norm(GridFunction(np.sqrt(sq)), w, p_dual)
    haar = float(np.max(haar_sign_witness_quotients(w, sigma, p)[1:]))
    return SharpnessRow(
        eps=eps, depth=depth, p=p, ap=ap, ainfty=ainf, ap_times_eps=ap * eps,
        dual_lhs=lhs, lorentz_rhs=rhs, phi_lower=lhs / rhs,
        haar_weak_lower=haar, haar_ratio=haar / ap ** (1.0 / p),
        truncation=1.0 - 2.0 ** (-eps * (depth - 1)),
    )


@dataclass
class SharpnessResult:
    rows: list[SharpnessRow]
    ap_fit: SlopeFit
    phi_fit: SlopeFit

    @property
    def label(self) -> str:
        return "slope of the power-weight family"


def sharpness_sweep(config: ExperimentConfig) -> SharpnessResult:
    if config.p <= 2:
        raise RegimeError("the sharpness sweep targets p > 2")
    if len(config.eps_list) < 5:
        raise ValueError("the sharpness sweep needs at least 5 eps values")
    rows = _map(_sharpness_job, [(e, config.depth, config.p) for e in config.eps_list], config.jobs)
    fit_rows = [r for r in rows if r.eps < 1]
    inv = [1.0 / r.eps for r in fit_rows]
    return SharpnessResult(rows, loglog_fit(inv, [r.ap for r in fit_rows]),
                           loglog_fit(inv, [r.phi_lower for r in fit_rows]))


def _sharpness_job(args):
    return sharpness_row(*args)


def block_phi_lower_bound(eps: float, blocks: int, p: float) -> float:
    """Continuum version of ``phi_lower`` with the a_k family truncated after ``blocks`` blocks.

    Every function in the construction is constant on ``[2^-j, 2^{-j+1})``,
    so with the exact weight ``x^{eps-1}`` and its dual power the left and
    right sides reduce to closed-form sums over ``j``; this reaches depths
    far beyond the grid.  Sums of huge terms are carried in base-2 logs.
    """
    if not 0 < eps <= 1 or blocks < 2:
        raise ValueError("need eps in (0, 1] and at least two blocks")
    p_dual = p / (p - 1.0)
    beta = (1.0 - eps) / (p - 1.0)
    J = blocks
    k = np.arange(1, J, dtype=float)
    q = 2.0 ** (-2.0 * eps)
    # log2 <a_k w>_{[0, 2^-k)}
    log_avg = (k * (1.0 - eps)
               + math.log2(math.expm1(eps * math.log(2.0)) / math.sqrt(eps) * q / -math.expm1(-2.0 * eps * math.log(2.0)))
               + np.log2(-np.expm1(-2.0 * eps * (J - k) * math.log(2.0))))
    # block j carries sum_{k<j} <a_k w>^2, j = 2 .. J
    inner = np.logaddexp2.accumulate(2.0 * log_avg)
    j = np.arange(2, J + 1, dtype=float)
    log_sigma = -j * (beta + 1.0) + math.log2((2.0 ** (beta + 1.0) - 1.0) / (beta + 1.0))
    # the bottom cell [0, 2^-J) carries the full sum
    inner = np.r_[inner, inner[-1]]
    log_sigma = np.r_[log_sigma, -J * (beta + 1.0) - math.log2(beta + 1.0)]
    terms = p_dual / 2.0 * inner + log_sigma
    log_lhs = np.logaddexp2.reduce(terms) / p_dual
    # sum_k a_k^2 on block j, increasing in j
    jj = np.arange(1, J + 1, dtype=float)
    a2 = eps * q * -np.expm1(-2.0 * eps * (jj - 1.0) * math.log(2.0)) / -math.expm1(-2.0 * eps * math.log(2.0))
    a = np.sqrt(a2)
    mass = -np.expm1(-eps * (J - jj + 1.0) * math.log(2.0)) * 2.0 ** (-(jj - 1.0) * eps) / eps
    rhs = float(np.sum(np.diff(np.r_[0.0, a]) * mass ** (1.0 / p_dual)))
    return float(2.0 ** log_lhs / rhs)


# --------------------------------------------------------------------------
# one-weight lower bound for the Haar square function
# --------------------------------------------------------------------------

def lower_bound_instance(w: Weight, p: float, meta: dict | None = None) -> BoundComparison:
    """Best sign-witness weak quotient against ``[w]_{A_p}^{1/p}``."""
    sigma = dual_weight(w, p)
    q = haar_sign_witness_quotients(w, sigma, p)
    n = int(np.argmax(q[1:])) + 1
    ap = ap_characteristic(w, sigma, p).value
    I = DyadicInterval.from_node(n)
    return BoundComparison("haar_weak_sign_witness", float(q[n]), ap ** (1.0 / p),
                           dict(meta or {}, p=p, depth=w.depth), f"sign:{I.level}:{I.index}")


def lower_bound_experiment(depth: int = 10, p_values=(1.5, 2.0, 3.0), instances: int = 100, seed: int = 0,
                           log2_range: float = 4.0) -> list[BoundComparison]:
    out = []
    for i in range(instances):
        w = random_weight(depth, instance_rng(seed, i), log2_range)
        for p in p_values:
            out.append(lower_bound_instance(w, p, {"seed": seed, "instance": i}))
    return out


# --------------------------------------------------------------------------
# monitored constants
# --------------------------------------------------------------------------

def build_witnesses(S: SparseCollection, w: Weight, sigma: Weight, rng: np.random.Generator,
                    config: ExperimentConfig) -> WitnessFamily:
    fam = WitnessFamily()
    anchors = S.members if len(S) else (DyadicInterval(0, 0),)
    if config.indicators:
        fam.extend(indicator_witnesses(anchors, S.depth))
    if config.dual_mass:
        fam.extend(dual_mass_witnesses(anchors, sigma))
    if config.random_witnesses:
        fam.extend(random_witnesses(S.depth, rng, config.random_witnesses, config.log2_range))
    return fam


def prop_test_instance(depth, p, r, seed, index, log2_range=4.0) -> tuple[BoundComparison, BoundComparison | None]:
    S, w, sigma, _ = random_instance(depth, instance_rng(seed, index), p, log2_range)
    return prop_test_bounds(S, w, sigma, p, r, meta={"seed": seed, "instance": index})


def prop_test_constants(depth, p, r, instances, seed=0, log2_range=4.0):
    """Largest ``T / rhs`` and ``T* / rhs`` over seeded random instances."""
    t_max, ts_max = 0.0, 0.0
    for i in range(instances):
        t, ts = prop_test_instance(depth, p, r, seed, i, log2_range)
        t_max = max(t_max, t.ratio)
        if ts is not None:
            ts_max = max(ts_max, ts.ratio)
    return t_max, ts_max


def theorem_instance(depth, p, r, seed, index, config: ExperimentConfig | None = None):
    """Witness lower bounds for the strong and weak norms of ``A_S^r(. sigma)`` against the theorem bounds."""
    config = config or ExperimentConfig(command="norms", depth=depth, p=p, r=r)
    rng = instance_rng(seed, index)
    S, w, sigma, _ = random_instance(depth, rng, p, config.log2_range, config.one_weight)
    chars = characterize(w, sigma, p)
    fam = build_witnesses(S, w, sigma, rng, config)
    op = SparseOperator(S, r)
    meta = {"seed": seed, "instance": index, "depth": depth, "r": r}
    strong = norm_lower_bound(op, w, sigma, p, "strong", fam, strong_bound(chars, r), meta)
    weak = None
    if p != r:
        weak = norm_lower_bound(op, w, sigma, p, "weak", fam, weak_bound(chars, r), meta)
    return strong, weak


def theorem_constants(depth, p, r, instances, seed=0, config: ExperimentConfig | None = None):
    c_strong, c_weak = 0.0, 0.0
    for i in range(instances):
        strong, weak = theorem_instance(depth, p, r, seed, i, config)
        c_strong = max(c_strong, strong.ratio)
        if weak is not None:
            c_weak = max(c_weak, weak.ratio)
    return c_strong, c_weak


def dyadic_sum_instance(depth, s, seed, index, log2_range=4.0):
    """Random coefficients on a random sparse family with a random weight."""
    rng = instance_rng(seed, index)
    S = random_sparse(depth, DensityProfile(), rng)
    sigma = random_weight(depth, rng, log2_range)
    alpha = CoefficientFamily(S, 2.0 ** rng.uniform(-log2_range, log2_range, len(S)))
    return dyadic_sum_check(alpha, sigma, s)


def dyadic_sum_constant(depth, s, instances, seed=0, log2_range=4.0) -> float:
    return max(dyadic_sum_instance(depth, s, seed, i, log2_range).two_sided for i in range(instances))


def carleson_constant(depth, gamma, instances, seed=0, log2_range=4.0) -> float:
    best = 0.0
    for i in range(instances):
        rng = instance_rng(seed, i)
        S = random_sparse(depth, DensityProfile(), rng)
        w = random_weight(depth, rng, log2_range)
        best = max(best, float(np.max(carleson_gamma_ratios(S, w, gamma))))
    return best


def jensen_instance(depth, r, seed, index, log2_range=4.0):
    """``(A_S^r(f sigma))^r`` and the characteristic functional, cellwise."""
    S, _, sigma, f = random_instance(depth, instance_rng(seed, index), None, log2_range)
    lhs = sparse_accumulate(S, r, GridFunction(f.values * sigma.values))
    rhs = char_functional(S, sigma, r, f).values
    return lhs, rhs


def trace_instance(depth, p, r, seed, index, log2_range=4.0, theta_target=0.75):
    S, w, sigma, f = random_instance(depth, instance_rng(seed, index), p, log2_range)
    return weaktype_trace(S, w, sigma, f, p, r, theta_target, meta={"seed": seed, "instance": index})


# --------------------------------------------------------------------------
# battery
# --------------------------------------------------------------------------

BATTERY_COLUMNS = ("suite", "instance", "seed", "depth", "p", "r", "quantity", "value", "bound", "passed")


@dataclass
class BatteryResult:
    rows: list[dict]
    monitored: dict = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def _row(suite, instance, seed, depth, p, r, quantity, value, bound=None, passed=True):
    return {"suite": suite, "instance": instance, "seed": seed, "depth": depth, "p": p, "r": r,
            "quantity": quantity, "value": float(value), "bound": None if bound is None else float(bound),
            "passed": bool(passed)}


def _battery_job(args):
    """All suites for one instance index; returns its rows."""
    config, i = args
    seed, L = config.seed, config.depth
    rows = []
    # sparse operator: Jensen bridge
    for r in (0.5, 1.0, 2.0):
        lhs, rhs = jensen_instance(L, r, seed, i, config.log2_range)
        if r > 1:
            ok = bool(np.all(lhs <= rhs * (1 + 1e-12)))
        elif r < 1:
            ok = bool(np.all(lhs >= rhs * (1 - 1e-12)))
        else:
            ok = bool(np.allclose(lhs, rhs, rtol=1e-12, atol=0))
        gap = float(np.max(np.abs(lhs - rhs) / np.maximum(rhs, 1e-300)))
        rows.append(_row("jensen", i, seed, L, None, r, "max_rel_gap", gap, None, ok))
    # sparsity, packing and principal cubes
    rng = instance_rng(seed, i)
    S, w, sigma, f = random_instance(L, rng, config.p, config.log2_range)
    cert = verify_sparse(S)
    rows.append(_row("sparsity", i, seed, L, None, None, "theta", cert.theta, 0.5, cert.half_sparse))
    forest = principal_cubes(f, sigma, S)
    c_pc = forest.carleson_constant(sigma)
    rows.append(_row("principal_cubes", i, seed, L, None, None, "carleson", c_pc, 4.0, c_pc <= 4.0))
    for gamma in (0.0, 0.3, 0.7, 0.9):
        ratio = float(np.max(carleson_gamma_ratios(S, w, gamma))) if len(S) else 1.0
        ok = ratio <= 2.0 + 1e-12 if gamma == 0 else math.isfinite(ratio)
        rows.append(_row("carleson_gamma", i, seed, L, None, gamma, "ratio", ratio, 2.0 if gamma == 0 else None, ok))
    for s in (1.5, 2.0, 3.0):
        chk = dyadic_sum_instance(L, s, seed, i, config.log2_range)
        rows.append(_row("dyadic_sum", i, seed, L, None, s, "two_sided_ratio", chk.two_sided, None,
                         math.isfinite(chk.two_sided)))
    # testing constants: closed form on a single cube, then the random family
    p, r = config.p, config.r
    R = S.members[-1] if len(S) else DyadicInterval(0, 0)
    single = SparseCollection(L, [R])
    t_sweep = testing_T(single, w, sigma, p, r).value
    t_closed = single_cube_T(R, w, sigma, p, r)
    rows.append(_row("single_cube", i, seed, L, p, r, "T_rel_err", abs(t_sweep - t_closed) / t_closed, 1e-10,
                     abs(t_sweep - t_closed) <= 1e-10 * t_closed))
    if p > r:
        ts_sweep = testing_Tstar(single, w, sigma, p, r).value
        ts_closed = single_cube_Tstar(R, w, sigma, p, r)
        rows.append(_row("single_cube", i, seed, L, p, r, "Tstar_rel_err", abs(ts_sweep - ts_closed) / ts_closed,
                         1e-10, abs(ts_sweep - ts_closed) <= 1e-10 * ts_closed))
    t_cmp, ts_cmp = prop_test_bounds(S, w, sigma, p, r)
    rows.append(_row("prop_test", i, seed, L, p, r, "T_ratio", t_cmp.ratio, None, math.isfinite(t_cmp.ratio)))
    if ts_cmp is not None:
        rows.append(_row("prop_test", i, seed, L, p, r, "Tstar_ratio", ts_cmp.ratio, None,
                         math.isfinite(ts_cmp.ratio)))
    strong, weak = theorem_instance(L, p, r, seed, i, config)
    rows.append(_row("theorem", i, seed, L, p, r, "strong_ratio", strong.ratio, None, math.isfinite(strong.ratio)))
    if weak is not None:
        rows.append(_row("theorem", i, seed, L, p, r, "weak_ratio", weak.ratio, None, math.isfinite(weak.ratio)))
    # weak-type trace in the regime p < r
    tr = trace_instance(L, 1.5, 2.0, seed, i, config.log2_range, config.theta_target)
    rows.append(_row("weak_trace", i, seed, L, 1.5, 2.0, "eq_flags", float(tr.flags_ok), None, tr.flags_ok))
    rows.append(_row("weak_trace", i, seed, L, 1.5, 2.0, "chain", float(tr.chain_ok), None, tr.chain_ok))
    rows.append(_row("weak_trace", i, seed, L, 1.5, 2.0, "end_to_end_ratio", tr.end_to_end_ratio, None,
                     math.isfinite(tr.end_to_end_ratio)))
    # Haar square function
    for hp in (1.5, 2.0, 3.0):
        cmp = lower_bound_instance(random_weight(L, instance_rng(seed, i), config.log2_range), hp)
        rows.append(_row("haar_lower", i, seed, L, hp, 2.0, "sign_witness", cmp.measured, cmp.bound,
                         cmp.measured >= cmp.bound - 1e-9))
    g = GridFunction(rng.standard_normal(1 << L))
    energy = haar_transform(g).energy()
    direct = float(np.sum(g.values ** 2) * g.cell_width)
    rows.append(_row("parseval", i, seed, L, None, None, "rel_err", abs(energy - direct) / direct, 1e-10,
                     abs(energy - direct) <= 1e-10 * direct))
    return rows


def _map(fn, jobs_args, jobs: int):
    if jobs <= 1:
        return [fn(a) for a in jobs_args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, jobs_args))


def battery(config: ExperimentConfig) -> BatteryResult:
    """Seeded invariant battery; hard failures carry a ``(seed, instance)`` reproducer."""
    per_instance = _map(_battery_job, [(config, i) for i in range(config.instances)], config.jobs)
    rows = [row for chunk in per_instance for row in chunk]
    failures = [f"suite={row['suite']} quantity={row['quantity']} seed={row['seed']} instance={row['instance']}"
                for row in rows if not row["passed"]]
    monitored = {}
    for row in rows:
        key = f"{row['suite']}:{row['quantity']}" + ("" if row["r"] is None else f":{row['r']}")
        if row["suite"] in ("prop_test", "theorem", "dyadic_sum", "carleson_gamma", "principal_cubes", "weak_trace"):
            monitored[key] = max(monitored.get(key, -math.inf), row["value"])
    return BatteryResult(rows, monitored, failures)


def rows_as_dicts(items) -> list[dict]:
    return [asdict(x) for x in items]
