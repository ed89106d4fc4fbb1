"""Testing constants, theorem bounds, witness lower bounds and auxiliary comparisons."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np

from .grid import (
    DyadicInterval,
    ExponentParams,
    GridFunction,
    RegimeError,
    accumulate_down,
    accumulate_up,
    all_intervals,
    level_slice,
    lp_norm,
    tree_sums,
    weak_lp_norm,
)
from .operators import (
    CoefficientFamily,
    haar_square,
    sparse_accumulate,
    sparse_apply,
)
from .sparse import SparseCollection, sparsify, verify_sparse
from .weights import (
    CharacteristicReport,
    Weight,
    ap_characteristic,
    characterize,
    dyadic_maximal,
)


def _ratio(num: float, den: float) -> tuple[float, bool]:
    """``num / den`` with ``0/0 -> 1`` flagged as degenerate."""
    if den == 0:
        if num == 0:
            return 1.0, True
        return math.inf, False
    return num / den, False


# --------------------------------------------------------------------------
# testing constants
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TestingReport:
    """Localized testing quotients of every anchor ``R`` in the family."""

    __test__ = False

    side: str
    collection: SparseCollection
    quotients: np.ndarray
    value: float
    argmax: DyadicInterval | None

    def quotient(self, R: DyadicInterval) -> float:
        return float(self.quotients[self.collection.position(R.node)])


def _localized_norms(S: SparseCollection, node_contrib: np.ndarray, measure: Weight, q: float) -> np.ndarray:
    """For every member R: ``|| sum_{Q in S, Q in R} c_Q 1_Q ||_{L^q(measure)}``.

    All anchors of one level are handled together: accumulating only the
    contributions of levels ``>= k`` gives, on each level-k interval R,
    exactly the sum over members inside R.
    """
    L = S.depth
    out = np.zeros(len(S))
    masses = measure.values * measure.cell_width
    for k in np.unique(S.levels):
        k = int(k)
        cur = node_contrib[level_slice(k)]
        for m in range(k + 1, L + 1):
            cur = np.repeat(cur, 2) + node_contrib[level_slice(m)]
        per_anchor = (cur ** q * masses).reshape(1 << k, -1).sum(axis=1) ** (1.0 / q)
        at = S.levels == k
        out[at] = per_anchor[S.nodes[at] - (1 << k)]
    return out


def _report(side, S, quotients):
    if not len(S):
        return TestingReport(side, S, quotients, 0.0, None)
    i = int(np.argmax(quotients))
    return TestingReport(side, S, quotients, float(quotients[i]), S.members[i])


def testing_T(S: SparseCollection, w: Weight, sigma: Weight, p: float, r: float) -> TestingReport:
    """``T = sup_R sigma(R)^{-r/p} || sum_{Q in R} <sigma>_Q^r 1_Q ||_{L^{p/r}(w)}``."""
    ExponentParams(p, r)
    contrib = np.zeros(1 << (S.depth + 1))
    contrib[S.nodes] = sigma.node_averages[S.nodes] ** r
    norms = _localized_norms(S, contrib, w, p / r)
    return _report("T", S, norms * sigma.node_masses[S.nodes] ** (-r / p))


def testing_Tstar(S: SparseCollection, w: Weight, sigma: Weight, p: float, r: float) -> TestingReport:
    """``T* = sup_R w(R)^{-1/s} || sum_{Q in R} <sigma>_Q^{r-1} <w>_Q 1_Q ||_{L^s(sigma)}``, ``s = (p/r)'``."""
    s = ExponentParams(p, r).s
    if s is None:
        raise RegimeError(f"T* is only defined for p > r (got p={p}, r={r})")
    n = S.nodes
    contrib = np.zeros(1 << (S.depth + 1))
    contrib[n] = sigma.node_averages[n] ** (r - 1.0) * w.node_averages[n]
    norms = _localized_norms(S, contrib, sigma, s)
    return _report("T*", S, norms * w.node_masses[n] ** (-1.0 / s))


def single_cube_T(R: DyadicInterval, w: Weight, sigma: Weight, p: float, r: float) -> float:
    return sigma.node_averages[R.node] ** r * w.mass(R) ** (r / p) * sigma.mass(R) ** (-r / p)


def single_cube_Tstar(R: DyadicInterval, w: Weight, sigma: Weight, p: float, r: float) -> float:
    s = ExponentParams(p, r).s
    if s is None:
        raise RegimeError("T* is only defined for p > r")
    coef = sigma.node_averages[R.node] ** (r - 1.0) * w.node_averages[R.node]
    return coef * sigma.mass(R) ** (1.0 / s) * w.mass(R) ** (-1.0 / s)


# --------------------------------------------------------------------------
# bounds
# --------------------------------------------------------------------------

@dataclass
class BoundComparison:
    """A measured quantity next to the bound it is compared with."""

    label: str
    measured: float
    bound: float | None
    meta: dict = field(default_factory=dict)
    witness: str | None = None

    @property
    def ratio(self) -> float | None:
        if self.bound is None:
            return None
        return _ratio(self.measured, self.bound)[0]

    @property
    def degenerate(self) -> bool:
        return self.bound is not None and _ratio(self.measured, self.bound)[1]


def prop_test_bounds(S: SparseCollection, w: Weight, sigma: Weight, p: float, r: float,
                     chars: CharacteristicReport | None = None, meta: dict | None = None):
    """Measured ``T`` (and ``T*`` when ``p > r``) against the mixed A_p-A_inf right-hand sides.

    Returns ``(T_comparison, Tstar_comparison)``; the second entry is None for ``p <= r``.
    """
    params = ExponentParams(p, r)
    chars = chars or characterize(w, sigma, p)
    meta = dict(meta or {}, p=p, r=r, depth=S.depth)
    ap = chars.ap.value
    T = testing_T(S, w, sigma, p, r)
    t_cmp = BoundComparison("T", T.value, ap ** (r / p) * chars.ainfty_sigma.value ** (r / p), meta)
    if params.s is None:
        return t_cmp, None
    Ts = testing_Tstar(S, w, sigma, p, r)
    ts_cmp = BoundComparison("T*", Ts.value, ap ** (r / p) * chars.ainfty_w.value ** (1.0 - r / p), meta)
    return t_cmp, ts_cmp


@dataclass(frozen=True)
class TheoremBounds:
    strong: float
    weak: float


def _ainfty_power(value: float, exponent: float) -> float:
    # [w]_{A_inf}^0 is read as 1
    return 1.0 if exponent == 0 else value ** exponent


def strong_bound(chars: CharacteristicReport, r: float) -> float:
    """``[w,sigma]_{A_p}^{1/p} ([w]_{A_inf}^{(1/r - 1/p)_+} + [sigma]_{A_inf}^{1/p})``."""
    p = chars.p
    e = max(1.0 / r - 1.0 / p, 0.0)
    return chars.ap.value ** (1.0 / p) * (_ainfty_power(chars.ainfty_w.value, e)
                                          + chars.ainfty_sigma.value ** (1.0 / p))


def weak_bound(chars: CharacteristicReport, r: float) -> float:
    """``[w,sigma]_{A_p}^{1/p} [w]_{A_inf}^{(1/r - 1/p)_+}``; refused at ``p = r``."""
    p = chars.p
    if p == r:
        raise RegimeError("no weak-type bound is claimed at the critical exponent p = r")
    e = max(1.0 / r - 1.0 / p, 0.0)
    return chars.ap.value ** (1.0 / p) * _ainfty_power(chars.ainfty_w.value, e)


def theorem_bounds(w: Weight, sigma: Weight, p: float, r: float,
                   chars: CharacteristicReport | None = None) -> TheoremBounds:
    ExponentParams(p, r)
    chars = chars or characterize(w, sigma, p)
    return TheoremBounds(strong_bound(chars, r), weak_bound(chars, r))


# --------------------------------------------------------------------------
# witnesses and operator-norm lower bounds
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SparseOperator:
    """``f -> A_S^r(f sigma)``, acting from ``L^p(sigma)``."""

    collection: SparseCollection
    r: float

    def __call__(self, f: GridFunction, sigma: Weight) -> GridFunction:
        return sparse_apply(self.collection, self.r, GridFunction(f.values * sigma.values))


@dataclass(frozen=True)
class HaarSquareOperator:
    """``f -> Sf``, acting one-weight on ``L^p(w)``."""

    def __call__(self, f: GridFunction, sigma: Weight) -> GridFunction:
        return haar_square(f)


class WitnessFamily:
    """Named test functions; tags record where each witness came from."""

    def __init__(self, items=()):
        self.items: list[tuple[str, GridFunction]] = []
        for tag, f in items:
            self.add(tag, f)

    def add(self, tag: str, f: GridFunction):
        if not np.any(f.values != 0):
            raise ValueError(f"witness {tag} is identically zero")
        self.items.append((tag, f))

    def extend(self, other: "WitnessFamily"):
        self.items.extend(other.items)
        return self

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)


def indicator_witnesses(intervals, depth: int) -> WitnessFamily:
    return WitnessFamily((f"indicator:{Q.level}:{Q.index}", GridFunction.indicator(Q, depth))
                         for Q in intervals)


def dual_mass_witnesses(intervals, sigma: Weight) -> WitnessFamily:
    """``sigma 1_R`` scaled to unit sup norm."""
    fam = WitnessFamily()
    for Q in intervals:
        v = np.zeros(len(sigma))
        cells = Q.cells(sigma.depth)
        v[cells] = sigma.values[cells]
        fam.add(f"dual_mass:{Q.level}:{Q.index}", GridFunction(v / v.max()))
    return fam


def random_witnesses(depth: int, rng: np.random.Generator, count: int, log2_range: float = 4.0) -> WitnessFamily:
    return WitnessFamily((f"random:{i}", GridFunction(2.0 ** rng.uniform(-log2_range, log2_range, 1 << depth)))
                         for i in range(count))


def _quotient(operator, f, w, sigma, p, norm) -> float:
    out = operator(f, sigma)
    if isinstance(operator, HaarSquareOperator):
        denom = lp_norm(f, w, p)
    else:
        denom = lp_norm(f, sigma, p)
    num = lp_norm(out, w, p) if norm == "strong" else weak_lp_norm(out, w, p)
    return num / denom


def coordinate_ascent(operator, f: GridFunction, w: Weight, sigma: Weight, p: float, norm: str,
                      rounds: int = 50, step: float = 0.1, rng: np.random.Generator | None = None):
    """Multiplicative ``x(1 +/- step)`` ascent on single cell values; keeps improvements only."""
    rng = rng or np.random.default_rng(0)
    best = np.array(f.values)
    best_q = _quotient(operator, f, w, sigma, p, norm)
    for _ in range(rounds):
        for cell in rng.permutation(best.size):
            for factor in (1.0 + step, 1.0 - step):
                trial = best.copy()
                trial[cell] *= factor
                q = _quotient(operator, GridFunction(trial), w, sigma, p, norm)
                if q > best_q:
                    best, best_q = trial, q
                    break
    return GridFunction(best), best_q


def norm_lower_bound(operator, w: Weight, sigma: Weight, p: float, norm: str = "strong",
                     witnesses: WitnessFamily | None = None, bound: float | None = None,
                     meta: dict | None = None) -> BoundComparison:
    """Largest ``||Op f|| / ||f||`` over the witness family: a certified operator-norm lower bound.

    Sparse operators act on ``f sigma`` with ``f`` measured in ``L^p(sigma)``;
    the Haar square function acts on ``f`` itself in ``L^p(w)``.
    """
    if norm not in ("strong", "weak"):
        raise ValueError("norm must be 'strong' or 'weak'")
    if not witnesses:
        raise ValueError("at least one witness is required")
    best, best_tag = -1.0, None
    for tag, f in witnesses:
        q = _quotient(operator, f, w, sigma, p, norm)
        if q > best:
            best, best_tag = q, tag
    return BoundComparison(f"{norm}_lower_bound", best, bound, dict(meta or {}, p=p, norm=norm), best_tag)


# --------------------------------------------------------------------------
# auxiliary comparabilities
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SumCheck:
    lhs: float
    rhs: float
    ratio: float
    degenerate: bool

    @property
    def two_sided(self) -> float:
        """``max(ratio, 1/ratio)``."""
        if self.ratio == 0 or not math.isfinite(self.ratio):
            return math.inf
        return max(self.ratio, 1.0 / self.ratio)


def dyadic_sum_check(alpha: CoefficientFamily, sigma: Weight, s: float) -> SumCheck:
    """``||phi||_{L^s(sigma)}`` against ``(sum_Q alpha_Q (<phi_Q>_Q^sigma)^{s-1} sigma(Q))^{1/s}``.

    ``phi = sum alpha_Q 1_Q`` and ``phi_Q`` keeps the terms with ``Q' in Q``;
    ``<phi_Q>_Q^sigma sigma(Q) = sum_{Q' in Q} alpha_{Q'} sigma(Q')`` is a subtree sum.
    """
    if not s > 1:
        raise ValueError("s must exceed 1")
    S = alpha.collection
    if sigma.depth != S.depth:
        raise ValueError("sigma and the coefficient family must share the grid depth")
    a = alpha.node_array()
    phi = sparse_tree_function(a, S.depth)
    lhs = lp_norm(phi, sigma, s)
    mass = sigma.node_masses
    subtree = accumulate_up(a * mass, S.depth)
    n = S.nodes
    inner = np.where(alpha.values > 0, subtree[n] / mass[n], 0.0)
    rhs = float(np.sum(alpha.values * inner ** (s - 1.0) * mass[n]) ** (1.0 / s))
    ratio, degenerate = _ratio(lhs, rhs)
    return SumCheck(lhs, rhs, ratio, degenerate)


def sparse_tree_function(node_values: np.ndarray, depth: int) -> GridFunction:
    """Cell values of ``sum_Q c_Q 1_Q`` for a heap-indexed coefficient array."""
    return GridFunction(accumulate_down(node_values, depth)[level_slice(depth)])


def carleson_gamma_ratios(S: SparseCollection, w: Weight, gamma: float) -> np.ndarray:
    """For every member R: ``sum_{Q in S, Q in R} <w>_Q^gamma |Q|`` over ``<w>_R^gamma |R|``."""
    if not 0 <= gamma < 1:
        raise ValueError("gamma must lie in [0, 1)")
    n = S.nodes
    c = np.zeros(1 << (S.depth + 1))
    c[n] = w.node_averages[n] ** gamma * S.lengths
    lhs = accumulate_up(c, S.depth)[n]
    return lhs / c[n]


def carleson_gamma_check(S: SparseCollection, w: Weight, gamma: float, R: DyadicInterval) -> SumCheck:
    if not 0 <= gamma < 1:
        raise ValueError("gamma must lie in [0, 1)")
    if R not in S:
        raise ValueError(f"anchor {R} is not a member of the family")
    inner = S.inside(R)
    avg = w.node_averages
    lhs = float(np.sum(avg[inner.nodes] ** gamma * inner.lengths))
    rhs = float(avg[R.node] ** gamma * R.length)
    ratio, degenerate = _ratio(lhs, rhs)
    return SumCheck(lhs, rhs, ratio, degenerate)


# --------------------------------------------------------------------------
# weak-type trace for 1 < p < r
# --------------------------------------------------------------------------

@dataclass
class SliceTrace:
    level: int
    count: int
    measured: float
    chain: float


@dataclass
class SubfamilyTrace:
    theta: float
    size: int
    slices: np.ndarray          # slice index per member; -1 top slice, -2 zero average
    e_measures: np.ndarray      # |E_Q| inside its slice (nan for slices -1, -2)
    e_flags: np.ndarray         # <f sigma 1_{E_Q}>_Q >= 1/2 <f sigma>_Q, slices >= 0 only
    min_e_margin: float
    i1: float
    i2: float
    i2_union: float
    i2_maximal: float
    level_set: float
    slice_rows: list[SliceTrace]
    weak_ratio: float

    @property
    def flags_ok(self) -> bool:
        return bool(np.all(self.e_flags))

    @property
    def chain_ok(self) -> bool:
        tol = 1e-12
        ok = all(row.measured <= row.chain * (1 + tol) + tol for row in self.slice_rows)
        ok &= self.i1 <= sum(row.measured for row in self.slice_rows) * (1 + tol) + tol
        ok &= self.i2 <= self.i2_union * (1 + tol) + tol
        ok &= self.i2_union <= self.i2_maximal * (1 + tol) + tol
        ok &= self.level_set <= (self.i1 + self.i2) * (1 + tol) + tol
        return bool(ok)


@dataclass
class TraceReport:
    p: float
    r: float
    eps: float
    t0: float
    ap: float
    f_norm: float
    subfamilies: list[SubfamilyTrace]
    end_to_end_ratio: float
    meta: dict = field(default_factory=dict)

    @property
    def flags_ok(self) -> bool:
        return all(sf.flags_ok for sf in self.subfamilies)

    @property
    def chain_ok(self) -> bool:
        return all(sf.chain_ok for sf in self.subfamilies)

    @property
    def i2_ratio(self) -> float:
        """Largest measured ``w(union of top slice)`` over ``[w,sigma]_{A_p}``."""
        return max((sf.i2_union for sf in self.subfamilies), default=0.0) / self.ap

    @property
    def i1_chain_ratio(self) -> float:
        """Largest slicewise chain total over ``[w,sigma]_{A_p}``."""
        totals = [sum(row.chain for row in sf.slice_rows) for sf in self.subfamilies]
        return max(totals, default=0.0) / self.ap


def slice_index(averages: np.ndarray) -> np.ndarray:
    """``l`` with ``2^{-l-1} < avg <= 2^{-l}``; ``-1`` when ``avg > 1``; ``-2`` when ``avg = 0``.

    Uses the binary exponent directly so powers of two land in the right slice.
    """
    mant, expo = np.frexp(averages)
    level = np.where(mant == 0.5, 1 - expo, -expo)
    level = np.maximum(level, -1)
    return np.where(averages > 0, level, -2).astype(np.int64)


def _level_mass(values: np.ndarray, w: Weight, threshold: float) -> float:
    return float(np.sum(w.values[values > threshold]) * w.cell_width)


def _union_mass(S: SparseCollection, w: Weight) -> float:
    if not len(S):
        return 0.0
    top = S.nodes[S.parent_nodes == 0]
    return float(np.sum(w.node_masses[top]))


def _trace_subfamily(F, fs_int, fp_int, f_sigma, w, sigma, p, r, eps, t0, ap) -> SubfamilyTrace:
    n = F.nodes
    avg = fs_int[n] / F.lengths
    slices = slice_index(avg)
    e_meas = np.full(len(F), np.nan)
    e_flags = np.ones(len(F), dtype=bool)
    margin = math.inf
    rows = []
    low = np.zeros(len(f_sigma))
    for l in sorted(set(slices[slices >= 0].tolist())):
        sel = slices == l
        Sl = F.subfamily(sel)
        pos = Sl.parent_positions
        child_int = np.zeros(len(Sl))
        child_len = np.zeros(len(Sl))
        child_fp = np.zeros(len(Sl))
        has = pos >= 0
        np.add.at(child_int, pos[has], fs_int[Sl.nodes[has]])
        np.add.at(child_len, pos[has], Sl.lengths[has])
        np.add.at(child_fp, pos[has], fp_int[Sl.nodes[has]])
        e_avg = (fs_int[Sl.nodes] - child_int) / Sl.lengths
        half = 0.5 * avg[sel]
        flags = e_avg >= half - 1e-12 * np.maximum(half, 1.0)
        e_meas[sel] = Sl.lengths - child_len
        e_flags[sel] = flags
        margin = min(margin, float(np.min(e_avg - half)))
        acc = sparse_accumulate(Sl, r, f_sigma)
        low += acc
        measured = _level_mass(acc, w, 2.0 ** (-eps * l))
        w_m = w.node_masses[Sl.nodes]
        s_m = sigma.node_masses[Sl.nodes]
        e_fp = fp_int[Sl.nodes] - child_fp
        chain = 2.0 ** ((p + eps - r) * l + p) * float(np.sum(w_m / Sl.lengths ** p * s_m ** (p - 1.0) * e_fp))
        rows.append(SliceTrace(l, len(Sl), measured, chain))
    top = F.subfamily(slices == -1)
    high = sparse_accumulate(top, r, f_sigma)
    half_t = t0 ** r / 2.0
    M = dyadic_maximal(f_sigma).values
    full = sparse_accumulate(F, r, f_sigma)
    return SubfamilyTrace(
        theta=verify_sparse(F).theta,
        size=len(F),
        slices=slices,
        e_measures=e_meas,
        e_flags=e_flags,
        min_e_margin=margin,
        i1=_level_mass(low, w, half_t),
        i2=_level_mass(high, w, half_t),
        i2_union=_union_mass(top, w),
        i2_maximal=_level_mass(M, w, 1.0),
        level_set=_level_mass(full, w, t0 ** r),
        slice_rows=rows,
        weak_ratio=weak_lp_norm(GridFunction(full ** (1.0 / r)), w, p) / ap ** (1.0 / p),
    )


def weaktype_trace(S: SparseCollection, w: Weight, sigma: Weight, f: GridFunction, p: float, r: float,
                   theta_target: float = 0.75, meta: dict | None = None) -> TraceReport:
    """Replay the level-slicing argument for the weak-type bound when ``1 < p < r``."""
    params = ExponentParams(p, r)
    if params.regime != "p<r":
        raise RegimeError(f"the weak-type trace needs 1 < p < r (got p={p}, r={r})")
    if np.any(f.values < 0):
        raise ValueError("f must be nonnegative")
    f_norm = lp_norm(f, sigma, p)
    if f_norm == 0:
        raise ValueError("f must be nonzero")
    f = GridFunction(f.values / f_norm)
    eps = params.eps_weak
    t0 = (2.0 / (1.0 - 2.0 ** -eps)) ** (1.0 / r)
    ap = ap_characteristic(w, sigma, p).value
    f_sigma = GridFunction(f.values * sigma.values)
    fs_int = f_sigma.node_integrals
    fp_int = GridFunction(f.values ** p * sigma.values).node_integrals
    subs = [_trace_subfamily(F, fs_int, fp_int, f_sigma, w, sigma, p, r, eps, t0, ap)
            for F in sparsify(S, theta_target)]
    whole = sparse_apply(S, r, f_sigma) if len(S) else GridFunction.constant(0.0, S.depth)
    return TraceReport(p, r, eps, t0, ap, f_norm, subs,
                       weak_lp_norm(whole, w, p) / ap ** (1.0 / p), dict(meta or {}))


def all_proper_intervals(depth: int):
    """Every dyadic interval carrying a Haar function (level < depth)."""
    return all_intervals(depth, depth - 1)


def haar_sign_witness_quotients(w: Weight, magnitude: GridFunction, p: float, norm: str = "weak") -> np.ndarray:
    """Quotients ``||S f_I|| / ||f_I||_{L^p(w)}`` for ``f_I = sgn(h_I) magnitude 1_I``, every I.

    Heap-indexed over levels ``< depth``.  Equivalent to calling
    :func:`haar_square` and :func:`weak_lp_norm` per interval, but all
    intervals of one level are done together:

    * Haar intervals inside I see ``f_I`` exactly as they see the level-wide
      function ``sum_{|I'| = |I|} sgn(h_I') magnitude``;
    * an ancestor J of I has coefficient ``+-|J|^{-1/2} c_I`` with
      ``c_I = int_{left} magnitude - int_{right} magnitude``, so ``(Sf_I)^2`` is
      constant on each sibling ring around I.
    """
    if norm not in ("strong", "weak"):
        raise ValueError("norm must be 'strong' or 'weak'")
    L = w.depth
    if magnitude.depth != L:
        raise ValueError("magnitude and w must share the grid depth")
    if np.any(magnitude.values < 0):
        raise ValueError("magnitude must be nonnegative")
    cell_mass = w.values * w.cell_width
    m_int = magnitude.node_integrals
    denom = tree_sums(magnitude.values ** p * cell_mass) ** (1.0 / p)
    out = np.zeros(1 << L)
    for k in range(L):
        pattern = np.tile(np.repeat([1.0, -1.0], 1 << (L - k - 1)), 1 << k)
        sums = tree_sums(pattern * magnitude.values * w.cell_width)
        local = np.zeros(1 << k)
        for m in range(k, L):
            sl = level_slice(m)
            coef2 = (sums[2 * sl.start:2 * sl.stop:2] - sums[2 * sl.start + 1:2 * sl.stop:2]) ** 2 * 2.0 ** m
            if m > k:
                local = np.repeat(local, 2)
            local = local + coef2 * 2.0 ** m
        local = np.repeat(local, 2)
        nodes = np.arange(1 << k, 1 << (k + 1))
        c2 = (m_int[2 * nodes] - m_int[2 * nodes + 1]) ** 2
        inside = local.reshape(1 << k, -1) + (c2 * (4.0 ** k - 1.0) / 3.0)[:, None]
        inside_mass = cell_mass.reshape(1 << k, -1)
        if k:
            a = np.arange(k)
            ring = c2[:, None] * (4.0 ** (a + 1) - 1.0)[None, :] / 3.0
            sib = (nodes[:, None] >> (k - a - 1)[None, :]) ^ 1
            ring_mass = w.node_masses[sib]
            vals = np.concatenate([inside, ring], axis=1)
            mass = np.concatenate([inside_mass, ring_mass], axis=1)
        else:
            vals, mass = inside, inside_mass
        vals = np.sqrt(vals)
        if norm == "strong":
            num = np.sum(vals ** p * mass, axis=1) ** (1.0 / p)
        else:
            order = np.argsort(-vals, axis=1, kind="stable")
            v_sorted = np.take_along_axis(vals, order, axis=1)
            m_sorted = np.cumsum(np.take_along_axis(mass, order, axis=1), axis=1)
            num = np.max(v_sorted * m_sorted ** (1.0 / p), axis=1)
        out[nodes] = num / denom[nodes]
    return out
