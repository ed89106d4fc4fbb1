"""Weights, dual weights, dyadic A_p / A_infinity characteristics and maximal operators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (
    DyadicInterval,
    GridFunction,
    level_slice,
    max_down,
)

POSITIVITY_FLOOR = 1e-300
DEFAULT_LOG2_RANGE = 4.0


class Weight(GridFunction):
    """Strictly positive step function; interval masses are cached on first use."""

    def __init__(self, values):
        super().__init__(values)
        if not np.all(self.values >= POSITIVITY_FLOOR):
            raise ValueError(f"weight values must be >= {POSITIVITY_FLOOR}")

    def mass(self, Q: DyadicInterval) -> float:
        return float(self.node_integrals[Q.node])

    @property
    def node_masses(self) -> np.ndarray:
        return self.node_integrals

    @property
    def total_mass(self) -> float:
        return float(self.node_integrals[1])


def random_weight(depth: int, rng: np.random.Generator, log2_range: float = DEFAULT_LOG2_RANGE) -> Weight:
    """Cell values drawn log-uniformly from ``[2**-B, 2**B]``."""
    return Weight(2.0 ** rng.uniform(-log2_range, log2_range, size=1 << depth))


def dual_weight(w: Weight, p: float) -> Weight:
    """``sigma = w**(1 - p')``."""
    if not p > 1:
        raise ValueError("p must lie in (1, inf)")
    p_dual = p / (p - 1.0)
    return Weight(w.values ** (1.0 - p_dual))


@dataclass(frozen=True)
class Characteristic:
    value: float
    argmax: DyadicInterval


@dataclass(frozen=True)
class CharacteristicReport:
    p: float
    ap: Characteristic
    ainfty_w: Characteristic
    ainfty_sigma: Characteristic


def _argmax_node(values: np.ndarray) -> Characteristic:
    n = int(np.argmax(values[1:])) + 1
    return Characteristic(float(values[n]), DyadicInterval.from_node(n))


def ap_characteristic(w: Weight, sigma: Weight, p: float) -> Characteristic:
    """``[w, sigma]_{A_p} = max_Q <w>_Q <sigma>_Q^{p-1}`` over all dyadic Q."""
    if w.depth != sigma.depth:
        raise ValueError("w and sigma must share the grid depth")
    vals = w.node_averages * sigma.node_averages ** (p - 1.0)
    vals[0] = -np.inf
    return _argmax_node(vals)


def ainfty_characteristic(w: Weight) -> Characteristic:
    """Fujii-Wilson ``max_Q w(Q)^{-1} int_Q M(1_Q w)`` with the dyadic maximal M.

    For x in Q the localized maximal function only sees intervals between
    the finest cell and Q, so all intervals of one level are swept together.
    """
    L = w.depth
    avg = w.node_averages
    h = w.cell_width
    ratio = np.full(avg.size, -np.inf)
    for k in range(L + 1):
        cur = avg[level_slice(k)]
        for m in range(k + 1, L + 1):
            cur = np.maximum(np.repeat(cur, 2), avg[level_slice(m)])
        integrals = cur.reshape(1 << k, -1).sum(axis=1) * h
        ratio[level_slice(k)] = integrals / w.node_masses[level_slice(k)]
    return _argmax_node(ratio)


def characterize(w: Weight, sigma: Weight, p: float) -> CharacteristicReport:
    return CharacteristicReport(
        p=p,
        ap=ap_characteristic(w, sigma, p),
        ainfty_w=ainfty_characteristic(w),
        ainfty_sigma=ainfty_characteristic(sigma),
    )


def dyadic_maximal(f: GridFunction, sigma: Weight | None = None, r: float | None = None) -> GridFunction:
    """Dyadic maximal function ``M_{sigma, r} f = (M_sigma(f^r))^{1/r}``.

    ``sigma=None`` uses Lebesgue averages; ``r=None`` means ``r = 1``.
    """
    vals = f.values
    if r is not None:
        if r <= 0:
            raise ValueError("r must be positive")
        if np.any(vals < 0):
            raise ValueError("power form requires a nonnegative function")
        vals = vals ** r
    elif sigma is not None and np.any(vals < 0):
        raise ValueError("weighted form requires a nonnegative function")
    if sigma is None:
        avg = GridFunction(vals).node_averages
    else:
        if sigma.depth != f.depth:
            raise ValueError("f and sigma must share the grid depth")
        avg = GridFunction(vals * sigma.values).node_integrals[1:] / sigma.node_masses[1:]
        avg = np.r_[0.0, avg]
    top = max_down(avg, f.depth)[level_slice(f.depth)]
    if r is not None:
        top = top ** (1.0 / r)
    return GridFunction(top)


def power_weight(eps: float, depth: int) -> Weight:
    """Exact cell averages of ``x**(eps - 1)`` on the depth-``depth`` grid.

    Cell ``j`` gets ``2**L ((j+1)**eps - j**eps) 2**(-L eps) / eps``; the
    difference is evaluated with ``expm1`` so that small ``eps`` keeps full
    relative precision.
    """
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    if depth < 1:
        raise ValueError("depth must be at least 1")
    j = np.arange(1 << depth, dtype=float)
    diff = np.empty_like(j)
    diff[0] = 1.0
    diff[1:] = j[1:] ** eps * np.expm1(eps * np.log1p(1.0 / j[1:]))
    return Weight(diff * 2.0 ** (depth * (1.0 - eps)) / eps)
