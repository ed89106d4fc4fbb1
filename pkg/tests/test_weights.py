"""Weights, Muckenhoupt characteristics, maximal functions and the power weight."""

import numpy as np
import pytest

from dyadlab import (
    DyadicInterval,
    GridFunction,
    Weight,
    ainfty_characteristic,
    all_intervals,
    ap_characteristic,
    characterize,
    dual_weight,
    dyadic_maximal,
    power_weight,
    random_weight,
)

# [w]_{A_p} * eps for power_weight(1/2, 10), from an independent brute-force scan
POWER_AP_EPS = {2.0: 0.6666603622189842, 3.0: 0.6399715389234398, 4.0: 0.6296909339926142}


def brute_ap(w, sigma, p):
    L = w.depth
    return max(w.values[Q.cells(L)].mean() * sigma.values[Q.cells(L)].mean() ** (p - 1) for Q in all_intervals(L))


def brute_ainfty(w):
    L = w.depth
    best = 0.0
    for Q in all_intervals(L):
        inner = [P for P in all_intervals(L) if Q.contains(P)]
        M = np.zeros(1 << L)
        for P in inner:
            M[P.cells(L)] = np.maximum(M[P.cells(L)], w.values[P.cells(L)].mean())
        best = max(best, M[Q.cells(L)].sum() / w.values[Q.cells(L)].sum())
    return best


class TestWeight:
    def test_positivity_floor(self):
        with pytest.raises(ValueError):
            Weight([1.0, 0.0])
        assert Weight([1e-300, 1.0]).total_mass == pytest.approx(0.5)

    def test_random_weight_range(self, rng):
        w = random_weight(10, rng, 3.0)
        assert w.values.min() >= 2.0 ** -3 and w.values.max() <= 2.0 ** 3

    def test_dual_weight(self, rng):
        assert np.all(dual_weight(Weight(np.ones(8)), 3.0).values == 1.0)
        np.testing.assert_allclose(dual_weight(Weight([4.0, 1.0]), 2.0).values, [0.25, 1.0], rtol=1e-15)
        w = random_weight(8, rng)
        for p in (1.5, 2.0, 5.0):
            back = dual_weight(dual_weight(w, p), p / (p - 1))
            np.testing.assert_allclose(back.values, w.values, rtol=1e-12)


class TestApCharacteristic:
    def test_examples(self):
        one = Weight(np.ones(16))
        assert ap_characteristic(one, one, 3.0).value == 1.0
        w = Weight([2.0, 1.0])
        c = ap_characteristic(w, dual_weight(w, 2.0), 2.0)
        assert c.value == pytest.approx(1.125, rel=1e-15)
        assert c.argmax == DyadicInterval(0, 0)

    def test_two_weight_homogeneity(self, rng):
        w, sigma = random_weight(6, rng), random_weight(6, rng)
        base = ap_characteristic(w, sigma, 2.5).value
        assert ap_characteristic(Weight(3.0 * w.values), sigma, 2.5).value == pytest.approx(3.0 * base, rel=1e-13)

    def test_matches_brute_force(self, rng):
        for _ in range(5):
            w, sigma = random_weight(5, rng), random_weight(5, rng)
            assert ap_characteristic(w, sigma, 1.7).value == pytest.approx(brute_ap(w, sigma, 1.7), rel=1e-13)

    def test_holder_lower_bound(self, rng):
        for p in (1.5, 2.0, 4.0):
            w = random_weight(8, rng)
            assert ap_characteristic(w, dual_weight(w, p), p).value > 1.0
            c = Weight(np.full(256, 7.0))
            assert ap_characteristic(c, dual_weight(c, p), p).value == pytest.approx(1.0, rel=1e-13)


class TestAinftyCharacteristic:
    def test_examples(self):
        assert ainfty_characteristic(Weight(np.ones(32))).value == 1.0
        c = ainfty_characteristic(Weight([2.0, 1.0]))
        assert c.value == pytest.approx(7 / 6, rel=1e-15)
        assert c.argmax == DyadicInterval(0, 0)

    def test_scale_invariant(self, rng):
        w = random_weight(7, rng)
        assert ainfty_characteristic(Weight(5.0 * w.values)).value == pytest.approx(
            ainfty_characteristic(w).value, rel=1e-13)

    def test_matches_brute_force(self, rng):
        for _ in range(5):
            w = random_weight(5, rng)
            assert ainfty_characteristic(w).value == pytest.approx(brute_ainfty(w), rel=1e-13)

    def test_ainfty_vs_ap_ordering_is_not_absolute(self):
        """The ordering holds only up to a constant; the smallest example already breaks constant one."""
        w = Weight([2.0, 1.0])
        rep = characterize(w, dual_weight(w, 2.0), 2.0)
        assert rep.ainfty_w.value > rep.ap.value

    def test_ainfty_vs_ap_monitored_ratio(self, rng):
        worst = 0.0
        for _ in range(50):
            w = random_weight(8, rng)
            for p in (1.5, 2.0, 3.0):
                rep = characterize(w, dual_weight(w, p), p)
                worst = max(worst, rep.ainfty_w.value / rep.ap.value)
        assert 0 < worst < 2.0


class TestDyadicMaximal:
    def test_constant(self):
        f = GridFunction.constant(3.0, 5)
        np.testing.assert_array_equal(dyadic_maximal(f).values, 3.0)

    def test_unit_measure_reduces(self, rng):
        f = GridFunction(rng.random(64))
        np.testing.assert_allclose(dyadic_maximal(f, Weight(np.ones(64))).values, dyadic_maximal(f).values,
                                   rtol=1e-15)

    def test_indicator_example(self):
        f = GridFunction.indicator(DyadicInterval(2, 0), 2)
        np.testing.assert_allclose(dyadic_maximal(f).values, [1.0, 0.5, 0.25, 0.25])

    def test_dominates_averages_exhaustive(self, rng):
        L = 6
        f = GridFunction(rng.random(1 << L))
        sigma = random_weight(L, rng)
        for r in (None, 0.5, 2.0):
            M = dyadic_maximal(f, sigma, r).values
            fr = f.values if r is None else f.values ** r
            for Q in all_intervals(L):
                cells = Q.cells(L)
                avg = np.sum(fr[cells] * sigma.values[cells]) / np.sum(sigma.values[cells])
                target = avg if r is None else avg ** (1 / r)
                assert np.all(M[cells] >= target * (1 - 1e-13))

    def test_rejects_signed_power(self):
        with pytest.raises(ValueError):
            dyadic_maximal(GridFunction([1.0, -1.0]), r=2.0)


class TestPowerWeight:
    def test_flat_case(self):
        np.testing.assert_allclose(power_weight(1.0, 6).values, 1.0, rtol=1e-15)

    @pytest.mark.parametrize("eps", [0.5, 0.1, 2.0 ** -8])
    def test_masses(self, eps):
        L = 12
        w = power_weight(eps, L)
        assert w.total_mass == pytest.approx(1 / eps, rel=1e-12)
        for k in range(L + 1):
            assert w.mass(DyadicInterval(k, 0)) == pytest.approx(2.0 ** (-k * eps) / eps, rel=1e-12)
        assert np.all(np.diff(w.values) < 0)
        assert w.values[0] == pytest.approx(2.0 ** (L * (1 - eps)) / eps, rel=1e-15)

    @pytest.mark.parametrize("p", sorted(POWER_AP_EPS))
    def test_ap_bracket(self, p):
        w = power_weight(0.5, 10)
        value = ap_characteristic(w, dual_weight(w, p), p).value * 0.5
        assert value == pytest.approx(POWER_AP_EPS[p], rel=1e-12)
        assert 0.6 <= value <= 0.7

    def test_rejects(self):
        with pytest.raises(ValueError):
            power_weight(0.0, 4)
        with pytest.raises(ValueError):
            power_weight(1.5, 4)
