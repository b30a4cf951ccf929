import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from besovmhd.osgood import (
    _M,
    ComparisonTriple,
    OsgoodModulus,
    comparison_corpus,
    comparison_slack,
    gronwall_bound,
    integrate_comparison,
    log_osgood_bound,
    log_osgood_display_bound,
    osgood_M,
    osgood_bound,
)


def rk4_linear(rho0, gammas, steps_per_piece=2000):
    """Classical RK4 for rho' = gamma rho with piecewise-constant gamma on equal pieces of [0, 1]."""
    y = rho0
    h = 1.0 / (len(gammas) * steps_per_piece)
    for g in gammas:
        for _ in range(steps_per_piece):
            k1 = g * y
            k2 = g * (y + 0.5 * h * k1)
            k3 = g * (y + 0.5 * h * k2)
            k4 = g * (y + h * k3)
            y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


class TestModulus:
    def test_validation(self):
        with pytest.raises(ValueError):
            OsgoodModulus("quadratic")
        with pytest.raises(ValueError):
            OsgoodModulus("logarithmic")
        with pytest.raises(ValueError):
            OsgoodModulus("linear", a=0.0)

    def test_mu_values(self):
        m = OsgoodModulus("logarithmic", c=2.0)
        assert float(m.mu(0.0)) == 0.0
        assert float(m.mu(1.0)) == pytest.approx(math.log(math.e + 2.0))

    @pytest.mark.parametrize("x,c", [(1e-6, 1.0), (0.01, 0.5), (0.3, 5.0), (1.0, 2.0)])
    def test_M_against_mpmath(self, x, c):
        mod = OsgoodModulus("logarithmic", a=1.0, c=c)
        mpmath.mp.dps = 30
        ref = mpmath.quad(lambda r: 1 / (r * mpmath.log(mpmath.e + c / r)), [x, 1e-3, 1.0] if x < 1e-3 else [x, 1.0])
        assert osgood_M(x, mod) == pytest.approx(float(ref), rel=1e-11, abs=1e-15)

    def test_M_linear_closed_form(self):
        assert osgood_M(0.25, OsgoodModulus("linear", a=2.0)) == pytest.approx(math.log(8.0))
        with pytest.raises(ValueError):
            osgood_M(3.0, OsgoodModulus("linear", a=2.0))


class TestGronwall:
    @pytest.mark.parametrize("rho0,gammas", [(0.1, (1.0, 0.0, 2.0, 0.5)), (1e-3, (2.5, 2.5, 2.5, 2.5)),
                                             (0.7, (0.0, 0.0, 0.0, 0.0))])
    def test_matches_rk4(self, rho0, gammas):
        G = sum(gammas) / len(gammas)
        assert gronwall_bound(rho0, G) == pytest.approx(rk4_linear(rho0, gammas), rel=1e-12)

    def test_negative_input(self):
        with pytest.raises(ValueError):
            gronwall_bound(-1.0, 0.0)

    def test_bisection_reduces_to_gronwall(self):
        assert osgood_bound(0.2, 1.3, OsgoodModulus("linear")) == gronwall_bound(0.2, 1.3)


class TestLogBounds:
    def test_formula_value(self):
        eg = math.exp(2.0)
        assert log_osgood_bound(0.05, 2.0, 1.0) == pytest.approx(0.05 * eg / (1 - 0.05 * (eg - math.e)))
        with pytest.raises(ValueError):
            log_osgood_bound(1.0, 3.0, 1.0)

    def test_formula_is_not_a_bound(self):
        # the explicit closed form sits below the true comparison solution
        triple = ComparisonTriple(0.05, (2.0,), OsgoodModulus("logarithmic", c=1.0))
        _, rho = integrate_comparison(triple)
        assert rho[-1] == pytest.approx(1.7386, rel=1e-3)
        assert log_osgood_bound(0.05, 2.0, 1.0) < rho[-1]

    @given(st.floats(min_value=1e-6, max_value=0.5), st.floats(min_value=0.0, max_value=3.0),
           st.floats(min_value=0.5, max_value=5.0))
    def test_inverted_bound_solves_M_equation(self, rho0, G, c):
        mod = OsgoodModulus("logarithmic", a=1.0, c=c)
        r = osgood_bound(rho0, G, mod)
        assert _M(r, mod) == pytest.approx(_M(rho0, mod) - G, abs=1e-8)
        assert r >= rho0 * math.exp(G) * (1 - 1e-12)

    @given(st.floats(min_value=1e-6, max_value=0.5), st.floats(min_value=0.0, max_value=3.0),
           st.floats(min_value=0.5, max_value=5.0))
    def test_display_bound_dominates_inverted(self, rho0, G, c):
        mod = OsgoodModulus("logarithmic", a=1.0, c=c)
        assert log_osgood_display_bound(rho0, G, c) >= osgood_bound(rho0, G, mod) * (1 - 1e-8)

    def test_display_bound_infinite(self):
        assert log_osgood_display_bound(0.5, 50.0, 1.0) == math.inf

    @pytest.mark.parametrize("rho0,G", [(0.01, 1.0), (0.01, 2.0), (1e-4, 0.3)])
    def test_large_c_limit(self, rho0, G):
        assert log_osgood_bound(rho0, G, 1e6) == pytest.approx(gronwall_bound(rho0, G), rel=1e-4)


class TestCorpus:
    def test_deterministic(self):
        a = comparison_corpus(seed=3, count=5)
        b = comparison_corpus(seed=3, count=5)
        assert a == b

    def test_gamma_integral(self):
        t = ComparisonTriple(0.1, (1.0, 3.0), OsgoodModulus("linear"))
        assert t.gamma_int(0.25) == pytest.approx(0.25)
        assert t.gamma_int(1.0) == pytest.approx(2.0)

    def test_sound_bounds_dominate(self):
        for triple in comparison_corpus(count=20):
            mod = triple.mod
            assert comparison_slack(triple, lambda r, G: osgood_bound(r, G, mod)) >= -1e-8
            assert comparison_slack(triple, lambda r, G: log_osgood_display_bound(r, G, mod.c)) >= -1e-8

    def test_integrator_linear_exact(self):
        t = ComparisonTriple(0.3, (0.5, 1.5, 0.0, 2.0), OsgoodModulus("linear"))
        ts, rho = integrate_comparison(t)
        exact = [0.3 * math.exp(t.gamma_int(x)) for x in ts]
        np.testing.assert_allclose(rho, exact, rtol=1e-10)
